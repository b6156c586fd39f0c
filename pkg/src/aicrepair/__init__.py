"""Active integrity constraints: consistency checks and repair computation."""

from .core import (
    Aic,
    AicError,
    AtomPattern,
    Const,
    Literal,
    RuleInstance,
    UpdateAction,
    Var,
    dual,
    is_consistent,
    is_normal,
    lit,
    ua,
)
from .datastore import Database, emit_sql, load_database, undo, update, violations
from .engine import Mode, repair_all
from .oracle import oracle_repairs
from .parser import AicDocument, ParseError, parse, parse_aics, serialize
from .partition import build_graphs, compute_partitions, preprocess
from .repair import RepairKind, build_tree, prune_minimal

__version__ = "0.1.0"
