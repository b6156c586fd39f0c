"""Repair an annotated document partition by partition.

Partitions in one stratum have no path between them and are repaired on
separate database clones, their repairs combined by union.  Strata run in
precedence order: each candidate built so far is applied to a fresh clone
before the next stratum's trees are grown.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

from .core import is_consistent, update_set_key
from .datastore import Database, update, violations
from .parser import AicDocument, Partition
from .repair import (
    DEFAULT_MAX_NODES,
    DEFAULT_MAX_SUBSET_SIZE,
    RepairKind,
    RepairOutcome,
    TreeStats,
    build_tree,
    prune_minimal,
)

logger = logging.getLogger(__name__)

DEFAULT_COMBINATION_CAP = 10_000


class Mode(enum.Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


class PlanError(ValueError):
    """The requested repair kind cannot be computed over this plan."""


@dataclass(frozen=True)
class RepairPlan:
    strata: tuple[tuple[Partition, ...], ...]
    dependencies: tuple[tuple[int, int], ...] = ()

    @property
    def partitions(self) -> int:
        return sum(len(s) for s in self.strata)


def plan_from_document(doc: AicDocument) -> RepairPlan:
    """Topological levels of the partitions; ``X -> Y`` puts Y before X."""
    if not doc.annotated:
        return RepairPlan(((Partition(1, tuple(doc.aics)),),))
    before: dict[int, set[int]] = {p.id: set() for p in doc.partitions}
    for x, y in doc.dependencies:
        before[x].add(y)
    level: dict[int, int] = {}

    def depth(pid: int) -> int:
        if pid not in level:
            level[pid] = 1 + max((depth(q) for q in before[pid]), default=-1)
        return level[pid]

    for p in doc.partitions:
        depth(p.id)
    strata: dict[int, list[Partition]] = {}
    for p in sorted(doc.partitions, key=lambda p: p.id):
        strata.setdefault(level[p.id], []).append(p)
    return RepairPlan(tuple(tuple(strata[k]) for k in sorted(strata)), tuple(doc.dependencies))


def merge_dependent(doc: AicDocument) -> AicDocument:
    """Fold partitions linked by dependencies into one; independent groups stay apart."""
    if not doc.annotated or not doc.dependencies:
        return doc
    parent = {p.id: p.id for p in doc.partitions}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x, y in doc.dependencies:
        a, b = find(x), find(y)
        parent[max(a, b)] = min(a, b)
    groups: dict[int, list] = {}
    for p in sorted(doc.partitions, key=lambda p: p.id):
        groups.setdefault(find(p.id), []).extend(p.aics)
    return AicDocument.annotate([(i + 1, groups[k]) for i, k in enumerate(sorted(groups))])


@dataclass
class EngineOutcome(RepairOutcome):
    partitions: int = 1
    strata: int = 1


def _tables(part: Partition) -> set[str]:
    return {t for a in part.aics for t in a.tables()}


def repair_all(
    db: Database,
    doc: AicDocument,
    kind: RepairKind = RepairKind.SIMPLE,
    mode: Mode | str = Mode.SEQUENTIAL,
    *,
    combination_cap: int = DEFAULT_COMBINATION_CAP,
    max_nodes: int = DEFAULT_MAX_NODES,
    max_subset_size: int = DEFAULT_MAX_SUBSET_SIZE,
    workers: Optional[int] = None,
    collect_weak: bool = False,
) -> EngineOutcome:
    """Repairs of ``db`` for every AIC in ``doc``; ``db`` itself is only read.

    With ``collect_weak`` the validated leaves of every tree are composed the
    same way (without minimality pruning) into ``weak_leaves``.
    """
    mode = Mode(mode) if isinstance(mode, str) else mode
    if combination_cap < 1:
        raise ValueError("combination cap must be positive")
    if kind is RepairKind.WELL_FOUNDED and doc.annotated and doc.dependencies:
        raise PlanError("well-founded repairs cannot be composed across dependent partitions")
    if kind is RepairKind.SIMPLE:
        # only founded and justified repairs survive sequential composition
        doc = merge_dependent(doc)
    plan = plan_from_document(doc)

    aics = doc.all_aics()
    stats = TreeStats(trees=0)
    result = EngineOutcome(kind, [], [], stats, partitions=plan.partitions, strata=len(plan.strata))
    if not violations(db, aics):
        result.consistent = True
        return result

    def grow(prefix: frozenset, part: Partition) -> RepairOutcome:
        clone = db.clone(_tables(part))
        update(clone, [a for a in prefix if a.atom.table in clone.tables])
        return build_tree(clone, part.aics, kind, max_nodes=max_nodes, max_subset_size=max_subset_size)

    pool = ThreadPoolExecutor(max_workers=workers) if mode is Mode.PARALLEL else None
    try:
        repairs = [frozenset()]
        weak = [frozenset()]
        for stratum in plan.strata:
            repairs, trunc_r = _extend(repairs, stratum, grow, pool, result, combination_cap, weak=False)
            result.truncated |= trunc_r
            if collect_weak:
                weak, trunc_w = _extend(weak, stratum, grow, pool, None, combination_cap, weak=True)
                result.truncated |= trunc_w
    finally:
        if pool is not None:
            pool.shutdown()

    result.repairs = prune_minimal(repairs)
    if collect_weak:
        result.weak_leaves = sorted(set(weak), key=update_set_key)
    logger.debug("engine: %d partitions, %d strata, %d repairs", plan.partitions, len(plan.strata), len(result.repairs))
    return result


def _extend(candidates, stratum, grow, pool, result: Optional[EngineOutcome], cap: int, *, weak: bool):
    jobs = [(c, p) for c in candidates for p in stratum]
    if pool is None:
        outcomes = [grow(c, p) for c, p in jobs]
    else:
        outcomes = list(pool.map(lambda job: grow(*job), jobs))
    if result is not None:
        for o in outcomes:
            result.stats += o.stats
            result.indeterminate.extend(o.indeterminate)
            result.truncated |= o.truncated
    out: list[frozenset] = []
    seen: set[frozenset] = set()
    truncated = False
    width = len(stratum)
    for k, prefix in enumerate(candidates):
        options = []
        for o in outcomes[k * width:(k + 1) * width]:
            if o.consistent:
                options.append([frozenset()])
            else:
                options.append(o.weak_leaves if weak else o.repairs)
        for combo in product(*options):
            u = prefix.union(*combo)
            if u in seen or not is_consistent(u):
                continue
            if len(out) >= cap:
                truncated = True
                break
            seen.add(u)
            out.append(u)
        if truncated:
            break
    return out, truncated


def repair_flat(db: Database, aics: Sequence, kind: RepairKind = RepairKind.SIMPLE, **kw) -> EngineOutcome:
    return repair_all(db, AicDocument.flat(aics), kind, **kw)
