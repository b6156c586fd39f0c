"""Breadth-first construction of the four repair trees.

Each node is evaluated by temporarily applying its update set to the
database, collecting violated rule instances, and rolling back.  Children
with inconsistent or already-seen labels are dropped on generation.
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .core import (
    Aic,
    AtomPattern,
    Literal,
    RuleInstance,
    UpdateAction,
    dual,
    is_consistent,
    is_normal,
    lit,
    ua,
    update_set_key,
)
from .datastore import Database, evaluate_body, undo, unify, update, violations

logger = logging.getLogger(__name__)

DEFAULT_MAX_NODES = 200_000
DEFAULT_MAX_SUBSET_SIZE = 20


class RepairKind(enum.Enum):
    SIMPLE = "simple"
    FOUNDED = "founded"
    WELL_FOUNDED = "well-founded"
    JUSTIFIED = "justified"

    @classmethod
    def parse(cls, text: str) -> RepairKind:
        norm = text.strip().lower().replace("_", "-")
        if norm == "wellfounded":
            norm = "well-founded"
        return cls(norm)


class ResourceExhausted(RuntimeError):
    """A configured budget (tree nodes, candidates, subsets) was exceeded."""


class SubsetBudgetExceeded(ResourceExhausted):
    """The justification check would enumerate too many subsets; use the oracle instead."""


@dataclass(eq=False)
class RepairNode:
    u: frozenset
    j: frozenset = frozenset()
    applied: tuple[RuleInstance, ...] = ()
    parent: Optional[RepairNode] = field(default=None, repr=False)

    @property
    def depth(self) -> int:
        return len(self.applied)


@dataclass
class TreeStats:
    nodes: int = 0
    deduplicated: int = 0
    inconsistent: int = 0
    depth: int = 0
    trees: int = 1

    def __iadd__(self, other: TreeStats) -> TreeStats:
        self.nodes += other.nodes
        self.deduplicated += other.deduplicated
        self.inconsistent += other.inconsistent
        self.depth = max(self.depth, other.depth)
        self.trees += other.trees
        return self


@dataclass
class RepairOutcome:
    kind: RepairKind
    repairs: list
    weak_leaves: list
    stats: TreeStats
    consistent: bool = False
    indeterminate: list = field(default_factory=list)
    truncated: bool = False
    leaves: list = field(default_factory=list, repr=False)


def prune_minimal(sets: Iterable[frozenset]) -> list[frozenset]:
    """Sets with no strict subset in the input, deduplicated, ordered by size then content."""
    uniq = sorted(set(frozenset(s) for s in sets), key=update_set_key)
    out: list[frozenset] = []
    for s in uniq:
        # a strict subset is always smaller, so it is already in ``out`` if present
        if not any(m < s for m in out):
            out.append(s)
    return out


def _head_unifiable(action: UpdateAction, aics: Sequence[Aic]) -> bool:
    for aic in aics:
        for h in aic.head:
            if h.insert == action.insert and unify(h.atom, action.atom) is not None:
                return True
    return False


def _violated(db: Database, aics: Sequence[Aic], u: frozenset) -> list[tuple[int, RuleInstance]]:
    log = update(db, u)
    try:
        return violations(db, aics)
    finally:
        undo(db, log)


def _children(node: RepairNode, aics, kind: RepairKind, found: list[tuple[int, RuleInstance]]):
    for _, r in found:
        if kind is RepairKind.JUSTIFIED:
            assumed = frozenset(ua(l) for l in r.closed_nup)
            j = (node.j | assumed) - node.u
            for alpha in r.closed_head:
                yield RepairNode(node.u | {alpha}, j, node.applied + (r,), node)
            continue
        for l in r.closed_body:
            alpha = ua(dual(l))
            if kind is RepairKind.FOUNDED and not _head_unifiable(alpha, aics):
                continue
            if kind is RepairKind.WELL_FOUNDED and alpha not in r.closed_head:
                continue
            yield RepairNode(node.u | {alpha}, node.j, node.applied + (r,), node)


def build_tree(
    db: Database,
    aics: Sequence[Aic],
    kind: RepairKind = RepairKind.SIMPLE,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    dedup: bool = True,
    max_subset_size: int = DEFAULT_MAX_SUBSET_SIZE,
) -> RepairOutcome:
    """Build the repair tree of ``kind`` breadth-first and return validated repairs.

    ``db`` is updated and rolled back per node, so it is unchanged on return
    (also when a budget error is raised).
    """
    aics = list(aics)
    stats = TreeStats()
    root = RepairNode(frozenset())
    queue = deque([root])
    seen = {(root.u, root.j)}
    stats.nodes = 1
    leaves: list[RepairNode] = []
    while queue:
        node = queue.popleft()
        found = _violated(db, aics, node.u)
        if not found:
            leaves.append(node)
            stats.depth = max(stats.depth, node.depth)
            continue
        for child in _children(node, aics, kind, found):
            if not is_consistent(child.u):
                stats.inconsistent += 1
                continue
            key = (child.u, child.j)
            if dedup:
                if key in seen:
                    stats.deduplicated += 1
                    continue
                seen.add(key)
            stats.nodes += 1
            if stats.nodes > max_nodes:
                raise ResourceExhausted(f"repair tree exceeded {max_nodes} nodes")
            queue.append(child)

    consistent = len(leaves) == 1 and leaves[0] is root
    weak: list[frozenset] = []
    indeterminate: list[frozenset] = []
    normal = is_normal(aics)
    for leaf in leaves:
        if kind is RepairKind.FOUNDED:
            ok = validate_founded(db, aics, leaf.u)
        elif kind is RepairKind.JUSTIFIED:
            if normal:
                ok = justified_shortcut(leaf)
            else:
                try:
                    ok = validate_justified(db, leaf, aics, max_subset_size=max_subset_size)
                except SubsetBudgetExceeded:
                    indeterminate.append(leaf.u)
                    continue
        else:
            ok = True
        if ok and leaf.u not in weak:
            weak.append(leaf.u)

    repairs = prune_minimal(weak)
    if kind in (RepairKind.FOUNDED, RepairKind.JUSTIFIED):
        # a founded/justified leaf counts only if it is also a repair
        kept = []
        for u in repairs:
            try:
                if is_repair(db, aics, u, max_subset_size=max_subset_size):
                    kept.append(u)
            except SubsetBudgetExceeded:
                indeterminate.append(u)
        repairs = kept
    if consistent:
        repairs = []
    logger.debug("%s tree: %d nodes, %d leaves, %d repairs", kind.value, stats.nodes, len(leaves), len(repairs))
    return RepairOutcome(kind, repairs, weak, stats, consistent, indeterminate, leaves=leaves)


def justified_shortcut(leaf: RepairNode) -> bool:
    """Leaf acceptance for normal AIC sets.

    ``j`` holds the actions whose literals were assumed unchanged when rules
    fired on the branch.  The leaf is accepted when ``u`` is consistent,
    disjoint from ``j``, and undoes none of those assumptions, i.e.
    ``u | j`` is itself consistent.  Disjointness alone is vacuous here: a
    literal assumed true can never reappear as a changing action in ``u``.
    """
    return is_consistent(leaf.u) and not (leaf.u & leaf.j) and is_consistent(leaf.u | leaf.j)


def is_repair(db: Database, aics: Sequence[Aic], u: frozenset, *, max_subset_size: int = DEFAULT_MAX_SUBSET_SIZE) -> bool:
    """True iff no proper subset of the weak repair ``u`` is itself a weak repair."""
    if len(u) > max_subset_size:
        raise SubsetBudgetExceeded(f"minimality check over {len(u)} actions exceeds bound {max_subset_size}")
    items = sorted(u, key=lambda a: update_set_key([a]))
    for size in range(len(items)):
        for sub in combinations(items, size):
            if not _violated(db, aics, frozenset(sub)):
                return False
    return True


def validate_founded(db: Database, aics: Sequence[Aic], u: frozenset) -> bool:
    """Every action in ``u`` is supported by a rule instance whose other body literals hold in db∘u."""
    if not u:
        return True
    log = update(db, u)
    try:
        return all(_supported(db, aics, alpha) for alpha in u)
    finally:
        undo(db, log)


def _supported(db: Database, aics: Sequence[Aic], alpha: UpdateAction) -> bool:
    excluded = dual(lit(alpha))
    for aic in aics:
        for h in aic.head:
            if h.insert != alpha.insert:
                continue
            theta = unify(h.atom, alpha.atom)
            if theta is None:
                continue
            for full in evaluate_body(db, aic.body, theta, skip=excluded):
                if not RuleInstance.of(aic, full).contradictory:
                    return True
    return False


@dataclass(frozen=True)
class _Closure:
    """One rule instance prepared for subset-closedness tests."""

    nup: tuple  # (action, is_no_effect) per non-updatable literal
    head: tuple  # (action, is_no_effect) per head action


def _ground_over_domain(aic: Aic, thetas: list[dict], domain: list) -> list[dict]:
    out = []
    names = aic.variables()
    for th in thetas:
        partial = [dict(th)]
        for v in names:
            if v in th:
                continue
            partial = [{**p, v: c} for p in partial for c in domain]
        out.extend(partial)
    return out


def validate_justified(
    db: Database,
    leaf: RepairNode,
    aics: Sequence[Aic],
    *,
    max_subset_size: int = DEFAULT_MAX_SUBSET_SIZE,
) -> bool:
    """Decide whether ``leaf.u`` together with its no-effect actions is a justified action set.

    Only instances whose head meets ``u`` and whose non-updatable literals
    hold after the update can witness a smaller closed set, so the check
    enumerates proper subsets of ``u`` against those instances alone.
    """
    u = leaf.u
    if not u:
        return True
    if len(u) > max_subset_size:
        raise SubsetBudgetExceeded(f"justification check over {len(u)} actions exceeds bound {max_subset_size}")

    log = update(db, u)
    try:
        domain = sorted(db.active_constants() | _aic_constants(aics) | _action_constants(u), key=lambda v: (v is not None, v or ""))
        instances: list[RuleInstance] = []
        seen = set()
        for aic in aics:
            # literals that may coincide with an updatable one after substitution
            # are left to domain grounding rather than the join
            upd = aic.updatable
            pos_nup = [
                l for l in aic.nup
                if l.positive and not any(u.positive and _may_unify(l.atom, u.atom) for u in upd)
            ]
            for h in aic.head:
                for alpha in u:
                    if alpha.insert != h.insert:
                        continue
                    theta = unify(h.atom, alpha.atom)
                    if theta is None:
                        continue
                    thetas = evaluate_body(db, pos_nup, theta) if pos_nup else [theta]
                    for full in _ground_over_domain(aic, thetas, domain):
                        r = RuleInstance.of(aic, full)
                        if r in seen:
                            continue
                        seen.add(r)
                        if not r.contradictory and all(db.entails(l) for l in r.closed_nup):
                            instances.append(r)
        after = {}
        for r in instances:
            for l in r.closed_nup:
                after[l.atom] = db.entails(Literal(l.atom))
            for a in r.closed_head:
                after[a.atom] = db.entails(Literal(a.atom))
    finally:
        undo(db, log)

    before = {atom: db.entails(Literal(atom)) for atom in after}

    def no_effect(a: UpdateAction) -> bool:
        if a.insert:
            return before[a.atom] and after[a.atom]
        return not before[a.atom] and not after[a.atom]

    closures = [
        _Closure(
            tuple((ua(l), no_effect(ua(l))) for l in r.closed_nup),
            tuple((a, no_effect(a)) for a in r.closed_head),
        )
        for r in instances
    ]

    items = sorted(u, key=lambda a: update_set_key([a]))
    for size in range(len(items)):
        for sub in combinations(items, size):
            star = frozenset(sub)
            if all(_closed(c, star) for c in closures):
                return False
    return True


def _may_unify(a: AtomPattern, b: AtomPattern) -> bool:
    if a.table != b.table or set(a.columns) != set(b.columns):
        return False
    ac, bc = a.constants(), b.constants()
    return all(bc[c] == v for c, v in ac.items() if c in bc)


def _closed(c: _Closure, star: frozenset) -> bool:
    if not all(neff or a in star for a, neff in c.nup):
        return True
    return any(neff or a in star for a, neff in c.head)


def _aic_constants(aics: Sequence[Aic]) -> set:
    out = set()
    for aic in aics:
        for l in aic.body:
            out.update(l.atom.constants().values())
    return out


def _action_constants(u: Iterable[UpdateAction]) -> set:
    return {v for a in u for v in a.atom.constants().values()}
