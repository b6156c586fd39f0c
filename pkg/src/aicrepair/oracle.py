"""Brute-force reference semantics for desk-scale instances.

Enumerates every update set over the active domain and tests the
declarative repair definitions directly.  Exponential by design; it shares
only the value types in ``core`` with the tree implementation.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .core import Aic, AtomPattern, Const, Literal, UpdateAction, Var
from .repair import RepairKind

DEFAULT_MAX_ATOMS = 12


class OracleBudgetExceeded(RuntimeError):
    pass


State = dict  # table -> (columns, frozenset of row tuples)


def _state_of(db) -> State:
    return {name: (t.columns, frozenset(t.rows)) for name, t in db.tables.items()}


def _holds(state: State, atom: AtomPattern) -> bool:
    cols, rows = state[atom.table]
    want = [(cols.index(c), t.value) for c, t in atom.bindings]
    return any(all(r[i] == v for i, v in want) for r in rows)


def _apply(state: State, u: Iterable[UpdateAction]) -> State:
    out = dict(state)
    u = list(u)
    for a in u:
        if a.insert:
            cols, rows = out[a.atom.table]
            vals = {c: t.value for c, t in a.atom.bindings}
            out[a.atom.table] = (cols, rows | {tuple(vals.get(c) for c in cols)})
    for a in u:
        if not a.insert:
            cols, rows = out[a.atom.table]
            want = [(cols.index(c), t.value) for c, t in a.atom.bindings]
            out[a.atom.table] = (cols, frozenset(r for r in rows if not all(r[i] == v for i, v in want)))
    return out


def _consistent(u: Iterable[UpdateAction]) -> bool:
    u = list(u)
    for p in u:
        if not p.insert:
            continue
        pv = {c: t.value for c, t in p.atom.bindings}
        for q in u:
            if q.insert or q.atom.table != p.atom.table:
                continue
            if all(pv.get(c) == t.value for c, t in q.atom.bindings):
                return False
    return True


def _rule_vars(aic: Aic) -> list[str]:
    names: list[str] = []
    for l in aic.body:
        for _, t in l.atom.bindings:
            if isinstance(t, Var) and t.name not in names:
                names.append(t.name)
    return names


def _ground(atom: AtomPattern, theta: dict) -> AtomPattern:
    return AtomPattern(
        atom.table,
        tuple((c, Const(theta[t.name]) if isinstance(t, Var) else t) for c, t in atom.bindings),
    )


@dataclass(frozen=True)
class _Instance:
    body: tuple  # (atom, positive)
    head: tuple  # UpdateAction
    nup: tuple  # (atom, positive)


def _instances(aics: Sequence[Aic], domain: list) -> list[list[_Instance]]:
    out = []
    for aic in aics:
        names = _rule_vars(aic)
        per = []
        for values in product(domain, repeat=len(names)):
            th = dict(zip(names, values))
            body = tuple((_ground(l.atom, th), l.positive) for l in aic.body)
            head = tuple(UpdateAction(_ground(a.atom, th), a.insert) for a in aic.head)
            if any((atom, not pos) in body for atom, pos in body):
                continue  # complementary body literals: never violated, constrains nothing
            upd = {(a.atom, not a.insert) for a in head}
            nup = tuple(b for b in body if b not in upd)
            per.append(_Instance(body, head, nup))
        out.append(per)
    return out


def _violated(state: State, instances: list[list[_Instance]]) -> list[_Instance]:
    return [
        r
        for per in instances
        for r in per
        if all(_holds(state, atom) == pos for atom, pos in r.body)
    ]


class Oracle:
    """Precomputed ground view of one (database, AIC set) pair."""

    def __init__(self, db, aics: Sequence[Aic], max_atoms: int = DEFAULT_MAX_ATOMS):
        self.aics = list(aics)
        self.state = _state_of(db)
        consts = {v for _, rows in self.state.values() for r in rows for v in r}
        for aic in self.aics:
            for l in aic.body:
                consts.update(t.value for _, t in l.atom.bindings if isinstance(t, Const))
        self.domain = sorted(consts, key=lambda v: (v is not None, v or ""))
        self.instances = _instances(self.aics, self.domain)
        atoms = []
        for per in self.instances:
            for r in per:
                for atom, _ in r.body:
                    if atom not in atoms:
                        atoms.append(atom)
        self.atoms = sorted(atoms, key=AtomPattern.sort_key)
        if len(self.atoms) > max_atoms:
            raise OracleBudgetExceeded(
                f"active domain has {len(self.atoms)} atoms; the oracle is capped at {max_atoms}"
            )
        # the only action on each atom that changes the database
        self.moves = [UpdateAction(a, not _holds(self.state, a)) for a in self.atoms]

    def weak_repairs(self) -> list[frozenset]:
        out = []
        for mask in range(1 << len(self.moves)):
            u = [m for i, m in enumerate(self.moves) if mask >> i & 1]
            if not _consistent(u):
                continue
            if not _violated(_apply(self.state, u), self.instances):
                out.append(frozenset(u))
        return out

    def is_founded(self, u: frozenset) -> bool:
        after = _apply(self.state, u)
        for alpha in u:
            excluded = (alpha.atom, not alpha.insert)
            if not any(
                alpha in r.head and all(_holds(after, atom) == pos for atom, pos in r.body if (atom, pos) != excluded)
                for per in self.instances
                for r in per
            ):
                return False
        return True

    def no_effect(self, u: frozenset) -> frozenset:
        after = _apply(self.state, u)
        out = set()
        for a in self.atoms:
            before_a, after_a = _holds(self.state, a), _holds(after, a)
            if before_a and after_a:
                out.add(UpdateAction(a, True))
            if not before_a and not after_a:
                out.add(UpdateAction(a, False))
        return frozenset(out)

    def _closed(self, v: frozenset) -> bool:
        lits = {(a.atom, a.insert) for a in v}
        for per in self.instances:
            for r in per:
                if all(b in lits for b in r.nup) and not any(a in v for a in r.head):
                    return False
        return True

    def is_justified(self, u: frozenset) -> bool:
        """Whether u ∪ neff(u) is a minimal closed set containing neff(u)."""
        neff = self.no_effect(u)
        if not self._closed(u | neff):
            return False
        items = list(u)
        for mask in range((1 << len(items)) - 1):
            star = frozenset(a for i, a in enumerate(items) if mask >> i & 1)
            if self._closed(star | neff):
                return False
        return True

    def well_founded_leaves(self) -> list[frozenset]:
        memo: dict = {}

        def leaves(u: frozenset) -> frozenset:
            if u in memo:
                return memo[u]
            bad = _violated(_apply(self.state, u), self.instances)
            if not bad:
                res = frozenset([u])
            else:
                acc = set()
                for r in bad:
                    for atom, pos in r.body:
                        alpha = UpdateAction(atom, not pos)
                        if alpha not in r.head:
                            continue
                        child = u | {alpha}
                        if _consistent(child):
                            acc |= leaves(child)
                res = frozenset(acc)
            memo[u] = res
            return res

        return list(leaves(frozenset()))

    def repairs(self, kind: RepairKind) -> list[frozenset]:
        if not _violated(self.state, self.instances):
            return []
        if kind is RepairKind.WELL_FOUNDED:
            return _minimal(self.well_founded_leaves())
        minimal = _minimal(self.weak_repairs())
        if kind is RepairKind.SIMPLE:
            return minimal
        if kind is RepairKind.FOUNDED:
            return [u for u in minimal if self.is_founded(u)]
        return [u for u in minimal if self.is_justified(u)]


def _minimal(sets: list[frozenset]) -> list[frozenset]:
    return [s for s in sets if not any(t < s for t in sets)]


def oracle_repairs(db, aics: Sequence[Aic], kind: RepairKind, max_atoms: int = DEFAULT_MAX_ATOMS) -> list[frozenset]:
    """Repairs of ``kind`` by exhaustive enumeration; refuses instances over ``max_atoms`` atoms."""
    return Oracle(db, aics, max_atoms).repairs(kind)
