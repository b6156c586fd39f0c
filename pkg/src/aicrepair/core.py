"""Atoms, literals, update actions and active integrity constraints.

Everything here is an immutable value. Database values are strings; ``None``
is the null marker used to fill columns an insert leaves unspecified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

Value = Optional[str]


class AicError(ValueError):
    """An AIC violates one of its structural invariants."""


@dataclass(frozen=True)
class Const:
    value: Value

    def __str__(self) -> str:
        return "NULL" if self.value is None else self.value


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be non-empty")

    def __str__(self) -> str:
        return "$" + self.name


Term = Union[Const, Var]
Substitution = Mapping[str, Value]


def value_key(v: Value) -> tuple:
    # orders None before every string
    return (v is not None, v or "")


@dataclass(frozen=True, eq=False)
class AtomPattern:
    """A table name plus column bindings.

    Bindings keep their source order for printing; equality and hashing
    ignore that order.
    """

    table: str
    bindings: tuple[tuple[str, Term], ...] = ()
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.table:
            raise ValueError("table name must be non-empty")
        b = self.bindings
        if isinstance(b, Mapping):
            b = tuple(b.items())
        b = tuple((str(c), t if isinstance(t, (Const, Var)) else Const(t)) for c, t in b)
        cols = [c for c, _ in b]
        if len(set(cols)) != len(cols):
            raise ValueError(f"duplicate column in atom over {self.table!r}")
        object.__setattr__(self, "bindings", b)
        object.__setattr__(self, "_key", (self.table, tuple(sorted(b, key=lambda p: p[0]))))

    def __eq__(self, other):
        if not isinstance(other, AtomPattern):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.bindings)

    def as_dict(self) -> dict[str, Term]:
        return dict(self.bindings)

    def variables(self) -> list[str]:
        seen: list[str] = []
        for _, t in self.bindings:
            if isinstance(t, Var) and t.name not in seen:
                seen.append(t.name)
        return seen

    @property
    def closed(self) -> bool:
        return all(isinstance(t, Const) for _, t in self.bindings)

    def substitute(self, theta: Substitution) -> AtomPattern:
        out = []
        for c, t in self.bindings:
            if isinstance(t, Var) and t.name in theta:
                t = Const(theta[t.name])
            out.append((c, t))
        return AtomPattern(self.table, tuple(out))

    def constants(self) -> dict[str, Value]:
        return {c: t.value for c, t in self.bindings if isinstance(t, Const)}

    def sort_key(self) -> tuple:
        return (
            self.table,
            tuple(
                (c, (0, value_key(t.value)) if isinstance(t, Const) else (1, t.name))
                for c, t in self._key[1]
            ),
        )

    def __str__(self) -> str:
        return format_atom(self)


@dataclass(frozen=True)
class Literal:
    atom: AtomPattern
    positive: bool = True

    def __str__(self) -> str:
        return ("" if self.positive else "NOT ") + str(self.atom)


@dataclass(frozen=True)
class UpdateAction:
    atom: AtomPattern
    insert: bool = True

    @property
    def closed(self) -> bool:
        return self.atom.closed

    def substitute(self, theta: Substitution) -> UpdateAction:
        return UpdateAction(self.atom.substitute(theta), self.insert)

    def __str__(self) -> str:
        return ("+ " if self.insert else "- ") + str(self.atom)


UpdateSet = frozenset  # frozenset[UpdateAction]


def dual(lit: Literal) -> Literal:
    return Literal(lit.atom, not lit.positive)


def ua(lit: Literal) -> UpdateAction:
    """The action that makes ``lit`` true: ``+a`` for ``a``, ``-a`` for ``not a``."""
    return UpdateAction(lit.atom, lit.positive)


def lit(action: UpdateAction) -> Literal:
    return Literal(action.atom, action.insert)


def substitute_literal(l: Literal, theta: Substitution) -> Literal:
    return Literal(l.atom.substitute(theta), l.positive)


@dataclass(frozen=True)
class Aic:
    """``body -> head``: if every body literal holds, one head action should fire."""

    body: tuple[Literal, ...]
    head: tuple[UpdateAction, ...]

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        if not self.body:
            raise AicError("AIC body must contain at least one literal")
        if not self.head:
            raise AicError("AIC head must contain at least one action")
        for a in self.head:
            if dual(lit(a)) not in self.body:
                raise AicError(f"head-dual inclusion violated: dual of {a} does not occur in the body")
        bound: set[str] = set()
        for l in self.body:
            if l.positive:
                bound.update(l.atom.variables())
            else:
                free = [v for v in l.atom.variables() if v not in bound]
                if free:
                    raise AicError(
                        f"safety violated: variable ${free[0]} of {l} does not occur in an earlier positive literal"
                    )

    def variables(self) -> list[str]:
        seen: list[str] = []
        for l in self.body:
            for v in l.atom.variables():
                if v not in seen:
                    seen.append(v)
        return seen

    @property
    def updatable(self) -> tuple[Literal, ...]:
        return tuple(dual(lit(a)) for a in self.head)

    @property
    def nup(self) -> tuple[Literal, ...]:
        upd = set(self.updatable)
        return tuple(l for l in self.body if l not in upd)

    def tables(self) -> set[str]:
        return {l.atom.table for l in self.body}

    def __str__(self) -> str:
        return format_aic(self)


@dataclass(frozen=True)
class RuleInstance:
    """A closed instance of an AIC under a substitution."""

    source: Aic
    substitution: tuple[tuple[str, Value], ...]
    closed_body: tuple[Literal, ...]
    closed_head: tuple[UpdateAction, ...]
    closed_nup: tuple[Literal, ...]

    @classmethod
    def of(cls, aic: Aic, theta: Substitution) -> RuleInstance:
        body = tuple(substitute_literal(l, theta) for l in aic.body)
        head = tuple(a.substitute(theta) for a in aic.head)
        upd = {dual(lit(a)) for a in head}
        nup = tuple(l for l in body if l not in upd)
        subst = tuple(sorted(((v, theta[v]) for v in aic.variables()), key=lambda p: p[0]))
        return cls(aic, subst, body, head, nup)

    @property
    def contradictory(self) -> bool:
        """True when the closed body holds some literal and its dual; such an instance constrains nothing."""
        body = set(self.closed_body)
        return any(dual(l) in body for l in body)

    @property
    def theta(self) -> dict[str, Value]:
        return dict(self.substitution)

    def sort_key(self) -> tuple:
        return tuple((v, value_key(x)) for v, x in self.substitution)


def is_normal(aics: Iterable[Aic]) -> bool:
    return all(len(a.head) == 1 for a in aics)


def materialize(atom: AtomPattern, columns: Iterable[str]) -> dict[str, Value]:
    """The full row an insert of ``atom`` produces over ``columns``."""
    consts = atom.constants()
    return {c: consts.get(c) for c in columns}


def row_matches(atom: AtomPattern, row: Mapping[str, Value]) -> bool:
    return all(c in row and row[c] == v for c, v in atom.constants().items())


def is_consistent(actions: Iterable[UpdateAction]) -> bool:
    """False iff some insert materializes a row matched by a delete on the same table."""
    inserts: dict[str, list[AtomPattern]] = {}
    deletes: dict[str, list[AtomPattern]] = {}
    for a in actions:
        (inserts if a.insert else deletes).setdefault(a.atom.table, []).append(a.atom)
    for table, ins in inserts.items():
        for d in deletes.get(table, ()):
            dc = d.constants()
            for p in ins:
                pc = p.constants()
                # unspecified insert columns become null
                if all(pc.get(c) == v for c, v in dc.items()):
                    return False
    return True


def action_sort_key(a: UpdateAction) -> tuple:
    """Canonical order: table, deletes before inserts, then bindings."""
    table, bindings = a.atom.sort_key()
    return (table, 1 if a.insert else 0, bindings)


def canonical(u: Iterable[UpdateAction]) -> tuple[UpdateAction, ...]:
    return tuple(sorted(u, key=action_sort_key))


def update_set_key(u: Iterable[UpdateAction]) -> tuple:
    c = canonical(u)
    return (len(c), tuple(action_sort_key(a) for a in c))


# -- text rendering ---------------------------------------------------------

_BARE_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.")


def format_value(v: Value) -> str:
    if v is None:
        return "NULL"
    if v and v[0] != "." and all(ch in _BARE_CHARS for ch in v) and v not in ("NOT", "not", "NULL"):
        return v
    return "'" + v.replace("'", "''") + "'"


def format_term(t: Term) -> str:
    return str(t) if isinstance(t, Var) else format_value(t.value)


def format_atom(atom: AtomPattern, compact: bool = False, sort: bool = False) -> str:
    bindings = atom._key[1] if sort else atom.bindings
    eq, sep = ("=", ",") if compact else (" = ", ", ")
    return f"{atom.table}(" + sep.join(f"{c}{eq}{format_term(t)}" for c, t in bindings) + ")"


def format_action(a: UpdateAction, compact: bool = False) -> str:
    if compact:
        return ("+" if a.insert else "-") + format_atom(a.atom, compact=True, sort=True)
    return ("+ " if a.insert else "- ") + format_atom(a.atom)


def format_update_set(u: Iterable[UpdateAction]) -> str:
    return ", ".join(format_action(a, compact=True) for a in canonical(u))


def format_aic(aic: Aic) -> str:
    body = ",\n  ".join(str(l) for l in aic.body)
    head = ", ".join(format_action(a) for a in aic.head)
    return f"{body}\n  -> {head};"
