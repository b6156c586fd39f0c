"""Embedded relational store: violation queries, update/undo, SQL emission.

Tables hold sets of rows; a row is a tuple aligned with the table's column
list.  ``update`` returns an undo log that snapshots every deleted row, since
a delete pattern may leave columns unspecified and match many rows.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .core import (
    Aic,
    AtomPattern,
    Const,
    Literal,
    RuleInstance,
    UpdateAction,
    Value,
    Var,
    is_consistent,
    value_key,
)

logger = logging.getLogger(__name__)

Row = tuple  # tuple[Value, ...]


class DatastoreError(Exception):
    pass


class SchemaError(DatastoreError):
    """An AIC references a table or column the database does not have."""


class UpdateError(DatastoreError):
    pass


class DatabaseFileError(DatastoreError):
    pass


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: set = field(default_factory=set)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        if len(set(self.columns)) != len(self.columns):
            raise SchemaError("duplicate column name in table schema")
        self.index = {c: i for i, c in enumerate(self.columns)}


class Database:
    """A mutable set of named tables.  Single-writer; clone for other workers."""

    def __init__(self, tables: Mapping[str, Iterable[str]] | None = None):
        self.tables: dict[str, Table] = {}
        for name, cols in (tables or {}).items():
            self.create_table(name, cols)

    def create_table(self, name: str, columns: Iterable[str], rows: Iterable[Sequence[Value]] = ()) -> None:
        if name in self.tables:
            raise SchemaError(f"duplicate table {name!r}")
        t = Table(tuple(columns))
        self.tables[name] = t
        for r in rows:
            self.insert_row(name, r)

    def insert_row(self, table: str, row: Sequence[Value] | Mapping[str, Value]) -> None:
        t = self._table(table)
        if isinstance(row, Mapping):
            row = tuple(row.get(c) for c in t.columns)
        row = tuple(row)
        if len(row) != len(t.columns):
            raise SchemaError(f"row arity {len(row)} does not match {table}{t.columns}")
        t.rows.add(row)

    def _table(self, name: str) -> Table:
        try:
            return self.tables[name]
        except KeyError:
            raise SchemaError(f"unknown table {name!r}") from None

    def columns(self, table: str) -> tuple[str, ...]:
        return self._table(table).columns

    def rows(self, table: str) -> set:
        return self._table(table).rows

    def row_dicts(self, table: str) -> list[dict[str, Value]]:
        t = self._table(table)
        return [dict(zip(t.columns, r)) for r in t.rows]

    def matching_rows(self, atom: AtomPattern) -> list[Row]:
        t = self._table(atom.table)
        checks = []
        for c, v in atom.constants().items():
            if c not in t.index:
                raise SchemaError(f"unknown column {atom.table}.{c}")
            checks.append((t.index[c], v))
        return [r for r in t.rows if all(r[i] == v for i, v in checks)]

    def entails(self, l: Literal) -> bool:
        found = bool(self.matching_rows(l.atom))
        return found if l.positive else not found

    def clone(self, tables: Iterable[str] | None = None) -> Database:
        names = list(self.tables) if tables is None else [n for n in self.tables if n in set(tables)]
        db = Database()
        for n in names:
            t = self.tables[n]
            db.create_table(n, t.columns)
            db.tables[n].rows = set(t.rows)
        return db

    def snapshot(self) -> dict:
        return {n: (t.columns, frozenset(t.rows)) for n, t in self.tables.items()}

    def active_constants(self) -> set:
        return {v for t in self.tables.values() for r in t.rows for v in r}

    def __eq__(self, other):
        if not isinstance(other, Database):
            return NotImplemented
        return self.snapshot() == other.snapshot()

    def __repr__(self) -> str:
        return f"Database({ {n: len(t.rows) for n, t in self.tables.items()} })"


# -- compatibility --------------------------------------------------------------


def aics_compatible(db: Database, aics: Iterable[Aic]) -> list[str]:
    """Return one diagnostic per unknown table or column; empty when compatible."""
    diags: list[str] = []
    seen: set = set()
    for aic in aics:
        atoms = [l.atom for l in aic.body] + [a.atom for a in aic.head]
        for atom in atoms:
            if atom.table not in db.tables:
                key = (atom.table,)
                if key not in seen:
                    seen.add(key)
                    diags.append(f"unknown table `{atom.table}`")
                continue
            cols = db.tables[atom.table].index
            for c in atom.columns:
                key = (atom.table, c)
                if c not in cols and key not in seen:
                    seen.add(key)
                    diags.append(f"unknown column `{atom.table}.{c}`")
    return diags


# -- queries ----------------------------------------------------------------------


def _extend(db: Database, atom: AtomPattern, theta: dict) -> Iterator[dict]:
    """Bindings extending ``theta`` under which some row matches ``atom``."""
    t = db._table(atom.table)
    fixed = []
    free = []
    for c, term in atom.bindings:
        if c not in t.index:
            raise SchemaError(f"unknown column {atom.table}.{c}")
        i = t.index[c]
        if isinstance(term, Const):
            fixed.append((i, term.value))
        elif term.name in theta:
            fixed.append((i, theta[term.name]))
        else:
            free.append((i, term.name))
    for r in t.rows:
        if not all(r[i] == v for i, v in fixed):
            continue
        out = dict(theta)
        ok = True
        for i, name in free:
            if name in out and out[name] != r[i]:
                ok = False
                break
            out[name] = r[i]
        if ok:
            yield out


def evaluate_body(
    db: Database,
    body: Sequence[Literal],
    seed: Mapping[str, Value] | None = None,
    skip: Optional[Literal] = None,
) -> list[dict]:
    """All bindings of the body's variables under which every literal holds.

    Positive literals are joined left to right; negative literals act as
    anti-joins once their variables are bound.  A literal whose instance
    equals the closed literal ``skip`` counts as satisfied.
    """
    thetas: list[dict] = [dict(seed or {})]
    positives = [l for l in body if l.positive]
    negatives = [l for l in body if not l.positive]
    for l in positives:
        nxt: list[dict] = []
        for th in thetas:
            nxt.extend(_extend(db, l.atom, th))
            if skip is not None and skip.positive:
                u = unify(l.atom, skip.atom, th)
                if u is not None:
                    nxt.append(u)
        thetas = _dedup(nxt)
        if not thetas:
            return []
    out = []
    for th in thetas:
        ok = True
        for l in negatives:
            inst = l.atom.substitute(th)
            if not inst.closed:
                raise UpdateError(f"unsafe negative literal {l}: unbound variables")
            if skip is not None and not skip.positive and inst == skip.atom:
                continue
            if db.matching_rows(inst):
                ok = False
                break
        if ok:
            out.append(th)
    return out


def _dedup(thetas: list[dict]) -> list[dict]:
    seen = set()
    out = []
    for th in thetas:
        k = tuple(sorted(th.items(), key=lambda p: p[0]))
        if k not in seen:
            seen.add(k)
            out.append(th)
    return out


def unify(pattern: AtomPattern, closed: AtomPattern, theta: Mapping[str, Value] | None = None) -> dict | None:
    """Extend ``theta`` so that ``pattern`` instantiates to ``closed``, or None."""
    if pattern.table != closed.table or set(pattern.columns) != set(closed.columns):
        return None
    target = closed.constants()
    out = dict(theta or {})
    for c, t in pattern.bindings:
        v = target[c]
        if isinstance(t, Const):
            if t.value != v:
                return None
        elif t.name in out:
            if out[t.name] != v:
                return None
        else:
            out[t.name] = v
    return out


def find_violations(db: Database, aic: Aic) -> list[RuleInstance]:
    """Closed instances of ``aic`` whose whole body holds in ``db``, canonically ordered."""
    varnames = aic.variables()
    seen = set()
    out = []
    for th in evaluate_body(db, aic.body):
        key = tuple(th.get(v) for v in varnames)
        if key in seen:
            continue
        seen.add(key)
        out.append(RuleInstance.of(aic, {v: th[v] for v in varnames}))
    out.sort(key=RuleInstance.sort_key)
    return out


def violations(db: Database, aics: Sequence[Aic]) -> list[tuple[int, RuleInstance]]:
    return [(i, r) for i, aic in enumerate(aics) for r in find_violations(db, aic)]


def satisfies(db: Database, aics: Sequence[Aic]) -> bool:
    return all(not evaluate_body(db, aic.body) for aic in aics)


# -- update / undo ------------------------------------------------------------------


@dataclass(frozen=True)
class InsertedRow:
    table: str
    row: Row
    was_already_present: bool


@dataclass(frozen=True)
class DeletedRows:
    table: str
    rows: tuple


@dataclass
class UndoLog:
    entries: list = field(default_factory=list)


def update(db: Database, actions: Iterable[UpdateAction]) -> UndoLog:
    """Apply inserts, then deletes; return a log that ``undo`` replays backwards."""
    actions = list(actions)
    for a in actions:
        if not a.closed:
            raise UpdateError(f"cannot execute non-closed action {a}")
        t = db._table(a.atom.table)
        for c in a.atom.columns:
            if c not in t.index:
                raise SchemaError(f"unknown column {a.atom.table}.{c}")
    if not is_consistent(actions):
        raise UpdateError("inconsistent update set")
    log = UndoLog()
    for a in actions:
        if not a.insert:
            continue
        t = db.tables[a.atom.table]
        consts = a.atom.constants()
        row = tuple(consts.get(c) for c in t.columns)
        present = row in t.rows
        t.rows.add(row)
        log.entries.append(InsertedRow(a.atom.table, row, present))
    for a in actions:
        if a.insert:
            continue
        doomed = db.matching_rows(a.atom)
        rows = db.tables[a.atom.table].rows
        for r in doomed:
            rows.discard(r)
        log.entries.append(DeletedRows(a.atom.table, tuple(doomed)))
    return log


def undo(db: Database, log: UndoLog) -> None:
    for e in reversed(log.entries):
        rows = db.tables[e.table].rows
        if isinstance(e, DeletedRows):
            rows.update(e.rows)
        elif not e.was_already_present:
            rows.discard(e.row)


# -- SQL emission -------------------------------------------------------------------


def _sql_value(v: Value) -> str:
    return "NULL" if v is None else "'" + v.replace("'", "''") + "'"


def _sql_eq(lhs: str, v: Value) -> str:
    return f"{lhs} IS NULL" if v is None else f"{lhs}={_sql_value(v)}"


def emit_sql(aic: Aic) -> str:
    """A SELECT returning one row per violating instance of the body.

    Positive literals become the FROM / INNER JOIN chain; each negative
    literal becomes a correlated ``NOT EXISTS`` subquery.
    """
    used: dict[str, int] = {}

    def alias(table: str) -> tuple[str, str]:
        n = used.get(table, 0) + 1
        used[table] = n
        if n == 1:
            return table, table
        name = f"{table}_{n}"
        return f"{table} AS {name}", name

    binder: dict[str, str] = {}
    lines: list[str] = []
    where: list[str] = []
    positives = [l for l in aic.body if l.positive]
    for k, l in enumerate(positives):
        ref, name = alias(l.atom.table)
        on: list[str] = []
        for c, t in l.atom.bindings:
            q = f"{name}.{c}"
            if isinstance(t, Const):
                where.append(_sql_eq(q, t.value))
            elif t.name in binder:
                (on if k > 0 and not binder[t.name].startswith(name + ".") else where).append(f"{binder[t.name]}={q}")
            else:
                binder[t.name] = q
        if k == 0:
            lines.append(f"SELECT * FROM {ref}")
        elif on:
            lines.append(f"  INNER JOIN {ref}")
            lines.append("  ON " + " AND ".join(on))
        else:
            lines.append(f"  CROSS JOIN {ref}")
    if not positives:
        lines.append("SELECT 1")
    for l in aic.body:
        if l.positive:
            continue
        ref, name = alias(l.atom.table)
        corr, consts = [], []
        for c, t in l.atom.bindings:
            q = f"{name}.{c}"
            if isinstance(t, Const):
                consts.append(_sql_eq(q, t.value))
            elif t.name in binder:
                corr.append(f"{q}={binder[t.name]}")
            else:
                # safety guarantees a binder; a repeated fresh var cannot occur
                binder[t.name] = q
        conds = corr + consts
        sub = f"(SELECT * FROM {ref}"
        if conds:
            sub += "\n    WHERE " + "\n    AND ".join(conds)
        sub += ")"
        where.append("NOT EXISTS\n  " + sub)
    if where:
        lines.append("  WHERE " + "\n  AND ".join(where))
    return "\n".join(lines)


# -- JSON files ---------------------------------------------------------------------


def _no_dup_tables(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise DatabaseFileError(f"duplicate key {k!r}")
        out[k] = v
    return out


def load_database(path: str | Path) -> Database:
    try:
        data = json.loads(Path(path).read_text(), object_pairs_hook=_no_dup_tables)
    except json.JSONDecodeError as exc:
        raise DatabaseFileError(f"malformed JSON: {exc}") from None
    return database_from_json(data)


def database_from_json(data) -> Database:
    if not isinstance(data, dict):
        raise DatabaseFileError("database file must be a JSON object of tables")
    db = Database()
    for name, spec in data.items():
        if not isinstance(spec, dict) or not isinstance(spec.get("columns"), list):
            raise DatabaseFileError(f"table {name!r} needs a 'columns' list")
        cols = spec["columns"]
        if not all(isinstance(c, str) for c in cols):
            raise DatabaseFileError(f"table {name!r}: column names must be strings")
        db.create_table(name, cols)
        for i, row in enumerate(spec.get("rows", [])):
            if not isinstance(row, list) or len(row) != len(cols):
                raise DatabaseFileError(f"table {name!r} row {i}: arity mismatch, expected {len(cols)} values")
            if not all(v is None or isinstance(v, str) for v in row):
                raise DatabaseFileError(f"table {name!r} row {i}: values must be strings or null")
            db.insert_row(name, row)
    return db


def database_to_json(db: Database) -> dict:
    out = {}
    for name in sorted(db.tables):
        t = db.tables[name]
        rows = sorted(t.rows, key=lambda r: tuple(value_key(v) for v in r))
        out[name] = {"columns": list(t.columns), "rows": [list(r) for r in rows]}
    return out


def save_database(db: Database, path: str | Path) -> None:
    Path(path).write_text(json.dumps(database_to_json(db), indent=2) + "\n")
