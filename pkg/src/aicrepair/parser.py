"""Reader and writer for AIC text files, flat or partition-annotated.

Flat grammar, whitespace-insensitive between tokens::

    aic     := literal ("," literal)* "->" action ("," action)* ";"
    literal := ["NOT"] table "(" [col "=" term ("," col "=" term)*] ")"
    action  := ("+" | "-") table "(" ... ")"
    term    := "$"name | bare-token | 'quoted '' string' | NULL

Lines starting with ``--`` are comments.  Annotated files wrap AIC blocks in
``#PARTITION_BEGIN_n#`` / ``#PARTITION_END#`` and list ``X -> Y`` lines
(partition Y precedes partition X) between ``#DEPENDENCIES_BEGIN#`` and
``#DEPENDENCIES_END#``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import (
    Aic,
    AicError,
    AtomPattern,
    Const,
    Literal,
    Term,
    UpdateAction,
    Var,
    format_aic,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class AicSyntaxError(ParseError):
    pass


class AicSemanticError(ParseError):
    pass


class AnnotationError(ParseError):
    pass


@dataclass(frozen=True)
class Partition:
    id: int
    aics: tuple[Aic, ...]


@dataclass(frozen=True)
class AicDocument:
    """Either flat (``partitions is None``) or annotated."""

    aics: tuple[Aic, ...] = ()
    partitions: tuple[Partition, ...] | None = None
    dependencies: tuple[tuple[int, int], ...] = ()

    @property
    def annotated(self) -> bool:
        return self.partitions is not None

    def all_aics(self) -> list[Aic]:
        if self.partitions is None:
            return list(self.aics)
        return [a for p in self.partitions for a in p.aics]

    @classmethod
    def flat(cls, aics) -> AicDocument:
        return cls(aics=tuple(aics))

    @classmethod
    def annotate(cls, partitions, dependencies=()) -> AicDocument:
        parts = tuple(p if isinstance(p, Partition) else Partition(p[0], tuple(p[1])) for p in partitions)
        doc = cls(partitions=parts, dependencies=tuple(tuple(d) for d in dependencies))
        _check_annotations(doc)
        return doc


# -- tokenizer ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<arrow>->)
  | (?P<var>\$[A-Za-z0-9_]+)
  | (?P<quoted>'(?:[^']|'')*')
  | (?P<bare>[A-Za-z0-9_][A-Za-z0-9_.]*)
  | (?P<punct>[(),=;+\-])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, line0: int = 1) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, line0, 0
    at_line_start = True
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise AicSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
            at_line_start = True
        elif kind == "comment":
            if not at_line_start:
                # a '--' inside a line is not a comment
                raise AicSyntaxError("unexpected '--'", line, col)
        elif kind != "ws":
            at_line_start = False
            toks.append(_Tok(kind, m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, expected: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise AicSyntaxError(f"expected {expected}, got {got}", tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text or t.kind in ("quoted", "eof"):
            self.fail(repr(text))
        return self.next()

    def identifier(self, what: str) -> str:
        t = self.peek()
        if t.kind != "bare":
            self.fail(what)
        return self.next().text

    def term(self) -> Term:
        t = self.peek()
        if t.kind == "var":
            self.next()
            return Var(t.text[1:])
        if t.kind == "quoted":
            self.next()
            return Const(t.text[1:-1].replace("''", "'"))
        if t.kind == "bare":
            self.next()
            return Const(None if t.text == "NULL" else t.text)
        self.fail("a value or $variable")

    def atom(self) -> AtomPattern:
        start = self.peek()
        table = self.identifier("a table name")
        self.expect("(")
        bindings: list[tuple[str, Term]] = []
        if self.peek().text != ")" or self.peek().kind == "quoted":
            while True:
                ctok = self.peek()
                col = self.identifier("a column name")
                if any(c == col for c, _ in bindings):
                    raise AicSemanticError(f"column {col!r} bound twice in {table}", ctok.line, ctok.col)
                self.expect("=")
                bindings.append((col, self.term()))
                if self.peek().text == "," and self.peek().kind == "punct":
                    self.next()
                    continue
                break
        self.expect(")")
        return AtomPattern(table, tuple(bindings))

    def literal(self) -> Literal:
        t = self.peek()
        if t.kind == "bare" and t.text.upper() == "NOT" and self.peek(1).kind == "bare":
            self.next()
            return Literal(self.atom(), positive=False)
        return Literal(self.atom(), positive=True)

    def action(self) -> UpdateAction:
        t = self.peek()
        if t.kind != "punct" or t.text not in "+-":
            self.fail("'+' or '-' starting an action")
        self.next()
        return UpdateAction(self.atom(), insert=t.text == "+")

    def aic(self) -> Aic:
        start = self.peek()
        body = [self.literal()]
        while self.peek().text == "," and self.peek().kind == "punct":
            self.next()
            body.append(self.literal())
        if self.peek().kind != "arrow":
            self.fail("',' or '->'")
        self.next()
        head = [self.action()]
        while self.peek().text == "," and self.peek().kind == "punct":
            self.next()
            head.append(self.action())
        self.expect(";")
        try:
            return Aic(tuple(body), tuple(head))
        except AicError as exc:
            raise AicSemanticError(str(exc), start.line, start.col) from None

    def aics(self) -> list[Aic]:
        out = []
        while self.peek().kind != "eof":
            out.append(self.aic())
        return out


def parse_aics(text: str, first_line: int = 1) -> list[Aic]:
    return _Parser(_tokenize(text, first_line)).aics()


def parse_actions(text: str) -> list[UpdateAction]:
    """Parse a comma-separated action list such as ``-junior(id=e1), +p(a=1)``."""
    p = _Parser(_tokenize(text))
    out = []
    if p.peek().kind == "eof":
        return out
    out.append(p.action())
    while p.peek().text == "," and p.peek().kind == "punct":
        p.next()
        out.append(p.action())
    if p.peek().kind != "eof":
        p.fail("',' or end of input")
    return out


# -- annotated documents -------------------------------------------------------

_PART_BEGIN = re.compile(r"#PARTITION_BEGIN_(\d+)#")
_PART_END = "#PARTITION_END#"
_DEPS_BEGIN = "#DEPENDENCIES_BEGIN#"
_DEPS_END = "#DEPENDENCIES_END#"
_DEP_LINE = re.compile(r"(\d+)\s*->\s*(\d+)")


def parse(text: str) -> AicDocument:
    lines = text.split("\n")
    if not any(l.strip().startswith("#") for l in lines):
        return AicDocument.flat(parse_aics(text))

    partitions: list[Partition] = []
    deps: list[tuple[int, int]] = []
    seen_deps = False
    i = 0
    while i < len(lines):
        raw = lines[i]
        s = raw.strip()
        lineno = i + 1
        if not s or s.startswith("--"):
            i += 1
            continue
        m = _PART_BEGIN.fullmatch(s)
        if m:
            pid = int(m.group(1))
            if pid < 1:
                raise AnnotationError("partition ids must be positive", lineno, 1)
            if any(p.id == pid for p in partitions):
                raise AnnotationError(f"duplicate partition id {pid}", lineno, 1)
            j = i + 1
            while j < len(lines) and lines[j].strip() != _PART_END:
                if lines[j].strip().startswith("#"):
                    raise AnnotationError(f"missing {_PART_END} for partition {pid}", j + 1, 1)
                j += 1
            if j == len(lines):
                raise AnnotationError(f"missing {_PART_END} for partition {pid}", lineno, 1)
            block = "\n".join(lines[i + 1 : j])
            partitions.append(Partition(pid, tuple(parse_aics(block, first_line=i + 2))))
            i = j + 1
            continue
        if s == _DEPS_BEGIN:
            if seen_deps:
                raise AnnotationError("duplicate dependency section", lineno, 1)
            seen_deps = True
            j = i + 1
            while j < len(lines) and lines[j].strip() != _DEPS_END:
                d = lines[j].strip()
                if d and not d.startswith("--"):
                    dm = _DEP_LINE.fullmatch(d)
                    if not dm:
                        raise AnnotationError(f"malformed dependency line {d!r}", j + 1, 1)
                    deps.append((int(dm.group(1)), int(dm.group(2))))
                j += 1
            if j == len(lines):
                raise AnnotationError(f"missing {_DEPS_END}", lineno, 1)
            i = j + 1
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        if s.startswith("#"):
            raise AnnotationError(f"unknown marker {s!r}", lineno, col)
        raise AnnotationError("AIC text outside a partition block", lineno, col)

    doc = AicDocument(partitions=tuple(partitions), dependencies=tuple(deps))
    _check_annotations(doc)
    return doc


def _check_annotations(doc: AicDocument) -> None:
    ids = [p.id for p in doc.partitions]
    if len(set(ids)) != len(ids):
        raise AnnotationError("duplicate partition id")
    idset = set(ids)
    for x, y in doc.dependencies:
        for end in (x, y):
            if end not in idset:
                raise AnnotationError(f"dependency {x} -> {y} names undeclared partition {end}")
        if x == y:
            raise AnnotationError(f"partition {x} depends on itself")
    # cycle check on the precedes relation
    succ: dict[int, list[int]] = {i: [] for i in ids}
    for x, y in doc.dependencies:
        succ[y].append(x)
    state: dict[int, int] = {}
    for start in ids:
        if start in state:
            continue
        stack = [(start, iter(succ[start]))]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state.get(nxt) == 1:
                raise AnnotationError(f"cyclic dependencies through partition {nxt}")
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))


def serialize(doc: AicDocument) -> str:
    if not doc.annotated:
        return "\n\n".join(format_aic(a) for a in doc.aics) + ("\n" if doc.aics else "")
    out: list[str] = []
    for p in doc.partitions:
        out.append(f"#PARTITION_BEGIN_{p.id}#")
        out.extend(format_aic(a) for a in p.aics)
        out.append(_PART_END)
    out.append(_DEPS_BEGIN)
    out.extend(f"{x} -> {y}" for x, y in doc.dependencies)
    out.append(_DEPS_END)
    return "\n".join(out) + "\n"
