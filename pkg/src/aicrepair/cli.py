"""Command-line front end.

    aicrepair check      --db DB.json AICS
    aicrepair repair     --db DB.json AICS [--kind K] [--parallel] [--show-weak] [--oracle]
    aicrepair preprocess AICS [-o OUT]
    aicrepair emit-sql   AICS

Repairs are printed, never applied.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence, TextIO

from .core import AicError, UpdateAction, canonical, format_update_set, format_value, update_set_key
from .datastore import DatabaseFileError, DatastoreError, aics_compatible, emit_sql, load_database, violations
from .engine import DEFAULT_COMBINATION_CAP, Mode, PlanError, repair_all
from .oracle import DEFAULT_MAX_ATOMS, OracleBudgetExceeded, oracle_repairs
from .parser import ParseError, parse, serialize
from .partition import preprocess
from .repair import DEFAULT_MAX_NODES, RepairKind, ResourceExhausted

EXIT_OK = 0
EXIT_FOUND = 1
EXIT_PARTIAL = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_NOINPUT = 66
EXIT_SOFTWARE = 70


class _UsageError(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _kind(text: str) -> RepairKind:
    try:
        return RepairKind.parse(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown repair kind {text!r} (choose simple, founded, well-founded, justified)"
        ) from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _ArgParser(prog="aicrepair", description="Check databases against active integrity constraints and compute repairs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    def common(sp, with_db: bool):
        sp.add_argument("aics", help="AIC file, flat or annotated")
        if with_db:
            sp.add_argument("--db", required=True, help="database JSON file")
        sp.add_argument("--format", choices=("text", "json"), default="text")

    c = sub.add_parser("check", help="report violated AIC instances")
    common(c, True)

    r = sub.add_parser("repair", help="compute repairs")
    common(r, True)
    r.add_argument("--kind", type=_kind, default=RepairKind.SIMPLE)
    r.add_argument("--parallel", action="store_true", help="grow independent partitions on worker threads")
    r.add_argument("--show-weak", action="store_true", help="print every validated leaf, not only minimal repairs")
    r.add_argument("--oracle", action="store_true", help="brute-force enumeration instead of repair trees (exponential)")
    r.add_argument("--max-nodes", type=_positive, default=DEFAULT_MAX_NODES)
    r.add_argument("--combination-cap", type=_positive, default=DEFAULT_COMBINATION_CAP)
    r.add_argument("--max-atoms", type=_positive, default=DEFAULT_MAX_ATOMS, help="oracle budget")

    pp = sub.add_parser("preprocess", help="write the annotated partition file")
    pp.add_argument("aics")
    pp.add_argument("-o", "--output")

    s = sub.add_parser("emit-sql", help="print the violation query of each AIC")
    s.add_argument("aics")
    return p


def action_json(a: UpdateAction) -> dict:
    return {
        "op": "+" if a.insert else "-",
        "table": a.atom.table,
        "bindings": {c: t.value for c, t in sorted(a.atom.bindings)},
    }


def update_set_json(u) -> list:
    return [action_json(a) for a in canonical(u)]


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"no such file: {path}") from None


def _load(args):
    doc = parse(_read(args.aics))
    try:
        db = load_database(args.db)
    except FileNotFoundError:
        raise FileNotFoundError(f"no such file: {args.db}") from None
    diags = aics_compatible(db, doc.all_aics())
    if diags:
        raise DatabaseFileError("AICs do not match the database schema: " + "; ".join(diags))
    return doc, db


def _cmd_check(args, out: TextIO) -> int:
    doc, db = _load(args)
    found = violations(db, doc.all_aics())
    if args.format == "json":
        payload = {
            "consistent": not found,
            "violations": [{"aic": i + 1, "substitution": dict(r.substitution)} for i, r in found],
        }
        out.write(json.dumps(payload, indent=2) + "\n")
    elif not found:
        out.write("consistent\n")
    else:
        for i, r in found:
            subst = ", ".join(f"${v}={format_value(x)}" for v, x in r.substitution)
            out.write(f"AIC {i + 1} violated: {subst}\n")
    return EXIT_OK if not found else EXIT_FOUND


def _cmd_repair(args, out: TextIO, err: TextIO) -> int:
    doc, db = _load(args)
    aics = doc.all_aics()
    weak = None
    if args.oracle:
        repairs = oracle_repairs(db, aics, args.kind, args.max_atoms)
        consistent = not violations(db, aics)
        stats = {"nodes": 0, "deduped": 0, "partitions": 1, "strata": 1}
        partial = False
    else:
        res = repair_all(
            db,
            doc,
            args.kind,
            Mode.PARALLEL if args.parallel else Mode.SEQUENTIAL,
            combination_cap=args.combination_cap,
            max_nodes=args.max_nodes,
            collect_weak=args.show_weak,
        )
        repairs, consistent = res.repairs, res.consistent
        weak = res.weak_leaves if args.show_weak else None
        stats = {
            "nodes": res.stats.nodes,
            "deduped": res.stats.deduplicated,
            "partitions": res.partitions,
            "strata": res.strata,
        }
        partial = res.truncated or bool(res.indeterminate)
        if res.truncated:
            err.write("warning: candidate combinations truncated; results are partial\n")
        if res.indeterminate:
            err.write(f"warning: {len(res.indeterminate)} leaves could not be validated within the subset budget\n")
    repairs = sorted(repairs, key=update_set_key)

    if args.format == "json":
        payload = {"consistent": consistent, "kind": args.kind.value, "repairs": [update_set_json(u) for u in repairs]}
        if weak is not None:
            payload["weakLeaves"] = [update_set_json(u) for u in weak]
        payload["stats"] = stats
        payload["truncated"] = partial
        out.write(json.dumps(payload, indent=2) + "\n")
    elif consistent:
        out.write("consistent\n")
    else:
        for u in weak if weak is not None else repairs:
            out.write(format_update_set(u) + "\n")
        if not repairs:
            err.write(f"no {args.kind.value} repairs\n")
    if partial:
        return EXIT_PARTIAL
    return EXIT_OK if consistent else EXIT_FOUND


def _cmd_preprocess(args, out: TextIO) -> int:
    doc = parse(_read(args.aics))
    text = serialize(preprocess(doc.all_aics()))
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def _cmd_emit_sql(args, out: TextIO) -> int:
    doc = parse(_read(args.aics))
    blocks = [f"-- AIC {i + 1}\n{emit_sql(a)};\n" for i, a in enumerate(doc.all_aics())]
    out.write("\n".join(blocks))
    return EXIT_OK


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        if args.command == "check":
            return _cmd_check(args, out)
        if args.command == "repair":
            return _cmd_repair(args, out, err)
        if args.command == "preprocess":
            return _cmd_preprocess(args, out)
        return _cmd_emit_sql(args, out)
    except FileNotFoundError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_NOINPUT
    except PlanError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (ParseError, AicError, DatastoreError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DATAERR
    except (ResourceExhausted, OracleBudgetExceeded) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_SOFTWARE


def main_entry() -> None:
    sys.exit(main())
