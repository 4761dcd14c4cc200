"""Command-line entry point: narrate, explain, classify, graph."""

from __future__ import annotations

import argparse
import json
import sys

from . import classifier, data, narrator, parser as sqlparser, query_graph, schema, translator
from .data import RankSpec
from .errors import TabletalkError

USAGE_EXIT = 1
INPUT_EXIT = 2


class _ArgumentParser(argparse.ArgumentParser):
    """Usage problems exit 1 (argparse's default of 2 is our input-error code)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(
        prog="tabletalk",
        description="Narrate relational data and explain SQL queries in English.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_data=False):
        p.add_argument("--schema", required=True, help="annotation file (JSON)")
        p.add_argument("--data", help="directory of <RELATION>.csv files")
        p.add_argument(
            "--mode",
            choices=("declarative", "procedural", "auto"),
            default="auto",
        )
        p.add_argument("--max-tuples", type=int, default=3, metavar="K")
        p.add_argument("--start", help="start relation for narration")
        p.add_argument(
            "--output", choices=("text", "json", "dot"), default="text"
        )

    add_common(sub.add_parser("narrate", help="narrate table contents"))
    explain = sub.add_parser("explain", help="translate a SQL query to English")
    explain.add_argument("sql", nargs="?", help="SQL text (or pipe via stdin)")
    add_common(explain)
    clf = sub.add_parser("classify", help="print the taxonomy class of a query")
    clf.add_argument("sql", nargs="?")
    add_common(clf)
    graph_cmd = sub.add_parser(
        "graph", help="DOT for a query graph, or the schema graph without SQL"
    )
    graph_cmd.add_argument("sql", nargs="?")
    add_common(graph_cmd)
    return parser


def _read_sql(args) -> str | None:
    piped = None
    if not sys.stdin.isatty():
        try:
            piped = sys.stdin.read().strip() or None
        except OSError:
            piped = None
    given = getattr(args, "sql", None)
    if piped and given:
        sys.stderr.write("warning: SQL given both on stdin and as an argument; "
                         "using stdin\n")
    return piped or given


def _envelope(result, cls=None, notes=(), diagnostics=()):
    return json.dumps(
        {
            "result": result,
            "class": cls,
            "notes": list(notes),
            "diagnostics": list(diagnostics),
        },
        indent=2,
    )


def _load_query(args, graph):
    sql = _read_sql(args)
    if not sql:
        raise SystemExit(_usage("a SQL query is required (argument or stdin)"))
    ast = sqlparser.parse_sql(sql)
    sqlparser.resolve_names(ast, graph)
    return query_graph.build(ast, graph)


def _usage(message) -> int:
    sys.stderr.write(
        "usage: tabletalk {narrate,explain,classify,graph} [SQL] "
        "--schema PATH [--data DIR] [options]\n"
    )
    sys.stderr.write(f"tabletalk: error: {message}\n")
    return USAGE_EXIT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    except TabletalkError as exc:
        sys.stderr.write(f"{exc}\n")
        return INPUT_EXIT
    except OSError as exc:
        sys.stderr.write(f"{exc}\n")
        return INPUT_EXIT


def _dispatch(args) -> int:
    graph = schema.load_schema(args.schema)
    if args.command == "narrate":
        if not args.data:
            return _usage("narrate requires --data")
        db = data.load_data(graph, args.data)
        plan = narrator.NarrationPlan(
            start_relation=args.start,
            mode=args.mode,
            tuple_budget=args.max_tuples,
            rank=RankSpec.load_order(),
        )
        narrative = narrator.narrate(graph, db, plan)
        if args.output == "json":
            print(_envelope(narrative.text, None, [], narrative.diagnostics))
        else:
            print(narrative.text)
            for diag in narrative.diagnostics:
                sys.stderr.write(f"note: {diag}\n")
        return 0

    if args.command == "graph":
        sql = _read_sql(args)
        if sql:
            ast = sqlparser.parse_sql(sql)
            sqlparser.resolve_names(ast, graph)
            dot = query_graph.emit_dot(query_graph.build(ast, graph))
        else:
            dot = schema.emit_dot(graph)
        if args.output == "json":
            print(_envelope(dot, None, [], list(graph.warnings)))
        else:
            sys.stdout.write(dot)
        return 0

    qg = _load_query(args, graph)
    cls = classifier.classify(qg)
    if args.command == "classify":
        if args.output == "json":
            print(_envelope(cls.label, cls.label, cls.evidence, []))
        else:
            print(cls.label)
            for line in cls.evidence:
                print(f"  - {line}")
        return 0

    # explain
    result = translator.translate(qg, graph, cls)
    if args.output == "json":
        print(_envelope(result.text, cls.label, result.notes, []))
    else:
        print(result.text)
        sys.stderr.write(f"class: {cls.label}\n")
        for note in result.notes:
            sys.stderr.write(f"note: {note}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
