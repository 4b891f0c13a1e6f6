"""Command-line front end: ``analyze``, ``diff``, and ``eval``.

Output conventions: the machine-readable document (graph or report JSON)
goes to stdout — except the graph when ``--out`` is given — and human
summaries go to stderr, so pipelines stay clean.  Exit codes: 0 success,
1 usage error (bad arguments or malformed configuration), 2 fatal IO
(unreadable inputs); per-file analysis problems are diagnostics and never
change the exit code.
"""

from __future__ import annotations

import argparse
import json
import sys

from webdeps.evaluate import (
    delta_as_dict,
    evaluate_graph,
    parse_ground_truth,
    render_delta,
    render_eval,
)
from webdeps.graph import deserialize_graph, diff_graphs, serialize_graph
from webdeps.pipeline import (
    FORMATS,
    MODES,
    UNRESOLVED_POLICIES,
    AnalysisConfig,
    analyze,
)

USAGE_EXIT = 1
IO_EXIT = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with the usage exit code this tool promises (1, not 2)."""

    def error(self, message: str) -> None:  # noqa: A003 - argparse API
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="webdeps",
                     description="Dependency graphs for multilanguage "
                                 "server projects.")
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("analyze", help="analyze a project tree")
    cmd.add_argument("root", help="project root directory")
    cmd.add_argument("--mode", choices=MODES, default="full")
    cmd.add_argument("--format", choices=FORMATS, default="json",
                     dest="fmt")
    cmd.add_argument("--out", help="write the graph here instead of stdout")
    cmd.add_argument("--web-root",
                     help="document root for URL resolution "
                          "(auto-detected when omitted)")
    cmd.add_argument("--tag-rules",
                     help="JSON file with extra markup tag rules")
    cmd.add_argument("--unresolved", choices=UNRESOLVED_POLICIES,
                     default="placeholder",
                     help="what to do with edges whose target is unknown")
    cmd.add_argument("--dump-lowered",
                     help="directory for the generated per-page classes")

    cmd = commands.add_parser("diff", help="compare two graph files")
    cmd.add_argument("graph_a")
    cmd.add_argument("graph_b")

    cmd = commands.add_parser("eval",
                              help="score a graph against reference edges")
    cmd.add_argument("graph")
    cmd.add_argument("truth")
    return parser


def _load_graph(path: str):
    with open(path, "rb") as handle:
        data = handle.read()
    try:
        return deserialize_graph(data)
    except (ValueError, KeyError) as exc:
        raise ValueError(f"{path}: {exc}") from None


def _cmd_analyze(args: argparse.Namespace) -> int:
    config = AnalysisConfig(
        root=args.root,
        mode=args.mode,
        web_root=args.web_root,
        unresolved=args.unresolved,
        tag_rules_path=args.tag_rules,
        fmt=args.fmt,
        out=args.out,
        dump_lowered=args.dump_lowered,
    )
    result = analyze(config)
    payload = serialize_graph(result.graph, config.fmt)
    if config.out:
        with open(config.out, "wb") as handle:
            handle.write(payload)
        print(json.dumps(result.report, indent=2, sort_keys=True))
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
        print(json.dumps(result.report, indent=2, sort_keys=True),
              file=sys.stderr)
    for diagnostic in result.sink:
        print(diagnostic.render(), file=sys.stderr)
    return 0


def _cmd_diff(args: argparse.Namespace) -> int:
    delta = diff_graphs(_load_graph(args.graph_a), _load_graph(args.graph_b))
    print(json.dumps(delta_as_dict(delta), indent=2, sort_keys=True))
    print(render_delta(delta), file=sys.stderr)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    graph = _load_graph(args.graph)
    with open(args.truth, encoding="utf-8") as handle:
        truth = parse_ground_truth(handle.read())
    report = evaluate_graph(graph, truth)
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    print(render_eval(report), file=sys.stderr)
    return 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "diff": _cmd_diff,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except ValueError as exc:  # malformed rules/truth/graph content
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_EXIT


if __name__ == "__main__":
    raise SystemExit(main())
