"""Command-line front end.

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success, 2 usage or
unreadable/unparsable input, 3 validation failure, 4 infeasible search or
invalid analyzer.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .discovery import (
    GENERATION,
    TASKS,
    discover,
    validate_config,
    verify_analyzer,
)
from .documents import (
    DocumentError,
    GraphDocument,
    decode_graph,
    decode_search_template,
    encode_graph,
    encode_search_template,
    ket_from_string,
    ket_to_string,
    template_from_graph,
)
from .graphs import (
    GraphError,
    ZERO_TOL,
    compute_state,
    enumerate_perfect_matchings,
    find_cancellations,
    matching_amplitude,
    matching_ket,
    normalize_state,
    validate_graph,
)
from .layout import LayoutSettings, kamada_kawai_3d
from .states import parse_target

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_INFEASIBLE = 4


def _fail(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


def _read_graph(path: str) -> GraphDocument | int:
    try:
        with open(path) as fh:
            return decode_graph(fh.read())
    except OSError as exc:
        return _fail(EXIT_USAGE, f"cannot read {path}: {exc}")
    except DocumentError as exc:
        return _fail(EXIT_USAGE, f"{path}: {exc}")


def _amp_str(z: complex) -> str:
    return f"{z.real:+.12g}{z.imag:+.12g}i"


def cmd_validate(args: argparse.Namespace) -> int:
    gd = _read_graph(args.graph)
    if isinstance(gd, int):
        return gd
    report = validate_graph(gd.graph)
    if args.json:
        print(json.dumps({"ok": report.ok, "violations": [
            {"code": v.code, "message": v.message} for v in report.violations]}, indent=2))
    else:
        if report.ok:
            print("ok")
        for v in report.violations:
            print(f"{v.code}: {v.message}")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_state(args: argparse.Namespace) -> int:
    gd = _read_graph(args.graph)
    if isinstance(gd, int):
        return gd
    try:
        raw = compute_state(gd.graph)
    except GraphError as exc:
        return _fail(EXIT_INVALID, str(exc))
    norm = raw.norm()
    vanishing = norm <= ZERO_TOL
    items = [] if vanishing else normalize_state(raw).sorted_items()
    dims = gd.graph.dims_of(gd.graph.site_ids)
    if args.json:
        print(json.dumps({
            "vanishing": vanishing,
            "norm": 0.0 if vanishing else norm,
            "amplitudes": [
                {"ket": ket_to_string(k, dims), "amplitude": {"re": a.real, "im": a.imag}}
                for k, a in items
            ],
        }, indent=2))
        return EXIT_OK
    if vanishing:
        print("state vanishes: every ket cancels")
        return EXIT_OK
    for ket, amp in items:
        print(f"|{ket_to_string(ket, dims)}>  {_amp_str(amp)}")
    print(f"norm {norm:.12g}")
    return EXIT_OK


def cmd_matchings(args: argparse.Namespace) -> int:
    gd = _read_graph(args.graph)
    if isinstance(gd, int):
        return gd
    g = gd.graph
    try:
        pms = enumerate_perfect_matchings(g)
        rows = [
            {
                "edges": list(pm.edges),
                "ket": ket_to_string(matching_ket(g, pm), g.dims_of(g.site_ids)),
                "amplitude": matching_amplitude(g, pm),
            }
            for pm in pms
        ]
    except GraphError as exc:
        return _fail(EXIT_INVALID, str(exc))
    if args.json:
        print(json.dumps({"count": len(rows), "matchings": [
            {**r, "amplitude": {"re": r["amplitude"].real, "im": r["amplitude"].imag}}
            for r in rows]}, indent=2))
        return EXIT_OK
    print(len(rows))
    if args.verbose:
        for r in rows:
            idx = ",".join(str(i) for i in r["edges"])
            print(f"edges [{idx}]  ket {r['ket']}  amplitude {_amp_str(r['amplitude'])}")
    return EXIT_OK


def cmd_cancellations(args: argparse.Namespace) -> int:
    gd = _read_graph(args.graph)
    if isinstance(gd, int):
        return gd
    g = gd.graph
    try:
        ket = ket_from_string(args.ket)
        report = find_cancellations(g, ket)
    except (DocumentError, ValueError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    except GraphError as exc:
        return _fail(EXIT_INVALID, str(exc))
    dims = g.dims_of(g.site_ids)
    if args.json:
        print(json.dumps({
            "ket": ket_to_string(report.ket, dims),
            "cancelled": report.cancelled,
            "net_amplitude": {"re": report.net_amplitude.real, "im": report.net_amplitude.imag},
            "contributions": [
                {"edges": list(c.matching.edges),
                 "amplitude": {"re": c.amplitude.real, "im": c.amplitude.imag}}
                for c in report.contributions
            ],
            "interference": [
                {"first": p.first, "second": p.second,
                 "cycles": [{"vertices": list(c.vertices), "edges": list(c.edges)} for c in p.cycles]}
                for p in report.interference
            ],
        }, indent=2))
        return EXIT_OK
    print(f"ket {ket_to_string(report.ket, dims)}: {len(report.contributions)} contribution(s), "
          f"net {_amp_str(report.net_amplitude)}, "
          f"{'cancelled' if report.cancelled else 'not cancelled'}")
    for c in report.contributions:
        idx = ",".join(str(i) for i in c.matching.edges)
        print(f"  edges [{idx}]  amplitude {_amp_str(c.amplitude)}")
    for p in report.interference:
        loops = "; ".join(
            "cycle " + "-".join(str(v) for v in cy.vertices) for cy in p.cycles
        )
        print(f"  opposing pair {p.first}<->{p.second}: {loops}")
    return EXIT_OK


def cmd_layout(args: argparse.Namespace) -> int:
    gd = _read_graph(args.graph)
    if isinstance(gd, int):
        return gd
    try:
        lay = kamada_kawai_3d(gd.graph, LayoutSettings(seed=args.seed))
    except GraphError as exc:
        return _fail(EXIT_INVALID, str(exc))
    doc = encode_graph(gd.graph, lay, gd.target)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(doc)
        print(f"stress {lay.stress:.12g} -> {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(doc)
        print(f"stress {lay.stress:.12g}", file=sys.stderr)
    return EXIT_OK


def cmd_discover(args: argparse.Namespace) -> int:
    try:
        with open(args.template) as fh:
            config = decode_search_template(fh.read())
    except OSError as exc:
        return _fail(EXIT_USAGE, f"cannot read {args.template}: {exc}")
    except DocumentError as exc:
        return _fail(EXIT_USAGE, f"{args.template}: {exc}")
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.tau is not None:
        config = replace(config, pruning=replace(config.pruning, threshold=args.tau))
    if args.restarts is not None:
        config = replace(config, optimizer=replace(config.optimizer, restarts=args.restarts))
    try:
        validate_config(config)
    except (GraphError, ValueError) as exc:
        return _fail(EXIT_INVALID, str(exc))

    def progress(event: dict) -> None:
        if args.quiet:
            return
        if event["type"] == "phase":
            print(f"phase {event['phase']} ({event.get('edge_count', '?')} edges)", file=sys.stderr)
        elif event["type"] == "edge_removed":
            print(f"removed edge -> {event['edge_count']} left, loss {event['loss']:.3e}", file=sys.stderr)

    result = discover(config, progress=progress)
    doc = encode_graph(result.graph)
    summary = {
        "loss": result.loss,
        "feasible": result.feasible,
        "edges": len(result.graph.edges),
        "edges_removed": result.edges_removed,
        "total_iterations": result.total_iterations,
        "seed": result.seed,
        "loss_trace": list(result.loss_trace),
    }
    if args.json:
        print(json.dumps({**summary, "document": doc}, indent=2))
    elif args.out:
        with open(args.out, "w") as fh:
            fh.write(doc)
        print(json.dumps(summary, indent=2))
    else:
        sys.stdout.write(doc)
        print(json.dumps(summary, indent=2), file=sys.stderr)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_template(args: argparse.Namespace) -> int:
    gd = _read_graph(args.graph)
    if isinstance(gd, int):
        return gd
    try:
        target = parse_target(args.target)
        config = template_from_graph(
            gd.graph,
            target,
            task=args.task,
            uncolored=not args.colored,
            seed=args.seed,
        )
        validate_config(config)
        doc = encode_search_template(config)
    except (GraphError, ValueError) as exc:
        return _fail(EXIT_INVALID, str(exc))
    sys.stdout.write(doc)
    return EXIT_OK


def cmd_verify_analyzer(args: argparse.Namespace) -> int:
    gd = _read_graph(args.graph)
    if isinstance(gd, int):
        return gd
    try:
        target = parse_target(args.target)
        report = verify_analyzer(gd.graph, target, tol=args.tol)
    except (GraphError, ValueError) as exc:
        return _fail(EXIT_INVALID, str(exc))
    dims = target.dims
    if args.json:
        print(json.dumps({
            "valid": report.is_valid,
            "offending_kets": [ket_to_string(k, dims) for k in report.offending_kets],
            "scale": {"re": report.scale.real, "im": report.scale.imag},
        }, indent=2))
    else:
        print("valid" if report.is_valid else "invalid")
        for k in report.offending_kets:
            print(f"offending ket {ket_to_string(k, dims)}")
    return EXIT_OK if report.is_valid else EXIT_INFEASIBLE


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    serve(
        args.library,
        host=args.host,
        port=args.port,
        workers=args.workers,
        ttl_seconds=args.ttl,
        ui_dir=args.ui,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphoptics",
        description="Design and analyze quantum-optics experiments as colored graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_cmd(name: str, fn, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("graph", help="path to a graph document")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(fn=fn)
        return p

    graph_cmd("validate", cmd_validate, "check a graph document against the format rules")
    graph_cmd("state", cmd_state, "print the normalized post-selected state")
    p = graph_cmd("matchings", cmd_matchings, "count (and list) perfect matchings")
    p.add_argument("--verbose", "-v", action="store_true", help="list each matching")
    p = graph_cmd("cancellations", cmd_cancellations, "explain one ket's interference")
    p.add_argument("--ket", required=True, help="ket string, e.g. 0000 or 0,11")
    p = graph_cmd("layout", cmd_layout, "embed the graph in 3D and emit the document with positions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", help="write the positioned document here instead of stdout")

    p = sub.add_parser("discover", help="run a search from a template document")
    p.add_argument("template", help="path to a search template")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--seed", type=int, default=None, help="override the template seed")
    p.add_argument("--tau", type=float, default=None, help="override the pruning threshold")
    p.add_argument("--restarts", type=int, default=None, help="override optimizer restarts")
    p.add_argument("--out", "-o", help="write the result document here")
    p.add_argument("--quiet", "-q", action="store_true", help="suppress progress lines")
    p.set_defaults(fn=cmd_discover)

    p = graph_cmd("template", cmd_template, "emit a search template using this graph as geometry")
    p.add_argument("--target", required=True, help="ghz:n,d | bell:d | swap:n,d")
    p.add_argument("--task", choices=TASKS, default=GENERATION)
    p.add_argument("--colored", action="store_true",
                   help="keep exact colored edges instead of uncolored pairs")
    p.add_argument("--seed", type=int, default=0)

    p = graph_cmd("verify-analyzer", cmd_verify_analyzer,
                  "check that the graph projects onto the target state")
    p.add_argument("--target", required=True, help="ghz:n,d | bell:d | swap:n,d")
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("serve", help="start the local HTTP service")
    p.add_argument("--library", default="graph-library", help="graph library directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--workers", type=int, default=None, help="search worker threads")
    p.add_argument("--ttl", type=float, default=86400.0, help="finished-job retention seconds")
    p.add_argument("--ui", default=None, help="directory of static UI assets to serve at /")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
