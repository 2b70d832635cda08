"""``homcirc`` command line."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__
from .circuit import (
    EmptyResult,
    count_deterministic,
    dump_circuit,
    eval_circuit,
    load_circuit,
    smooth,
    to_fanin2,
    to_text,
    validate_circuit,
)
from .compiler import compile_with_stats, fraction_str
from .errors import HomCircError
from .flows import load_flow, mu_of_flow, validate_flow
from .harness import ConfigError, ExperimentConfig, emit_report, run_subw_experiment, run_tw_experiment
from .instgen import gen_flow_structure, gen_hard_graph, graph_structure, is_order_respecting_query, prepare_query
from .rect import extract_cover, indicator_weights, rectangle_bound_check
from .relcore import Structure, as_dict, hypergraph_of
from .widths import TreeDecomposition, frac_edge_cover_number, fhtw_of_td, treewidth_exact


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _cmd_widths(args) -> int:
    a = Structure.load(args.structure)
    h = hypergraph_of(a)
    tw, best = treewidth_exact(h)
    rho, _ = frac_edge_cover_number(h, h.vertices)
    td = TreeDecomposition.load(args.td) if args.td else best
    print(f"tw {tw}")
    print(f"rho* {fraction_str(rho)}")
    print(f"fhtw {fraction_str(fhtw_of_td(h, td))}")
    return 0


def _cmd_circuit(args) -> int:
    c = load_circuit(args.file)
    if args.action == "validate":
        if isinstance(c, EmptyResult):
            print("valid (empty)")
            return 0
        rep = validate_circuit(c, fanin2=not args.any_fanin)
        for v in rep.violations:
            print(v)
        print("valid" if rep.ok else "invalid")
        return 0 if rep.ok else 2
    if args.action == "eval":
        fs = eval_circuit(c)
        order = sorted(fs.domain)
        rows = sorted(tuple(as_dict(f)[x] for x in order) for f in fs.functions)
        _write_json({"variables": order, "functions": [list(r) for r in rows]}, args.out)
        return 0
    if args.action == "count":
        print(count_deterministic(c, check=args.check))
        return 0
    if isinstance(c, EmptyResult):
        out = c
    elif args.action == "smooth":
        out = smooth(c, c.domain)
    else:
        out = to_fanin2(c)
    if args.out:
        dump_circuit(out, args.out)
    else:
        sys.stdout.write(to_text(out))
    return 0


def _cmd_compile(args) -> int:
    a = Structure.load(args.structure)
    b = Structure.load(args.data)
    td = TreeDecomposition.load(args.td) if args.td else treewidth_exact(hypergraph_of(a))[1]
    res = compile_with_stats(a, b, td)
    dump_circuit(res.circuit, args.out)
    if args.stats:
        st = dict(res.stats)
        st["fhtw"] = fraction_str(st.get("fhtw"))
        _write_json(st, args.stats)
    return 0


def _load_weights(path: str, variables) -> dict[str, Fraction]:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict) and set(obj) == {"W"}:
        return indicator_weights(obj["W"], variables)
    if not isinstance(obj, dict):
        raise ValueError("weights file must be a JSON object")
    return {v: Fraction(str(w)) for v, w in obj.items()}


def _cmd_cover(args) -> int:
    c = load_circuit(args.circuit)
    variables = [] if isinstance(c, EmptyResult) else c.variables
    f = _load_weights(args.weights, variables)
    cover = extract_cover(c, f)
    report = cover.report()
    status = 0
    if args.check_bound:
        w = args.W.split(",") if args.W else [v for v in variables if f.get(v, 0)]
        rb = rectangle_bound_check(cover, w, args.k, args.n, args.t)
        report["bound"] = {
            "value": rb.bound,
            "checked": rb.checked,
            "violations": rb.violations,
            "max_rectangle": rb.max_rectangle,
            "certificate": fraction_str(rb.certificate_measured),
        }
        status = 0 if rb.ok else 2
    _write_json(report, args.out)
    return status


def _cmd_gen_hard(args) -> int:
    cert = gen_hard_graph(args.t, args.n, args.seed)
    obj = cert.to_json()
    obj["structure"] = graph_structure(cert.graph).to_json()
    _write_json(obj, args.out)
    return 0


def _cmd_gen_flow(args) -> int:
    a = Structure.load(args.structure)
    if is_order_respecting_query(a) is None or any(len(a.tuples(r)) != 1 for r, _ in a.signature):
        a, _ = prepare_query(a)
    h = hypergraph_of(a)
    total, _ = load_flow(args.flow)
    rep = validate_flow(h, total)
    if not rep.ok:
        raise ValueError("invalid flow: " + "; ".join(rep.violations))
    mu = mu_of_flow(h, total)
    fs = gen_flow_structure(a, mu.values, args.N, args.seed)
    _write_json({"certificate": fs.header(), "query": a.to_json(), "structure": fs.structure.to_json()}, args.out)
    return 0


def _cmd_experiment(args) -> int:
    try:
        path = Path(args.config)
        cfg = ExperimentConfig.from_json(args.kind, json.loads(path.read_text()), path.parent)
    except (OSError, json.JSONDecodeError, ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    rep = run_tw_experiment(cfg) if args.kind == "tw" else run_subw_experiment(cfg)
    emit_report(rep, args.out, args.format)
    for row in rep.rows:
        if row.get("error"):
            print(f"cell error: {row['error']}", file=sys.stderr)
    return 0 if rep.ok else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="homcirc", description="Circuits for homomorphism sets: widths, compilation, covers, hard instances.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("widths", help="treewidth, rho* and fhtw of a query")
    s.add_argument("--structure", required=True)
    s.add_argument("--td")
    s.set_defaults(fn=_cmd_widths)

    s = sub.add_parser("circuit", help="inspect or transform a circuit file")
    s.add_argument("action", choices=["validate", "eval", "count", "smooth", "fanin2"])
    s.add_argument("file")
    s.add_argument("--out")
    s.add_argument("--check", action="store_true", help="verify determinism before counting")
    s.add_argument("--any-fanin", action="store_true", help="accept fan-in above 2 when validating")
    s.set_defaults(fn=_cmd_circuit)

    s = sub.add_parser("compile", help="compile Hom(A, B) along a tree decomposition")
    s.add_argument("--structure", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--td")
    s.add_argument("--out", required=True)
    s.add_argument("--stats")
    s.set_defaults(fn=_cmd_compile)

    s = sub.add_parser("cover", help="extract a balanced rectangle cover")
    s.add_argument("--circuit", required=True)
    s.add_argument("--weights", required=True)
    s.add_argument("--check-bound", action="store_true")
    s.add_argument("--W")
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--t", type=int)
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_cover)

    s = sub.add_parser("gen-hard", help="random graph with clique and biclique certificates")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_gen_hard)

    s = sub.add_parser("gen-flow", help="random structure shaped by a flow")
    s.add_argument("--structure", required=True)
    s.add_argument("--flow", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_gen_flow)

    s = sub.add_parser("experiment", help="run an experiment grid")
    s.add_argument("kind", choices=["tw", "subw"])
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--format", nargs="+", default=["csv", "json", "svg-data"], choices=["csv", "json", "svg-data"])
    s.set_defaults(fn=_cmd_experiment)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (HomCircError, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
