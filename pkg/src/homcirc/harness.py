"""Experiment pipelines: hard graphs against treewidth, flow structures against submodular width.

Every cell (one instance size and one seed) runs in isolation; a failure is
recorded in the ``error`` column and the run continues.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .circuit import EmptyResult, count_deterministic
from .compiler import compile_with_stats
from .errors import BadPartition, BudgetExceeded, HomCircError
from .flows import (
    ConcurrentFlow,
    best_clique_partition,
    check_clique_partition,
    flow_from_json,
    flow_value,
    max_uniform_concurrent_flow,
    mu_of_flow,
    alpha_of_flow,
    validate_flow,
)
from .instgen import (
    alpha_balance_report,
    clique_structure,
    count_t_cliques,
    gen_flow_structure,
    gen_hard_graph,
    graph_from_edges,
    graph_structure,
    prepare_query,
    respects_coordinates_by_doms,
)
from .rect import analytic_bound, extract_cover, indicator_weights, rectangle_bound_check
from .relcore import Structure, gaifman_graph, hypergraph_of
from .widths import fhtw_of_td, largest_hcs, treewidth_exact

TW_COLUMNS = [
    "family", "n", "seed", "attempt", "t", "tw", "k", "W", "data_size", "hom_count", "hom_check",
    "circuit_size", "fhtw", "cover_size", "max_rectangle", "bound", "bound_ok",
    "certificate", "certificate_float", "cert_source", "error",
]
SUBW_COLUMNS = [
    "query", "N", "seed", "attempt", "k", "epsilon", "delta", "t", "data_size", "size_ok", "scattered_ok",
    "coordinate_ok", "hom_count", "hom_threshold", "count_ok", "circuit_size", "fhtw", "cover_size",
    "max_rectangle", "min_balanced_cliques", "max_KX_KY", "certificate", "certificate_float",
    "cert_source", "error",
]

DEFAULT_BUDGETS = {"cover_functions": 3 * 10**6, "eval_functions": 10**7}


class ConfigError(ValueError):
    pass


def _fs(x: Fraction | None) -> str | None:
    if x is None:
        return None
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass
class ExperimentConfig:
    kind: str  # "tw" or "subw"
    sizes: list[int]
    seeds: list[int] = field(default_factory=lambda: [0])
    family: str = "clique"
    k: int = 4
    query: str | None = None
    cliques: list[list[str]] | None = None
    flow: str | None = None
    budgets: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    base_dir: Path = Path(".")

    @classmethod
    def from_json(cls, kind: str, obj: Mapping[str, Any], base_dir: Path = Path(".")) -> "ExperimentConfig":
        if not isinstance(obj, Mapping):
            raise ConfigError("config must be a JSON object")
        sizes = obj.get("sizes", obj.get("n", obj.get("N")))
        if sizes is None or not isinstance(sizes, list) or not all(isinstance(s, int) and s > 0 for s in sizes):
            raise ConfigError("'sizes' must be a list of positive integers")
        seeds = obj.get("seeds", [0])
        if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
            raise ConfigError("'seeds' must be a list of integers")
        budgets = dict(DEFAULT_BUDGETS)
        budgets.update(obj.get("budgets", {}))
        if any(not isinstance(v, int) or v <= 0 for v in budgets.values()):
            raise ConfigError("budgets must be positive integers")
        cfg = cls(
            kind=kind,
            sizes=list(sizes),
            seeds=list(seeds),
            family=obj.get("family", "clique" if kind == "tw" else "triangle"),
            k=int(obj.get("k", 4)),
            query=obj.get("query"),
            cliques=obj.get("cliques"),
            flow=obj.get("flow"),
            budgets=budgets,
            base_dir=base_dir,
        )
        if kind == "tw" and cfg.family not in ("clique", "path", "cycle", "grid", "file"):
            raise ConfigError(f"unknown query family {cfg.family!r}")
        return cfg


@dataclass
class ExperimentReport:
    kind: str
    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.get("error") is None for r in self.rows)

    def to_json(self) -> dict:
        return {"kind": self.kind, "columns": self.columns, "rows": [{c: r.get(c) for c in self.columns} for r in self.rows]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ExperimentReport":
        return cls(obj["kind"], list(obj["columns"]), [dict(r) for r in obj["rows"]])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({c: "" if r.get(c) is None else r.get(c) for c in self.columns})
        return buf.getvalue()

    def series(self) -> dict:
        xcol = "n" if self.kind == "tw" else "N"
        pts = [(r[xcol], r["certificate_float"]) for r in self.rows if r.get("certificate_float") is not None]
        return {"x_label": xcol, "y_label": "certificate", "x": [p[0] for p in pts], "y": [p[1] for p in pts]}


def emit_report(rep: ExperimentReport, out_dir: str | Path, formats: Sequence[str] = ("csv", "json", "svg-data")) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "csv":
            p = out / "report.csv"
            p.write_text(rep.to_csv())
        elif fmt == "json":
            p = out / "report.json"
            p.write_text(json.dumps(rep.to_json(), indent=1) + "\n")
        elif fmt == "svg-data":
            p = out / "series.json"
            p.write_text(json.dumps(rep.series(), indent=1) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        written.append(p)
    return written


def _run_cells(cfg: ExperimentConfig, columns: list[str], base: dict, cell: Callable[[int, int], dict]) -> list[dict]:
    rows = []
    for size in cfg.sizes:
        for seed in cfg.seeds:
            row = dict(base)
            row.update({"seed": seed, "error": None})
            try:
                row.update(cell(size, seed))
            except (HomCircError, ValueError, KeyError, OSError) as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append({c: row.get(c) for c in columns})
    return rows


# -- treewidth experiment ---------------------------------------------------------

def tw_query(cfg: ExperimentConfig) -> Structure:
    if cfg.family == "clique":
        return clique_structure(cfg.k)
    if cfg.family == "path":
        vs = [f"x{i + 1}" for i in range(cfg.k)]
        return graph_structure(graph_from_edges(vs, zip(vs, vs[1:])))
    if cfg.family == "cycle":
        vs = [f"x{i + 1}" for i in range(cfg.k)]
        return graph_structure(graph_from_edges(vs, list(zip(vs, vs[1:])) + [(vs[-1], vs[0])]))
    if cfg.family == "grid":
        m = cfg.k
        vs = [f"x{i}_{j}" for i in range(m) for j in range(m)]
        edges = [(f"x{i}_{j}", f"x{i}_{j + 1}") for i in range(m) for j in range(m - 1)]
        edges += [(f"x{i}_{j}", f"x{i + 1}_{j}") for i in range(m - 1) for j in range(m)]
        return graph_structure(graph_from_edges(vs, edges))
    if cfg.query is None:
        raise ConfigError("family 'file' needs 'query'")
    return Structure.load(cfg.base_dir / cfg.query)


def _is_complete(a: Structure) -> bool:
    g = gaifman_graph(a)
    return all(frozenset(p) in set(g.edges) for p in combinations(g.vertices, 2))


def _balance_weights(a: Structure) -> tuple[int, frozenset[str], dict[str, Fraction] | None]:
    """Indicator weights of the largest highly connected set.

    With ``k = 0`` the set is a single vertex and no partition is balanced for
    it, so no weights are returned and only the analytic certificate applies.
    """
    found = largest_hcs(gaifman_graph(a))
    if found is None:
        return 0, frozenset(), None
    k, w = found
    return k, w, (indicator_weights(w, a.universe) if k > 0 else None)


def run_tw_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    a = tw_query(cfg)
    h = hypergraph_of(a)
    tw, td = treewidth_exact(h)
    k, w, f = _balance_weights(a)
    t = len(a.universe)
    complete = _is_complete(a)
    base = {"family": f"{cfg.family}{cfg.k}" if cfg.family != "file" else cfg.query, "t": t, "tw": tw, "k": k,
            "W": " ".join(v for v in a.universe if v in w)}

    def cell(n: int, seed: int) -> dict:
        cert = gen_hard_graph(max(t, 2), n, seed)
        b = graph_structure(cert.graph)
        res = compile_with_stats(a, b, td)
        c = res.circuit
        homs = count_deterministic(c)
        row: dict[str, Any] = {
            "n": n,
            "attempt": cert.attempt,
            "data_size": b.size,
            "hom_count": homs,
            "circuit_size": 0 if isinstance(c, EmptyResult) else c.size,
            "fhtw": _fs(fhtw_of_td(h, td)),
        }
        if complete:
            row["hom_check"] = homs == math.factorial(t) * count_t_cliques(cert.graph, t)
        rb = None
        if f is not None and homs <= cfg.budgets["cover_functions"] and not isinstance(c, EmptyResult):
            try:
                cover = extract_cover(c, f, budget=cfg.budgets["eval_functions"])
            except BudgetExceeded:
                cover = None
            if cover is not None:
                rb = rectangle_bound_check(cover, w, k, n, t)
        if rb is not None and rb.certificate_measured is not None:
            row.update(
                cover_size=len(cover),
                max_rectangle=rb.max_rectangle,
                bound=rb.bound,
                bound_ok=rb.ok,
                certificate=_fs(rb.certificate_measured),
                certificate_float=float(rb.certificate_measured),
                cert_source="measured",
            )
        else:
            bound = analytic_bound(t, k, n)
            exact = Fraction(homs, n**t) if k < 3 else None
            row.update(
                bound=float(bound),
                certificate=_fs(exact),
                certificate_float=float(exact) if exact is not None else float(homs / bound),
                cert_source="analytic",
            )
        return row

    return ExperimentReport("tw", TW_COLUMNS, _run_cells(cfg, TW_COLUMNS, base, cell))


# -- submodular width experiment ------------------------------------------------------

def triangle_query() -> Structure:
    return Structure.build(
        [("R", 2), ("S", 2), ("T", 2)],
        ["x", "y", "z"],
        {"R": [("x", "y")], "S": [("y", "z")], "T": [("x", "z")]},
    )


def _single_tuple_sorted(a: Structure) -> bool:
    if any(len(a.relation_sets[n]) != 1 for n, _ in a.signature):
        return False
    order = {x: i for i, x in enumerate(a.universe)}
    return all(list(t) == sorted(set(t), key=order.__getitem__) for _, t in a.atoms())


def subw_query(cfg: ExperimentConfig) -> tuple[str, Structure]:
    if cfg.query in (None, "triangle"):
        a = triangle_query()
        name = "triangle"
    else:
        a = Structure.load(cfg.base_dir / cfg.query)
        name = cfg.query
    if not _single_tuple_sorted(a):
        a, _ = prepare_query(a)
    return name, a


def _concurrent_flow_from_file(h, cliques, path: Path) -> ConcurrentFlow:
    total, pairs = flow_from_json(json.loads(path.read_text()))
    rep = validate_flow(h, total)
    if not rep.ok:
        raise BadPartition("flow file is not a valid flow: " + "; ".join(rep.violations))
    ks = check_clique_partition(h, cliques)
    values = {pr: flow_value(f) for pr, f in pairs.items()}
    expected = set(combinations(range(len(ks)), 2))
    if set(values) != expected or len(set(values.values())) > 1:
        raise BadPartition("flow file must give every clique pair a flow of the same value")
    for (i, j), f in pairs.items():
        for p in f:
            if p[0] not in ks[i] or p[-1] not in ks[j]:
                raise BadPartition(f"path {list(p)} does not run from clique {i} to clique {j}")
    eps = next(iter(values.values()), Fraction(0))
    return ConcurrentFlow(ks, pairs, eps)


def run_subw_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    name, a = subw_query(cfg)
    h = hypergraph_of(a)
    tw, td = treewidth_exact(h)
    base = {"query": name}
    setup_error: Exception | None = None
    cf: ConcurrentFlow | None = None
    try:
        if cfg.flow is not None:
            if cfg.cliques is None:
                raise ConfigError("a flow file needs explicit 'cliques'")
            cf = _concurrent_flow_from_file(h, cfg.cliques, cfg.base_dir / cfg.flow)
        elif cfg.cliques is not None:
            cf = max_uniform_concurrent_flow(h, cfg.cliques)
        else:
            cf = best_clique_partition(h)
            if cf is None:
                raise BadPartition("no clique family carries a positive concurrent flow")
        rep = validate_flow(h, cf.total())
        if not rep.ok:
            raise BadPartition("; ".join(rep.violations))
    except (HomCircError, ValueError, KeyError, OSError) as exc:
        setup_error = exc

    def cell(n: int, seed: int) -> dict:
        if setup_error is not None:
            raise setup_error
        assert cf is not None
        mu = mu_of_flow(h, cf)
        alpha = alpha_of_flow(cf, h.vertices)
        fs = gen_flow_structure(a, mu.values, n, seed)
        b = fs.structure
        res = compile_with_stats(a, b, td)
        c = res.circuit
        homs = count_deterministic(c)
        row: dict[str, Any] = {
            "N": n,
            "attempt": fs.attempt,
            "k": cf.k,
            "epsilon": _fs(cf.epsilon),
            "delta": _fs(cf.delta),
            "t": _fs(fs.t),
            "data_size": b.size,
            "size_ok": b.size <= a.size * n,
            "scattered_ok": fs.checks["scattered"],
            "coordinate_ok": respects_coordinates_by_doms(a, b, fs.doms),
            "hom_count": homs,
            "hom_threshold": _fs(fs.hom_threshold),
            "count_ok": homs >= fs.hom_threshold,
            "circuit_size": 0 if isinstance(c, EmptyResult) else c.size,
            "fhtw": _fs(fhtw_of_td(h, td)),
        }
        if isinstance(c, EmptyResult) or homs > cfg.budgets["cover_functions"]:
            row["cert_source"] = "none"
            return row
        try:
            cover = extract_cover(c, alpha.values, budget=cfg.budgets["eval_functions"])
        except BudgetExceeded:
            row["cert_source"] = "none"
            return row
        biggest = max((r.size for r in cover.rectangles), default=0)
        reports = [alpha_balance_report(r.partition, cf.cliques, alpha.values) for r in cover.rectangles]
        cert = Fraction(homs, biggest) if biggest else None
        row.update(
            cover_size=len(cover),
            max_rectangle=biggest,
            min_balanced_cliques=min((r["num_balanced"] for r in reports), default=None),
            max_KX_KY=max((r["K_X_times_K_Y"] for r in reports), default=None),
            certificate=_fs(cert),
            certificate_float=float(cert) if cert is not None else None,
            cert_source="measured",
        )
        return row

    return ExperimentReport("subw", SUBW_COLUMNS, _run_cells(cfg, SUBW_COLUMNS, base, cell))
