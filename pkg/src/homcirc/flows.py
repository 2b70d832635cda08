"""Path flows on hypergraphs, uniform concurrent flows, and the vertex weights they induce.

A path is a tuple of distinct vertices, consecutive ones adjacent in the Gaifman
graph. Only chordless paths are ever enumerated: a path with a chord can be
shortcut, and the shortcut meets no more edges than the original.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path as FilePath
from typing import Iterable, Mapping, Sequence

from .errors import BadPartition, BudgetExceeded, TooLarge, ValidationReport
from .lp import solve_lp
from .relcore import Hypergraph

HPath = tuple[str, ...]
Flow = dict[HPath, Fraction]

DEFAULT_MAX_LEN = 6
DEFAULT_PATH_BUDGET = 10**5
PARTITION_SEARCH_CAP = 10


def enumerate_paths(
    h: Hypergraph,
    a: Iterable[str],
    b: Iterable[str],
    max_len: int = DEFAULT_MAX_LEN,
    budget: int = DEFAULT_PATH_BUDGET,
) -> list[HPath]:
    """All chordless ``(a, b)``-paths with at most ``max_len`` edges.

    A path meets ``a`` only in its first vertex and ``b`` only in its last; any
    other path contains a shorter one with the same property and the same
    endpoints' sets, so nothing is lost for flow purposes.
    """
    if max_len < 0:
        raise ValueError("max_len must be nonnegative")
    a, b = frozenset(a), frozenset(b)
    adj = h.adjacency
    order = {v: i for i, v in enumerate(h.vertices)}
    out: list[HPath] = []
    for s in sorted(a, key=order.__getitem__):
        if s in b:
            out.append((s,))
            continue
        stack: list[str] = [s]
        onpath = {s}

        def extend() -> None:
            if len(out) > budget:
                raise BudgetExceeded(f"more than {budget} paths")
            last = stack[-1]
            for w in sorted(adj[last], key=order.__getitem__):
                if w in onpath or w in a:
                    continue
                # chordless: w may only touch the last vertex of the current path
                if any(w in adj[u] for u in stack[:-1]):
                    continue
                if w in b:
                    out.append(tuple(stack) + (w,))
                    continue
                if len(stack) < max_len:
                    stack.append(w)
                    onpath.add(w)
                    extend()
                    onpath.discard(w)
                    stack.pop()

        if max_len >= 1:
            extend()
    return out


def is_path(h: Hypergraph, p: Sequence[str]) -> bool:
    if not p or len(set(p)) != len(p):
        return False
    adj = h.adjacency
    return all(v in adj and w in adj[v] for v, w in zip(p, p[1:])) and p[0] in adj


def edge_loads(h: Hypergraph, flow: Mapping[HPath, Fraction]) -> dict[frozenset[str], Fraction]:
    loads = {}
    for e in h.edges:
        loads[e] = sum((w for p, w in flow.items() if not e.isdisjoint(p)), Fraction(0))
    return loads


def validate_flow(h: Hypergraph, flow: Mapping[HPath, Fraction]) -> ValidationReport:
    rep = ValidationReport()
    for p, w in flow.items():
        if w < 0:
            rep.add(f"path {list(p)} has negative weight {w}")
        if not is_path(h, p):
            rep.add(f"{list(p)} is not a simple path")
    loads = edge_loads(h, flow)
    if loads:
        worst = max(loads, key=lambda e: loads[e])
        rep.info["worst_edge"] = sorted(worst)
        rep.info["worst_load"] = loads[worst]
        for e, load in loads.items():
            if load > 1:
                rep.add(f"edge {sorted(e)} carries load {load} > 1")
    return rep


def flow_value(flow: Mapping[HPath, Fraction]) -> Fraction:
    return sum(flow.values(), Fraction(0))


def _edge_rows(h: Hypergraph, paths: Sequence[HPath], extra_cols: int = 0) -> list[list[int]]:
    return [[0 if e.isdisjoint(p) else 1 for p in paths] + [0] * extra_cols for e in h.edges]


def max_ab_flow(
    h: Hypergraph, a: Iterable[str], b: Iterable[str], max_len: int = DEFAULT_MAX_LEN
) -> tuple[Fraction, Flow]:
    paths = enumerate_paths(h, a, b, max_len)
    if not paths:
        return Fraction(0), {}
    rows = _edge_rows(h, paths)
    res = solve_lp([1] * len(paths), a_ub=rows, b_ub=[1] * len(rows))
    flow = {p: w for p, w in zip(paths, res.x) if w}
    return res.value, flow


@dataclass
class ConcurrentFlow:
    cliques: tuple[frozenset[str], ...]
    flows: dict[tuple[int, int], Flow]
    epsilon: Fraction

    @property
    def k(self) -> int:
        return len(self.cliques)

    @property
    def delta(self) -> Fraction:
        return self.epsilon * (self.k - 1) / 2

    def total(self) -> Flow:
        out: Flow = {}
        for f in self.flows.values():
            for p, w in f.items():
                out[p] = out.get(p, Fraction(0)) + w
        return out

    def to_json(self) -> list[dict]:
        rows = []
        for (i, j), f in sorted(self.flows.items()):
            for p, w in f.items():
                rows.append({"path": list(p), "weight": _frac_str(w), "pair": [i, j]})
        return rows


def _frac_str(w: Fraction) -> str:
    return f"{w.numerator}/{w.denominator}"


def check_clique_partition(h: Hypergraph, cliques: Sequence[Iterable[str]]) -> tuple[frozenset[str], ...]:
    ks = tuple(frozenset(c) for c in cliques)
    seen: set[str] = set()
    for i, c in enumerate(ks):
        if not c:
            raise BadPartition(f"clique {i} is empty")
        if not any(c <= e for e in h.edges):
            raise BadPartition(f"clique {i} = {sorted(c)} lies inside no edge")
        if seen & c:
            raise BadPartition(f"clique {i} overlaps an earlier clique")
        seen |= c
    return ks


def max_uniform_concurrent_flow(
    h: Hypergraph, cliques: Sequence[Iterable[str]], max_len: int = DEFAULT_MAX_LEN
) -> ConcurrentFlow:
    """Maximize ``eps`` such that every clique pair carries a flow of value exactly ``eps``
    and the sum of all pair flows is still a flow."""
    ks = check_clique_partition(h, cliques)
    pairs = list(combinations(range(len(ks)), 2))
    if not pairs:
        return ConcurrentFlow(ks, {}, Fraction(0))
    per_pair = {(i, j): enumerate_paths(h, ks[i], ks[j], max_len) for i, j in pairs}
    cols: list[tuple[tuple[int, int], HPath]] = [(pr, p) for pr in pairs for p in per_pair[pr]]
    n = len(cols)
    if any(not per_pair[pr] for pr in pairs):
        return ConcurrentFlow(ks, {pr: {} for pr in pairs}, Fraction(0))
    # variables: one per (pair, path), then eps last
    a_ub = _edge_rows(h, [p for _, p in cols], extra_cols=1)
    a_eq = []
    for pr in pairs:
        a_eq.append([1 if c[0] == pr else 0 for c in cols] + [-1])
    res = solve_lp([0] * n + [1], a_ub=a_ub, b_ub=[1] * len(a_ub), a_eq=a_eq, b_eq=[0] * len(a_eq))
    flows: dict[tuple[int, int], Flow] = {pr: {} for pr in pairs}
    for (pr, p), w in zip(cols, res.x[:n]):
        if w:
            flows[pr][p] = w
    return ConcurrentFlow(ks, flows, res.x[n])


def trivial_concurrent_flow(h: Hypergraph, cliques: Sequence[Iterable[str]], max_len: int = DEFAULT_MAX_LEN) -> ConcurrentFlow:
    """One path per pair, each of weight ``1 / C(k, 2)``."""
    ks = check_clique_partition(h, cliques)
    pairs = list(combinations(range(len(ks)), 2))
    if not pairs:
        return ConcurrentFlow(ks, {}, Fraction(0))
    w = Fraction(1, len(pairs))
    flows = {}
    for i, j in pairs:
        paths = enumerate_paths(h, ks[i], ks[j], max_len)
        if not paths:
            return ConcurrentFlow(ks, {pr: {} for pr in pairs}, Fraction(0))
        flows[(i, j)] = {min(paths, key=len): w}
    return ConcurrentFlow(ks, flows, w)


@dataclass
class VertexWeights:
    values: dict[str, Fraction]
    tag: str
    source: str = ""
    meta: dict = field(default_factory=dict)

    def __call__(self, vs: Iterable[str]) -> Fraction:
        return sum((self.values.get(v, Fraction(0)) for v in vs), Fraction(0))

    @property
    def total(self) -> Fraction:
        return sum(self.values.values(), Fraction(0))


def mu_of_flow(h: Hypergraph, flow: Mapping[HPath, Fraction] | ConcurrentFlow) -> VertexWeights:
    """``mu(v)`` is half the weight of the paths through ``v``; ``meta['t']`` is their sum."""
    f = flow.total() if isinstance(flow, ConcurrentFlow) else flow
    mu = {v: Fraction(0) for v in h.vertices}
    for p, w in f.items():
        for v in p:
            mu[v] += w / 2
    vw = VertexWeights(mu, "mu")
    vw.meta["t"] = vw.total
    return vw


def alpha_of_flow(cf: ConcurrentFlow, vertices: Iterable[str] = ()) -> VertexWeights:
    alpha = {v: Fraction(0) for v in vertices}
    for k in cf.cliques:
        for v in k:
            alpha[v] = Fraction(0)
    for (i, j), f in cf.flows.items():
        for p, w in f.items():
            for v in p:
                if v in cf.cliques[i] or v in cf.cliques[j]:
                    alpha[v] += w / 2
    vw = VertexWeights(alpha, "alpha")
    vw.meta["delta"] = cf.delta
    return vw


def flow_to_json(flow: Mapping[HPath, Fraction]) -> list[dict]:
    return [{"path": list(p), "weight": _frac_str(w)} for p, w in flow.items()]


def flow_from_json(rows: Iterable[Mapping]) -> tuple[Flow, dict[tuple[int, int], Flow]]:
    """Returns the combined flow and, for rows carrying ``pair``, the per-pair flows."""
    total: Flow = {}
    pairs: dict[tuple[int, int], Flow] = {}
    for row in rows:
        p = tuple(str(v) for v in row["path"])
        w = Fraction(row["weight"])
        total[p] = total.get(p, Fraction(0)) + w
        if "pair" in row:
            i, j = row["pair"]
            pf = pairs.setdefault((int(i), int(j)), {})
            pf[p] = pf.get(p, Fraction(0)) + w
    return total, pairs


def load_flow(path: str | FilePath) -> tuple[Flow, dict[tuple[int, int], Flow]]:
    return flow_from_json(json.loads(FilePath(path).read_text()))


def clique_families(h: Hypergraph, budget: int = 10**5) -> list[tuple[frozenset[str], ...]]:
    """Every family of at least two disjoint nonempty sets, each inside some edge."""
    if len(h.vertices) > PARTITION_SEARCH_CAP:
        raise TooLarge(f"clique partition search is limited to {PARTITION_SEARCH_CAP} vertices")
    order = {v: i for i, v in enumerate(h.vertices)}
    cands: set[frozenset[str]] = set()
    for e in h.edges:
        members = sorted(e, key=order.__getitem__)
        for r in range(1, len(members) + 1):
            cands.update(frozenset(c) for c in combinations(members, r))
    cand_list = sorted(cands, key=lambda c: (len(c), sorted(order[v] for v in c)))
    out: list[tuple[frozenset[str], ...]] = []

    def rec(start: int, chosen: list[frozenset[str]], used: frozenset[str]) -> None:
        if len(chosen) >= 2:
            out.append(tuple(chosen))
            if len(out) > budget:
                raise TooLarge(f"more than {budget} clique families")
        for i in range(start, len(cand_list)):
            c = cand_list[i]
            if used.isdisjoint(c):
                chosen.append(c)
                rec(i + 1, chosen, used | c)
                chosen.pop()

    rec(0, [], frozenset())
    return out


def best_clique_partition(h: Hypergraph, max_len: int = DEFAULT_MAX_LEN) -> ConcurrentFlow | None:
    """Exhaustive search for the family maximizing ``alpha(W) = k * delta``; ties go to larger k."""
    best: ConcurrentFlow | None = None
    for fam in clique_families(h):
        cf = max_uniform_concurrent_flow(h, fam, max_len)
        if cf.epsilon == 0:
            continue
        key = (cf.k * cf.delta, cf.k)
        if best is None or key > (best.k * best.delta, best.k):
            best = cf
    return best
