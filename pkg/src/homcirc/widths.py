"""Tree decompositions, exact treewidth, fractional covers and balanced separators."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Iterable, Mapping

from .errors import Infeasible, TooLarge, ValidationReport
from .lp import solve_lp
from .relcore import Hypergraph

DEFAULT_TW_CAP = 18
DEFAULT_HCS_CAP = 14
DEFAULT_SEPARATOR_BUDGET = 10**6


@dataclass(frozen=True)
class TreeDecomposition:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    bags: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def build(cls, nodes: Iterable, edges: Iterable, bags: Mapping) -> "TreeDecomposition":
        nodes = tuple(str(n) for n in nodes)
        return cls(
            nodes,
            tuple((str(u), str(v)) for u, v in edges),
            {str(n): frozenset(str(x) for x in bags.get(n, ())) for n in nodes},
        )

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags.values()), default=0) - 1

    def neighbors(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for u, v in self.edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        return adj

    def to_json(self, order: Iterable[str] | None = None) -> dict:
        rank = {x: i for i, x in enumerate(order)} if order is not None else None

        def key(x: str):
            return (rank.get(x, len(rank)), x) if rank is not None else x

        return {
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "bags": {n: sorted(self.bags[n], key=key) for n in self.nodes},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TreeDecomposition":
        return cls.build(obj["nodes"], obj.get("edges", []), obj["bags"])

    @classmethod
    def load(cls, path: str | Path) -> "TreeDecomposition":
        return cls.from_json(json.loads(Path(path).read_text()))

    def dump(self, path: str | Path, order: Iterable[str] | None = None) -> None:
        Path(path).write_text(json.dumps(self.to_json(order), indent=1) + "\n")


def single_bag(h: Hypergraph) -> TreeDecomposition:
    return TreeDecomposition(("t0",), (), {"t0": frozenset(h.vertices)})


def _connected_in(nodes: set[str], adj: Mapping[str, list[str]]) -> bool:
    if not nodes:
        return False
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in adj.get(u, ()):
            if w in nodes and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == nodes


def validate_td(h: Hypergraph, td: TreeDecomposition) -> ValidationReport:
    rep = ValidationReport()
    nodes = set(td.nodes)
    for u, v in td.edges:
        if u not in nodes or v not in nodes:
            rep.add(f"tree edge {u}-{v} mentions an unknown node")
    if len(td.edges) != len(nodes) - 1 or not _connected_in(nodes, td.neighbors()):
        rep.add("decomposition graph is not a tree")
    adj = td.neighbors()
    verts = set(h.vertices)
    for n in td.nodes:
        extra = td.bags.get(n, frozenset()) - verts
        if extra:
            rep.add(f"bag {n} mentions unknown vertices {sorted(extra)}")
    for v in h.vertices:
        occ = {n for n in td.nodes if v in td.bags.get(n, ())}
        if not occ:
            rep.add(f"vertex {v} is in no bag")
        elif not _connected_in(occ, adj):
            rep.add(f"bags containing vertex {v} are not connected")
    for e in h.edges:
        if not any(e <= td.bags.get(n, frozenset()) for n in td.nodes):
            rep.add(f"edge {sorted(e)} is contained in no bag")
    return rep


# -- exact treewidth ---------------------------------------------------------

class _BitGraph:
    def __init__(self, h: Hypergraph):
        self.names = list(h.vertices)
        self.idx = {v: i for i, v in enumerate(self.names)}
        self.adj = [0] * len(self.names)
        for v, nb in h.adjacency.items():
            i = self.idx[v]
            for w in nb:
                self.adj[i] |= 1 << self.idx[w]

    def nbhd(self, mask: int) -> int:
        out = 0
        while mask:
            low = mask & -mask
            out |= self.adj[low.bit_length() - 1]
            mask ^= low
        return out

    def component(self, start: int, allowed: int) -> int:
        seen = frontier = 1 << start
        while frontier:
            frontier = self.nbhd(frontier) & allowed & ~seen
            seen |= frontier
        return seen

    def mask(self, vs: Iterable[str]) -> int:
        m = 0
        for v in vs:
            m |= 1 << self.idx[v]
        return m

    def unmask(self, m: int) -> list[str]:
        return [self.names[i] for i in range(len(self.names)) if m >> i & 1]


def _contract_subset_bags(nodes: list[str], edges: set[frozenset[str]], bags: dict[str, frozenset[str]]) -> None:
    """Merge tree nodes whose bag is contained in a neighbour's bag, in place."""
    changed = True
    while changed:
        changed = False
        for e in sorted(edges, key=lambda e: sorted(nodes.index(x) for x in e)):
            u, v = sorted(e, key=nodes.index)
            if bags[v] <= bags[u]:
                keep, drop = u, v
            elif bags[u] <= bags[v]:
                keep, drop = v, u
            else:
                continue
            edges.discard(e)
            for f in [f for f in edges if drop in f]:
                edges.discard(f)
                (other,) = f - {drop}
                edges.add(frozenset((keep, other)))
            nodes.remove(drop)
            del bags[drop]
            changed = True
            break


def _elimination_td(h: Hypergraph, order: list[str]) -> TreeDecomposition:
    adj = {v: set(nb) for v, nb in h.adjacency.items()}
    pos = {v: i for i, v in enumerate(order)}
    bags: dict[str, frozenset[str]] = {}
    parent: dict[str, str | None] = {}
    for v in order:
        nb = adj.pop(v)
        bags[v] = frozenset(nb | {v})
        for u in nb:
            adj[u].discard(v)
            adj[u].update(nb - {u})
        parent[v] = min(nb, key=pos.__getitem__) if nb else None
    roots = [v for v in order if parent[v] is None]
    for r in roots[:-1]:
        parent[r] = roots[-1]
    nodes = list(order)
    edges = {frozenset((v, p)) for v, p in parent.items() if p is not None}
    _contract_subset_bags(nodes, edges, bags)
    name = {v: f"t{i}" for i, v in enumerate(nodes)}
    rank = {v: i for i, v in enumerate(nodes)}
    tedges = sorted(tuple(sorted(rank[x] for x in e)) for e in edges)
    return TreeDecomposition(
        tuple(name[v] for v in nodes),
        tuple((f"t{a}", f"t{b}") for a, b in tedges),
        {name[v]: bags[v] for v in nodes},
    )


def treewidth_exact(h: Hypergraph, cap: int = DEFAULT_TW_CAP) -> tuple[int, TreeDecomposition]:
    """Exact treewidth by dynamic programming over vertex subsets.

    ``TW(S) = min_{v in S} max(TW(S - v), |Q(S - v, v)|)`` where ``Q(S, v)`` are the
    vertices outside ``S + v`` reachable from ``v`` through ``S``; the minimizer
    sequence is an optimal elimination order.
    """
    n = len(h.vertices)
    if n > cap:
        raise TooLarge(f"{n} vertices exceeds treewidth cap {cap}")
    if n == 0:
        return -1, TreeDecomposition(("t0",), (), {"t0": frozenset()})
    g = _BitGraph(h)
    full = (1 << n) - 1
    tw = [0] * (1 << n)
    choice = [0] * (1 << n)
    tw[0] = -1
    for s in range(1, 1 << n):
        best, arg = n + 1, -1
        rest = s
        while rest:
            low = rest & -rest
            rest ^= low
            v = low.bit_length() - 1
            prev = s ^ low
            if tw[prev] >= best:
                continue
            comp = g.component(v, prev | low)
            q = bin(g.nbhd(comp) & ~(prev | low)).count("1")
            val = max(tw[prev], q)
            if val < best:
                best, arg = val, v
        tw[s] = best
        choice[s] = arg
    order: list[str] = []
    s = full
    while s:
        v = choice[s]
        order.append(g.names[v])
        s ^= 1 << v
    order.reverse()
    td = _elimination_td(h, order)
    assert td.width == tw[full], (td.width, tw[full])
    return tw[full], td


# -- fractional covers --------------------------------------------------------

def frac_edge_cover_number(h: Hypergraph, xs: Iterable[str]) -> tuple[Fraction, dict[frozenset[str], Fraction]]:
    """Minimum-weight fractional edge cover of ``xs`` using all edges of ``h``."""
    xs = list(dict.fromkeys(xs))
    weights = {e: Fraction(0) for e in h.edges}
    if not xs:
        return Fraction(0), weights
    bad = [x for x in xs if not any(x in e for e in h.edges)]
    if bad:
        raise Infeasible(f"vertices {bad} lie in no edge")
    useful = [e for e in h.edges if any(x in e for x in xs)]
    a_ub = [[-1 if x in e else 0 for e in useful] for x in xs]
    res = solve_lp([1] * len(useful), a_ub=a_ub, b_ub=[-1] * len(xs), maximize=False)
    for e, w in zip(useful, res.x):
        weights[e] = w
    return res.value, weights


def fractional_independent_set(h: Hypergraph, xs: Iterable[str]) -> tuple[Fraction, dict[str, Fraction]]:
    """Maximum fractional independent set supported on ``xs``: the LP dual of the cover."""
    xs = list(dict.fromkeys(xs))
    if not xs:
        return Fraction(0), {}
    rows = [[1 if x in e else 0 for x in xs] for e in h.edges if any(x in e for x in xs)]
    res = solve_lp([1] * len(xs), a_ub=rows, b_ub=[1] * len(rows))
    return res.value, dict(zip(xs, res.x))


def fhtw_of_td(h: Hypergraph, td: TreeDecomposition) -> Fraction:
    return max((frac_edge_cover_number(h, td.bags[n])[0] for n in td.nodes), default=Fraction(0))


# -- balanced separators --------------------------------------------------------

@dataclass(frozen=True)
class SeparatorWitness:
    W: frozenset[str]
    k: int
    separator: frozenset[str] | None
    checked: int

    @property
    def exhausted(self) -> bool:
        return self.separator is None


def is_balanced_separator(g: Hypergraph, w: Iterable[str], s: Iterable[str]) -> bool:
    gb = _BitGraph(g)
    wm, sm = gb.mask(w), gb.mask(s)
    return _balanced(gb, wm, sm, bin(wm).count("1"))


def _balanced(gb: _BitGraph, wm: int, sm: int, wsize: int) -> bool:
    remaining = ((1 << len(gb.names)) - 1) & ~sm
    todo = remaining
    while todo:
        low = todo & -todo
        comp = gb.component(low.bit_length() - 1, remaining)
        todo &= ~comp
        if 2 * bin(comp & wm).count("1") > wsize:
            return False
    return True


def has_balanced_separator(
    g: Hypergraph, w: Iterable[str], k: int, budget: int = DEFAULT_SEPARATOR_BUDGET
) -> SeparatorWitness:
    """Search all vertex sets of size at most ``k`` for a balanced separator of ``w``."""
    w = frozenset(w)
    if not w:
        raise ValueError("W must be non-empty")
    n = len(g.vertices)
    total = sum(comb(n, i) for i in range(min(k, n) + 1))
    if total > budget:
        raise TooLarge(f"{total} candidate separators exceed budget {budget}")
    gb = _BitGraph(g)
    wm = gb.mask(w)
    checked = 0
    for size in range(min(k, n) + 1):
        for combo in itertools.combinations(range(n), size):
            checked += 1
            sm = 0
            for i in combo:
                sm |= 1 << i
            if _balanced(gb, wm, sm, len(w)):
                return SeparatorWitness(w, k, frozenset(gb.names[i] for i in combo), checked)
    return SeparatorWitness(w, k, None, checked)


def find_hcs(g: Hypergraph, k: int, cap: int = DEFAULT_HCS_CAP) -> frozenset[str] | None:
    """A set of ``2k+1`` vertices with no balanced ``k``-separator, or ``None``."""
    n = len(g.vertices)
    if n > cap:
        raise TooLarge(f"{n} vertices exceeds cap {cap}")
    size = 2 * k + 1
    if size > n:
        return None
    for w in itertools.combinations(g.vertices, size):
        if has_balanced_separator(g, w, k).exhausted:
            return frozenset(w)
    return None


def largest_hcs(g: Hypergraph, cap: int = DEFAULT_HCS_CAP) -> tuple[int, frozenset[str]] | None:
    """The largest ``k`` for which :func:`find_hcs` succeeds, with its witness."""
    for k in range((len(g.vertices) - 1) // 2, -1, -1):
        w = find_hcs(g, k, cap)
        if w is not None:
            return k, w
    return None
