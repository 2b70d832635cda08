"""Hard instances and the query-side reductions.

Randomness comes from :class:`random.Random` (Mersenne Twister, MT19937)
seeded with an integer. Every coin is drawn with ``getrandbits(1)`` in a fixed
iteration order, so a seed determines an instance bit for bit on every
platform. Attempt ``i`` of a rejection loop and task ``i`` of a batch use the
child seed ``derive_seed(seed, i)``.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Iterable, Mapping, Sequence

from .circuit import TIMES, UNION, Builder, Circuit
from .errors import (
    BudgetExceeded,
    NotCoordinateRespecting,
    NotOrderRespecting,
    NotReduced,
    RetriesExhausted,
    TooLarge,
)
from .relcore import Hypergraph, Structure, count_homs, enumerate_homs, reduce_structure

CLIQUE_CAP = 6
DEFAULT_BICLIQUE_BUDGET = 2 * 10**6
DEFAULT_SCATTER_BUDGET = 2 * 10**6


def derive_seed(seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def biclique_side(n: int) -> int:
    """``a = ceil(3 log2 n)``, computed without floating point: least a with 2^a >= n^3."""
    a = 0
    while 2**a < n**3:
        a += 1
    return a


def max_small_side(n: int) -> int:
    """Largest integer s with ``s <= 3 log2 n``, i.e. ``2^s <= n^3``."""
    s = 0
    while 2 ** (s + 1) <= n**3:
        s += 1
    return s


# -- graphs --------------------------------------------------------------------

def graph_from_edges(vertices: Sequence[str], edges: Iterable[tuple[str, str]]) -> Hypergraph:
    return Hypergraph.build(vertices, (frozenset(e) for e in edges))


def graph_structure(g: Hypergraph, name: str = "E") -> Structure:
    """Symmetric binary relation with both orientations of every edge."""
    pairs = []
    for e in g.edges:
        u, v = sorted(e, key=g.vertices.index)
        pairs += [(u, v), (v, u)]
    return Structure.build([(name, 2)], g.vertices, {name: pairs})


def clique_structure(k: int, prefix: str = "x") -> Structure:
    vs = [f"{prefix}{i + 1}" for i in range(k)]
    return graph_structure(graph_from_edges(vs, combinations(vs, 2)))


def count_t_cliques(g: Hypergraph, t: int) -> int:
    if t > CLIQUE_CAP:
        raise TooLarge(f"clique size {t} exceeds cap {CLIQUE_CAP}")
    if t <= 0:
        return 1 if t == 0 else 0
    pos = {v: i for i, v in enumerate(g.vertices)}
    later = {v: {w for w in g.adjacency[v] if pos[w] > pos[v]} for v in g.vertices}

    def rec(cands: set[str], left: int) -> int:
        if left == 0:
            return 1
        if len(cands) < left:
            return 0
        return sum(rec(cands & later[v], left - 1) for v in cands)

    return rec(set(g.vertices), t)


@dataclass(frozen=True)
class BicliqueResult:
    status: str  # "verified" | "violation" | "inconclusive"
    a: int
    s: tuple[str, ...] = ()
    t: tuple[str, ...] = ()
    nodes: int = 0


def verify_biclique_free(g: Hypergraph, a: int, budget: int = DEFAULT_BICLIQUE_BUDGET) -> BicliqueResult:
    """Decide whether ``g`` contains ``K_{a,a}`` by growing one side in vertex order.

    A partial side ``S`` survives only while its common neighbourhood still has
    ``a`` vertices; the common neighbourhood of a vertex set never meets the set.
    """
    if a < 1:
        raise ValueError("a must be positive")
    vs = [v for v in g.vertices if len(g.adjacency[v]) >= a]
    nodes = 0
    chosen: list[str] = []

    def rec(start: int, common: frozenset[str]) -> tuple[str, ...] | None:
        nonlocal nodes
        if len(chosen) == a:
            return tuple(chosen)
        for i in range(start, len(vs)):
            if len(vs) - i < a - len(chosen):
                break
            v = vs[i]
            nc = common & g.adjacency[v] if chosen else g.adjacency[v]
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded
            if len(nc) < a:
                continue
            chosen.append(v)
            hit = rec(i + 1, nc)
            if hit is not None:
                return hit
            chosen.pop()
        return None

    try:
        s = rec(0, frozenset())
    except BudgetExceeded:
        return BicliqueResult("inconclusive", a, nodes=nodes)
    if s is None:
        return BicliqueResult("verified", a, nodes=nodes)
    common = frozenset(g.vertices)
    for v in s:
        common &= g.adjacency[v]
    t = tuple(v for v in g.vertices if v in common)[:a]
    return BicliqueResult("violation", a, s, t, nodes)


def is_biclique(g: Hypergraph, s: Iterable[str], t: Iterable[str]) -> bool:
    s, t = set(s), set(t)
    return not (s & t) and all(w in g.adjacency[v] for v in s for w in t)


@dataclass
class HardGraphCert:
    graph: Hypergraph
    n: int
    t: int
    seed: int
    attempt: int
    edges: int
    edges_ok: bool
    t_cliques: int
    clique_threshold: Fraction
    cliques_ok: bool
    biclique: BicliqueResult
    failure_bound: float | None = None

    @property
    def biclique_status(self) -> str:
        return "Verified" if self.biclique.status == "verified" else "Probabilistic"

    def header(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "seed": self.seed,
            "attempt": self.attempt,
            "edges": self.edges,
            "edges_ok": self.edges_ok,
            "t_cliques": self.t_cliques,
            "clique_threshold": str(self.clique_threshold),
            "cliques_ok": self.cliques_ok,
            "biclique_a": self.biclique.a,
            "biclique_status": self.biclique_status,
            "biclique_search_nodes": self.biclique.nodes,
            "failure_bound": self.failure_bound,
        }

    def to_json(self) -> dict:
        return {
            "certificate": self.header(),
            "graph": {
                "vertices": list(self.graph.vertices),
                "edges": [sorted(e, key=self.graph.vertices.index) for e in self.graph.edges],
            },
        }


def clique_threshold(n: int, t: int) -> Fraction:
    """Half the expected number of t-cliques in G(n, 1/2)."""
    return Fraction(math.comb(n, t), 2 * 2 ** math.comb(t, 2))


def sample_graph(n: int, seed: int) -> Hypergraph:
    rng = random.Random(seed)
    vs = [f"v{i}" for i in range(n)]
    edges = [(vs[i], vs[j]) for i, j in combinations(range(n), 2) if rng.getrandbits(1)]
    return graph_from_edges(vs, edges)


def certify_graph(
    g: Hypergraph, t: int, seed: int = 0, attempt: int = 0, budget: int = DEFAULT_BICLIQUE_BUDGET
) -> HardGraphCert:
    n = len(g.vertices)
    m = len(g.edges)
    kt = count_t_cliques(g, t)
    thr = clique_threshold(n, t)
    a = biclique_side(n)
    bic = verify_biclique_free(g, a, budget)
    failure = None
    if bic.status == "inconclusive":
        # union bound over pairs of a-sets, each a full bipartite pattern with probability 2^(-a^2)
        failure = float(Fraction(math.comb(n, a) ** 2, 2 ** (a * a)))
    return HardGraphCert(g, n, t, seed, attempt, m, 8 * m >= n * n, kt, thr, kt >= thr, bic, failure)


def gen_hard_graph(
    t: int,
    n: int,
    seed: int,
    max_retries: int = 100,
    min_n: int | None = None,
    budget: int = DEFAULT_BICLIQUE_BUDGET,
) -> HardGraphCert:
    """Sample G(n, 1/2) until the edge, clique and biclique checks pass."""
    if t < 2:
        raise ValueError("t must be at least 2")
    if n < (min_n if min_n is not None else t):
        raise ValueError(f"n = {n} is below the configured minimum")
    for attempt in range(max_retries):
        g = sample_graph(n, derive_seed(seed, attempt))
        cert = certify_graph(g, t, seed, attempt, budget)
        if cert.edges_ok and cert.cliques_ok and cert.biclique.status != "violation":
            return cert
    raise RetriesExhausted(f"no acceptable H({t},{n}) in {max_retries} attempts")


# -- query-side reductions -------------------------------------------------------

def _pname(x: str) -> str:
    return f"P[{x}]"


def individualize(a: Structure) -> Structure:
    """Add a unary colour ``P[x] = {x}`` for every element; existing colours are kept."""
    sig = list(a.signature)
    rels = {n: list(a.tuples(n)) for n, _ in sig}
    names = {n for n, _ in sig}
    for x in a.universe:
        p = _pname(x)
        if p not in names:
            sig.append((p, 1))
            rels[p] = [(x,)]
    return Structure.build(sig, a.universe, rels)


def colour_names(a: Structure) -> set[str]:
    return {_pname(x) for x in a.universe} & {n for n, _ in a.signature}


def _sp_name(rel: str, t: Sequence[str]) -> str:
    return f"{rel}[{','.join(t)}]"


def sparse_query(a_id: Structure) -> Structure:
    """One relation ``R[t]`` with the single tuple ``t`` per non-colour tuple of ``a_id``."""
    colours = colour_names(a_id)
    sig, rels = [], {}
    for name, t in a_id.atoms():
        if name in colours:
            continue
        sp = _sp_name(name, t)
        sig.append((sp, len(t)))
        rels[sp] = [t]
    return Structure.build(sig, a_id.universe, rels)


def dom_sets(x: Structure, y: Structure) -> dict[str, set[str]]:
    doms: dict[str, set[str]] = {v: set() for v in x.universe}
    for h in enumerate_homs(x, y):
        for v, val in h:
            doms[v].add(val)
    return doms


def is_coordinate_respecting(x: Structure, y: Structure) -> bool:
    doms = dom_sets(x, y)
    seen: set[str] = set()
    for v in x.universe:
        if seen & doms[v]:
            return False
        seen |= doms[v]
    return True


def is_reduced(x: Structure, y: Structure) -> bool:
    return reduce_structure(x, y).relation_sets == y.relation_sets


def sparsify_pair(a_id: Structure, d: Structure) -> tuple[Structure, Structure]:
    """Build ``B`` over the signature of ``a_id`` with ``Hom(a_id, B) = Hom(a_sp, d)``."""
    a_sp = sparse_query(a_id)
    if not is_coordinate_respecting(a_sp, d):
        raise NotCoordinateRespecting("data is not coordinate respecting relative to the sparse query")
    if not is_reduced(a_sp, d):
        raise NotReduced("data is not reduced relative to the sparse query")
    doms = dom_sets(a_sp, d)
    colours = colour_names(a_id)
    rels: dict[str, list[tuple[str, ...]]] = {}
    for name, _ in a_id.signature:
        if name in colours:
            continue
        out: dict[tuple[str, ...], None] = {}
        for t in a_id.tuples(name):
            for s in d.tuples(_sp_name(name, t)):
                out[s] = None
        rels[name] = list(out)
    for x in a_id.universe:
        if _pname(x) in colours:
            rels[_pname(x)] = [(v,) for v in d.universe if v in doms[x]]
    return a_sp, Structure.build(a_id.signature, d.universe, rels)


def _le_name(rel: str) -> str:
    return f"{rel}_le"


def _check_single_tuple(a: Structure) -> None:
    for name, _ in a.signature:
        if len(a.relation_sets[name]) != 1:
            raise ValueError(f"relation {name} must contain exactly one tuple")


def ordered_query(a: Structure, order: Sequence[str] | None = None) -> tuple[Structure, dict[str, list[int]]]:
    """``R_le`` holds the distinct coordinates of ``R``'s tuple sorted by ``order``.

    Also returns, per relation, the coordinate map ``f`` with ``t[j] = t_le[f[j]]``.
    """
    _check_single_tuple(a)
    rank = {x: i for i, x in enumerate(order if order is not None else a.universe)}
    sig, rels, fmap = [], {}, {}
    for name, _ in a.signature:
        (t,) = a.tuples(name)
        tle = sorted(set(t), key=rank.__getitem__)
        sig.append((_le_name(name), len(tle)))
        rels[_le_name(name)] = [tuple(tle)]
        fmap[name] = [tle.index(x) for x in t]
    return Structure.build(sig, a.universe, rels), fmap


def is_order_respecting_data(x_le: Structure, y: Structure, order: Sequence[str]) -> bool:
    doms = dom_sets(x_le, y)
    owner = {v: x for x, vs in doms.items() for v in vs}
    rank = {x: i for i, x in enumerate(order)}
    for name, _ in x_le.signature:
        for t in y.tuples(name):
            for i in range(len(t)):
                for j in range(i + 1, len(t)):
                    xi, xj = owner.get(t[i]), owner.get(t[j])
                    if xi is None or xj is None or xi == xj or rank[xi] > rank[xj]:
                        return False
    return True


def order_pair(a: Structure, order: Sequence[str] | None, d: Structure) -> tuple[Structure, Structure]:
    """Undo the coordinate sorting: ``Hom(a, B) = Hom(a_le, d)``."""
    order = list(order) if order is not None else list(a.universe)
    a_le, fmap = ordered_query(a, order)
    if not is_coordinate_respecting(a_le, d):
        raise NotCoordinateRespecting("data is not coordinate respecting relative to the ordered query")
    if not is_order_respecting_data(a_le, d, order):
        raise NotOrderRespecting("data tuples do not follow the element order")
    if not is_reduced(a_le, d):
        raise NotReduced("data is not reduced relative to the ordered query")
    rels = {}
    for name, _ in a.signature:
        f = fmap[name]
        rels[name] = [tuple(s[k] for k in f) for s in d.tuples(_le_name(name))]
    return a_le, Structure.build(a.signature, d.universe, rels)


def is_order_respecting_query(a: Structure) -> list[str] | None:
    """A total order under which every tuple is strictly increasing, or ``None``."""
    succ: dict[str, set[str]] = {x: set() for x in a.universe}
    for _, t in a.atoms():
        if len(set(t)) != len(t):
            return None
        for u, v in zip(t, t[1:]):
            succ[u].add(v)
    indeg = {x: 0 for x in a.universe}
    for u in succ:
        for v in succ[u]:
            indeg[v] += 1
    ready = [x for x in a.universe if indeg[x] == 0]
    out = []
    while ready:
        u = ready.pop(0)
        out.append(u)
        for v in sorted(succ[u], key=a.universe.index):
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    return out if len(out) == len(a.universe) else None


def prepare_query(a: Structure) -> tuple[Structure, list[str]]:
    """``order(sparsify(individualize(a)))`` with the universe order: single tuples, sorted."""
    a_sp = sparse_query(individualize(a))
    a_le, _ = ordered_query(a_sp, a.universe)
    return a_le, list(a.universe)


# -- flow-induced structures ---------------------------------------------------------

def ceil_power(n: int, e: Fraction) -> int:
    """``ceil(n ** e)`` for a nonnegative rational exponent, exactly; at least 1."""
    e = Fraction(e)
    if e <= 0:
        return 1
    target = n**e.numerator  # want least m with m^q >= n^p
    q = e.denominator
    lo, hi = 1, 1
    while hi**q < target:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**q >= target:
            hi = mid
        else:
            lo = mid + 1
    return max(lo, 1)


def scattered_witness(
    tuples: Iterable[Sequence[str]], arity: int, n: int, budget: int = DEFAULT_SCATTER_BUDGET
) -> tuple[tuple[int, ...], list, list] | None:
    """A grid ``S x T`` inside the relation with both sides above ``3 log2 n``, or ``None``.

    Tries every split of the coordinate positions into two nonempty parts.
    """
    rows = [tuple(t) for t in tuples]
    a = max_small_side(n) + 1
    positions = range(arity)
    nodes = 0
    for r in range(1, arity):
        for left in combinations(positions, r):
            if 0 not in left:
                continue  # each unordered split once
            right = tuple(p for p in positions if p not in left)
            nbr: dict[tuple, set[tuple]] = {}
            for t in rows:
                nbr.setdefault(tuple(t[p] for p in left), set()).add(tuple(t[p] for p in right))
            cands = sorted(s for s in nbr if len(nbr[s]) >= a)
            if len(cands) < a:
                continue
            chosen: list[tuple] = []

            def rec(start: int, common: set[tuple]) -> list | None:
                nonlocal nodes
                if len(chosen) == a:
                    return list(chosen)
                for i in range(start, len(cands)):
                    if len(cands) - i < a - len(chosen):
                        break
                    nodes += 1
                    if nodes > budget:
                        raise BudgetExceeded(f"scatter check exceeded {budget} nodes")
                    nc = common & nbr[cands[i]] if chosen else nbr[cands[i]]
                    if len(nc) < a:
                        continue
                    chosen.append(cands[i])
                    hit = rec(i + 1, nc)
                    if hit is not None:
                        return hit
                    chosen.pop()
                return None

            s = rec(0, set())
            if s is not None:
                common = set.intersection(*(nbr[x] for x in s))
                return left, s, sorted(common)[:a]
    return None


def is_n_scattered(tuples: Iterable[Sequence[str]], arity: int, n: int, budget: int = DEFAULT_SCATTER_BUDGET) -> bool:
    return scattered_witness(tuples, arity, n, budget) is None


@dataclass
class FlowStructure:
    structure: Structure
    doms: dict[str, list[str]]
    n: int
    seed: int
    attempt: int
    mu: dict[str, Fraction]
    t: Fraction
    hom_count: int
    hom_threshold: Fraction
    checks: dict[str, bool] = field(default_factory=dict)

    def header(self) -> dict:
        return {
            "N": self.n,
            "seed": self.seed,
            "attempt": self.attempt,
            "t": str(self.t),
            "mu": {v: str(w) for v, w in self.mu.items()},
            "dom_sizes": {v: len(d) for v, d in self.doms.items()},
            "hom_count": self.hom_count,
            "hom_threshold": str(self.hom_threshold),
            "size": self.structure.size,
            "checks": self.checks,
        }


def gen_flow_structure(
    a: Structure,
    mu: Mapping[str, Fraction],
    n: int,
    seed: int,
    max_retries: int = 50,
    scatter_budget: int = DEFAULT_SCATTER_BUDGET,
) -> FlowStructure:
    """Random structure with ``|dom(v)| = ceil(N^mu(v))`` and fair-coin relations."""
    if n < 2:
        raise ValueError("N must be at least 2")
    _check_single_tuple(a)
    if is_order_respecting_query(a) is None:
        raise NotOrderRespecting("query tuples admit no consistent element order")
    doms = {v: [f"{v}:{i}" for i in range(ceil_power(n, Fraction(mu.get(v, 0))))] for v in a.universe}
    universe = [x for v in a.universe for x in doms[v]]
    norm_a = a.size
    dom_product = math.prod(len(d) for d in doms.values())
    threshold = Fraction(dom_product, 8 * 2**norm_a)
    t = sum((Fraction(mu.get(v, 0)) for v in a.universe), Fraction(0))
    for attempt in range(max_retries):
        rng = random.Random(derive_seed(seed, attempt))
        rels = {}
        for name, _ in a.signature:
            (tup,) = a.tuples(name)
            rels[name] = [s for s in product(*(doms[v] for v in tup)) if rng.getrandbits(1)]
        b = Structure.build(a.signature, universe, rels)
        if b.size > norm_a * n:
            continue
        if not all(is_n_scattered(rels[name], ar, n, scatter_budget) for name, ar in a.signature):
            continue
        count = count_homs(a, b)
        if count < threshold:
            continue
        checks = {
            "size_ok": b.size <= norm_a * n,
            "scattered": True,
            "count_ok": count >= threshold,
        }
        return FlowStructure(b, doms, n, seed, attempt, dict(mu), t, count, threshold, checks)
    raise RetriesExhausted(f"no acceptable flow structure for N={n} in {max_retries} attempts")


def respects_coordinates_by_doms(a: Structure, b: Structure, doms: Mapping[str, Sequence[str]]) -> bool:
    """Every data tuple of ``R`` lies in the product of the domains of ``R``'s query tuple."""
    dsets = {v: set(d) for v, d in doms.items()}
    for name, _ in a.signature:
        (t,) = a.tuples(name)
        for s in b.tuples(name):
            if any(val not in dsets[v] for v, val in zip(t, s)):
                return False
    return True


# -- balance report -----------------------------------------------------------

def alpha_balance_report(
    part: tuple[Iterable[str], Iterable[str]], cliques: Sequence[Iterable[str]], alpha: Mapping[str, Fraction]
) -> dict:
    x, y = set(part[0]), set(part[1])
    ks = [set(k) for k in cliques]

    def w(vs) -> Fraction:
        return sum((Fraction(alpha.get(v, 0)) for v in vs), Fraction(0))

    per = [w(k) for k in ks]
    delta = per[0] if per else Fraction(0)
    total = sum(per, Fraction(0))
    balanced = [min(w(k & x), w(k & y)) >= w(k) / 10 for k in ks]
    kx = [i for i, k in enumerate(ks) if w(k & x) < delta / 10]
    ky = [i for i, k in enumerate(ks) if w(k & y) < delta / 10]
    return {
        "delta": delta,
        "alpha_W": total,
        "partition_balanced": 3 * min(w(x), w(y)) >= total,
        "balanced_cliques": [i for i, b in enumerate(balanced) if b],
        "num_balanced": sum(balanced),
        "K_X": kx,
        "K_Y": ky,
        "K_X_times_K_Y": len(kx) * len(ky),
    }


# -- k-partite separation ---------------------------------------------------------

def kpartite_pair(k: int, n: int, max_k: int = 5) -> tuple[Structure, Structure, Circuit]:
    """``K_k`` against the complete k-partite graph with parts of size ``n``, plus the
    circuit that guesses which part each query vertex goes to."""
    if k > max_k:
        raise TooLarge(f"k = {k} exceeds {max_k}")
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    g = clique_structure(k)
    xs = list(g.universe)
    parts = [[f"p{i + 1}_{j + 1}" for j in range(n)] for i in range(k)]
    hverts = [v for p in parts for v in p]
    hedges = [(u, v) for i, j in combinations(range(k), 2) for u in parts[i] for v in parts[j]]
    h = graph_structure(graph_from_edges(hverts, hedges))
    b = Builder()
    col = {(x, i): b.chain(UNION, [b.input(x, v) for v in parts[i]]) for x in xs for i in range(k)}
    prods = []
    for sigma in permutations(range(k)):
        # query vertex xs[sigma[i]] goes to part i
        prods.append(b.chain(TIMES, [col[(xs[sigma[i]], i)] for i in range(k)]))
    return g, h, b.finish(b.chain(UNION, prods), xs)
