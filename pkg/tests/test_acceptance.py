"""Acceptance checks, one test per criterion; each reports a PASS/FAIL line."""

import math
import random
import statistics
from fractions import Fraction
from itertools import combinations

import pytest

from homcirc.circuit import EMPTY, check_deterministic, count_deterministic, eval_circuit, validate_circuit
from homcirc.compiler import compile_td
from homcirc.fixtures import example_database, example_query, example_td, triangle_circuit, triangle_pair
from homcirc.flows import (
    alpha_of_flow,
    flow_value,
    max_uniform_concurrent_flow,
    mu_of_flow,
    validate_flow,
)
from homcirc.harness import ExperimentConfig, run_tw_experiment, triangle_query
from homcirc.instgen import (
    ceil_power,
    gen_flow_structure,
    gen_hard_graph,
    graph_from_edges,
    individualize,
    is_biclique,
    is_coordinate_respecting,
    is_n_scattered,
    kpartite_pair,
    order_pair,
    ordered_query,
    prepare_query,
    respects_coordinates_by_doms,
    sparse_query,
    sparsify_pair,
    verify_biclique_free,
)
from homcirc.rect import extract_cover, greedy_matching, is_balanced, w_balanced_partitions, weight
from homcirc.relcore import Hypergraph, count_homs, enumerate_homs, hypergraph_of
from homcirc.widths import (
    find_hcs,
    fhtw_of_td,
    frac_edge_cover_number,
    fractional_independent_set,
    has_balanced_separator,
    treewidth_exact,
    validate_td,
)
from oracles import (
    brute_has_biclique,
    brute_has_separator,
    brute_homs,
    le_data,
    named_graphs,
    random_cliques,
    random_data,
    random_graph,
    random_hypergraph,
    random_query,
    tagged_data,
    untag,
)

TRIANGLE = Hypergraph.build("xyz", [frozenset("xy"), frozenset("yz"), frozenset("xz")])


@pytest.mark.criterion(1, "running join example: 48 answers, deterministic circuit counts 48")
def test_criterion_01_example_counts_48():
    a, b = example_query(), example_database()
    assert b.size == 56
    assert count_homs(a, b) == 48
    td = example_td()
    assert validate_td(hypergraph_of(a), td).ok
    c = compile_td(a, b, td)
    assert validate_circuit(c).ok and check_deterministic(c)
    assert count_deterministic(c) == 48


@pytest.mark.criterion(2, "directed triangle circuit: valid, deterministic, 8 = enumerate_homs")
def test_criterion_02_triangle_circuit():
    c = triangle_circuit()
    assert all(len(g.children) <= 2 for g in c.gates)
    assert validate_circuit(c).ok and check_deterministic(c)
    assert count_deterministic(c, check=True) == 8
    g, h = triangle_pair()
    homs = frozenset(enumerate_homs(g, h))
    assert len(homs) == 8 and eval_circuit(c).functions == homs
    assert homs == brute_homs(g, h)


def _admissible_weights(rng, xs):
    if len(xs) == 1:
        return {xs[0]: Fraction(0)}
    for _ in range(20):
        f = {v: Fraction(rng.randint(0, 3)) for v in xs}
        total = weight(f, xs)
        if all(3 * w <= 2 * total for w in f.values()):
            return f
    return {v: Fraction(1) for v in xs}


@pytest.mark.criterion(3, "200 random instances: compile = oracle, cover union = Hom, f-balanced rectangles")
def test_criterion_03_oracle_equivalence():
    rng = random.Random(20240603)
    checked = nonempty = 0
    while checked < 200:
        a = random_query(rng, max_vars=6, max_arity=3)
        b = random_data(rng, a, max_size=200)
        assert len(a.universe) <= 6 and b.size <= 200
        c = compile_td(a, b, treewidth_exact(hypergraph_of(a))[1])
        homs = frozenset(enumerate_homs(a, b))
        checked += 1
        if not homs:
            assert c is EMPTY
            continue
        nonempty += 1
        assert validate_circuit(c).ok
        assert eval_circuit(c).functions == homs
        f = _admissible_weights(rng, list(a.universe))
        total = weight(f, a.universe)
        cover = extract_cover(c, f)
        assert cover.union() == set(homs)
        assert len(cover) <= c.size
        for r in cover.rectangles:
            assert is_balanced(f, r.left.domain, total)
    assert nonempty >= 100


def _k_tree(k):
    vs = [f"v{i}" for i in range(k)]
    return Hypergraph.build(vs, [frozenset(e) for e in combinations(vs, 2)])


def _grid(m):
    vs = [f"g{i}_{j}" for i in range(m) for j in range(m)]
    es = [(f"g{i}_{j}", f"g{i}_{j + 1}") for i in range(m) for j in range(m - 1)]
    es += [(f"g{i}_{j}", f"g{i + 1}_{j}") for i in range(m - 1) for j in range(m)]
    return Hypergraph.build(vs, [frozenset(e) for e in es])


@pytest.mark.criterion(4, "width suite: tw of cliques, tree, 3x3 grid; rho*(triangle) = 3/2 with dual")
def test_criterion_04_width_suite():
    for k in range(1, 9):
        assert treewidth_exact(_k_tree(k))[0] == k - 1
    tree = Hypergraph.build("abcdefg", [frozenset(e) for e in ["ab", "ac", "bd", "be", "cf", "cg"]])
    assert treewidth_exact(tree)[0] == 1
    assert treewidth_exact(_grid(3))[0] == 3
    rho, cover = frac_edge_cover_number(TRIANGLE, "xyz")
    dual, packing = fractional_independent_set(TRIANGLE, "xyz")
    assert rho == dual == Fraction(3, 2)
    assert all(sum(w for e, w in cover.items() if v in e) >= 1 for v in "xyz")
    assert all(sum(packing[v] for v in e) <= 1 for e in TRIANGLE.edges)


@pytest.mark.criterion("4b", "fhtw of the two-bag decomposition of the running example equals 2")
def test_criterion_04_example_fhtw_equals_two():
    # computes 3/2: the bag {x,z,w} is covered by E(x,w), E(w,z), R(x,y,z) at weight 1/2 each
    h = hypergraph_of(example_query())
    assert fhtw_of_td(h, example_td()) == 2


@pytest.mark.criterion("4c", "balanced separator search agrees with an independent recursive search")
def test_criterion_04_separator_soundness():
    rng = random.Random()
    for _ in range(3):
        vs, es = random_graph(rng, rng.randint(5, 9), rng.choice([0.3, 0.5, 0.7]))
        g = graph_from_edges(vs, es)
        w = rng.sample(vs, rng.randint(2, len(vs)))
        k = rng.randint(0, 3)
        wit = has_balanced_separator(g, w, k)
        edges = [set(e) for e in g.edges]
        assert wit.exhausted == (not brute_has_separator(vs, edges, w, k))


def _hcs_cases(g):
    """Every k <= 3 with a highly connected set, checked independently."""
    for k in range(4):
        if 2 * k + 1 > len(g.vertices):
            break
        w = find_hcs(g, k)
        if w is None:
            continue
        assert not brute_has_separator(g.vertices, [set(e) for e in g.edges], w, k)
        yield k, w


@pytest.mark.criterion(5, "greedy matching reaches floor(k/3) on every W-balanced partition")
def test_criterion_05_matching_lemma():
    graphs = list(named_graphs().values())
    rng = random.Random(5)
    for _ in range(12):
        vs, es = random_graph(rng, rng.randint(6, 10), rng.choice([0.5, 0.7, 0.9]))
        graphs.append(graph_from_edges(vs, es))
    cases = 0
    for g in graphs:
        assert len(g.vertices) <= 12
        adj = g.adjacency
        for k, w in _hcs_cases(g):
            for x, y in w_balanced_partitions(g.vertices, w):
                m = greedy_matching(g, (x, y))
                assert len(m) >= k // 3
                assert len({v for e in m for v in e}) == 2 * len(m)
                assert all(u in x and v in y and v in adj[u] for u, v in m)
                cases += 1
    assert cases > 0


def _triangles(g):
    adj = g.adjacency
    return sum(1 for a, b, c in combinations(g.vertices, 3) if b in adj[a] and c in adj[a] and c in adj[b])


@pytest.mark.criterion(6, "hard-graph certificates hold; biclique verifier never reports a false violation")
def test_criterion_06_hard_graph_certificates():
    for n in (16, 32):
        for seed in range(5):
            cert = gen_hard_graph(3, n, seed)
            g = cert.graph
            m = sum(len(nb) for nb in g.adjacency.values()) // 2
            assert cert.edges == m and 8 * m >= n * n
            tri = _triangles(g)
            assert cert.t_cliques == tri and 2 * 8 * tri >= math.comb(n, 3)
            assert cert.biclique.status != "violation"
    rng = random.Random(66)
    for case in range(20):
        n = rng.randint(8, 16)
        vs, es = random_graph(rng, n, rng.choice([0.3, 0.5]))
        a = rng.randint(2, 4)
        if case % 2 == 0:
            s = rng.sample(vs, 2 * a)
            es = list({frozenset(e) for e in es} | {frozenset((u, v)) for u in s[:a] for v in s[a:]})
            es = [tuple(e) for e in es]
        g = graph_from_edges(vs, es)
        res = verify_biclique_free(g, a)
        truth = brute_has_biclique(vs, es, a)
        assert (res.status == "violation") == truth
        if res.status == "violation":
            assert is_biclique(g, res.s, res.t) and len(res.s) == len(res.t) == a


@pytest.mark.criterion(7, "triangle concurrent flow 1/3; alpha(K_i) = delta on all flows; witnesses re-validate")
def test_criterion_07_flow_suite():
    cf = max_uniform_concurrent_flow(TRIANGLE, [["x"], ["y"], ["z"]])
    assert cf.epsilon == Fraction(1, 3)
    rng = random.Random(7)
    flows = [(TRIANGLE, cf)]
    while len(flows) < 60:
        h = random_hypergraph(rng, rng.randint(2, 7))
        cliques = random_cliques(rng, h)
        if cliques:
            flows.append((h, max_uniform_concurrent_flow(h, cliques)))
    for h, cf in flows:
        assert validate_flow(h, cf.total()).ok
        for f in cf.flows.values():
            assert flow_value(f) == cf.epsilon and validate_flow(h, f).ok
        alpha = alpha_of_flow(cf, h.vertices)
        delta = cf.epsilon / 2 * (cf.k - 1)
        assert all(alpha(k) == delta for k in cf.cliques)


@pytest.mark.criterion(8, "triangle flow structures at N = 16, 32, 64 meet every check exactly")
def test_criterion_08_flow_structures():
    a, order = prepare_query(triangle_query())
    h = hypergraph_of(a)
    cf = max_uniform_concurrent_flow(h, [["x"], ["y"], ["z"]])
    mu = mu_of_flow(h, cf).values
    rank = {x: i for i, x in enumerate(order)}
    for n in (16, 32, 64):
        fs = gen_flow_structure(a, mu, n, 0)
        b = fs.structure
        owner = {val: v for v, d in fs.doms.items() for val in d}
        assert len(owner) == sum(len(d) for d in fs.doms.values())
        assert respects_coordinates_by_doms(a, b, fs.doms)
        assert is_coordinate_respecting(a, b)
        for name, ar in a.signature:
            for s in b.tuples(name):
                ranks = [rank[owner[v]] for v in s]
                assert ranks == sorted(set(ranks))
            assert is_n_scattered(b.tuples(name), ar, n)
        assert b.size <= a.size * n
        homs = count_homs(a, b)
        bound = Fraction(math.prod(ceil_power(n, mu[v]) for v in a.universe), 8 * 2**a.size)
        assert homs == fs.hom_count and homs >= bound


@pytest.mark.criterion(9, "Hom preserved across individualize, sparsify_pair and order_pair on 50 pairs")
def test_criterion_09_reduction_chain():
    rng = random.Random(909)
    checked = 0
    while checked < 50:
        a = random_query(rng, max_vars=4)
        b = random_data(rng, a, max_size=60)
        homs = [dict(h) for h in enumerate_homs(a, b)]
        if not homs:
            continue
        expected = {frozenset(h.items()) for h in homs}
        a_id = individualize(a)
        a_sp = sparse_query(a_id)
        d = tagged_data(a_sp, homs)
        _, b_id = sparsify_pair(a_id, d)
        via_id = set(enumerate_homs(a_id, b_id))
        assert via_id == set(enumerate_homs(a_sp, d))
        assert untag(via_id) == expected
        order = list(a.universe)
        a_le, _ = ordered_query(a_sp, order)
        d_le = le_data(a_le, a_sp, d, order)
        _, b_sp = order_pair(a_sp, order, d_le)
        assert set(enumerate_homs(a_sp, b_sp)) == set(enumerate_homs(a_le, d_le)) == via_id
        checked += 1


@pytest.mark.criterion(10, "k-partite circuits count k! n^k and grow linearly in n")
def test_criterion_10_kpartite():
    ns = list(range(4, 17))
    for k in (2, 3, 4):
        sizes = []
        for n in ns:
            g, h, c = kpartite_pair(k, n)
            assert validate_circuit(c).ok
            # exhaustive determinism check only while the answer set is small
            assert count_deterministic(c, check=n <= 6) == math.factorial(k) * n**k
            if n == 4 and k <= 3:
                assert count_homs(g, h) == math.factorial(k) * n**k
            sizes.append(c.size)
        fit = statistics.linear_regression(ns, sizes)
        assert all(abs(s - (fit.slope * n + fit.intercept)) <= 1 for n, s in zip(ns, sizes))
        assert fit.slope > 0


@pytest.mark.criterion(11, "K4 treewidth experiment: certificate strictly increasing in n")
def test_criterion_11_trend():
    cfg = ExperimentConfig.from_json("tw", {"family": "clique", "k": 4, "sizes": [16, 24, 32, 48], "seeds": [7]})
    rep = run_tw_experiment(cfg)
    assert rep.ok
    certs = [Fraction(r["certificate"]) for r in rep.rows]
    print("certificates:", ", ".join(f"n={r['n']}: {float(c):.3f}" for r, c in zip(rep.rows, certs)))
    assert all(x < y for x, y in zip(certs, certs[1:]))
    assert all(r["hom_check"] and r["bound_ok"] for r in rep.rows)
