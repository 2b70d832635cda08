import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from homcirc.circuit import EMPTY, FunctionSet, eval_circuit, gate_sets
from homcirc.compiler import compile_td
from homcirc.errors import BadScope, WeightViolation
from homcirc.fixtures import example_database, example_query, example_td, triangle_circuit
from homcirc.instgen import graph_from_edges
from homcirc.rect import (
    analytic_bound,
    completion_set,
    completion_sets,
    extract_cover,
    find_f_balanced_gate,
    greedy_matching,
    indicator_weights,
    is_balanced,
    is_rectangle,
    projection_bound,
    rectangle_bound_check,
    restrict_set,
    w_balanced_partitions,
    weight,
    within_bound,
)
from homcirc.relcore import hypergraph_of
from homcirc.widths import largest_hcs, treewidth_exact
from oracles import brute_has_separator, named_graphs, random_data, random_graph, random_query

ONES = {v: Fraction(1) for v in "xyz"}


def test_rectangles_on_small_sets():
    grid = FunctionSet.of("xy", [{"x": a, "y": b} for a in "01" for b in "01"])
    assert is_rectangle(grid, ("x", "y"))
    diag = FunctionSet.of("xy", [{"x": "0", "y": "0"}, {"x": "1", "y": "1"}])
    assert not is_rectangle(diag, ("x", "y"))
    assert projection_bound(diag) == 4 and len(diag) == 2
    with pytest.raises(BadScope):
        restrict_set(diag, "z")
    with pytest.raises(BadScope):
        is_rectangle(diag, ("x", "x"))


def test_completion_sets_stay_inside_hom():
    c = triangle_circuit()
    homs = eval_circuit(c).functions
    comp = completion_sets(c)
    assert comp[c.sink] == {frozenset()}
    sets = gate_sets(c)
    for g in c.reachable():
        assert {s | t for s in sets[g] for t in comp[g]} <= homs
    assert len(completion_set(c, c.sink)) == 1


def test_balanced_gate_on_triangle():
    c = triangle_circuit()
    g = find_f_balanced_gate(c, ONES)
    var = c.var_sets()[g]
    assert 3 * len(var) <= 2 * 3 and 3 * len(var) >= 3
    with pytest.raises(WeightViolation):
        find_f_balanced_gate(c, {"x": Fraction(5), "y": Fraction(1), "z": Fraction(1)})


def test_cover_of_example():
    a, b = example_query(), example_database()
    c = compile_td(a, b, example_td())
    f = {v: Fraction(1) for v in a.universe}
    cover = extract_cover(c, f)
    assert cover.union() == set(eval_circuit(c).functions)
    assert 0 < len(cover) <= c.size
    for r in cover.rectangles:
        assert is_balanced(f, r.left.domain, Fraction(4))
    rep = cover.report()
    assert rep["target_size"] == 48 and rep["cover_size"] == len(cover)


def test_cover_of_empty_result():
    assert len(extract_cover(EMPTY, {})) == 0


def test_zero_weights_give_whole_set():
    c = triangle_circuit()
    cover = extract_cover(c, {v: Fraction(0) for v in "xyz"})
    assert max(r.size for r in cover.rectangles) == 8


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_cover_properties_random(seed):
    rng = random.Random(seed)
    a = random_query(rng, max_vars=5)
    b = random_data(rng, a, max_size=80)
    c = compile_td(a, b, treewidth_exact(hypergraph_of(a))[1])
    if c is EMPTY or len(a.universe) < 2:
        return
    f = {v: Fraction(rng.randint(0, 3)) for v in a.universe}
    total = weight(f, a.universe)
    if any(3 * w > 2 * total for w in f.values()):
        with pytest.raises(WeightViolation):
            extract_cover(c, f)
        return
    cover = extract_cover(c, f)
    assert cover.union() == set(eval_circuit(c).functions)
    assert len(cover) <= c.size
    for r in cover.rectangles:
        assert is_balanced(f, r.left.domain, total)
        assert is_rectangle(FunctionSet(cover.target.domain, frozenset(r.realized())), r.partition)


def _check_matching(g, part, m):
    x, y = part
    used = set()
    adj = g.adjacency
    for u, v in m:
        assert u in x and v in y and v in adj[u]
        assert u not in used and v not in used
        used |= {u, v}


@pytest.mark.parametrize("name", sorted(named_graphs()))
def test_matching_lemma_named_graphs(name):
    g = named_graphs()[name]
    k, w = largest_hcs(g)
    edges = [set(e) for e in g.edges]
    assert not brute_has_separator(g.vertices, edges, w, k)
    for part in w_balanced_partitions(g.vertices, w):
        m = greedy_matching(g, part)
        _check_matching(g, part, m)
        assert len(m) >= k // 3


def test_matching_lemma_random_graphs():
    rng = random.Random(2024)
    for _ in range(15):
        vs, es = random_graph(rng, rng.randint(5, 9), 0.6)
        g = graph_from_edges(vs, es)
        found = largest_hcs(g)
        if found is None:
            continue
        k, w = found
        for part in w_balanced_partitions(vs, w):
            assert len(greedy_matching(g, part)) >= k // 3


def test_w_balanced_partitions_count():
    parts = list(w_balanced_partitions(list("abc"), "abc"))
    # each side needs at least one of the three W-vertices
    assert len(parts) == 6


def test_analytic_bound():
    assert analytic_bound(4, 0, 16) == 16**4
    assert within_bound(16**4, 4, 2, 16) and not within_bound(16**4 + 1, 4, 2, 16)
    # q = 1: n^(t-1) * 3 log2 n, with log2 16 = 4
    assert float(analytic_bound(4, 3, 16)) == pytest.approx(16**3 * 12)
    assert within_bound(16**3 * 12, 4, 3, 16)
    assert not within_bound(16**3 * 12 + 1, 4, 3, 16)


def test_bound_check_on_triangle():
    c = triangle_circuit()
    cover = extract_cover(c, indicator_weights("xyz", "xyz"))
    rep = rectangle_bound_check(cover, "xyz", 1, 7)
    assert rep.ok and rep.checked == len(cover)
    assert rep.certificate_measured == Fraction(8, rep.max_rectangle)
