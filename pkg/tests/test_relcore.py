import random

import pytest
from hypothesis import given, settings, strategies as st

from homcirc.errors import BudgetExceeded, PartialAssignment
from homcirc.fixtures import example_database, example_query, example_query_as_printed, triangle_pair
from homcirc.relcore import (
    Hypergraph,
    Structure,
    assignment,
    components,
    count_homs,
    enumerate_homs,
    gaifman_graph,
    hypergraph_of,
    is_connected,
    is_homomorphism,
    reduce_structure,
    validate_structure,
)
from oracles import brute_homs, random_data, random_query


def test_json_round_trip():
    d = example_database()
    again = Structure.loads(d.dumps())
    assert again == d
    assert again.relation_sets == d.relation_sets


def test_example_database_shape():
    d = example_database()
    assert d.size == 56
    assert len(d.tuples("R")) == 32 and len(d.tuples("E")) == 24


def test_validate_flags_bad_tuples():
    s = Structure.build([("E", 2)], ["a"], {"E": [("a", "b"), ("a",)]})
    rep = validate_structure(s)
    assert not rep.ok
    assert any("unknown element" in v for v in rep.violations)
    assert any("arity" in v for v in rep.violations)


def test_gaifman_of_ternary_atom_is_triangle():
    a = Structure.build([("R", 3)], ["x", "y", "z"], {"R": [("x", "y", "z")]})
    g = gaifman_graph(a)
    assert {frozenset(e) for e in g.edges} == {frozenset("xy"), frozenset("yz"), frozenset("xz")}
    assert hypergraph_of(a).edges == (frozenset("xyz"),)


def test_components_and_connectivity():
    h = Hypergraph.build("abcd", [frozenset("ab"), frozenset("cd")])
    assert sorted(map(sorted, components(h))) == [["a", "b"], ["c", "d"]]
    assert sorted(map(sorted, components(h, removed="a"))) == [["b"], ["c", "d"]]
    disc = Structure.build([("E", 2)], ["x", "y", "z"], {"E": [("x", "y")]})
    assert not is_connected(disc)
    assert is_connected(example_query())


def test_example_counts():
    assert count_homs(example_query(), example_database()) == 48
    assert count_homs(example_query_as_printed(), example_database()) == 0


def test_triangle_pair_has_eight():
    g, h = triangle_pair()
    homs = enumerate_homs(g, h)
    assert len(homs) == 8
    assert set(homs) == brute_homs(g, h)
    assert all(is_homomorphism(m, g, h) for m in homs)


def test_partial_assignment_rejected():
    g, h = triangle_pair()
    with pytest.raises(PartialAssignment):
        is_homomorphism({"x": "a1"}, g, h)


def test_budget():
    g, h = triangle_pair()
    with pytest.raises(BudgetExceeded):
        count_homs(g, h, budget=3)


def test_empty_relation_short_circuits():
    a = Structure.build([("E", 2)], ["x", "y"], {"E": [("x", "y")]})
    b = Structure.build([("E", 2)], ["p", "q"], {"E": []})
    assert enumerate_homs(a, b) == []


def test_reduce_structure_keeps_hom_set():
    a, b = example_query(), example_database()
    r = reduce_structure(a, b)
    assert set(enumerate_homs(a, r)) == set(enumerate_homs(a, b))
    assert r.size < b.size


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_search_matches_brute_force(seed):
    rng = random.Random(seed)
    a = random_query(rng, max_vars=4)
    b = random_data(rng, a, max_size=60)
    assert set(enumerate_homs(a, b)) == brute_homs(a, b)


def test_assignment_is_order_free():
    assert assignment({"x": "1", "y": "2"}) == assignment({"y": "2", "x": "1"})
