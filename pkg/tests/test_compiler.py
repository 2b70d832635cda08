import random

import pytest
from hypothesis import given, settings, strategies as st

from homcirc.circuit import EMPTY, check_deterministic, count_deterministic, eval_circuit, respects_vtree, validate_circuit
from homcirc.compiler import compile_td, compile_with_stats, materialize_bags, yannakakis_reduce
from homcirc.errors import DisconnectedQuery
from homcirc.fixtures import example_database, example_query, example_query_as_printed, example_td
from homcirc.relcore import Structure, enumerate_homs, hypergraph_of
from homcirc.widths import TreeDecomposition, single_bag, treewidth_exact
from oracles import brute_homs, random_data, random_query


def test_example_compiles_to_48():
    a, b = example_query(), example_database()
    res = compile_with_stats(a, b, example_td())
    c = res.circuit
    assert validate_circuit(c).ok
    assert check_deterministic(c)
    assert count_deterministic(c) == 48
    assert eval_circuit(c).functions == frozenset(enumerate_homs(a, b))
    assert respects_vtree(c, c.vtree)
    st_ = res.stats
    assert st_["data_size"] == 56 and st_["circuit_size"] == c.size
    assert str(st_["fhtw"]) == "3/2"
    assert all(len(r) <= r.cover_bound for r in res.bags)


def test_printed_query_gives_empty_result():
    td = TreeDecomposition.build(["t0", "t1"], [("t0", "t1")], {"t0": "xyz", "t1": "xyw"})
    assert compile_td(example_query_as_printed(), example_database(), td) is EMPTY


def test_rejects_bad_inputs():
    a, b = example_query(), example_database()
    bad = TreeDecomposition.build(["t0"], [], {"t0": "xyz"})
    with pytest.raises(ValueError):
        compile_td(a, b, bad)
    disc = Structure.build([("E", 2)], ["x", "y", "z"], {"E": [("x", "y")]})
    with pytest.raises(DisconnectedQuery):
        compile_td(disc, b, single_bag(hypergraph_of(disc)))


def test_semijoins_make_bags_globally_consistent():
    a, b = example_query(), example_database()
    td = example_td()
    bags = yannakakis_reduce(materialize_bags(a, b, td), td)
    homs = [dict(h) for h in enumerate_homs(a, b)]
    for r in bags:
        projected = {tuple(h[x] for x in r.variables) for h in homs}
        assert set(r.tuples) == projected


def test_single_bag_and_optimal_td_agree():
    a, b = example_query(), example_database()
    h = hypergraph_of(a)
    one = eval_circuit(compile_td(a, b, single_bag(h)))
    best = eval_circuit(compile_td(a, b, treewidth_exact(h)[1]))
    assert one == best


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_random_instances_match_oracle(seed):
    rng = random.Random(seed)
    a = random_query(rng)
    b = random_data(rng, a)
    _, td = treewidth_exact(hypergraph_of(a))
    c = compile_td(a, b, td)
    expected = brute_homs(a, b) if len(b.universe) ** len(a.universe) <= 20000 else set(enumerate_homs(a, b))
    if not expected:
        assert c is EMPTY
        return
    assert validate_circuit(c).ok
    assert eval_circuit(c).functions == frozenset(expected)
    assert count_deterministic(c) == len(expected)
