"""Small worked instances used by the tests, the CLI demos and the README.

``example_query``/``example_database`` are the running join-query example: a
ternary relation ``R`` and a binary relation ``E`` over 56 tuples with 48
answers. ``triangle_pair`` and ``triangle_circuit`` are the directed-triangle
instance with 8 homomorphisms and its hand-written deterministic circuit.
"""

from __future__ import annotations

from itertools import product

from .circuit import Builder, Circuit, Gate
from .relcore import Structure
from .widths import TreeDecomposition

ABCD = ("a", "b", "c", "d")
EFGH = ("e", "f", "g", "h")


def example_query() -> Structure:
    """``R(x,y,z), E(x,w), E(w,z)``."""
    return Structure.build(
        [("R", 3), ("E", 2)],
        ["x", "y", "z", "w"],
        {"R": [("x", "y", "z")], "E": [("x", "w"), ("w", "z")]},
    )


def example_query_as_printed() -> Structure:
    """``R(x,y,z), E(x,w), E(w,y)``; has no answers on :func:`example_database`."""
    return Structure.build(
        [("R", 3), ("E", 2)],
        ["x", "y", "z", "w"],
        {"R": [("x", "y", "z")], "E": [("x", "w"), ("w", "y")]},
    )


def example_database() -> Structure:
    r = list(product(ABCD, ("r",), ABCD)) + list(product(("s", "t"), ABCD, ("s", "t")))
    e = (
        list(product(ABCD, ("r", "t")))
        + list(product(("r", "s"), ABCD))
        + list(product(("t",), EFGH))
        + list(product(EFGH, ("s",)))
    )
    universe = ABCD + ("r", "s", "t") + EFGH
    return Structure.build([("R", 3), ("E", 2)], universe, {"R": r, "E": e})


def example_td() -> TreeDecomposition:
    return TreeDecomposition.build(["t0", "t1"], [("t0", "t1")], {"t0": "xyz", "t1": "xzw"})


def example_wide_circuit() -> Circuit:
    """Three product blocks under one union, with fan-in above two."""
    b = Builder()

    def ucol(var: str, values) -> int:
        return b.add(Gate.union(*(b.input(var, v) for v in values)))

    y_abcd = ucol("y", ABCD)
    block1 = Gate.times(ucol("x", ABCD), b.input("y", "r"), ucol("z", ABCD), b.input("w", "r"))
    block2 = Gate.times(b.input("x", "s"), ucol("w", ABCD), b.input("z", "t"), y_abcd)
    block3 = Gate.times(y_abcd, b.input("x", "t"), b.input("z", "s"), ucol("w", EFGH))
    sink = b.add(Gate.union(b.add(block1), b.add(block2), b.add(block3)))
    return b.finish(sink, ["x", "y", "z", "w"])


def triangle_pair() -> tuple[Structure, Structure]:
    g = Structure.build([("E", 2)], ["x", "y", "z"], {"E": [("x", "y"), ("x", "z"), ("y", "z")]})
    ai, bj, dj = ("a1", "a2"), ("b1", "b2"), ("d1", "d2")
    edges = (
        list(product(ai, bj))
        + list(product(ai, dj))
        + [(x, "c") for x in bj]
        + [("c", x) for x in dj]
        + [(x, "c") for x in ai]
    )
    h = Structure.build([("E", 2)], ai + bj + ("c",) + dj, {"E": edges})
    return g, h


def triangle_circuit() -> Circuit:
    """The two-branch deterministic circuit: either ``z`` or ``y`` is sent to ``c``."""
    b = Builder()
    g1 = b.union(b.input("y", "b1"), b.input("y", "b2"))
    g2 = b.union(b.input("x", "a1"), b.input("x", "a2"))
    g3 = b.union(b.input("z", "d1"), b.input("z", "d2"))
    g4 = b.times(b.input("z", "c"), b.times(g1, g2))
    g5 = b.times(b.input("y", "c"), b.times(g3, g2))
    return b.finish(b.union(g4, g5), ["x", "y", "z"])
