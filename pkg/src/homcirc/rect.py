"""Combinatorial rectangles and balanced rectangle covers read off a circuit.

Weight functions are vertex-additive: a mapping ``v -> Fraction`` extended to
sets by summation. Vertices missing from the mapping weigh zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Iterable, Mapping, Sequence

import mpmath

from .circuit import DEFAULT_EVAL_BUDGET, INPUT, UNION, Circuit, EmptyResult, FunctionSet, gate_sets, validate_circuit
from .errors import BadScope, WeightViolation
from .relcore import Assignment, Hypergraph

WeightFunction = Mapping[str, Fraction]

EPSILON: Assignment = frozenset()


def weight(f: WeightFunction, vs: Iterable[str]) -> Fraction:
    return sum((Fraction(f.get(v, 0)) for v in vs), Fraction(0))


def indicator_weights(w: Iterable[str], vertices: Iterable[str]) -> dict[str, Fraction]:
    """``f(S) = |S ∩ W|``."""
    w = set(w)
    return {v: Fraction(1 if v in w else 0) for v in vertices}


def is_balanced(f: WeightFunction, side: Iterable[str], total: Fraction) -> bool:
    s = weight(f, side)
    return 3 * s >= total and 3 * s <= 2 * total


def restrict_set(fs: FunctionSet, scope: Iterable[str]) -> FunctionSet:
    scope = frozenset(scope)
    if not scope <= fs.domain:
        raise BadScope(f"{sorted(scope - fs.domain)} outside the domain")
    return FunctionSet(scope, frozenset(frozenset(p for p in f if p[0] in scope) for f in fs.functions))


def _check_partition(fs: FunctionSet, y: frozenset[str], z: frozenset[str]) -> None:
    if y & z or (y | z) != fs.domain:
        raise BadScope("(Y, Z) does not partition the domain")


def is_rectangle(fs: FunctionSet, part: tuple[Iterable[str], Iterable[str]]) -> bool:
    y, z = frozenset(part[0]), frozenset(part[1])
    _check_partition(fs, y, z)
    left, right = restrict_set(fs, y), restrict_set(fs, z)
    if len(left) * len(right) != len(fs):
        return False
    return all(l | r in fs.functions for l in left for r in right)


def projection_bound(fs: FunctionSet) -> int:
    return prod(len(restrict_set(fs, (x,))) for x in fs.domain)


# -- circuit side ------------------------------------------------------------

def completion_sets(c: Circuit, sets: Mapping[int, frozenset[Assignment]] | None = None) -> dict[int, frozenset[Assignment]]:
    """Top-down: the sink gets ``{ε}``; a union parent passes its set on; a product parent
    extends its set by the sibling's functions. Unreachable gates get ``∅``."""
    sets = sets if sets is not None else gate_sets(c)
    order = c.reachable()
    comp: dict[int, set[Assignment]] = {g: set() for g in range(len(c.gates))}
    comp[c.sink] = {EPSILON}
    full = frozenset(c.variables)
    var = c.var_sets()
    for g in reversed(order):
        gate = c.gates[g]
        if gate.kind == INPUT or not comp[g]:
            continue
        if gate.kind == UNION:
            for ch in gate.children:
                if var[ch] == full:
                    comp[ch] = {EPSILON}
                else:
                    comp[ch] |= comp[g]
        else:
            for i, ch in enumerate(gate.children):
                sib: set[Assignment] = {EPSILON}
                for j, other in enumerate(gate.children):
                    if j != i:
                        sib = {s | t for s in sib for t in sets[other]}
                comp[ch] |= {p | s for p in comp[g] for s in sib}
    return {g: frozenset(v) for g, v in comp.items()}


def completion_set(c: Circuit, g: int) -> FunctionSet:
    var = c.var_sets()
    dom = frozenset(c.variables) - var.get(g, frozenset())
    return FunctionSet(dom, completion_sets(c)[g])


def _check_weights(c: Circuit, f: WeightFunction) -> Fraction:
    total = weight(f, c.variables)
    for v in c.variables:
        if 3 * Fraction(f.get(v, 0)) > 2 * total:
            raise WeightViolation(f"f({{{v}}}) = {f.get(v, 0)} exceeds 2/3 of f(A) = {total}")
    return total


def find_f_balanced_gate(c: Circuit, f: WeightFunction) -> int:
    """Walk down from the sink until ``f(var(g)) <= 2f(A)/3``; products go to the heavier child."""
    total = _check_weights(c, f)
    var = c.var_sets()
    g = c.sink
    while 3 * weight(f, var[g]) > 2 * total:
        gate = c.gates[g]
        if gate.kind == UNION:
            g = gate.children[0]
        else:
            g = max(gate.children, key=lambda ch: (weight(f, var[ch]), -gate.children.index(ch)))
    return g


@dataclass(frozen=True)
class Rectangle:
    gate: int
    left: FunctionSet
    right: FunctionSet

    @property
    def size(self) -> int:
        return len(self.left) * len(self.right)

    @property
    def partition(self) -> tuple[frozenset[str], frozenset[str]]:
        return self.left.domain, self.right.domain

    def realized(self) -> set[Assignment]:
        return {l | r for l in self.left for r in self.right}


@dataclass
class RectangleCover:
    rectangles: list[Rectangle]
    target: FunctionSet
    weights: dict[str, Fraction] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rectangles)

    def union(self) -> set[Assignment]:
        out: set[Assignment] = set()
        for r in self.rectangles:
            out |= r.realized()
        return out

    def report(self) -> dict:
        total = weight(self.weights, self.target.domain)
        rows = []
        for r in self.rectangles:
            y, z = r.partition
            margin = min(weight(self.weights, y), weight(self.weights, z)) - total / 3
            rows.append(
                {
                    "gate": r.gate,
                    "left_vars": len(y),
                    "right_vars": len(z),
                    "left_size": len(r.left),
                    "right_size": len(r.right),
                    "size": r.size,
                    "balance_margin": f"{margin.numerator}/{margin.denominator}",
                }
            )
        return {"target_size": len(self.target), "cover_size": len(self.rectangles), "rectangles": rows}


def extract_cover(c: Circuit | EmptyResult, f: WeightFunction, budget: int = DEFAULT_EVAL_BUDGET) -> RectangleCover:
    """One rectangle ``S(g) x comp(g)`` per f-balanced gate with a nonempty completion set."""
    if isinstance(c, EmptyResult):
        return RectangleCover([], FunctionSet(frozenset(), frozenset()), dict(f))
    rep = validate_circuit(c)
    if not rep.ok:
        raise ValueError("invalid circuit: " + "; ".join(rep.violations))
    total = _check_weights(c, f)
    sets = gate_sets(c, budget)
    comp = completion_sets(c, sets)
    var = rep.info["var"]
    full = frozenset(c.variables)
    rects = []
    for g in c.reachable():
        if comp[g] and is_balanced(f, var[g], total):
            rects.append(Rectangle(g, FunctionSet(var[g], sets[g]), FunctionSet(full - var[g], comp[g])))
    return RectangleCover(rects, FunctionSet(full, sets[c.sink]), dict(f))


def greedy_matching(g: Hypergraph, part: tuple[Iterable[str], Iterable[str]]) -> list[tuple[str, str]]:
    """Scan edges in order; keep each X-Y edge whose endpoints are still free."""
    x, y = set(part[0]), set(part[1])
    used: set[str] = set()
    out = []
    for e in g.edges:
        if len(e) != 2:
            continue
        u, v = sorted(e, key=g.vertices.index)
        if u in y and v in x:
            u, v = v, u
        if u in x and v in y and u not in used and v not in used:
            out.append((u, v))
            used.update((u, v))
    return out


def analytic_bound(t: int, k: int, n: int) -> mpmath.mpf:
    q = k // 3
    with mpmath.workdps(60):
        return mpmath.mpf(n) ** (t - q) * (3 * mpmath.log(n, 2)) ** q


def within_bound(size: int, t: int, k: int, n: int) -> bool:
    """``size <= n^(t - q) * (3 log2 n)^q`` with ``q = floor(k/3)``, decided exactly when q = 0."""
    q = k // 3
    if q == 0:
        return size <= n**t
    with mpmath.workdps(80):
        lhs = mpmath.mpf(size)
        rhs = mpmath.mpf(n) ** (t - q) * (3 * mpmath.log(n, 2)) ** q
        return bool(lhs <= rhs * (1 + mpmath.mpf(10) ** -60))


@dataclass
class BoundReport:
    bound: float
    checked: int
    violations: list[int]
    max_rectangle: int
    hom_count: int
    certificate_measured: Fraction | None
    certificate_analytic: float

    @property
    def ok(self) -> bool:
        return not self.violations


def rectangle_bound_check(cover: RectangleCover, w: Iterable[str], k: int, n: int, t: int | None = None) -> BoundReport:
    """Check the W-balanced rectangles of ``cover`` against the analytic bound.

    ``t`` defaults to the number of query variables. The measured certificate is
    ``|Hom| / (largest W-balanced rectangle)``, a lower bound on the size of any
    W-balanced cover.
    """
    t = len(cover.target.domain) if t is None else t
    wset = frozenset(w)
    fw = indicator_weights(wset, cover.target.domain)
    total = Fraction(len(wset))
    checked, bad, biggest = 0, [], 0
    for r in cover.rectangles:
        y, z = r.partition
        if not (is_balanced(fw, y, total) and is_balanced(fw, z, total)):
            continue
        checked += 1
        biggest = max(biggest, r.size)
        if not within_bound(r.size, t, k, n):
            bad.append(r.gate)
    homs = len(cover.target)
    bound = analytic_bound(t, k, n)
    return BoundReport(
        bound=float(bound),
        checked=checked,
        violations=bad,
        max_rectangle=biggest,
        hom_count=homs,
        certificate_measured=Fraction(homs, biggest) if biggest else None,
        certificate_analytic=float(mpmath.mpf(homs) / bound),
    )


def w_balanced_partitions(vertices: Sequence[str], w: Iterable[str]) -> Iterable[tuple[frozenset[str], frozenset[str]]]:
    """All ordered partitions ``(X, Y)`` with ``min(|X ∩ W|, |Y ∩ W|) >= |W|/3``."""
    wset = frozenset(w)
    vs = list(vertices)
    for mask in range(1 << len(vs)):
        x = frozenset(v for i, v in enumerate(vs) if mask >> i & 1)
        y = frozenset(vs) - x
        if 3 * len(x & wset) >= len(wset) and 3 * len(y & wset) >= len(wset):
            yield x, y

