"""Compile ``(A, B, tree decomposition)`` into a deterministic circuit for Hom(A, B).

Each bag is materialized by a small generic join over the atoms of ``A`` whose
scope lies inside the bag, the bag relations are made globally consistent by
two semijoin passes, and the circuit is then read off the rooted tree: every
variable is placed at the topmost bag containing it.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .circuit import EMPTY, TIMES, UNION, Builder, Circuit, EmptyResult, VTree
from .errors import BudgetExceeded, DisconnectedQuery, Infeasible
from .relcore import DEFAULT_NODE_BUDGET, Structure, hypergraph_of, is_connected
from .widths import TreeDecomposition, fhtw_of_td, validate_td

COVER_SEARCH_CAP = 12


@dataclass
class BagRelation:
    node: str
    variables: tuple[str, ...]
    tuples: list[tuple[str, ...]]
    cover_bound: int = 0
    uncovered: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.tuples)


def _bag_atoms(a: Structure, bag: frozenset[str]) -> list[tuple[str, tuple[str, ...]]]:
    return [(name, t) for name, t in a.atoms() if set(t) <= bag]


def _integral_cover_bound(a: Structure, b: Structure, bag_vars: Sequence[str], atoms) -> tuple[int, tuple[str, ...]]:
    """Smallest product of relation sizes over a set of in-bag atoms covering the bag.

    Variables no in-bag atom mentions contribute a factor ``|B|`` each and are
    returned separately.
    """
    covered = set().union(*(set(t) for _, t in atoms)) if atoms else set()
    uncovered = tuple(x for x in bag_vars if x not in covered)
    free = len(b.universe) ** len(uncovered)
    if not atoms:
        return free, uncovered
    sizes = [len(b.relation_sets.get(name, ())) for name, _ in atoms]
    best = math.prod(sizes)
    if len(atoms) <= COVER_SEARCH_CAP:
        for r in range(1, len(atoms) + 1):
            for pick in combinations(range(len(atoms)), r):
                if set().union(*(set(atoms[i][1]) for i in pick)) >= covered:
                    best = min(best, math.prod(sizes[i] for i in pick))
    return best * free, uncovered


def _join(b: Structure, bag_vars: Sequence[str], atoms, budget: int) -> list[tuple[str, ...]]:
    """Generic join: per variable, intersect the candidate values allowed by every atom."""
    pos = {x: i for i, x in enumerate(bag_vars)}
    # per atom and variable: index from values of the atom's earlier variables to allowed values
    plans: dict[str, list[tuple[tuple[int, ...], dict]]] = {x: [] for x in bag_vars}
    for name, t in atoms:
        first_at: dict[str, int] = {}
        for i, x in enumerate(t):
            first_at.setdefault(x, i)
        rows = [s for s in b.tuples(name) if all(s[i] == s[first_at[x]] for i, x in enumerate(t))]
        avars = sorted(first_at, key=pos.__getitem__)
        for j, x in enumerate(avars):
            prev = avars[:j]
            idx: dict[tuple[str, ...], set[str]] = {}
            for s in rows:
                idx.setdefault(tuple(s[first_at[p]] for p in prev), set()).add(s[first_at[x]])
            plans[x].append((tuple(pos[p] for p in prev), idx))
    out: list[tuple[str, ...]] = []
    cur: list[str] = []
    nodes = 0
    rank = b.position

    def rec(i: int) -> None:
        nonlocal nodes
        if i == len(bag_vars):
            out.append(tuple(cur))
            return
        x = bag_vars[i]
        cands: set[str] | None = None
        for prev, idx in plans[x]:
            allowed = idx.get(tuple(cur[p] for p in prev), set())
            cands = set(allowed) if cands is None else cands & allowed
            if not cands:
                return
        values = b.universe if cands is None else sorted(cands, key=rank.__getitem__)
        for v in values:
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded(f"bag join exceeded {budget} nodes")
            cur.append(v)
            rec(i + 1)
            cur.pop()

    rec(0)
    return out


def _check_inputs(a: Structure, td: TreeDecomposition) -> None:
    if not is_connected(a):
        raise DisconnectedQuery("query structure is not connected")
    rep = validate_td(hypergraph_of(a), td)
    if not rep.ok:
        raise ValueError("invalid tree decomposition: " + "; ".join(rep.violations))


def materialize_bags(
    a: Structure, b: Structure, td: TreeDecomposition, budget: int = DEFAULT_NODE_BUDGET
) -> list[BagRelation]:
    _check_inputs(a, td)
    out = []
    for node in td.nodes:
        bag = td.bags[node]
        xs = tuple(x for x in a.universe if x in bag)
        atoms = _bag_atoms(a, bag)
        bound, uncovered = _integral_cover_bound(a, b, xs, atoms)
        out.append(BagRelation(node, xs, _join(b, xs, atoms, budget), bound, uncovered))
    return out


def _rooted(td: TreeDecomposition) -> tuple[dict[str, str | None], list[str]]:
    """Parent map and BFS order from the first node."""
    adj = td.neighbors()
    root = td.nodes[0]
    parent: dict[str, str | None] = {root: None}
    order = [root]
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in parent:
                parent[w] = u
                order.append(w)
                queue.append(w)
    return parent, order


def _semijoin(left: BagRelation, right: BagRelation) -> BagRelation:
    shared = [x for x in left.variables if x in right.variables]
    lpos = [left.variables.index(x) for x in shared]
    rpos = [right.variables.index(x) for x in shared]
    keys = {tuple(t[i] for i in rpos) for t in right.tuples}
    kept = [t for t in left.tuples if tuple(t[i] for i in lpos) in keys]
    return BagRelation(left.node, left.variables, kept, left.cover_bound, left.uncovered)


def yannakakis_reduce(bags: Sequence[BagRelation], td: TreeDecomposition) -> list[BagRelation]:
    by_node = {r.node: r for r in bags}
    parent, order = _rooted(td)
    for node in reversed(order):
        p = parent[node]
        if p is not None:
            by_node[p] = _semijoin(by_node[p], by_node[node])
    for node in order:
        p = parent[node]
        if p is not None:
            by_node[node] = _semijoin(by_node[node], by_node[p])
    return [by_node[r.node] for r in bags]


@dataclass
class CompileResult:
    circuit: Circuit | EmptyResult
    bags: list[BagRelation]
    stats: dict = field(default_factory=dict)


def compile_with_stats(
    a: Structure, b: Structure, td: TreeDecomposition, budget: int = DEFAULT_NODE_BUDGET
) -> CompileResult:
    bags = yannakakis_reduce(materialize_bags(a, b, td, budget), td)
    rel = {r.node: r for r in bags}
    parent, order = _rooted(td)
    children: dict[str, list[str]] = {n: [] for n in td.nodes}
    for n in order[1:]:
        children[parent[n]].append(n)
    owned = {
        n: tuple(x for x in rel[n].variables if parent[n] is None or x not in td.bags[parent[n]])
        for n in td.nodes
    }
    subtree_vars: dict[str, frozenset[str]] = {}
    for n in reversed(order):
        subtree_vars[n] = frozenset(owned[n]).union(*(subtree_vars[c] for c in children[n]))

    bld = Builder()
    tuple_gate: dict[str, dict[tuple[str, ...], int | None]] = {}
    vtrees: dict[str, VTree | None] = {}
    union_memo: dict[tuple[str, tuple[str, ...]], int] = {}
    child_index: dict[str, dict[tuple[str, ...], list[tuple[str, ...]]]] = {}

    for n in reversed(order):
        r = rel[n]
        live = [c for c in children[n] if subtree_vars[c]]
        shared_pos = {}
        for c in live:
            cv = rel[c].variables
            shared = [x for x in cv if x in td.bags[n]]
            idx: dict[tuple[str, ...], list[tuple[str, ...]]] = {}
            cpos = [cv.index(x) for x in shared]
            for s in rel[c].tuples:
                idx.setdefault(tuple(s[i] for i in cpos), []).append(s)
            child_index[c] = idx
            shared_pos[c] = [r.variables.index(x) for x in shared]
        opos = [r.variables.index(x) for x in owned[n]]
        items: list[VTree] = list(owned[n]) + [vtrees[c] for c in live]
        vt: VTree | None = None
        for it in items:
            vt = it if vt is None else (vt, it)
        vtrees[n] = vt
        gates: dict[tuple[str, ...], int | None] = {}
        for t in r.tuples:
            factors = [bld.input(owned[n][k], t[i]) for k, i in enumerate(opos)]
            ok = True
            for c in live:
                key = tuple(t[i] for i in shared_pos[c])
                memo_key = (c, key)
                if memo_key not in union_memo:
                    members = [
                        g for s in child_index[c].get(key, []) if (g := tuple_gate[c].get(s)) is not None
                    ]
                    if not members:
                        ok = False
                        break
                    union_memo[memo_key] = bld.balanced(UNION, members)
                factors.append(union_memo[memo_key])
            if ok:
                gates[t] = bld.chain(TIMES, factors) if factors else None
        tuple_gate[n] = gates

    root = order[0]
    stats = {
        "bag_sizes": {r.node: len(r) for r in bags},
        "cover_bounds": {r.node: r.cover_bound for r in bags},
        "uncovered_vars": {r.node: list(r.uncovered) for r in bags if r.uncovered},
        "max_bag_tuples": max((len(r) for r in bags), default=0),
        "data_size": b.size,
    }
    try:
        fh = fhtw_of_td(hypergraph_of(a), td)
        stats["fhtw"] = fh
        stats["size_reference"] = b.size ** math.ceil(fh)
    except Infeasible:  # isolated vertices: no finite cover
        stats["fhtw"] = None
    roots = [g for g in tuple_gate[root].values() if g is not None]
    if not roots:
        stats["circuit_size"] = 0
        return CompileResult(EMPTY, bags, stats)
    circ = bld.finish(bld.balanced(UNION, roots), a.universe, vtrees[root])
    stats["circuit_size"] = circ.size
    return CompileResult(circ, bags, stats)


def compile_td(
    a: Structure, b: Structure, td: TreeDecomposition, budget: int = DEFAULT_NODE_BUDGET
) -> Circuit | EmptyResult:
    return compile_with_stats(a, b, td, budget).circuit


def fraction_str(x: Fraction | None) -> str | None:
    return None if x is None else f"{x.numerator}/{x.denominator}"
