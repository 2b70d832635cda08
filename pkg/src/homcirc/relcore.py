"""Relational structures, their hypergraphs, and a brute-force homomorphism oracle.

Elements are opaque string ids. The universe order given at construction time
fixes every iteration order in the library, so all outputs are reproducible.

An assignment is a ``frozenset`` of ``(variable, value)`` pairs; this keeps
assignments hashable and lets products of assignments be plain set unions.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import BudgetExceeded, PartialAssignment, ValidationReport

Assignment = frozenset  # frozenset[tuple[str, str]]

DEFAULT_NODE_BUDGET = 10**8


def assignment(mapping: Mapping[str, str]) -> Assignment:
    return frozenset(mapping.items())


def as_dict(f: Assignment) -> dict[str, str]:
    return dict(f)


@dataclass(frozen=True)
class Structure:
    """A finite relational structure.

    ``signature`` is an ordered tuple of ``(name, arity)`` pairs and
    ``relations`` maps each name to its ordered tuple list. Construction does
    not validate; use :func:`validate_structure`.
    """

    signature: tuple[tuple[str, int], ...]
    universe: tuple[str, ...]
    relations: Mapping[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        signature: Iterable[tuple[str, int]],
        universe: Iterable[str],
        relations: Mapping[str, Iterable[Iterable[str]]],
    ) -> "Structure":
        sig = tuple((str(n), int(a)) for n, a in signature)
        rels = {n: tuple(tuple(str(x) for x in t) for t in relations.get(n, ())) for n, _ in sig}
        for n in relations:
            if n not in rels:
                rels[n] = tuple(tuple(str(x) for x in t) for t in relations[n])
        return cls(sig, tuple(str(u) for u in universe), rels)

    @cached_property
    def arities(self) -> dict[str, int]:
        return dict(self.signature)

    def tuples(self, name: str) -> tuple[tuple[str, ...], ...]:
        return self.relations.get(name, ())

    @cached_property
    def relation_sets(self) -> dict[str, frozenset[tuple[str, ...]]]:
        return {n: frozenset(self.tuples(n)) for n, _ in self.signature}

    @property
    def size(self) -> int:
        """Number of tuples, counted without duplicates."""
        return sum(len(s) for s in self.relation_sets.values())

    def atoms(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        seen = set()
        for name, _ in self.signature:
            for t in self.tuples(name):
                if (name, t) not in seen:
                    seen.add((name, t))
                    yield name, t

    @cached_property
    def position(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.universe)}

    # -- serialization -------------------------------------------------
    def to_json(self) -> dict:
        return {
            "signature": [{"name": n, "arity": a} for n, a in self.signature],
            "universe": list(self.universe),
            "relations": {n: [list(t) for t in self.tuples(n)] for n, _ in self.signature},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Structure":
        sig = [(d["name"], d["arity"]) for d in obj["signature"]]
        return cls.build(sig, obj["universe"], obj.get("relations", {}))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Structure":
        return cls.from_json(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "Structure":
        return cls.loads(Path(path).read_text())

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


@dataclass(frozen=True)
class Hypergraph:
    vertices: tuple[str, ...]
    edges: tuple[frozenset[str], ...]

    @classmethod
    def build(cls, vertices: Iterable[str], edges: Iterable[Iterable[str]]) -> "Hypergraph":
        out: list[frozenset[str]] = []
        seen: set[frozenset[str]] = set()
        for e in edges:
            fe = frozenset(e)
            if fe not in seen:
                seen.add(fe)
                out.append(fe)
        return cls(tuple(vertices), tuple(out))

    @cached_property
    def adjacency(self) -> dict[str, frozenset[str]]:
        """Gaifman adjacency."""
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            for u in e:
                adj[u].update(e)
        return {v: frozenset(n - {v}) for v, n in adj.items()}

    @property
    def is_graph(self) -> bool:
        return all(len(e) == 2 for e in self.edges)

    def incident(self, v: str) -> list[frozenset[str]]:
        return [e for e in self.edges if v in e]


def validate_structure(s: Structure) -> ValidationReport:
    rep = ValidationReport()
    names = [n for n, _ in s.signature]
    if len(set(names)) != len(names):
        rep.add("duplicate relation names in signature")
    for n, a in s.signature:
        if a < 1:
            rep.add(f"relation {n}: arity {a} < 1")
    if len(set(s.universe)) != len(s.universe):
        rep.add("duplicate elements in universe")
    uni = set(s.universe)
    ar = s.arities
    for n, ts in s.relations.items():
        if n not in ar:
            rep.add(f"relation {n} not in signature")
            continue
        seen = set()
        for t in ts:
            if len(t) != ar[n]:
                rep.add(f"relation {n}: tuple {t} has arity {len(t)}, expected {ar[n]}")
            for x in t:
                if x not in uni:
                    rep.add(f"relation {n}: tuple {t} mentions unknown element {x!r}")
            if t in seen:
                rep.add(f"relation {n}: duplicate tuple {t}")
            seen.add(t)
    return rep


def hypergraph_of(s: Structure) -> Hypergraph:
    return Hypergraph.build(s.universe, (frozenset(t) for _, t in s.atoms()))


def gaifman_graph(s: Structure) -> Hypergraph:
    edges = []
    for _, t in s.atoms():
        distinct = list(dict.fromkeys(t))
        for i, u in enumerate(distinct):
            for v in distinct[i + 1:]:
                edges.append(frozenset((u, v)))
    return Hypergraph.build(s.universe, edges)


def components(h: Hypergraph, removed: Iterable[str] = ()) -> list[set[str]]:
    gone = set(removed)
    adj = h.adjacency
    seen: set[str] = set()
    out = []
    for v in h.vertices:
        if v in gone or v in seen:
            continue
        comp = {v}
        queue = deque([v])
        seen.add(v)
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in gone and w not in seen:
                    seen.add(w)
                    comp.add(w)
                    queue.append(w)
        out.append(comp)
    return out


def is_connected(s: Structure) -> bool:
    return len(components(gaifman_graph(s))) <= 1


def is_homomorphism(h: Mapping[str, str] | Assignment, a: Structure, b: Structure) -> bool:
    m = dict(h)
    missing = [x for x in a.universe if x not in m]
    if missing:
        raise PartialAssignment(f"assignment undefined on {missing}")
    bsets = b.relation_sets
    for name, t in a.atoms():
        if tuple(m[x] for x in t) not in bsets.get(name, frozenset()):
            return False
    return True


class _Search:
    """Backtracking over a's universe order with first-coordinate indexes."""

    def __init__(self, a: Structure, b: Structure, budget: int):
        self.a, self.b, self.budget = a, b, budget
        self.order = list(a.universe)
        self.atoms = list(a.atoms())
        self.index: dict[str, dict[str, list[tuple[str, ...]]]] = {}
        for name, _ in a.signature:
            idx: dict[str, list[tuple[str, ...]]] = {}
            for t in b.tuples(name):
                idx.setdefault(t[0], []).append(t)
            self.index[name] = idx
        # atoms become checkable once their first coordinate is assigned
        self.by_var: dict[str, list[tuple[str, tuple[str, ...]]]] = {x: [] for x in self.order}
        for name, t in self.atoms:
            for x in set(t):
                self.by_var[x].append((name, t))
        self.nodes = 0

    def _consistent(self, m: dict[str, str], name: str, t: tuple[str, ...]) -> bool:
        first = m.get(t[0])
        if first is None:
            return True
        for cand in self.index[name].get(first, ()):
            if all(m.get(x) is None or m[x] == c for x, c in zip(t, cand)):
                return True
        return False

    def run(self) -> Iterator[dict[str, str]]:
        m: dict[str, str] = {}
        values = self.b.universe

        def rec(i: int) -> Iterator[dict[str, str]]:
            if i == len(self.order):
                yield dict(m)
                return
            x = self.order[i]
            for v in values:
                self.nodes += 1
                if self.nodes > self.budget:
                    raise BudgetExceeded(f"homomorphism search exceeded {self.budget} nodes")
                m[x] = v
                if all(self._consistent(m, n, t) for n, t in self.by_var[x]):
                    yield from rec(i + 1)
                del m[x]

        yield from rec(0)


def iter_homs(a: Structure, b: Structure, budget: int = DEFAULT_NODE_BUDGET) -> Iterator[dict[str, str]]:
    for name, _ in a.signature:
        if a.tuples(name) and not b.tuples(name):
            return
    yield from _Search(a, b, budget).run()


def enumerate_homs(a: Structure, b: Structure, budget: int = DEFAULT_NODE_BUDGET) -> list[Assignment]:
    return [assignment(m) for m in iter_homs(a, b, budget)]


def count_homs(a: Structure, b: Structure, budget: int = DEFAULT_NODE_BUDGET) -> int:
    return sum(1 for _ in iter_homs(a, b, budget))


def reduce_structure(a: Structure, b: Structure, budget: int = DEFAULT_NODE_BUDGET) -> Structure:
    """Drop tuples of ``b`` that are not the image of an ``a``-tuple under some homomorphism."""
    used: dict[str, set[tuple[str, ...]]] = {n: set() for n, _ in b.signature}
    atoms = list(a.atoms())
    for m in iter_homs(a, b, budget):
        for name, t in atoms:
            used.setdefault(name, set()).add(tuple(m[x] for x in t))
    rels = {n: tuple(t for t in dict.fromkeys(b.tuples(n)) if t in used.get(n, ())) for n, _ in b.signature}
    return Structure(b.signature, b.universe, rels)
