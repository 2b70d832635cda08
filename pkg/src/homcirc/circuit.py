"""{∪,×}-circuits over a set of variables, their semantics, and the line-based file format.

Gates are stored in a tuple indexed by dense integer ids. Internal gates carry a
tuple of children, which lets the same type describe both proper fan-in-2
circuits and the wide-gate DAGs accepted by :func:`to_fanin2`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import BudgetExceeded, MissingDomain, NotDeterministic, ValidationReport
from .relcore import Assignment

INPUT, UNION, TIMES = "input", "union", "times"
DEFAULT_EVAL_BUDGET = 10**7

VTree = str | tuple  # a variable name or a pair of sub-trees


@dataclass(frozen=True)
class Gate:
    kind: str
    var: str | None = None
    value: str | None = None
    children: tuple[int, ...] = ()

    @staticmethod
    def input(var: str, value: str) -> "Gate":
        return Gate(INPUT, var, value)

    @staticmethod
    def union(*children: int) -> "Gate":
        return Gate(UNION, children=tuple(children))

    @staticmethod
    def times(*children: int) -> "Gate":
        return Gate(TIMES, children=tuple(children))


@dataclass(frozen=True)
class Circuit:
    gates: tuple[Gate, ...]
    sink: int
    variables: tuple[str, ...]
    vtree: VTree | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def size(self) -> int:
        """Number of gates."""
        return len(self.gates)

    @property
    def wires(self) -> int:
        return sum(len(g.children) for g in self.gates)

    @property
    def domain(self) -> dict[str, list[str]]:
        dom: dict[str, list[str]] = {x: [] for x in self.variables}
        for g in self.gates:
            if g.kind == INPUT and g.value not in dom.setdefault(g.var, []):
                dom[g.var].append(g.value)
        return dom

    def reachable(self) -> list[int]:
        """Gate ids reachable from the sink, children before parents."""
        seen: set[int] = set()
        out: list[int] = []
        stack = [(self.sink, False)]
        while stack:
            g, done = stack.pop()
            if done:
                out.append(g)
                continue
            if g in seen:
                continue
            seen.add(g)
            stack.append((g, True))
            for c in reversed(self.gates[g].children):
                if c not in seen:
                    stack.append((c, False))
        return out

    def var_sets(self) -> dict[int, frozenset[str]]:
        out: dict[int, frozenset[str]] = {}
        for g in self.reachable():
            gate = self.gates[g]
            if gate.kind == INPUT:
                out[g] = frozenset((gate.var,))
            else:
                out[g] = frozenset().union(*(out[c] for c in gate.children))
        return out


class EmptyResult:
    """Stands for an empty set of functions, which no circuit can compute."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EMPTY"


EMPTY = EmptyResult()


@dataclass(frozen=True)
class FunctionSet:
    domain: frozenset[str]
    functions: frozenset[Assignment]

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self) -> Iterator[Assignment]:
        return iter(self.functions)

    def __contains__(self, f: object) -> bool:
        return f in self.functions

    @classmethod
    def of(cls, domain: Iterable[str], functions: Iterable[Mapping[str, str] | Assignment]) -> "FunctionSet":
        fs = frozenset(f if isinstance(f, frozenset) else frozenset(f.items()) for f in functions)
        return cls(frozenset(domain), fs)


class Builder:
    """Incremental construction with hash-consing of structurally equal gates."""

    def __init__(self) -> None:
        self.gates: list[Gate] = []
        self._ids: dict[Gate, int] = {}

    def add(self, gate: Gate) -> int:
        gid = self._ids.get(gate)
        if gid is None:
            gid = len(self.gates)
            self.gates.append(gate)
            self._ids[gate] = gid
        return gid

    def input(self, var: str, value: str) -> int:
        return self.add(Gate.input(var, value))

    def union(self, a: int, b: int) -> int:
        return self.add(Gate.union(a, b))

    def times(self, a: int, b: int) -> int:
        return self.add(Gate.times(a, b))

    def chain(self, kind: str, ids: Sequence[int]) -> int:
        """Left-deep binary chain."""
        if not ids:
            raise ValueError("empty chain")
        acc = ids[0]
        for g in ids[1:]:
            acc = self.add(Gate(kind, children=(acc, g)))
        return acc

    def balanced(self, kind: str, ids: Sequence[int]) -> int:
        if not ids:
            raise ValueError("empty chain")
        layer = list(ids)
        while len(layer) > 1:
            nxt = [self.add(Gate(kind, children=(layer[i], layer[i + 1]))) for i in range(0, len(layer) - 1, 2)]
            if len(layer) % 2:
                nxt.append(layer[-1])
            layer = nxt
        return layer[0]

    def finish(self, sink: int, variables: Iterable[str], vtree: VTree | None = None) -> Circuit:
        return compact(Circuit(tuple(self.gates), sink, tuple(variables), vtree))


def compact(c: Circuit) -> Circuit:
    """Drop gates not reachable from the sink and renumber densely in topological order."""
    order = c.reachable()
    new_id = {g: i for i, g in enumerate(order)}
    gates = []
    for g in order:
        gate = c.gates[g]
        gates.append(Gate(gate.kind, gate.var, gate.value, tuple(new_id[x] for x in gate.children)))
    return Circuit(tuple(gates), new_id[c.sink], c.variables, c.vtree)


# -- validation ----------------------------------------------------------------

def _find_cycle(c: Circuit) -> bool:
    state = [0] * len(c.gates)
    for root in range(len(c.gates)):
        if state[root]:
            continue
        stack = [(root, iter(c.gates[root].children))]
        state[root] = 1
        while stack:
            g, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[g] = 2
                stack.pop()
                continue
            if not 0 <= nxt < len(c.gates):
                continue
            if state[nxt] == 1:
                return True
            if state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(c.gates[nxt].children)))
    return False


def validate_circuit(c: Circuit, fanin2: bool = True) -> ValidationReport:
    """Checks acyclicity, unique sink, fan-in, decomposability, smoothness and ``var(C) = X``.

    ``info['var']`` holds the variable set of every reachable gate when the
    structural checks pass.
    """
    rep = ValidationReport()
    n = len(c.gates)
    if not 0 <= c.sink < n:
        rep.add(f"sink g{c.sink} does not exist")
        return rep
    for i, g in enumerate(c.gates):
        if g.kind == INPUT:
            if g.children or g.var is None or g.value is None:
                rep.add(f"g{i}: malformed input gate")
        elif g.kind in (UNION, TIMES):
            if fanin2 and len(g.children) != 2:
                rep.add(f"g{i}: fan-in {len(g.children)} != 2")
            elif len(g.children) < 1:
                rep.add(f"g{i}: no children")
            for ch in g.children:
                if not 0 <= ch < n:
                    rep.add(f"g{i}: child g{ch} does not exist")
        else:
            rep.add(f"g{i}: unknown gate kind {g.kind!r}")
    if rep.violations:
        return rep
    if _find_cycle(c):
        rep.add("circuit has a cycle")
        return rep
    has_parent = {ch for g in c.gates for ch in g.children}
    sinks = [i for i in range(n) if i not in has_parent]
    if sinks != [c.sink]:
        rep.add(f"gates without parents are {['g%d' % s for s in sinks]}, expected only g{c.sink}")
    var: dict[int, frozenset[str]] = {}
    for i in _topo_all(c):
        g = c.gates[i]
        if g.kind == INPUT:
            var[i] = frozenset((g.var,))
            continue
        kids = [var[ch] for ch in g.children]
        var[i] = frozenset().union(*kids)
        if g.kind == TIMES:
            total = sum(len(k) for k in kids)
            if total != len(var[i]):
                rep.add(f"g{i}: product children share variables (not decomposable)")
        elif any(k != kids[0] for k in kids):
            rep.add(f"g{i}: union children have different variables (not smooth)")
    if var[c.sink] != frozenset(c.variables):
        rep.add(f"var(sink) = {sorted(var[c.sink])} differs from X = {sorted(c.variables)}")
    if c.vtree is not None and not respects_vtree(c, c.vtree, var):
        rep.add("circuit does not respect its v-tree annotation")
    rep.info["var"] = var
    return rep


def _topo_all(c: Circuit) -> list[int]:
    order: list[int] = []
    seen: set[int] = set()
    for root in range(len(c.gates)):
        if root in seen:
            continue
        stack = [(root, False)]
        while stack:
            g, done = stack.pop()
            if done:
                order.append(g)
                continue
            if g in seen:
                continue
            seen.add(g)
            stack.append((g, True))
            stack.extend((ch, False) for ch in c.gates[g].children if ch not in seen)
    return order


def vtree_vars(vt: VTree) -> frozenset[str]:
    if isinstance(vt, str):
        return frozenset((vt,))
    return frozenset().union(*(vtree_vars(s) for s in vt))


def respects_vtree(c: Circuit, vt: VTree, var: Mapping[int, frozenset[str]] | None = None) -> bool:
    """Every binary product splits its variables along some node of ``vt``."""
    var = var if var is not None else c.var_sets()
    splits: list[tuple[frozenset[str], frozenset[str]]] = []

    def walk(t: VTree) -> frozenset[str]:
        if isinstance(t, str):
            return frozenset((t,))
        left, right = walk(t[0]), walk(t[1])
        splits.append((left, right))
        return left | right

    walk(vt)
    for i, g in enumerate(c.gates):
        if g.kind != TIMES or i not in var:
            continue
        a, b = (var[ch] for ch in g.children)
        if not any((a <= l and b <= r) or (a <= r and b <= l) for l, r in splits):
            return False
    return True


# -- semantics ---------------------------------------------------------------

def eval_circuit(c: Circuit | EmptyResult, budget: int = DEFAULT_EVAL_BUDGET) -> FunctionSet:
    if isinstance(c, EmptyResult):
        return FunctionSet(frozenset(), frozenset())
    return FunctionSet(frozenset(c.variables), gate_sets(c, budget)[c.sink])


def gate_sets(c: Circuit, budget: int = DEFAULT_EVAL_BUDGET) -> dict[int, frozenset[Assignment]]:
    """``S(g)`` for every reachable gate."""
    memo: dict[int, frozenset[Assignment]] = {}
    spent = 0
    for i in c.reachable():
        g = c.gates[i]
        if g.kind == INPUT:
            memo[i] = frozenset((frozenset(((g.var, g.value),)),))
        elif g.kind == UNION:
            memo[i] = frozenset().union(*(memo[ch] for ch in g.children))
        else:
            acc = {frozenset()}
            for ch in g.children:
                acc = {f | h for f in acc for h in memo[ch]}
                spent += len(acc)
                if spent > budget:
                    raise BudgetExceeded(f"evaluation exceeded {budget} functions")
            memo[i] = frozenset(acc)
        spent += len(memo[i])
        if spent > budget:
            raise BudgetExceeded(f"evaluation exceeded {budget} functions")
    return memo


def count_deterministic(c: Circuit | EmptyResult, check: bool = False) -> int:
    """Bottom-up count; exact when every union is disjoint."""
    if isinstance(c, EmptyResult):
        return 0
    if check and not check_deterministic(c):
        raise NotDeterministic("some union gate has overlapping children")
    cnt: dict[int, int] = {}
    for i in c.reachable():
        g = c.gates[i]
        if g.kind == INPUT:
            cnt[i] = 1
        elif g.kind == UNION:
            cnt[i] = sum(cnt[ch] for ch in g.children)
        else:
            p = 1
            for ch in g.children:
                p *= cnt[ch]
            cnt[i] = p
    return cnt[c.sink]


def check_deterministic(c: Circuit | EmptyResult, budget: int = DEFAULT_EVAL_BUDGET) -> bool:
    if isinstance(c, EmptyResult):
        return True
    sets = gate_sets(c, budget)
    for i, s in sets.items():
        g = c.gates[i]
        if g.kind == UNION and sum(len(sets[ch]) for ch in g.children) != len(s):
            return False
    return True


# -- transformations ---------------------------------------------------------

def to_fanin2(c: Circuit) -> Circuit:
    """Replace wide gates by left-deep binary chains; single-child gates collapse to the child."""
    b = Builder()
    new: dict[int, int] = {}
    for i in c.reachable():
        g = c.gates[i]
        if g.kind == INPUT:
            new[i] = b.input(g.var, g.value)
        else:
            new[i] = b.chain(g.kind, [new[ch] for ch in g.children])
    return b.finish(new[c.sink], c.variables, c.vtree)


def smooth(c: Circuit, domains: Mapping[str, Sequence[str]]) -> Circuit:
    """Pad union children (and the sink) with unions over the missing variables' domains."""
    var = c.var_sets()
    b = Builder()
    pads: dict[str, int] = {}

    def pad_var(x: str) -> int:
        if x not in pads:
            dom = domains.get(x)
            if not dom:
                raise MissingDomain(f"no domain given for variable {x}")
            pads[x] = b.chain(UNION, [b.input(x, d) for d in dom])
        return pads[x]

    order = {x: i for i, x in enumerate(c.variables)}

    def pad(gid: int, have: frozenset[str], want: frozenset[str]) -> int:
        missing = sorted(want - have, key=lambda x: (order.get(x, len(order)), x))
        return b.chain(TIMES, [gid] + [pad_var(x) for x in missing]) if missing else gid

    new: dict[int, int] = {}
    for i in c.reachable():
        g = c.gates[i]
        if g.kind == INPUT:
            new[i] = b.input(g.var, g.value)
        elif g.kind == TIMES:
            new[i] = b.chain(TIMES, [new[ch] for ch in g.children])
        else:
            want = var[i]
            new[i] = b.chain(UNION, [pad(new[ch], var[ch], want) for ch in g.children])
    sink = pad(new[c.sink], var[c.sink], frozenset(c.variables))
    return b.finish(sink, c.variables)


def trivial_circuit(fs: FunctionSet, order: Sequence[str] | None = None) -> Circuit | EmptyResult:
    """List every function as a product of inputs; union them all."""
    if not fs.functions:
        return EMPTY
    if not fs.domain:
        raise ValueError("no circuit computes the empty function")
    xs = list(order) if order is not None else sorted(fs.domain)
    b = Builder()
    prods = []
    for f in sorted(fs.functions, key=lambda f: [dict(f)[x] for x in xs]):
        m = dict(f)
        prods.append(b.chain(TIMES, [b.input(x, m[x]) for x in xs]))
    return b.finish(b.chain(UNION, prods), xs)


# -- file format ---------------------------------------------------------------

def to_text(c: Circuit | EmptyResult) -> str:
    if isinstance(c, EmptyResult):
        return "EMPTY\n"
    lines = [f"vars {len(c.variables)}"]
    lines += [f"var {x}" for x in c.variables]
    for i, g in enumerate(c.gates):
        if g.kind == INPUT:
            lines.append(f"g{i} input {g.var} {g.value}")
        else:
            lines.append(f"g{i} {g.kind} " + " ".join(f"g{ch}" for ch in g.children))
    lines.append(f"output g{c.sink}")
    return "\n".join(lines) + "\n"


class CircuitFormatError(ValueError):
    pass


def from_text(text: str) -> Circuit | EmptyResult:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if lines == ["EMPTY"]:
        return EMPTY
    if not lines or not lines[0].startswith("vars "):
        raise CircuitFormatError("missing 'vars' header")
    nvars = int(lines[0].split()[1])
    variables = []
    names: dict[str, int] = {}
    raw: list[tuple[str, list[str]]] = []
    sink_name = None
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "var":
            variables.extend(parts[1:])
        elif parts[0] == "output":
            sink_name = parts[1]
        else:
            if parts[0] in names:
                raise CircuitFormatError(f"gate {parts[0]} defined twice")
            names[parts[0]] = len(raw)
            raw.append((parts[1], parts[2:]))
    if len(variables) != nvars:
        raise CircuitFormatError(f"header declares {nvars} variables, found {len(variables)}")
    if sink_name is None or sink_name not in names:
        raise CircuitFormatError("missing or unknown output gate")
    gates = []
    for kind, args in raw:
        if kind == INPUT:
            if len(args) != 2:
                raise CircuitFormatError(f"bad input gate arguments {args}")
            gates.append(Gate.input(args[0], args[1]))
        elif kind in (UNION, TIMES):
            try:
                gates.append(Gate(kind, children=tuple(names[a] for a in args)))
            except KeyError as e:
                raise CircuitFormatError(f"unknown gate {e.args[0]}") from None
        else:
            raise CircuitFormatError(f"unknown gate kind {kind!r}")
    c = Circuit(tuple(gates), names[sink_name], tuple(variables))
    return c


def load_circuit(path: str | Path) -> Circuit | EmptyResult:
    return from_text(Path(path).read_text())


def dump_circuit(c: Circuit | EmptyResult, path: str | Path) -> None:
    Path(path).write_text(to_text(c))
