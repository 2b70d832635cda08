"""Dense two-phase simplex over ``fractions.Fraction`` with Bland's rule.

Small and slow on purpose: every LP in this package has at most a few hundred
columns, and the values have to be exact for the duality checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import Infeasible

Number = int | Fraction


class Unbounded(Exception):
    pass


@dataclass
class LPResult:
    value: Fraction
    x: list[Fraction]


def _pivot(rows: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    row = rows[r]
    p = row[c]
    if p != 1:
        rows[r] = row = [v / p for v in row]
    for i, other in enumerate(rows):
        if i != r and other[c] != 0:
            f = other[c]
            rows[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _optimize(rows: list[list[Fraction]], basis: list[int], cost: list[Fraction], allowed: int) -> None:
    """Maximize ``cost`` over the current tableau; columns >= ``allowed`` never enter."""
    while True:
        cb = [cost[b] for b in basis]
        entering = -1
        for j in range(allowed):
            if j in basis:
                continue
            d = cost[j] - sum((cb[i] * rows[i][j] for i in range(len(rows)) if rows[i][j] != 0), Fraction(0))
            if d > 0:
                entering = j
                break
        if entering < 0:
            return
        best = None
        for i, row in enumerate(rows):
            a = row[entering]
            if a > 0:
                ratio = row[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise Unbounded("objective unbounded")
        _pivot(rows, basis, best[1], entering)


def solve_lp(
    c: Sequence[Number],
    a_ub: Sequence[Sequence[Number]] = (),
    b_ub: Sequence[Number] = (),
    a_eq: Sequence[Sequence[Number]] = (),
    b_eq: Sequence[Number] = (),
    maximize: bool = True,
) -> LPResult:
    """Optimize ``c.x`` subject to ``a_ub x <= b_ub``, ``a_eq x = b_eq``, ``x >= 0``.

    Raises :class:`~homcirc.errors.Infeasible` or :class:`Unbounded`.
    """
    n = len(c)
    cons: list[tuple[list[Fraction], str, Fraction]] = []
    for row, b in zip(a_ub, b_ub):
        cons.append(([Fraction(v) for v in row], "<=", Fraction(b)))
    for row, b in zip(a_eq, b_eq):
        cons.append(([Fraction(v) for v in row], "=", Fraction(b)))
    for i, (row, sense, b) in enumerate(cons):
        if b < 0:
            flipped = {"<=": ">=", "=": "="}[sense]
            cons[i] = ([-v for v in row], flipped, -b)

    n_slack = sum(1 for _, s, _ in cons if s != "=")
    n_art = sum(1 for _, s, _ in cons if s != "<=")
    width = n + n_slack + n_art
    rows: list[list[Fraction]] = []
    basis: list[int] = []
    si, ai = n, n + n_slack
    art_cols = []
    for row, sense, b in cons:
        full = row + [Fraction(0)] * (n_slack + n_art) + [b]
        if sense == "<=":
            full[si] = Fraction(1)
            basis.append(si)
            si += 1
        else:
            if sense == ">=":
                full[si] = Fraction(-1)
                si += 1
            full[ai] = Fraction(1)
            basis.append(ai)
            art_cols.append(ai)
            ai += 1
        rows.append(full)

    if art_cols:
        phase1 = [Fraction(0)] * width
        for j in art_cols:
            phase1[j] = Fraction(-1)
        _optimize(rows, basis, phase1, width)
        infeas = sum((rows[i][-1] for i, b in enumerate(basis) if b in art_cols), Fraction(0))
        if infeas != 0:
            raise Infeasible("linear program has no feasible point")
        # drive zero-level artificials out of the basis; drop redundant rows
        i = 0
        while i < len(rows):
            if basis[i] in art_cols:
                col = next((j for j in range(n + n_slack) if rows[i][j] != 0), None)
                if col is None:
                    del rows[i]
                    del basis[i]
                    continue
                _pivot(rows, basis, i, col)
            i += 1

    sign = 1 if maximize else -1
    cost = [sign * Fraction(v) for v in c] + [Fraction(0)] * (n_slack + n_art)
    _optimize(rows, basis, cost, n + n_slack)
    x = [Fraction(0)] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = rows[i][-1]
    value = sum((Fraction(ci) * xi for ci, xi in zip(c, x)), Fraction(0))
    return LPResult(value, x)
