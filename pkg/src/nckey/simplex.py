"""Exact rational simplex for small dense LPs.

Solves  maximize c.x  subject to  A x <= b,  x >= 0  with b >= 0, entirely in
fractions.Fraction.  The nonnegative right-hand side makes the all-slack basis
feasible, so no phase-one is needed; Bland's rule guarantees termination under
degeneracy.  Problem sizes here are tiny (tens of rows), so a dense tableau is
the simplest correct tool.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class SimplexResult:
    x: tuple[Fraction, ...]
    value: Fraction
    dual: tuple[Fraction, ...]  # one multiplier per constraint row


def maximize(c, a_rows, b) -> SimplexResult:
    c = [Fraction(v) for v in c]
    a_rows = [[Fraction(v) for v in row] for row in a_rows]
    b = [Fraction(v) for v in b]
    n = len(c)
    m = len(a_rows)
    if any(len(row) != n for row in a_rows):
        raise ValueError("constraint rows must match objective length")
    if any(v < 0 for v in b):
        raise ValueError("this solver requires b >= 0")

    # Tableau: columns = n structural + m slack + rhs; row 0 is the objective.
    width = n + m + 1
    tab = [[Fraction(0)] * width for _ in range(m + 1)]
    for j in range(n):
        tab[0][j] = -c[j]
    for i, row in enumerate(a_rows):
        tab[i + 1][: n] = row
        tab[i + 1][n + i] = Fraction(1)
        tab[i + 1][-1] = b[i]
    basis = [n + i for i in range(m)]

    while True:
        # Bland: entering = lowest-index column with negative reduced cost.
        enter = next((j for j in range(n + m) if tab[0][j] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(1, m + 1):
            coef = tab[i][enter]
            if coef > 0:
                ratio = tab[i][-1] / coef
                if best is None or ratio < best or (ratio == best and basis[i - 1] < basis[leave - 1]):
                    best = ratio
                    leave = i
        if leave is None:
            raise ValueError("LP is unbounded")
        piv = tab[leave][enter]
        tab[leave] = [v / piv for v in tab[leave]]
        for i in range(m + 1):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [vi - f * vl for vi, vl in zip(tab[i], tab[leave])]
        basis[leave - 1] = enter

    x = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = tab[i + 1][-1]
    dual = tuple(tab[0][n + i] for i in range(m))
    return SimplexResult(tuple(x), tab[0][-1], dual)
