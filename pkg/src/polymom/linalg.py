"""Exact dense linear algebra over rationals.

Rank and echelon forms use fraction-free (Bareiss) elimination on a
denominator-cleared integer copy, so intermediate entries stay integral;
kernel vectors and solves are then recovered over Fraction. Pivoting is
deterministic: the first row with a nonzero entry wins.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from .errors import InputError


def _coerce(x) -> Fraction:
    # Fraction(float) is the exact binary value, so this stays lossless.
    return x if isinstance(x, Fraction) else Fraction(x)


def _to_integer_matrix(rows):
    """Scale a rational matrix by the lcm of all denominators."""
    rows = [[_coerce(x) for x in row] for row in rows]
    denom = 1
    for row in rows:
        for x in row:
            denom = lcm(denom, x.denominator)
    return [[int(x * denom) for x in row] for row in rows]


class Echelon:
    """Result of fraction-free elimination: integer echelon rows plus the
    pivot column of each."""

    __slots__ = ("rows", "pivots", "ncols")

    def __init__(self, rows, pivots, ncols):
        self.rows = rows
        self.pivots = pivots
        self.ncols = ncols

    @property
    def rank(self):
        return len(self.pivots)


def bareiss_echelon(matrix) -> Echelon:
    """Fraction-free Gaussian elimination; exact over int/Fraction entries."""
    rows = _to_integer_matrix(matrix)
    nrows = len(rows)
    ncols = len(rows[0]) if nrows else 0
    pivots = []
    r = 0
    prev = 1
    for col in range(ncols):
        pivot_row = None
        for i in range(r, nrows):
            if rows[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        if pivot_row != r:
            rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        piv = rows[r][col]
        for i in range(r + 1, nrows):
            fac = rows[i][col]
            for j in range(col, ncols):
                rows[i][j] = (piv * rows[i][j] - fac * rows[r][j]) // prev
        prev = piv
        pivots.append(col)
        r += 1
        if r == nrows:
            break
    return Echelon([row for row in rows[: len(pivots)]], pivots, ncols)


def rank_exact(matrix) -> int:
    return bareiss_echelon(matrix).rank


def kernel_vector_for_column(ech: Echelon, free_col: int):
    """Kernel vector with entry 1 at ``free_col`` supported on columns
    <= free_col (plus earlier pivot columns)."""
    if free_col in ech.pivots:
        raise InputError(f"column {free_col} is a pivot column")
    v = [Fraction(0)] * ech.ncols
    v[free_col] = Fraction(1)
    for i in range(len(ech.pivots) - 1, -1, -1):
        pc = ech.pivots[i]
        if pc > free_col:
            continue
        row = ech.rows[i]
        s = sum((Fraction(row[j]) * v[j] for j in range(pc + 1, free_col + 1)), Fraction(0))
        v[pc] = -s / row[pc]
    return v


def kernel_basis(matrix):
    """Exact kernel basis, one vector per free column."""
    ech = bareiss_echelon(matrix)
    piv = set(ech.pivots)
    return [
        kernel_vector_for_column(ech, col)
        for col in range(ech.ncols)
        if col not in piv
    ]


def solve_exact(matrix, rhs):
    """Solve a square nonsingular rational system exactly."""
    n = len(matrix)
    a = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot_row = None
        for i in range(col, n):
            if a[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            raise InputError("singular matrix")
        if pivot_row != col:
            a[col], a[pivot_row] = a[pivot_row], a[col]
        piv = a[col][col]
        for i in range(col + 1, n):
            if a[i][col] == 0:
                continue
            fac = a[i][col] / piv
            for j in range(col, n + 1):
                a[i][j] -= fac * a[col][j]
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = a[i][n] - sum(a[i][j] * x[j] for j in range(i + 1, n))
        x[i] = s / a[i][i]
    return x


def det_exact(matrix):
    """Exact determinant of a square rational matrix."""
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    coerced = [[_coerce(x) for x in row] for row in matrix]
    denom = 1
    for row in coerced:
        for x in row:
            denom = lcm(denom, x.denominator)
    rows = [[int(x * denom) for x in row] for row in coerced]
    sign = 1
    prev = 1
    for col in range(n - 1):
        pivot_row = None
        for i in range(col, n):
            if rows[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            return Fraction(0)
        if pivot_row != col:
            rows[col], rows[pivot_row] = rows[pivot_row], rows[col]
            sign = -sign
        piv = rows[col][col]
        for i in range(col + 1, n):
            fac = rows[i][col]
            for j in range(col, n):
                rows[i][j] = (piv * rows[i][j] - fac * rows[col][j]) // prev
        prev = piv
    return Fraction(sign * rows[n - 1][n - 1], denom**n)
