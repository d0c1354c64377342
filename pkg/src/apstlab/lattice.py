"""Integer lattice helpers: kernels, Hermite normal form, saturation, LLL."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

from sympy import ZZ
from sympy.polys.matrices import DomainMatrix


def _echelon(rows: list[list[int]], ncols: int) -> int:
    """In-place unimodular row reduction of ``rows`` on their first ``ncols``
    columns.  Returns the number of pivot rows (they come first)."""
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        if r == nrows:
            break
        while True:
            nonzero = [i for i in range(r, nrows) if rows[i][c] != 0]
            if not nonzero:
                break
            p = min(nonzero, key=lambda i: abs(rows[i][c]))
            rows[r], rows[p] = rows[p], rows[r]
            done = True
            for i in range(r + 1, nrows):
                if rows[i][c]:
                    q = rows[i][c] // rows[r][c]
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[r])]
                    if rows[i][c]:
                        done = False
            if done:
                r += 1
                break
    return r


def integer_kernel(matrix: Sequence[Sequence], ncols: int) -> list[list[int]]:
    """Basis of {r in Z^ncols : matrix @ r = 0}; rational entries allowed.

    The basis spans the full (saturated) integer kernel because it is read off
    a unimodular transformation.
    """
    int_rows = []
    for row in matrix:
        den = lcm(*(Fraction(v).denominator for v in row)) if len(row) else 1
        int_rows.append([int(Fraction(v) * den) for v in row])
    m = len(int_rows)
    # rows of the transpose, augmented with the identity
    work = [[int_rows[i][j] for i in range(m)] + [int(j == k) for k in range(ncols)] for j in range(ncols)]
    rank = _echelon(work, m)
    return [row[m:] for row in work[rank:]]


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style HNF: echelon, positive pivots, entries above pivots reduced."""
    if not rows:
        return []
    ncols = len(rows[0])
    work = [list(map(int, r)) for r in rows]
    rank = _echelon(work, ncols)
    work = work[:rank]
    pivots = []
    for i, row in enumerate(work):
        c = next(j for j, v in enumerate(row) if v)
        if row[c] < 0:
            work[i] = row = [-v for v in row]
        pivots.append(c)
    for i, c in enumerate(pivots):
        for k in range(i):
            q = work[k][c] // work[i][c]
            if q:
                work[k] = [a - q * b for a, b in zip(work[k], work[i])]
    return work


def saturate(rows: Sequence[Sequence[int]], ncols: int) -> list[list[int]]:
    """Basis of (Q-span of rows) intersected with Z^ncols, in HNF."""
    if not rows:
        return []
    orthogonal = integer_kernel(rows, ncols)
    return hermite_normal_form(integer_kernel(orthogonal, ncols)) if orthogonal else hermite_normal_form(
        [[int(i == j) for j in range(ncols)] for i in range(ncols)]
    )


def lll_reduce(rows: Sequence[Sequence[int]], delta=Fraction(99, 100)) -> list[list[int]]:
    if not rows:
        return []
    dm = DomainMatrix([[ZZ(int(v)) for v in r] for r in rows], (len(rows), len(rows[0])), ZZ)
    return [[int(v) for v in r] for r in dm.lll(delta=delta).to_Matrix().tolist()]


def rank(rows: Sequence[Sequence[int]]) -> int:
    if not rows:
        return 0
    work = [list(map(int, r)) for r in rows]
    return _echelon(work, len(work[0]))
