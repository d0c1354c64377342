"""Independent reference computations used to check the library.

Nothing here imports apstlab's numerics: dense matrices go through
numpy/scipy, exact sums through sympy or mpmath directly.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import scipy.linalg


def dense_hamiltonian(couplings, fields) -> np.ndarray:
    j = np.array([float(v) for v in couplings])
    b = np.array([float(v) for v in fields])
    return np.diag(b) + np.diag(j, 1) + np.diag(j, -1)


def dense_amplitude(couplings, fields, t: float, frm: int, to: int) -> complex:
    """<e_to| exp(-iHt) |e_frm> by a dense matrix exponential."""
    h = dense_hamiltonian(couplings, fields)
    return complex(scipy.linalg.expm(-1j * float(t) * h)[to, frm])


def dense_eigenvalues(couplings, fields) -> np.ndarray:
    return np.linalg.eigvalsh(dense_hamiltonian(couplings, fields))


def _mp(value, dps: int):
    if hasattr(value, "evalf"):
        return mpmath.mpf(str(value.evalf(dps + 10)))
    return mpmath.mpf(value)


def mp_eigenvalues(couplings, fields, dps: int = 60) -> list:
    with mpmath.workdps(dps):
        n = len(fields)
        m = mpmath.zeros(n, n)
        for i, b in enumerate(fields):
            m[i, i] = _mp(b, dps)
        for i, j in enumerate(couplings):
            m[i, i + 1] = m[i + 1, i] = _mp(j, dps)
        evals = mpmath.eigsy(m, eigvals_only=True)
        return sorted(evals[i] for i in range(n))


def five_site_amplitude(j1: float, j2: float, t: float) -> float:
    a = math.sqrt(j1 * j1 + 2 * j2 * j2)
    b = j1
    return (a * a - b * b) / (2 * a * a) + (b * b) / (2 * a * a) * math.cos(a * t) - 0.5 * math.cos(b * t)


def para_krawtchouk_coefficients(N: int, gamma: float) -> tuple[list[float], list[float]]:
    couplings = []
    for n in range(1, N + 1):
        j2 = n * (N + 1 - n) * ((N + 1 - 2 * n) ** 2 - gamma**2) / (4 * (N - 2 * n) * (N - 2 * n + 2))
        couplings.append(math.sqrt(j2))
    return couplings, [(gamma + N - 1) / 2] * (N + 1)


def numeric_relations_bruteforce(values, bound: int, dps: int = 60) -> set[tuple[int, ...]]:
    """All nonzero integer vectors in [-bound, bound]^n with sum r_s x_s = 0,
    judged at ``dps`` digits.  Values must be given at that precision."""
    n = len(values)
    approx = np.array([float(v) for v in values])
    box = np.array(list(itertools.product(range(-bound, bound + 1), repeat=n)))
    box = box[np.any(box != 0, axis=1)]
    near = box[np.abs(box @ approx) < 1e-8 * max(1.0, np.max(np.abs(approx)))]
    found = set()
    with mpmath.workdps(dps):
        tol = mpmath.mpf(10) ** (-(dps - 10))
        for row in near:
            if abs(mpmath.fsum(int(c) * v for c, v in zip(row, values))) < tol:
                found.add(tuple(int(c) for c in row))
    return found


def kronecker_bruteforce(rows, max_den: int = 48) -> set[Fraction]:
    """All phases pi*t, t = p/q in [0, 2) with q <= max_den, satisfying every
    congruence pi*S - pi*t*R == 0 (mod 2 pi)."""
    good = set()
    for q in range(1, max_den + 1):
        for p in range(0, 2 * q):
            t = Fraction(p, q)
            ok = True
            for row in rows:
                S = sum(s * r for s, r in enumerate(row))
                R = sum(row)
                d = S - t * R
                if d.denominator != 1 or d.numerator % 2:
                    ok = False
                    break
            if ok:
                good.add(t)
    return good


def in_integer_span(basis, vector) -> bool:
    """Is ``vector`` an integer combination of ``basis`` rows?  (sympy solve)"""
    import sympy as sp

    if not basis:
        return not any(vector)
    m = sp.Matrix(basis).T
    try:
        sol, params = m.gauss_jordan_solve(sp.Matrix(vector))
    except ValueError:
        return False
    if params.shape[0]:
        sol = sol.subs({p: 0 for p in params})
    return all(v.is_integer for v in sol) and list(m * sol) == list(vector)
