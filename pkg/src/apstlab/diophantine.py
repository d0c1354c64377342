"""Continued fractions, generalized convergents, integer relations among
eigenvalues and the Kronecker compatibility solver.

Phases are kept as exact rational multiples of pi: a Fraction ``t`` stands
for the angle pi*t, reduced to [0, 2).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
import sympy as sp

from .errors import PrecisionExhausted, PrecisionInsufficient
from .lattice import hermite_normal_form, integer_kernel, lll_reduce, saturate
from .numbers import (
    FLOATING,
    GUARD_DIGITS,
    AlgebraicReal,
    ExactSpectrum,
    coordinate_matrix,
    parse_entry,
    to_mpf,
)
from .spectral import Spectrum

PRINCIPAL = "principal"
INTERMEDIATE = "intermediate"
EXACT_COEFF_BOUND = 10**6
FLOAT_COEFF_BOUND = 10**3

# --------------------------------------------------------------------------
# continued fractions


@dataclass(frozen=True)
class ContinuedFraction:
    quotients: tuple[int, ...]
    source_digits: int | None
    complete: bool = False  # True when the quotients represent z exactly

    def value(self) -> Fraction:
        out = Fraction(self.quotients[-1])
        for q in reversed(self.quotients[:-1]):
            out = q + 1 / out
        return out


def _interval_of(z, digits: int | None):
    """Return (exact_fraction | None, interval, certified digits)."""
    if isinstance(z, Fraction) or (isinstance(z, int) and not isinstance(z, bool)):
        return Fraction(z), None, None
    if isinstance(z, AlgebraicReal):
        if z.is_rational:
            return z.rational_value, None, None
        digits = digits or 60
        with mpmath.workdps(digits + GUARD_DIGITS):
            v = z.evaluate(digits + GUARD_DIGITS)
            err = mpmath.mpf(10) ** (-(digits + 5)) * max(1, abs(v))
            return None, mpmath.iv.mpf([v - err, v + err]), digits
    if isinstance(z, mpmath.mpf) or isinstance(z, float) or isinstance(z, str) or isinstance(z, sp.Basic):
        value, kind, d = parse_entry(z)
        if kind != FLOATING:
            if value.is_Rational:
                return Fraction(int(value.p), int(value.q)), None, None
            digits = digits or 60
            v = to_mpf(value, digits + GUARD_DIGITS)
            with mpmath.workdps(digits + GUARD_DIGITS):
                err = mpmath.mpf(10) ** (-(digits + 5)) * max(1, abs(v))
                return None, mpmath.iv.mpf([v - err, v + err]), digits
        digits = min(digits or d, d)
        with mpmath.workdps(digits + GUARD_DIGITS):
            v = mpmath.mpf(value)
            err = mpmath.mpf(10) ** (-digits) * max(1, abs(v))
            return None, mpmath.iv.mpf([v - err, v + err]), digits
    raise TypeError(f"cannot expand {type(z).__name__}")


def continued_fraction(z, max_terms: int = 20, digits: int | None = None) -> ContinuedFraction:
    """Quotients of z = [q0; q1, q2, ...] certified by interval arithmetic.

    Exact rationals expand completely.  Other inputs are enclosed in an
    interval (width 10^-digits relative for floating input, or tighter for
    exact irrationals) and the Gauss map stops as soon as a floor is not
    determined by the interval.
    """
    if max_terms < 1:
        raise ValueError("max_terms must be positive")
    exact, box, digits = _interval_of(z, digits)
    if exact is not None:
        quotients = []
        while len(quotients) < max_terms:
            q = math.floor(exact)
            quotients.append(q)
            exact -= q
            if exact == 0:
                return ContinuedFraction(tuple(quotients), None, True)
            exact = 1 / exact
        return ContinuedFraction(tuple(quotients), None, False)
    quotients = []
    with mpmath.workdps(digits + GUARD_DIGITS):
        mpmath.iv.dps = digits + GUARD_DIGITS
        try:
            while len(quotients) < max_terms:
                lo, hi = mpmath.floor(box.a), mpmath.floor(box.b)
                if lo != hi:
                    break
                q = int(lo)
                quotients.append(q)
                frac = box - q
                if frac.a <= 0:
                    break
                box = 1 / frac
        finally:
            mpmath.iv.dps = 15
    if not quotients:
        raise PrecisionExhausted("no quotient is certified at this precision")
    return ContinuedFraction(tuple(quotients), digits, False)


@dataclass(frozen=True, order=True)
class Convergent:
    v: int
    u: int
    kind: str = field(default=PRINCIPAL, compare=False)
    error_bound: Fraction | None = field(default=None, compare=False)

    @property
    def value(self) -> Fraction:
        return Fraction(self.u, self.v)

    def __str__(self) -> str:
        return f"{self.u}/{self.v}"


def convergents(cf: ContinuedFraction) -> list[Convergent]:
    """Principal convergents p_n/q_n via the two-term recurrence."""
    ps, qs = [], []
    p_prev, p = 1, cf.quotients[0]
    q_prev, q = 0, 1
    ps.append(p)
    qs.append(q)
    for a in cf.quotients[1:]:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        ps.append(p)
        qs.append(q)
    out = []
    for n, (p, q) in enumerate(zip(ps, qs)):
        if n + 1 < len(qs):
            bound = Fraction(1, q * qs[n + 1])
        elif cf.complete:
            bound = Fraction(0)
        else:
            bound = Fraction(1, q * q)
        out.append(Convergent(q, p, PRINCIPAL, bound))
    return out


def intermediate_convergents(principal: Sequence[Convergent]) -> list[Convergent]:
    """Principals merged with all mediants (p_{n+1} +- p_n)/(q_{n+1} +- q_n).

    Output is reduced, de-duplicated and ordered by denominator (then numerator).
    """
    if len(principal) < 2:
        raise ValueError("need at least two principal convergents")
    seen: dict[tuple[int, int], Convergent] = {}
    for c in principal:
        seen[(c.u, c.v)] = c
    for a, b in zip(principal, principal[1:]):
        for sign in (1, -1):
            num, den = b.u + sign * a.u, b.v + sign * a.v
            if den <= 0:
                continue
            g = math.gcd(num, den)
            num, den = num // g, den // g
            if (num, den) in seen:
                continue
            bound = None
            if b.error_bound is not None:
                bound = abs(Fraction(num, den) - b.value) + b.error_bound
            seen[(num, den)] = Convergent(den, num, INTERMEDIATE, bound)
    return sorted(seen.values())


def generalized_convergents(z, depth: int = 12, digits: int | None = None) -> list[Convergent]:
    cf = continued_fraction(z, depth, digits)
    principal = convergents(cf)
    if len(principal) < 2:
        return principal
    return intermediate_convergents(principal)


_PARITY = {"even": lambda k: k % 2 == 0, "odd": lambda k: k % 2 == 1, "any": lambda k: True}


def parity_filter(generalized: Sequence[Convergent], num_parity: str = "any", den_parity: str = "any") -> list[Convergent]:
    try:
        keep_u, keep_v = _PARITY[num_parity], _PARITY[den_parity]
    except KeyError as exc:
        raise ValueError(f"parity must be even, odd or any, not {exc.args[0]!r}") from None
    return [c for c in generalized if keep_u(c.u) and keep_v(c.v)]


# --------------------------------------------------------------------------
# integer relations


@dataclass(frozen=True)
class IntegerRelationSet:
    """Basis rows r with sum_s r_s x_s = 0.

    ``exact`` means the rows were derived in exact arithmetic and span the
    complete relation lattice.  ``verified`` marks rows checked symbolically;
    ``residuals`` holds |sum r_s x_s| for numerically detected rows.
    """

    relations: tuple[tuple[int, ...], ...]
    exact: bool
    coeff_bound: int
    size: int
    verified: tuple[bool, ...] = ()
    residuals: tuple[float, ...] = ()

    def __len__(self) -> int:
        return len(self.relations)

    def to_dict(self) -> dict:
        return {"relations": [list(r) for r in self.relations], "exact": self.exact, "coeff_bound": self.coeff_bound}


def required_digits(n_values: int, coeff_bound: int) -> int:
    """Digits needed before lattice reduction can separate relations with
    coefficients up to ``coeff_bound`` from numerical coincidences."""
    return int(math.ceil(n_values * (math.log10(coeff_bound) + 1))) + 10


def exact_relations(exact: ExactSpectrum) -> list[list[int]] | None:
    coords = coordinate_matrix(exact.forms)
    if coords is None:
        return None
    keys, columns = coords
    matrix = [[columns[s][i] for s in range(len(columns))] for i in range(len(keys))]
    kernel = integer_kernel(matrix, len(columns))
    return hermite_normal_form(lll_reduce(kernel)) if kernel else []


def numeric_relations(values: Sequence, digits: int, coeff_bound: int) -> tuple[list[list[int]], list[float]]:
    """Relations detected by LLL on the embedding [I | round(C x)]."""
    n = len(values)
    need = required_digits(n, coeff_bound)
    if digits < need:
        raise PrecisionInsufficient(
            f"{digits} digits cannot certify relations with coefficients up to {coeff_bound} among {n} values; need {need}"
        )
    with mpmath.workdps(digits + GUARD_DIGITS):
        scale = max(abs(mpmath.mpf(v)) for v in values) or mpmath.mpf(1)
        c_exp = digits - 5
        big = mpmath.mpf(10) ** c_exp
        column = [int(mpmath.nint(big * mpmath.mpf(v) / scale)) for v in values]
        rows = [[int(i == j) for j in range(n)] + [column[i]] for i in range(n)]
        reduced = lll_reduce(rows)
        tol = n * coeff_bound * 2 + 1
        candidates = []
        for row in reduced:
            coeffs = row[:n]
            if any(coeffs) and abs(row[n]) <= tol and max(abs(c) for c in coeffs) <= coeff_bound:
                candidates.append(coeffs)
        if not candidates:
            return [], []
        basis = saturate(candidates, n)
        threshold = mpmath.mpf(10) ** (-(digits - 5 - math.log10(coeff_bound))) * n
        rows_out, residuals = [], []
        for r in basis:
            residual = abs(mpmath.fsum(c * mpmath.mpf(v) for c, v in zip(r, values))) / scale
            if residual <= threshold:
                rows_out.append(r)
                residuals.append(float(residual))
        return rows_out, residuals


def integer_relations(spectrum: Spectrum, coeff_bound: int | None = None) -> IntegerRelationSet:
    """Saturated basis of integer relations among the eigenvalues.

    Exact spectra whose forms share a coordinate basis give the complete
    lattice exactly.  Otherwise the relations come from lattice reduction
    and are marked non-exact.
    """
    n = len(spectrum.values)
    if spectrum.exact is not None:
        rows = exact_relations(spectrum.exact)
        if rows is not None:
            bound = coeff_bound or EXACT_COEFF_BOUND
            return IntegerRelationSet(tuple(map(tuple, rows)), True, bound, n, tuple(True for _ in rows))
    bound = coeff_bound or (FLOAT_COEFF_BOUND if spectrum.exactness == FLOATING else EXACT_COEFF_BOUND)
    rows, residuals = numeric_relations(spectrum.values, spectrum.digits, bound)
    verified = tuple(False for _ in rows)
    if spectrum.exact is not None:
        verified = tuple(_verify_symbolic(spectrum.exact, r) for r in rows)
    return IntegerRelationSet(tuple(map(tuple, rows)), False, bound, n, verified, tuple(residuals))


def _verify_symbolic(exact: ExactSpectrum, row: Sequence[int]) -> bool:
    total = sp.Add(*(c * f.to_sympy() for c, f in zip(row, exact.forms)))
    try:
        return bool(sp.simplify(total) == 0)
    except Exception:
        return False


def exhaustive_relations(forms: Sequence[AlgebraicReal], bound: int) -> list[tuple[int, ...]]:
    """Every nonzero integer vector with entries in [-bound, bound] that
    annihilates ``forms`` exactly.  Brute force; meant for small sizes."""
    coords = coordinate_matrix(forms)
    if coords is None:
        raise ValueError("forms do not share a coordinate basis")
    keys, columns = coords
    n = len(forms)
    den = math.lcm(*(c.denominator for col in columns for c in col)) if columns else 1
    mat = np.array([[int(columns[s][i] * den) for s in range(n)] for i in range(len(keys))], dtype=object)
    found = []
    span = range(-bound, bound + 1)
    for vec in itertools.product(span, repeat=n):
        if not any(vec):
            continue
        if all(sum(int(a) * b for a, b in zip(row, vec)) == 0 for row in mat):
            found.append(vec)
    return found


# --------------------------------------------------------------------------
# Kronecker compatibility


def _mod2(t: Fraction) -> Fraction:
    return t - 2 * math.floor(t / 2)


@dataclass(frozen=True)
class KroneckerCertificate:
    """Outcome of the phase-compatibility test.

    ``phi`` is the principal phase as a multiple of pi (phi = pi * phi),
    ``solutions`` all admissible multiples in [0, 2).  ``witness`` is an
    integer relation with zero coefficient sum and odd index sum, which no
    phase can satisfy.
    """

    compatible: bool
    phi: Fraction | None
    solutions: tuple[Fraction, ...] = ()
    unconstrained: bool = False
    witness: tuple[int, ...] | None = None

    def targets(self, N: int) -> list[Fraction]:
        """a_s = pi*s - phi as multiples of pi, reduced to [0, 2)."""
        phi = self.phi or Fraction(0)
        return [_mod2(Fraction(s) - phi) for s in range(N + 1)]

    def phi_json(self) -> dict | None:
        if self.phi is None:
            return None
        return {"num": self.phi.numerator, "den": self.phi.denominator}


def row_sums(row: Sequence[int]) -> tuple[int, int]:
    """(S, R) = (sum s r_s, sum r_s)."""
    return sum(s * r for s, r in enumerate(row)), sum(row)


def congruence_holds(row: Sequence[int], phi: Fraction) -> bool:
    """pi*S - phi*R == 0 (mod 2 pi), exactly."""
    S, R = row_sums(row)
    diff = Fraction(S) - phi * R
    return diff.denominator == 1 and diff.numerator % 2 == 0


def _incompatibility_witness(rows: Sequence[Sequence[int]]) -> tuple[int, ...] | None:
    for row in rows:
        S, R = row_sums(row)
        if R == 0 and S % 2:
            return tuple(row)
    constraining = [r for r in rows if sum(r) != 0]
    if not constraining:
        return None
    # combination r* with coefficient sum g = gcd of all coefficient sums
    g, combo = 0, [0] * len(constraining[0])
    for row in constraining:
        R = sum(row)
        new_g, x, y = _ext_gcd(g, R)
        combo = [x * c + y * r for c, r in zip(combo, row)]
        g = new_g
    if g < 0:
        g, combo = -g, [-c for c in combo]
    for row in constraining:
        R = sum(row)
        candidate = [(R // g) * c - r for c, r in zip(combo, row)]
        S, total = row_sums(candidate)
        if total == 0 and S % 2:
            return tuple(candidate)
    return None


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def kronecker_solve(relations: IntegerRelationSet | Sequence[Sequence[int]], N: int) -> KroneckerCertificate:
    """Decide whether some phi makes every relation compatible with the
    targets a_s = pi*s - phi, i.e. pi*S_i - phi*R_i == 0 (mod 2 pi)."""
    rows = relations.relations if isinstance(relations, IntegerRelationSet) else [tuple(r) for r in relations]
    for row in rows:
        if len(row) != N + 1:
            raise ValueError(f"relation of length {len(row)} for N={N}")
    solutions: set[Fraction] | None = None
    first_constraint: Fraction | None = None
    for row in rows:
        S, R = row_sums(row)
        if R == 0:
            if S % 2:
                return KroneckerCertificate(False, None, (), False, tuple(row))
            continue
        if R < 0:
            S, R = -S, -R
        allowed = {_mod2(Fraction(S + 2 * k, R)) for k in range(R)}
        if first_constraint is None:
            first_constraint = _mod2(Fraction(S, R))
        solutions = allowed if solutions is None else solutions & allowed
        if not solutions:
            return KroneckerCertificate(False, None, (), False, _incompatibility_witness(rows))
    if solutions is None:
        return KroneckerCertificate(True, None, (), True, None)
    ordered = tuple(sorted(solutions))
    phi = first_constraint if first_constraint in solutions else ordered[0]
    return KroneckerCertificate(True, phi, ordered, False, None)


# --------------------------------------------------------------------------
# affine normalization


@dataclass(frozen=True)
class AffineMap:
    """x -> alpha*x + beta."""

    alpha: mpmath.mpf
    beta: mpmath.mpf

    def apply(self, x):
        return self.alpha * x + self.beta

    def invert(self, y):
        return (y - self.beta) / self.alpha


def affine_normalize(spectrum: Spectrum) -> tuple[Spectrum, AffineMap]:
    """Map the spectrum so that x_0 = 0 and x_1 = 1."""
    if len(spectrum.values) < 2:
        raise ValueError("need at least two eigenvalues")
    dps = spectrum.digits + GUARD_DIGITS
    with mpmath.workdps(dps):
        x0, x1 = spectrum.values[0], spectrum.values[1]
        alpha = 1 / (x1 - x0)
        beta = -x0 * alpha
        values = [alpha * x + beta for x in spectrum.values]
        values[0], values[1] = mpmath.mpf(0), mpmath.mpf(1)
        exact = None
        if spectrum.exact is not None:
            f0, f1 = spectrum.exact.forms[0], spectrum.exact.forms[1]
            shifted = tuple(f - f0 for f in spectrum.exact.forms)
            gap = f1 - f0
            if gap.is_rational:
                exact = ExactSpectrum(tuple(f / gap.rational_value for f in shifted))
            else:
                exact = ExactSpectrum(shifted, 1 / gap.evaluate(dps))
    return Spectrum(tuple(values), spectrum.digits, spectrum.exactness, exact), AffineMap(alpha, beta)
