"""Spectrum and orthogonal-polynomial eigenframe of a Jacobi operator.

Eigenvalues are isolated with Sturm counts (exact rational arithmetic for
exact-rational chains, mpmath otherwise) and polished by safeguarded Newton
iteration on the characteristic polynomial.  Exact chains additionally get
exact eigenvalue forms, either from an attached closed-form spectrum or from
factoring the characteristic polynomial; these forms drive every later
rationality decision.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
import sympy as sp

from .chain import ChainSpec
from .errors import DegenerateSpectrum, InvalidEntry, PrecisionUnreachable, WeightMismatch
from .numbers import (
    CLOSED_FORM,
    EXACT_RATIONAL,
    FLOATING,
    GUARD_DIGITS,
    AlgebraicReal,
    ExactSpectrum,
    mpf_to_fraction,
    parse_entry,
    render,
    to_mpf,
)

DEFAULT_DIGITS = 50
MAX_DIGITS = 200
MAX_EXACT_DEGREE = 40


def default_digits() -> int:
    env = os.environ.get("APSTLAB_DIGITS")
    return int(env) if env else DEFAULT_DIGITS


def resolve_digits(chain: ChainSpec, digits: int | None) -> int:
    """Requested digits, or the default capped by the chain's input precision."""
    if digits is None:
        digits = default_digits()
        if chain.value_kind == FLOATING:
            digits = min(digits, chain.input_digits)
        return digits
    if digits < 1 or digits > MAX_DIGITS:
        raise ValueError(f"digits must be in 1..{MAX_DIGITS}")
    if chain.value_kind == FLOATING and digits > chain.input_digits:
        raise PrecisionUnreachable(
            f"floating chain carries {chain.input_digits} digits; {digits} requested"
        )
    return digits


@dataclass(frozen=True)
class Spectrum:
    """Strictly increasing eigenvalues x_0 < ... < x_N.

    ``exact`` holds exact forms (up to a positive scale) when known.
    """

    values: tuple
    digits: int
    exactness: str
    exact: ExactSpectrum | None = None

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def subset(self, indices: Sequence[int]) -> "Spectrum":
        values = tuple(self.values[i] for i in indices)
        exact = self.exact.subset(indices) if self.exact is not None else None
        return Spectrum(values, self.digits, self.exactness, exact)


def make_spectrum(values: Sequence, digits: int | None = None) -> Spectrum:
    """Build a sorted :class:`Spectrum` from user values.

    Exact inputs (ints, Fractions, sympy numbers, strings such as
    ``"sqrt(2)"`` or :class:`AlgebraicReal`) keep exact forms; any floating
    input makes the whole spectrum floating.
    """
    forms = []
    numeric_digits = []
    kinds = set()
    for v in values:
        if isinstance(v, AlgebraicReal):
            forms.append(v)
            kinds.add(EXACT_RATIONAL if v.is_rational else CLOSED_FORM)
            continue
        if isinstance(v, str):
            try:
                forms.append(AlgebraicReal.parse(v))
                kinds.add(EXACT_RATIONAL if forms[-1].is_rational else CLOSED_FORM)
                continue
            except InvalidEntry:
                pass
        value, kind, d = parse_entry(v)
        kinds.add(kind)
        if kind == FLOATING:
            forms.append(value)
            numeric_digits.append(d)
        else:
            form = AlgebraicReal.from_sympy(value)
            forms.append(form if form is not None else value)
            if form is None:
                kinds.add(CLOSED_FORM)
    if FLOATING in kinds:
        cap = min(numeric_digits)
        digits = cap if digits is None else digits
        if digits > cap:
            raise PrecisionUnreachable(f"values carry {cap} digits; {digits} requested")
        kind = FLOATING
    else:
        digits = default_digits() if digits is None else digits
        kind = CLOSED_FORM if CLOSED_FORM in kinds else EXACT_RATIONAL
    dps = digits + GUARD_DIGITS
    nums = [to_mpf(f, dps) for f in forms]
    order = sorted(range(len(nums)), key=lambda i: nums[i])
    nums = [nums[i] for i in order]
    forms = [forms[i] for i in order]
    tol = mpmath.mpf(10) ** (-digits)
    for a, b in zip(nums, nums[1:]):
        if b - a <= tol * max(1, abs(a)):
            raise DegenerateSpectrum("repeated eigenvalue")
    exact = None
    if kind != FLOATING and all(isinstance(f, AlgebraicReal) for f in forms):
        exact = ExactSpectrum(tuple(forms))
    return Spectrum(tuple(nums), digits, kind, exact)


# --------------------------------------------------------------------------
# Sturm counts and Newton polishing


def _gershgorin(js: list, bs: list):
    n = len(bs)
    lo = min(bs[i] - (abs(js[i - 1]) if i > 0 else 0) - (abs(js[i]) if i < n - 1 else 0) for i in range(n))
    hi = max(bs[i] + (abs(js[i - 1]) if i > 0 else 0) + (abs(js[i]) if i < n - 1 else 0) for i in range(n))
    return lo, hi


class _Counter:
    """Number of eigenvalues strictly below x, via the LDL^T pivot signs."""

    def __init__(self, chain: ChainSpec, dps: int):
        self.exact = chain.value_kind == EXACT_RATIONAL
        if self.exact:
            self.b = [Fraction(int(b.p), int(b.q)) for b in chain.fields]
            self.j2 = [Fraction(int(j.p), int(j.q)) for j in map(sp.Rational, chain.coupling_squares())]
            self.tiny = Fraction(1, 10 ** (dps + 10))
        else:
            with mpmath.workdps(dps):
                self.b = [to_mpf(b, dps) for b in chain.fields]
                self.j2 = [to_mpf(j, dps) for j in chain.coupling_squares()]
                self.tiny = mpmath.mpf(10) ** (-(dps + 10))
        self.dps = dps

    def __call__(self, x) -> int:
        if self.exact:
            x = mpf_to_fraction(x) if not isinstance(x, Fraction) else x
            return self._count(x)
        with mpmath.workdps(self.dps):
            return self._count(mpmath.mpf(x))

    def _count(self, x) -> int:
        count = 0
        d = self.b[0] - x
        for k in range(len(self.b)):
            if k:
                d = self.b[k] - x - self.j2[k - 1] / d
            if d == 0:
                d = self.tiny
            if d < 0:
                count += 1
        return count


def _charpoly_and_derivative(x, bs, j2s):
    p_prev, p = mpmath.mpf(1), x - bs[0]
    dp_prev, dp = mpmath.mpf(0), mpmath.mpf(1)
    for k in range(1, len(bs)):
        p_next = (x - bs[k]) * p - j2s[k - 1] * p_prev
        dp_next = p + (x - bs[k]) * dp - j2s[k - 1] * dp_prev
        p_prev, p, dp_prev, dp = p, p_next, dp, dp_next
    return p, dp


def _isolate(counter, lo, hi, clo, chi, out, min_width):
    if chi - clo == 0:
        return
    if chi - clo == 1:
        out.append((lo, hi))
        return
    if hi - lo < min_width:
        raise DegenerateSpectrum("eigenvalues could not be separated")
    mid = (lo + hi) / 2
    cm = counter(mid)
    _isolate(counter, lo, mid, clo, cm, out, min_width)
    _isolate(counter, mid, hi, cm, chi, out, min_width)


def _brackets(chain: ChainSpec, counter, dps: int):
    n = chain.n_sites
    js, bs = chain.numeric(dps)
    with mpmath.workdps(dps):
        lo, hi = _gershgorin(js, bs)
        pad = 1 + abs(lo) + abs(hi)
        lo, hi = lo - pad * mpmath.mpf("1e-3"), hi + pad * mpmath.mpf("1e-3")
        jf, bf = chain.as_float()
        seeds = np.linalg.eigvalsh(np.diag(bf) + np.diag(jf, 1) + np.diag(jf, -1))
        cuts = [lo] + [mpmath.mpf((seeds[k] + seeds[k + 1]) / 2) for k in range(n - 1)] + [hi]
        ok = all(lo < c < hi for c in cuts[1:-1]) and all(a < b for a, b in zip(cuts, cuts[1:]))
        if ok:
            counts = [0] + [counter(c) for c in cuts[1:-1]] + [n]
            ok = counts == list(range(n + 1))
        if ok:
            return list(zip(cuts, cuts[1:]))
        out = []
        _isolate(counter, lo, hi, 0, n, out, mpmath.mpf(10) ** (-dps + 5))
        return out


def _polish(counter, lo, hi, k, bs, j2s, digits, dps):
    """Safeguarded Newton inside the isolating bracket (lo, hi) of root k."""
    with mpmath.workdps(dps):
        x = (lo + hi) / 2
        target = mpmath.mpf(10) ** (-(digits + 5))
        for _ in range(4 * dps):
            p, dp = _charpoly_and_derivative(x, bs, j2s)
            step = p / dp if dp != 0 else None
            x_new = x - step if step is not None else None
            if x_new is None or not (lo < x_new < hi):
                x_new = (lo + hi) / 2
            # maintain the bracket with a Sturm count
            if counter(x_new) <= k:
                lo = x_new
            else:
                hi = x_new
            if abs(x_new - x) <= target * max(1, abs(x_new)) or hi - lo <= target * max(1, abs(x_new)):
                x = x_new
                break
            x = x_new
        delta = mpmath.mpf(10) ** (-digits) * max(1, abs(x))
        while not (counter(x - delta) == k and counter(x + delta) == k + 1):
            # fall back to plain bisection until certified
            mid = (lo + hi) / 2
            if counter(mid) <= k:
                lo = mid
            else:
                hi = mid
            x = (lo + hi) / 2
            if hi - lo < delta / 4:
                break
        return +x


def _numeric_eigenvalues(chain: ChainSpec, digits: int) -> list:
    dps = digits + GUARD_DIGITS
    counter = _Counter(chain, dps)
    with mpmath.workdps(dps):
        bs = [to_mpf(b, dps) for b in chain.fields]
        j2s = [to_mpf(j, dps) for j in chain.coupling_squares()]
        return [_polish(counter, lo, hi, k, bs, j2s, digits, dps) for k, (lo, hi) in enumerate(_brackets(chain, counter, dps))]


# --------------------------------------------------------------------------
# exact eigenvalue forms


@lru_cache(maxsize=256)
def _cos_minpoly(m: int) -> tuple[int, ...]:
    """Integer coefficients (leading first) of the minimal polynomial of 2cos(2 pi/m)."""
    ks = [k for k in range(1, (m + 1) // 2) if math.gcd(k, m) == 1]
    with mpmath.workdps(30 + 2 * len(ks)):
        coeffs = [mpmath.mpf(1)]
        for k in ks:
            r = 2 * mpmath.cospi(mpmath.mpf(2 * k) / m)
            coeffs = [a - r * b for a, b in zip(coeffs + [0], [0] + coeffs)]
        return tuple(int(mpmath.nint(c)) for c in coeffs)


def _cos_roots(poly: sp.Poly):
    d = poly.degree()
    monic = poly.monic()
    if not all(c.is_Rational and c.q == 1 for c in monic.all_coeffs()):
        return None
    target = tuple(int(c) for c in monic.all_coeffs())
    for m in range(5, 8 * d * d + 10):
        if sp.totient(m) != 2 * d:
            continue
        if _cos_minpoly(m) == target:
            return [AlgebraicReal.two_cos(k, m) for k in range(1, (m + 1) // 2) if math.gcd(k, m) == 1]
    return None


def _factor_roots(expr, x) -> list | None:
    if not expr.free_symbols - {x} and all(a.is_Rational for a in sp.Poly(expr, x).all_coeffs()):
        _, factors = sp.factor_list(expr, x)
    else:
        _, factors = sp.factor_list(expr, x, extension=True)
    roots = []
    for factor, mult in factors:
        poly = sp.Poly(factor, x)
        d = poly.degree()
        if d == 0:
            continue
        if d <= 2:
            found = []
            for r in sp.roots(poly, multiple=True):
                r = sp.sqrtdenest(sp.radsimp(r))
                form = AlgebraicReal.from_sympy(r)
                if form is None:
                    return None
                found.append(form)
        else:
            found = _cos_roots(poly)
            if found is None:
                return None
        roots.extend(found * mult)
    return roots


def _derive_exact(chain: ChainSpec) -> ExactSpectrum | None:
    if chain.n_sites > MAX_EXACT_DEGREE:
        return None
    x = sp.Symbol("x")
    j2s = chain.coupling_squares()
    p_prev, p = sp.Integer(1), sp.expand(x - chain.fields[0])
    for k in range(1, chain.n_sites):
        p_prev, p = p, sp.expand((x - chain.fields[k]) * p - j2s[k - 1] * p_prev)
    try:
        roots = _factor_roots(p, x)
    except (sp.PolynomialError, NotImplementedError, ValueError):
        return None
    if roots is None or len(roots) != chain.n_sites:
        return None
    return ExactSpectrum(tuple(roots))


def _match_exact(exact: ExactSpectrum, values: list, digits: int) -> ExactSpectrum | None:
    """Order the exact forms like ``values``; None when they disagree."""
    dps = digits + GUARD_DIGITS
    candidates = exact.values(dps)
    order = sorted(range(len(candidates)), key=lambda i: candidates[i])
    tol = mpmath.mpf(10) ** (-(digits - 5))
    for idx, v in zip(order, values):
        if abs(candidates[idx] - v) > tol * max(1, abs(v)):
            return None
    return ExactSpectrum(tuple(exact.forms[i] for i in order), exact.scale)


def eigenvalues(chain: ChainSpec, digits: int | None = None) -> Spectrum:
    """All N+1 eigenvalues, ascending, certified to ``digits`` digits.

    Attached closed-form spectra are verified against the numeric solver; an
    inconsistent attachment raises ``ValueError``.
    """
    digits = resolve_digits(chain, digits)
    values = _numeric_eigenvalues(chain, digits)
    exact = None
    if chain.analytic_spectrum is not None:
        exact = _match_exact(chain.analytic_spectrum, values, min(digits, chain.input_digits or digits))
        if exact is None:
            raise ValueError("attached spectrum does not match the chain's eigenvalues")
    elif chain.is_exact:
        derived = _derive_exact(chain)
        if derived is not None:
            exact = _match_exact(derived, values, digits)
    if exact is not None and exact.scale is None:
        # exact forms give the values to any precision
        values = [v for v in exact.values(digits + GUARD_DIGITS)]
    for a, b in zip(values, values[1:]):
        if not a < b:
            raise DegenerateSpectrum("eigenvalues are not strictly increasing")
    exactness = chain.value_kind
    if exact is not None and exactness == FLOATING:
        exactness = CLOSED_FORM
    return Spectrum(tuple(values), digits, exactness, exact)


# --------------------------------------------------------------------------
# eigenframe


def evaluate_chi(chain: ChainSpec, x, dps: int | None = None) -> list:
    """chi_0(x)..chi_N(x) by the forward three-term recurrence."""
    dps = dps or (resolve_digits(chain, None) + GUARD_DIGITS)
    js, bs = chain.numeric(dps)
    with mpmath.workdps(dps):
        x = mpmath.mpf(x) if not isinstance(x, mpmath.mpf) else x
        chi = [mpmath.mpf(1)]
        prev = mpmath.mpf(0)
        for n in range(chain.N):
            jn = js[n - 1] if n > 0 else 0
            nxt = ((x - bs[n]) * chi[n] - jn * prev) / js[n]
            prev = chi[n]
            chi.append(nxt)
        return chi


@dataclass(frozen=True)
class EigenFrame:
    spectrum: Spectrum
    chi_table: tuple  # chi_table[n][s] = chi_n(x_s)
    weights: tuple
    h_N: mpmath.mpf
    digits: int

    @property
    def N(self) -> int:
        return self.spectrum.N

    @property
    def dps(self) -> int:
        return self.digits + GUARD_DIGITS

    def orthonormality_residual(self) -> mpmath.mpf:
        with mpmath.workdps(self.dps):
            size = self.N + 1
            worst = mpmath.mpf(0)
            for n in range(size):
                for m in range(n, size):
                    total = mpmath.fsum(
                        self.weights[s] * self.chi_table[n][s] * self.chi_table[m][s] for s in range(size)
                    )
                    worst = max(worst, abs(total - (1 if n == m else 0)))
            return worst

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, w, chi) as float64 arrays for vectorised time scans."""
        x = self.spectrum.as_float()
        w = np.array([float(v) for v in self.weights])
        chi = np.array([[float(v) for v in row] for row in self.chi_table])
        return x, w, chi


def build_frame(chain: ChainSpec, digits: int | None = None, spectrum: Spectrum | None = None) -> EigenFrame:
    """Spectrum, chi table and weights, with the weights computed two ways.

    Route (a) uses w_s = h_N / (P_N(x_s) P'_{N+1}(x_s)) with the product form
    of the characteristic polynomial; route (b) uses w_s = 1 / sum_n chi_n(x_s)^2.
    """
    digits = resolve_digits(chain, digits)
    if spectrum is None:
        spectrum = eigenvalues(chain, digits)
    dps = digits + GUARD_DIGITS
    size = chain.n_sites
    with mpmath.workdps(dps):
        xs = spectrum.values
        columns = [evaluate_chi(chain, x, dps) for x in xs]
        chi_table = tuple(tuple(columns[s][n] for s in range(size)) for n in range(size))
        js, _ = chain.numeric(dps)
        h_N = mpmath.fprod(j * j for j in js)
        sqrt_h = mpmath.sqrt(h_N)
        weights_b = [1 / mpmath.fsum(c * c for c in columns[s]) for s in range(size)]
        weights_a = []
        for s in range(size):
            derivative = mpmath.fprod(xs[s] - xs[k] for k in range(size) if k != s)
            weights_a.append(sqrt_h / (columns[s][-1] * derivative))
        # absolute: small weights sit where chi_n is large and lose relative digits
        tol = mpmath.mpf(10) ** (-(digits - 4))
        for s in range(size):
            if abs(weights_a[s] - weights_b[s]) > tol:
                raise WeightMismatch(
                    f"weight {s}: {mpmath.nstr(weights_a[s], 12)} vs {mpmath.nstr(weights_b[s], 12)}"
                )
        if any(w <= 0 for w in weights_b):
            raise WeightMismatch("non-positive weight")
    return EigenFrame(spectrum, chi_table, tuple(weights_b), h_N, digits)


def chi_sign_pattern(frame: EigenFrame, tol: float) -> bool:
    """True iff chi_N(x_s) = (-1)^(N+s) within ``tol`` for every s."""
    N = frame.N
    return all(abs(frame.chi_table[N][s] - (-1) ** (N + s)) <= tol for s in range(N + 1))


# --------------------------------------------------------------------------
# JSON


def spectrum_to_dict(spectrum: Spectrum) -> dict:
    doc = {
        "values": [render(v, spectrum.digits) for v in spectrum.values],
        "digits": spectrum.digits,
        "exactness": spectrum.exactness,
    }
    if spectrum.exact is not None:
        doc["exact"] = [str(f) for f in spectrum.exact.forms]
        if spectrum.exact.scale is not None:
            doc["exact_scale"] = render(spectrum.exact.scale, spectrum.digits)
    return doc


def spectrum_from_dict(doc: dict) -> Spectrum:
    if "exact" in doc:
        spectrum = make_spectrum([AlgebraicReal.parse(s) for s in doc["exact"]], doc.get("digits"))
        if "exact_scale" in doc:
            digits = spectrum.digits
            with mpmath.workdps(digits + GUARD_DIGITS):
                scale = mpmath.mpf(doc["exact_scale"])
                values = tuple(scale * v for v in spectrum.values)
            spectrum = Spectrum(values, digits, spectrum.exactness, ExactSpectrum(spectrum.exact.forms, scale))
        return spectrum
    digits = doc.get("digits")
    if digits is None:
        return make_spectrum([str(v) for v in doc["values"]])
    # decimal strings are trusted to carry the digits the document states
    with mpmath.workdps(digits + GUARD_DIGITS):
        return make_spectrum([mpmath.mpf(str(v)) for v in doc["values"]], digits)


def frame_to_dict(frame: EigenFrame) -> dict:
    d = frame.digits
    return {
        "spectrum": spectrum_to_dict(frame.spectrum),
        "chi_table": [[render(v, d) for v in row] for row in frame.chi_table],
        "weights": [render(w, d) for w in frame.weights],
        "h_N": render(frame.h_N, d),
        "digits": d,
    }
