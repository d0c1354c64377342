"""PST / APST / NEITHER / UNKNOWN classification and waiting-time schedules.

A chain has almost perfect transfer iff it is mirror-symmetric and every
integer relation among its eigenvalues is compatible with the targets
a_s = pi*s - phi for one common phase.  Perfect transfer is the special case
of gaps proportional to odd integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import mpmath
import numpy as np
import sympy as sp

from . import dynamics
from .chain import ChainSpec, build_chain, is_mirror_symmetric
from .diophantine import (
    Convergent,
    IntegerRelationSet,
    KroneckerCertificate,
    continued_fraction,
    convergents,
    intermediate_convergents,
    integer_relations,
    kronecker_solve,
    parity_filter,
    required_digits,
)
from .errors import ApstError, PrecisionInsufficient, UnsupportedRecipe
from .numbers import FLOATING, GUARD_DIGITS, AlgebraicReal, coordinate_matrix, mpf_to_fraction, render, to_mpf
from .spectral import MAX_DIGITS, EigenFrame, Spectrum, build_frame, chi_sign_pattern, eigenvalues, resolve_digits

PST = "PST"
APST = "APST"
NEITHER = "NEITHER"
UNKNOWN = "UNKNOWN"

FLOAT_MIRROR_TOL = 1e-9
FLOAT_DENOMINATOR_CAP = 10**6

RECIPE_FIVE_SITE = "five-site"
RECIPE_BI_LATTICE = "bi-lattice"
RECIPE_SCAN = "scan"


@dataclass(frozen=True)
class PstCertificate:
    kappa: mpmath.mpf
    odd_integers: tuple[int, ...]
    transfer_time: mpmath.mpf
    exact: bool


def _rational_ratio(a, b) -> Fraction | None:
    """a/b for coordinate vectors that are rational multiples; else None."""
    ratio = None
    for x, y in zip(a, b):
        if y == 0:
            if x != 0:
                return None
            continue
        q = Fraction(x) / Fraction(y)
        if ratio is None:
            ratio = q
        elif q != ratio:
            return None
    return ratio


def _exact_gap_ratios(spectrum: Spectrum):
    """Delta_s/Delta_0 as Fractions; None if some ratio is irrational and
    False when the forms cannot be compared exactly."""
    forms = spectrum.exact.forms
    coords = coordinate_matrix([b - a for a, b in zip(forms, forms[1:])])
    if coords is None:
        return False
    columns = coords[1]
    ratios = []
    for col in columns:
        r = _rational_ratio(col, columns[0])
        if r is None:
            return None
        ratios.append(r)
    return ratios


def _numeric_gap_ratios(spectrum: Spectrum) -> list[Fraction] | None:
    vals = spectrum.values
    with mpmath.workdps(spectrum.digits + GUARD_DIGITS):
        gaps = [b - a for a, b in zip(vals, vals[1:])]
        tol = mpmath.mpf(10) ** (-(spectrum.digits - 3))
        ratios = []
        for g in gaps:
            r = g / gaps[0]
            q = mpf_to_fraction(r).limit_denominator(FLOAT_DENOMINATOR_CAP)
            if abs(r - mpmath.mpf(q.numerator) / q.denominator) > tol * max(1, abs(r)):
                return None
            ratios.append(q)
        return ratios


def pst_check(spectrum: Spectrum) -> PstCertificate | None:
    """Find kappa and odd M_s with x_{s+1} - x_s = kappa*M_s, if they exist."""
    if len(spectrum.values) < 2:
        return None
    exact = False
    ratios = None
    if spectrum.exact is not None:
        ratios = _exact_gap_ratios(spectrum)
        if ratios is None:
            return None
        exact = ratios is not False
    if not exact:
        ratios = _numeric_gap_ratios(spectrum)
        if ratios is None:
            return None
    den = math.lcm(*(r.denominator for r in ratios))
    ints = [int(r * den) for r in ratios]
    g = math.gcd(*ints)
    ints = [k // g for k in ints]
    if any(k <= 0 or k % 2 == 0 for k in ints):
        return None
    with mpmath.workdps(spectrum.digits + GUARD_DIGITS):
        kappa = (spectrum.values[1] - spectrum.values[0]) / ints[0]
        return PstCertificate(kappa, tuple(ints), mpmath.pi / kappa, exact)


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class TransferClass:
    verdict: str
    spectrum: Spectrum | None = None
    pst_certificate: PstCertificate | None = None
    apst_certificate: KroneckerCertificate | None = None
    relations: IntegerRelationSet | None = None
    neither_witness: dict | None = None
    unknown_reason: str | None = None
    mirror_deviation: float = 0.0
    notes: tuple[str, ...] = ()

    @property
    def phi(self) -> Fraction | None:
        return self.apst_certificate.phi if self.apst_certificate is not None else None

    def to_dict(self, digits: int = 20) -> dict:
        pst = self.pst_certificate
        doc = {
            "verdict": self.verdict,
            "phi": self.apst_certificate.phi_json() if self.apst_certificate is not None else None,
            "kappa": render(pst.kappa, digits) if pst else None,
            "transfer_time": render(pst.transfer_time, digits) if pst else None,
            "relations": [list(r) for r in self.relations.relations] if self.relations is not None else [],
            "witness": self.neither_witness,
            "waiting_times": [],
            "mirror_deviation": f"{self.mirror_deviation:.3g}",
        }
        if pst:
            doc["odd_integers"] = list(pst.odd_integers)
            doc["exact"] = pst.exact
        elif self.relations is not None:
            doc["exact"] = self.relations.exact
        if self.apst_certificate is not None and self.apst_certificate.unconstrained:
            doc["phi_unconstrained"] = True
        if self.unknown_reason:
            doc["unknown_reason"] = self.unknown_reason
        if self.notes:
            doc["notes"] = list(self.notes)
        return doc


def _mirror_tolerance(chain: ChainSpec) -> float:
    if chain.is_exact:
        return 0.0
    scale = max(float(abs(v)) for v in chain.couplings + chain.fields)
    return FLOAT_MIRROR_TOL * max(scale, 1.0)


def _chi_tolerance(chain: ChainSpec, digits: int) -> float:
    if chain.value_kind == FLOATING:
        return 1e-6
    return 10.0 ** (-(digits - 6))


def _verify_with_chain(chain: ChainSpec, row) -> bool:
    """Check sum r_s x_s = 0 exactly through the real roots of the
    characteristic polynomial (rational chains, small N only)."""
    if chain.value_kind != "exact-rational" or chain.n_sites > 10:
        return False
    x = sp.Symbol("x")
    j2s = chain.coupling_squares()
    p_prev, p = sp.Integer(1), x - chain.fields[0]
    for k in range(1, chain.n_sites):
        p_prev, p = p, sp.expand((x - chain.fields[k]) * p - j2s[k - 1] * p_prev)
    poly = sp.Poly(p, x)
    total = sp.Add(*(c * sp.CRootOf(poly, k) for k, c in enumerate(row) if c))
    try:
        return sp.minimal_polynomial(total, x) == x
    except (NotImplementedError, ValueError):
        return False


def _relation_spectrum(chain: ChainSpec, spectrum: Spectrum, coeff_bound: int | None) -> Spectrum:
    """Raise the working precision for exact chains whose relations must be
    found numerically."""
    if spectrum.exact is not None and coordinate_matrix(spectrum.exact.forms) is not None:
        return spectrum
    if not chain.is_exact:
        return spectrum
    bound = coeff_bound or 10**6
    need = required_digits(chain.n_sites, bound)
    if need <= spectrum.digits:
        return spectrum
    if need > MAX_DIGITS:
        raise PrecisionInsufficient(f"relations up to {bound} need {need} digits (cap {MAX_DIGITS})")
    return eigenvalues(chain, need)


def _has_exact_coordinates(spectrum: Spectrum) -> bool:
    return spectrum.exact is not None and coordinate_matrix(spectrum.exact.forms) is not None


def _normalized_chain(chain: ChainSpec) -> tuple[ChainSpec, object] | None:
    """The chain under x -> (x - B_0)/J_1, with the scale J_1, when that
    leaves rational fields and rational squared couplings."""
    if not chain.is_exact or chain.n_sites < 2:
        return None
    scale, shift = chain.couplings[0], chain.fields[0]
    if scale == 1 and shift == 0:
        return None
    couplings = [sp.radsimp(j / scale) for j in chain.couplings]
    fields = [sp.radsimp((b - shift) / scale) for b in chain.fields]
    if not all(f.is_Rational for f in fields):
        return None
    if not all(sp.expand(j**2).is_Rational for j in couplings):
        return None
    return build_chain(chain.n_sites, couplings, fields), scale


def _rescaled(inner: TransferClass, spectrum: Spectrum, scale, note: str) -> TransferClass:
    pst = inner.pst_certificate
    if pst is not None:
        with mpmath.workdps(spectrum.digits + GUARD_DIGITS):
            kappa = pst.kappa * to_mpf(scale, spectrum.digits + GUARD_DIGITS)
            pst = PstCertificate(kappa, pst.odd_integers, mpmath.pi / kappa, pst.exact)
    return replace(inner, spectrum=spectrum, pst_certificate=pst, notes=inner.notes + (note,))


def classify(chain: ChainSpec, coeff_bound: int | None = None, digits: int | None = None) -> TransferClass:
    """Run the mirror / PST / relation / Kronecker pipeline on ``chain``."""
    digits = resolve_digits(chain, digits)
    mirror = is_mirror_symmetric(chain, _mirror_tolerance(chain))
    notes = []
    if not mirror.symmetric:
        return TransferClass(
            NEITHER,
            neither_witness={"kind": "mirror", "deviation": f"{mirror.deviation:.6g}"},
            mirror_deviation=mirror.deviation,
        )
    if mirror.deviation:
        notes.append(f"mirror symmetry accepted within tolerance; deviation {mirror.deviation:.3g}")
    frame = build_frame(chain, digits)
    spectrum = frame.spectrum
    if not chi_sign_pattern(frame, _chi_tolerance(chain, digits)):
        return TransferClass(
            UNKNOWN,
            spectrum,
            unknown_reason="mirror check passed but chi_N(x_s) does not follow (-1)^(N+s)",
            mirror_deviation=mirror.deviation,
        )
    if chain.is_exact and not _has_exact_coordinates(spectrum):
        # |f_0N| is unchanged up to a time rescaling under x -> alpha*x + beta
        reduced = _normalized_chain(chain)
        if reduced is not None:
            inner = classify(reduced[0], coeff_bound, digits)
            if inner.verdict != UNKNOWN:
                note = "classified through the affinely normalized chain; phi refers to that chain"
                return _rescaled(inner, spectrum, reduced[1], note)
    pst = pst_check(spectrum)
    if pst is not None:
        if not pst.exact:
            notes.append("gap ratios reconstructed numerically")
        return TransferClass(PST, spectrum, pst_certificate=pst, mirror_deviation=mirror.deviation, notes=tuple(notes))
    try:
        rel_spectrum = _relation_spectrum(chain, spectrum, coeff_bound)
        relations = integer_relations(rel_spectrum, coeff_bound)
    except PrecisionInsufficient as exc:
        return TransferClass(UNKNOWN, spectrum, unknown_reason=str(exc), mirror_deviation=mirror.deviation)
    cert = kronecker_solve(relations, chain.N)
    if relations.exact:
        if cert.compatible:
            return TransferClass(APST, spectrum, apst_certificate=cert, relations=relations,
                                 mirror_deviation=mirror.deviation, notes=tuple(notes))
        return TransferClass(
            NEITHER,
            spectrum,
            relations=relations,
            neither_witness={"kind": "congruence", "relation": list(cert.witness or ())},
            mirror_deviation=mirror.deviation,
        )
    verified = relations.verified
    if not all(verified) and chain.is_exact:
        verified = tuple(v or _verify_with_chain(chain, r) for v, r in zip(verified, relations.relations))
    if not cert.compatible and verified and all(verified):
        return TransferClass(
            NEITHER,
            spectrum,
            relations=relations,
            neither_witness={"kind": "congruence", "relation": list(cert.witness or ())},
            mirror_deviation=mirror.deviation,
            notes=("relations found numerically and verified exactly",),
        )
    reason = "integer relations were detected numerically; rational independence cannot be certified"
    return TransferClass(UNKNOWN, spectrum, apst_certificate=cert if cert.compatible else None, relations=relations,
                         unknown_reason=reason, mirror_deviation=mirror.deviation)


# --------------------------------------------------------------------------
# waiting times


@dataclass(frozen=True)
class WaitingTimeEstimate:
    t: mpmath.mpf
    convergent: Convergent | None
    predicted_amplitude: float
    measured_amplitude: float
    epsilon: float | None
    recipe: str
    coarse_bound: float | None = None

    def to_dict(self, digits: int = 20) -> dict:
        return {
            "t": render(self.t, digits),
            "t_over_pi": render(self.t / mpmath.pi, digits),
            "u": self.convergent.u if self.convergent else None,
            "v": self.convergent.v if self.convergent else None,
            "predicted": f"{self.predicted_amplitude:.15g}",
            "measured": f"{self.measured_amplitude:.15g}",
            "epsilon": None if self.epsilon is None else f"{self.epsilon:.15g}",
            "recipe": self.recipe,
        }


class PredictionMismatch(ApstError):
    """A recipe prediction disagrees with the measured amplitude."""


def _prediction_tolerance(epsilon: float) -> float:
    return 10 * epsilon * epsilon + 1e-10


def _five_site_params(frame: EigenFrame, chain: ChainSpec):
    """(a, b) when the chain is a constant-field five-site mirror chain."""
    if chain.n_sites != 5:
        return None
    fields = chain.fields
    if chain.is_exact:
        if any(sp.simplify(b - fields[0]) != 0 for b in fields):
            return None
    elif max(abs(b - fields[0]) for b in fields) > 1e-12 * max(1, abs(fields[0])):
        return None
    x = frame.spectrum.values
    with mpmath.workdps(frame.dps):
        a, b = x[4] - x[2], x[3] - x[2]
        tol = mpmath.mpf(10) ** (-(frame.digits - 5))
        if abs(x[0] - x[2] + a) > tol * a or abs(x[1] - x[2] + b) > tol * a:
            return None
        return a, b


def _bi_lattice_params(frame: EigenFrame):
    """(gamma, spacing) when x = x_0 + spacing*{0, g, 2, 2+g, ...}/2-style bi-lattice."""
    N = frame.N
    if N % 2 == 0 or N < 3:
        return None
    x = frame.spectrum.values
    with mpmath.workdps(frame.dps):
        span = x[2] - x[0]
        y = [2 * (v - x[0]) / span for v in x]
        gamma = y[1]
        tol = mpmath.mpf(10) ** (-(frame.digits - 6))
        for s in range((N + 1) // 2):
            if abs(y[2 * s] - 2 * s) > tol * (N + 1) or abs(y[2 * s + 1] - 2 * s - gamma) > tol * (N + 1):
                return None
        even = mpmath.fsum(frame.weights[0::2])
        odd = mpmath.fsum(frame.weights[1::2])
        if abs(even - mpmath.mpf(1) / 2) > 1e-12 or abs(odd - mpmath.mpf(1) / 2) > 1e-12:
            return None
        return gamma, span


def _gamma_value(frame: EigenFrame):
    """gamma as an exact AlgebraicReal when the spectrum forms allow it."""
    exact = frame.spectrum.exact
    if exact is None:
        return None
    f = exact.forms
    gap = f[2] - f[0]
    if not gap.is_rational:
        return None
    return (f[1] - f[0]) * 2 / gap.rational_value


def _expand(z_exact, z_numeric, digits: int, depth: int):
    if z_exact is not None:
        cf = continued_fraction(z_exact, depth, digits)
    else:
        cf = continued_fraction(z_numeric, depth, max(digits - 5, 5))
    principal = convergents(cf)
    if len(principal) < 2:
        return principal
    return intermediate_convergents(principal)


def _recipe_five_site(frame, a, b, count, z_exact) -> list[WaitingTimeEstimate]:
    with mpmath.workdps(frame.dps):
        z = a / b
        pool = parity_filter(_expand(z_exact, z, frame.digits, 4 * count + 8), "even", "odd")
        out = []
        for c in pool:
            if c.u <= 0:
                continue
            t = mpmath.pi * c.v / b
            eps = z - mpmath.mpf(c.u) / c.v
            predicted = 1 - (b * b / (a * a)) * mpmath.sin(mpmath.pi * c.v * eps / 2) ** 2
            coarse = 1 - mpmath.pi**2 * b * b / (a * a * c.v * c.v)
            out.append((t, c, float(predicted), float(eps), float(coarse)))
            if len(out) == count:
                break
    return [_validated(frame, t, c, p, e, RECIPE_FIVE_SITE, coarse) for t, c, p, e, coarse in out]


def _recipe_bi_lattice(frame, gamma, span, count, g_exact) -> list[WaitingTimeEstimate]:
    with mpmath.workdps(frame.dps):
        pool = parity_filter(_expand(g_exact, gamma, frame.digits, 4 * count + 8), "odd", "any")
        out = []
        for c in pool:
            if c.u <= 0:
                continue
            t = mpmath.pi * c.v * 2 / span
            eps = gamma - mpmath.mpf(c.u) / c.v
            predicted = abs(mpmath.cos(mpmath.pi * c.v * eps / 2))
            out.append((t, c, float(predicted), float(eps)))
            if len(out) == count:
                break
    return [_validated(frame, t, c, p, e, RECIPE_BI_LATTICE) for t, c, p, e in out]


def _validated(frame, t, convergent, predicted, epsilon, recipe, coarse=None) -> WaitingTimeEstimate:
    measured = abs(dynamics.amplitude(frame, 0, frame.N, t))
    if abs(predicted - measured) > _prediction_tolerance(epsilon):
        raise PredictionMismatch(
            f"recipe {recipe} at t={mpmath.nstr(t, 12)}: predicted {predicted:.12g}, measured {measured:.12g}"
        )
    return WaitingTimeEstimate(t, convergent, predicted, measured, epsilon, recipe, coarse)


def _recipe_scan(frame: EigenFrame, count: int, t_max: float | None) -> list[WaitingTimeEstimate]:
    x, w, chi = frame.arrays()
    width = float(x[-1] - x[0])
    step = math.pi / width / 8
    if t_max is None:
        t_max = 400 * math.pi / width * frame.N
    result = dynamics.scan_fidelity(frame, t_max, step)
    fid = result.trace.fidelities
    times = result.trace.times
    coeffs = w * chi[0] * chi[-1]
    records = []
    best = 0.0
    for k in range(1, len(fid) - 1):
        if fid[k] >= fid[k - 1] and fid[k] >= fid[k + 1] and fid[k] > best + 1e-9:
            t_ref, f_ref = dynamics._golden_max(
                lambda t: float(abs(np.exp(-1j * x * t) @ coeffs) ** 2), float(times[k - 1]), float(times[k + 1])
            )
            if f_ref > best + 1e-9:
                best = f_ref
                records.append(t_ref)
    out = []
    for t in records[-count:]:
        amp = abs(dynamics.amplitude(frame, 0, frame.N, t))
        out.append(WaitingTimeEstimate(mpmath.mpf(t), None, amp, amp, None, RECIPE_SCAN))
    return out


def waiting_times(
    chain: ChainSpec,
    count: int = 6,
    classification: TransferClass | None = None,
    digits: int | None = None,
    t_max: float | None = None,
) -> list[WaitingTimeEstimate]:
    """Times t_n at which |f_0N(t_n)| approaches 1, with predicted amplitudes.

    Uses the five-site two-frequency recipe or the bi-lattice recipe when the
    chain fits, otherwise reports record maxima of a time scan.
    """
    if count < 1:
        raise ValueError("count must be positive")
    tc = classification or classify(chain, digits=digits)
    if tc.verdict != APST:
        raise UnsupportedRecipe(f"waiting times need an APST chain; verdict is {tc.verdict}", tc)
    frame = build_frame(chain, digits, tc.spectrum)
    params = _five_site_params(frame, chain)
    if params is not None:
        a, b = params
        z_exact = None
        exact = frame.spectrum.exact
        if exact is not None:
            fa, fb = exact.forms[4] - exact.forms[2], exact.forms[3] - exact.forms[2]
            if fb.is_rational:
                z_exact = fa / fb.rational_value
        return _recipe_five_site(frame, a, b, count, z_exact)
    params = _bi_lattice_params(frame)
    if params is not None:
        gamma, span = params
        return _recipe_bi_lattice(frame, gamma, span, count, _gamma_value(frame))
    return _recipe_scan(frame, count, t_max)
