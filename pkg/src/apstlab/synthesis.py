"""Spectrum -> mirror-symmetric chain, spectral surgery and model generators.

The inverse problem uses the fact that a mirror-symmetric Jacobi matrix is
fixed by its spectrum: the weights are w_s ~ 1/|P'(x_s)|, and the Lanczos
process on diag(x) started from sqrt(w) returns the recurrence coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import mpmath
import sympy as sp

from .chain import ChainSpec, build_chain
from .errors import DegenerateSpectrum, InadmissiblePlan, InvalidEntry, InvalidParams, NonPositiveCoupling
from .numbers import FLOATING, GUARD_DIGITS, AlgebraicReal, ExactSpectrum, parse_entry
from .spectral import Spectrum, make_spectrum

BREAKDOWN = mpmath.mpf("1e-13")

UNIFORM = "uniform"
KRAWTCHOUK = "krawtchouk"
PARA_KRAWTCHOUK = "para_krawtchouk"
FIVE_SITE = "five_site"
VARIANTS = (UNIFORM, KRAWTCHOUK, PARA_KRAWTCHOUK, FIVE_SITE)


def mirror_weights(values: Sequence[mpmath.mpf]) -> list[mpmath.mpf]:
    """Normalized weights 1/|prod_{k != s}(x_s - x_k)| of the mirror chain."""
    raw = []
    for s, xs in enumerate(values):
        raw.append(1 / abs(mpmath.fprod(xs - xk for k, xk in enumerate(values) if k != s)))
    total = mpmath.fsum(raw)
    return [r / total for r in raw]


def _lanczos(values: list, weights: list) -> tuple[list, list]:
    """Recurrence coefficients (fields, couplings) of the discrete measure."""
    size = len(values)
    scale = max(abs(v) for v in values) or mpmath.mpf(1)
    scale = max(scale, values[-1] - values[0])
    basis = [[mpmath.sqrt(w) for w in weights]]
    fields, couplings = [], []
    for n in range(size):
        q = basis[n]
        fields.append(mpmath.fsum(x * c * c for x, c in zip(values, q)))
        if n == size - 1:
            break
        r = [x * c for x, c in zip(values, q)]
        # modified Gram-Schmidt against every previous vector, then once more
        for _ in range(2):
            for prev in basis:
                proj = mpmath.fsum(a * b for a, b in zip(r, prev))
                r = [a - proj * b for a, b in zip(r, prev)]
        beta = mpmath.sqrt(mpmath.fsum(a * a for a in r))
        if beta < BREAKDOWN * scale:
            raise DegenerateSpectrum("Lanczos breakdown: spectrum has repeated or unresolved values")
        couplings.append(beta)
        basis.append([a / beta for a in r])
    return fields, couplings


def chain_from_spectrum(spectrum: Spectrum | Sequence, digits: int | None = None) -> ChainSpec:
    """The unique mirror-symmetric chain whose spectrum is ``spectrum``.

    The result is a floating chain carrying ``digits`` digits (default: the
    spectrum's precision); exact spectra are attached for later use.
    """
    if not isinstance(spectrum, Spectrum):
        spectrum = make_spectrum(spectrum, digits)
    digits = digits or spectrum.digits
    size = len(spectrum.values)
    if size < 2:
        raise DegenerateSpectrum("need at least two eigenvalues")
    dps = digits + GUARD_DIGITS
    with mpmath.workdps(dps):
        values = [mpmath.mpf(v) for v in spectrum.values]
        if spectrum.exact is not None:
            values = spectrum.exact.values(dps)
        for a, b in zip(values, values[1:]):
            if not b > a:
                raise DegenerateSpectrum("eigenvalues must be distinct and increasing")
        fields, couplings = _lanczos(values, mirror_weights(values))
    for l, j in enumerate(couplings, start=1):
        if not j > 0:
            raise NonPositiveCoupling(f"reconstructed J_{l} is not positive")
    chain = ChainSpec(size, tuple(couplings), tuple(fields), FLOATING, digits)
    if spectrum.exact is not None:
        chain = chain.with_spectrum(spectrum.exact)
    return chain


# --------------------------------------------------------------------------
# surgery

PREFIX = "prefix"
SUFFIX = "suffix"
INTERIOR = "interior-pair-run"


class Block(NamedTuple):
    kind: str
    indices: tuple[int, ...]


@dataclass(frozen=True)
class SurgeryPlan:
    removed: frozenset[int]
    decomposition: tuple[Block, ...]
    size: int

    @property
    def kept(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.size) if i not in self.removed)


def plan_surgery(size: int, removed) -> SurgeryPlan:
    """Validate the removal of levels ``removed`` from a spectrum of ``size``
    levels and split it into prefix, suffix and interior blocks."""
    removed = frozenset(int(i) for i in removed)
    if not removed:
        raise InadmissiblePlan("nothing to remove")
    bad = [i for i in removed if not 0 <= i < size]
    if bad:
        raise InadmissiblePlan(f"indices {sorted(bad)} outside 0..{size - 1}")
    if size - len(removed) < 2:
        raise InadmissiblePlan("at least two levels must survive")
    runs: list[list[int]] = []
    for i in sorted(removed):
        if runs and runs[-1][-1] == i - 1:
            runs[-1].append(i)
        else:
            runs.append([i])
    blocks = []
    for run in runs:
        if run[0] == 0:
            blocks.append(Block(PREFIX, tuple(run)))
        elif run[-1] == size - 1:
            blocks.append(Block(SUFFIX, tuple(run)))
        elif len(run) % 2:
            raise InadmissiblePlan(f"interior run {run} has odd length; only neighbouring pairs may be removed")
        else:
            blocks.append(Block(INTERIOR, tuple(run)))
    return SurgeryPlan(removed, tuple(blocks), size)


def spectral_surgery(spectrum: Spectrum, plan: SurgeryPlan | Sequence[int], digits: int | None = None) -> ChainSpec:
    """Remove the planned levels and rebuild the mirror-symmetric chain."""
    if not isinstance(plan, SurgeryPlan):
        plan = plan_surgery(len(spectrum.values), plan)
    elif plan.size != len(spectrum.values):
        raise InadmissiblePlan("plan was made for a spectrum of a different size")
    return chain_from_spectrum(spectrum.subset(plan.kept), digits)


# --------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ModelParams:
    variant: str
    N: int = 4
    gamma: object = None
    j1: object = 1
    j2: object = 1


class Model(NamedTuple):
    chain: ChainSpec
    spectrum: Spectrum | None


def _exact_param(raw, name: str):
    try:
        value, kind, _ = parse_entry(raw)
    except InvalidEntry as exc:
        raise InvalidParams(f"{name}: {exc}") from exc
    return value, kind


def _positive(value, name: str) -> None:
    positive = value > 0
    if not bool(positive):
        raise InvalidParams(f"{name} must be positive")


def _attach(chain: ChainSpec, forms: list[AlgebraicReal] | None, digits: int | None) -> Model:
    if forms is None:
        return Model(chain, None)
    chain = chain.with_spectrum(ExactSpectrum(tuple(sorted(forms, key=lambda f: f.evaluate(30)))))
    return Model(chain, make_spectrum(list(chain.analytic_spectrum.forms), digits))


def uniform_model(N: int, digits: int | None = None) -> Model:
    chain = build_chain(N + 1, [1] * N, [0] * (N + 1))
    forms = [AlgebraicReal.two_cos(s, 2 * (N + 2)) for s in range(1, N + 2)]
    return _attach(chain, forms, digits)


def krawtchouk_model(N: int, digits: int | None = None) -> Model:
    couplings = [sp.sqrt(sp.Integer(n * (N + 1 - n))) / 2 for n in range(1, N + 1)]
    chain = build_chain(N + 1, couplings, [sp.Rational(N, 2)] * (N + 1))
    return _attach(chain, [AlgebraicReal.rational(s) for s in range(N + 1)], digits)


def para_krawtchouk_couplings_squared(N: int, gamma2):
    """J_n^2 = n(N+1-n)((N+1-2n)^2 - gamma^2) / (4(N-2n)(N-2n+2))."""
    return [
        n * (N + 1 - n) * ((N + 1 - 2 * n) ** 2 - gamma2) / (4 * (N - 2 * n) * (N - 2 * n + 2))
        for n in range(1, N + 1)
    ]


def para_krawtchouk_model(N: int, gamma, digits: int | None = None) -> Model:
    if N % 2 == 0 or N < 1:
        raise InvalidParams("the para-Krawtchouk chain needs an odd N")
    value, kind = _exact_param(gamma, "gamma")
    if kind == FLOATING:
        with mpmath.workdps(60):
            g = mpmath.mpf(value)
            if not 0 < g < 2:
                raise InvalidParams("gamma must lie in (0, 2)")
            squares = para_krawtchouk_couplings_squared(N, g * g)
            chain = build_chain(N + 1, [mpmath.sqrt(j2) for j2 in squares], [(g + N - 1) / 2] * (N + 1))
        return Model(chain, None)
    numeric = float(value)
    if not 0 < numeric < 2:
        raise InvalidParams("gamma must lie in (0, 2)")
    gamma2 = sp.expand(value**2)
    squares = [sp.nsimplify(j2) if gamma2.is_Rational else sp.expand(j2) for j2 in para_krawtchouk_couplings_squared(N, gamma2)]
    couplings = [sp.sqrt(j2) for j2 in squares]
    chain = build_chain(N + 1, couplings, [(value + N - 1) / 2] * (N + 1))
    g = AlgebraicReal.from_sympy(value)
    forms = None
    if g is not None:
        forms = []
        for s in range((N + 1) // 2):
            forms += [AlgebraicReal.rational(2 * s), g + 2 * s]
    return _attach(chain, forms, digits)


def five_site_model(j1=1, j2=1, digits: int | None = None) -> Model:
    v1, k1 = _exact_param(j1, "j1")
    v2, k2 = _exact_param(j2, "j2")
    _positive(v1, "j1")
    _positive(v2, "j2")
    chain = build_chain(5, [v1, v2, v2, v1], [0] * 5)
    if FLOATING in (k1, k2):
        return Model(chain, None)
    a = AlgebraicReal.from_sympy(sp.sqrt(sp.expand(v1**2 + 2 * v2**2)))
    b = AlgebraicReal.from_sympy(v1)
    if a is None or b is None:
        return Model(chain, None)
    zero = AlgebraicReal.rational(0)
    return _attach(chain, [-a, -b, zero, b, a], digits)


def generate_model(params: ModelParams, digits: int | None = None) -> Model:
    """Chain (with its closed-form spectrum attached) for one of the models."""
    variant = params.variant.replace("-", "_")
    if variant not in VARIANTS:
        raise InvalidParams(f"unknown model {params.variant!r}")
    if variant == FIVE_SITE:
        if params.N not in (None, 4):
            raise InvalidParams("the five-site model has N = 4")
        return five_site_model(params.j1, params.j2, digits)
    if not isinstance(params.N, int) or params.N < 1:
        raise InvalidParams("N must be a positive integer")
    if variant == UNIFORM:
        return uniform_model(params.N, digits)
    if variant == KRAWTCHOUK:
        return krawtchouk_model(params.N, digits)
    if params.gamma is None:
        raise InvalidParams("the para-Krawtchouk model needs gamma")
    return para_krawtchouk_model(params.N, params.gamma, digits)
