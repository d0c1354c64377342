"""Chain specifications and the one-excitation Jacobi operator.

Sites are numbered 0..N and couplings 1..N: ``couplings[l-1]`` joins sites
``l-1`` and ``l``.  The boundary couplings J_0 = J_{N+1} = 0 are implicit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import mpmath
import numpy as np
import sympy as sp

from .errors import InvalidEntry, LengthMismatch, NonPositiveCoupling
from .numbers import (
    CLOSED_FORM,
    EXACT_RATIONAL,
    FLOATING,
    VALUE_KINDS,
    AlgebraicReal,
    ExactSpectrum,
    combine_kinds,
    entry_to_json,
    parse_entry,
    render,
    to_mpf,
)


@dataclass(frozen=True)
class ChainSpec:
    """Couplings J_1..J_N and fields B_0..B_N of an XX chain with N+1 sites.

    Exact chains hold sympy numbers, floating chains hold ``mpmath.mpf``.
    ``analytic_spectrum`` optionally carries a closed-form spectrum (attached by
    the model generators and by spectrum-based synthesis); it is always
    cross-checked against the numeric eigenvalues before use.
    """

    n_sites: int
    couplings: tuple
    fields: tuple
    value_kind: str
    input_digits: int | None = None
    analytic_spectrum: ExactSpectrum | None = field(default=None, compare=False)

    @property
    def N(self) -> int:
        return self.n_sites - 1

    @property
    def is_exact(self) -> bool:
        return self.value_kind != FLOATING

    def coupling_squares(self) -> tuple:
        """J_n**2, exact for exact chains (couplings may be square roots)."""
        if self.is_exact:
            return tuple(j**2 if j.is_Rational else sp.expand(j**2) for j in self.couplings)
        return tuple(j * j for j in self.couplings)

    def numeric(self, dps: int) -> tuple[list[mpmath.mpf], list[mpmath.mpf]]:
        """(couplings, fields) as mpf at ``dps`` digits."""
        return [to_mpf(j, dps) for j in self.couplings], [to_mpf(b, dps) for b in self.fields]

    def as_float(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.array([float(to_mpf(j, 20)) for j in self.couplings]),
            np.array([float(to_mpf(b, 20)) for b in self.fields]),
        )

    def with_spectrum(self, spectrum: ExactSpectrum | None) -> "ChainSpec":
        return ChainSpec(self.n_sites, self.couplings, self.fields, self.value_kind, self.input_digits, spectrum)


def build_chain(n_sites: int, couplings: Sequence, fields: Sequence, value_kind: str | None = None) -> ChainSpec:
    """Validate entries and build a :class:`ChainSpec`.

    Entries may be ints, Fractions, floats, mpf, sympy numbers or strings
    (``"p/q"``, ``"a+b*sqrt(d)"``, decimal strings).  ``value_kind`` is
    inferred unless given; a floating request forces numeric storage.
    """
    if not isinstance(n_sites, int) or n_sites < 2:
        raise LengthMismatch(f"need at least 2 sites, got n_sites={n_sites!r}")
    if len(couplings) != n_sites - 1:
        raise LengthMismatch(f"expected {n_sites - 1} couplings, got {len(couplings)}")
    if len(fields) != n_sites:
        raise LengthMismatch(f"expected {n_sites} fields, got {len(fields)}")
    if value_kind is not None and value_kind not in VALUE_KINDS:
        raise InvalidEntry(f"unknown value_kind {value_kind!r}")

    parsed_j = [parse_entry(j) for j in couplings]
    parsed_b = [parse_entry(b) for b in fields]
    kind = combine_kinds(p[1] for p in parsed_j + parsed_b)
    if value_kind == FLOATING:
        kind = FLOATING
    elif value_kind is not None and value_kind != kind:
        if not (value_kind == CLOSED_FORM and kind == EXACT_RATIONAL):
            raise InvalidEntry(f"entries are {kind}, not {value_kind}")
        kind = value_kind

    digits = None
    if kind == FLOATING:
        digits = min((p[2] for p in parsed_j + parsed_b if p[2] is not None), default=None)
        if digits is None:
            digits = 60
        js = tuple(p[0] if p[1] == FLOATING else to_mpf(p[0], digits + 20) for p in parsed_j)
        bs = tuple(p[0] if p[1] == FLOATING else to_mpf(p[0], digits + 20) for p in parsed_b)
        for l, j in enumerate(js, start=1):
            if not j > 0:
                raise NonPositiveCoupling(f"J_{l} = {j} is not positive")
    else:
        js = tuple(p[0] for p in parsed_j)
        bs = tuple(p[0] for p in parsed_b)
        for l, j in enumerate(js, start=1):
            positive = j.is_positive
            if positive is None:
                positive = bool(to_mpf(j, 30) > 0)
            if not positive:
                raise NonPositiveCoupling(f"J_{l} = {j} is not positive")
    return ChainSpec(n_sites, js, bs, kind, digits)


class TridiagonalOperator(NamedTuple):
    diagonal: tuple
    off_diagonal: tuple

    def apply_basis(self, n: int) -> dict[int, object]:
        """J e_n = J_{n+1} e_{n+1} + B_n e_n + J_n e_{n-1} as {site: coefficient}."""
        out = {n: self.diagonal[n]}
        if n + 1 < len(self.diagonal):
            out[n + 1] = self.off_diagonal[n]
        if n > 0:
            out[n - 1] = self.off_diagonal[n - 1]
        return out

    def dense(self, dps: int | None = None):
        """Dense matrix: numpy float64, or an mpmath matrix when ``dps`` is given."""
        size = len(self.diagonal)
        if dps is None:
            m = np.zeros((size, size))
            for i, b in enumerate(self.diagonal):
                m[i, i] = float(to_mpf(b, 20))
            for i, j in enumerate(self.off_diagonal):
                m[i, i + 1] = m[i + 1, i] = float(to_mpf(j, 20))
            return m
        with mpmath.workdps(dps):
            m = mpmath.zeros(size, size)
            for i, b in enumerate(self.diagonal):
                m[i, i] = to_mpf(b, dps)
            for i, j in enumerate(self.off_diagonal):
                m[i, i + 1] = m[i + 1, i] = to_mpf(j, dps)
            return m


def jacobi_operator(chain: ChainSpec) -> TridiagonalOperator:
    return TridiagonalOperator(tuple(chain.fields), tuple(chain.couplings))


class MirrorCheck(NamedTuple):
    symmetric: bool
    deviation: float


def _difference(a, b, exact: bool):
    if exact:
        d = a - b if a.is_Rational and b.is_Rational else sp.expand(a - b)
        if d == 0 or sp.simplify(d) == 0:
            return 0.0, True
        return abs(float(to_mpf(d, 30))), False
    return abs(float(a - b)), False


def is_mirror_symmetric(chain: ChainSpec, tol: float = 0.0) -> MirrorCheck:
    """Check B_s = B_{N-s} and J_s = J_{N+1-s}; reports the worst deviation.

    Exact chains compare symbolically, so ``tol = 0`` is meaningful for them.
    """
    N = chain.N
    worst = 0.0
    exact_equal = True
    pairs = [(chain.fields[s], chain.fields[N - s]) for s in range(N // 2 + 1)]
    pairs += [(chain.couplings[s], chain.couplings[N - 1 - s]) for s in range(N // 2)]
    for a, b in pairs:
        dev, equal = _difference(a, b, chain.is_exact)
        worst = max(worst, dev)
        exact_equal = exact_equal and (equal or dev == 0.0)
    if chain.is_exact:
        return MirrorCheck(exact_equal or (tol > 0 and worst <= tol), worst)
    return MirrorCheck(worst <= tol, worst)


def decompose(chain: ChainSpec) -> tuple[int, tuple, tuple]:
    return chain.n_sites, chain.couplings, chain.fields


# --------------------------------------------------------------------------
# JSON


def chain_to_dict(chain: ChainSpec, digits: int | None = None) -> dict:
    digits = digits or chain.input_digits or 50
    doc = {
        "n_sites": chain.n_sites,
        "couplings": [entry_to_json(j, chain.value_kind, digits) for j in chain.couplings],
        "fields": [entry_to_json(b, chain.value_kind, digits) for b in chain.fields],
        "value_kind": chain.value_kind,
    }
    if chain.analytic_spectrum is not None:
        doc["spectrum"] = [str(f) for f in chain.analytic_spectrum.forms]
        if chain.analytic_spectrum.scale is not None:
            doc["spectrum_scale"] = render(chain.analytic_spectrum.scale, digits + 10)
    return doc


def chain_from_dict(doc: dict) -> ChainSpec:
    try:
        n_sites = doc["n_sites"]
        couplings = doc["couplings"]
        fields = doc["fields"]
    except (KeyError, TypeError) as exc:
        raise InvalidEntry(f"chain document missing key: {exc}") from exc
    chain = build_chain(n_sites, couplings, fields, doc.get("value_kind"))
    if "spectrum" in doc:
        forms = tuple(AlgebraicReal.parse(str(v)) for v in doc["spectrum"])
        if len(forms) != n_sites:
            raise LengthMismatch("spectrum length does not match n_sites")
        scale = None
        if "spectrum_scale" in doc:
            text = str(doc["spectrum_scale"])
            with mpmath.workdps(len(text) + 10):
                scale = mpmath.mpf(text)
        chain = chain.with_spectrum(ExactSpectrum(forms, scale))
    return chain


def dumps_chain(chain: ChainSpec, digits: int | None = None) -> str:
    return json.dumps(chain_to_dict(chain, digits), indent=2)


def loads_chain(text: str) -> ChainSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidEntry(f"malformed JSON: {exc}") from exc
    return chain_from_dict(doc)
