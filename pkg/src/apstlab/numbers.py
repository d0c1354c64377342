"""Exact and arbitrary-precision number handling.

Chain entries come in three flavours, recorded as a value kind:

* ``exact-rational`` -- sympy ``Rational`` values,
* ``closed-form``    -- other exact real sympy expressions (surds, ``cos(pi*p/q)``),
* ``floating``       -- ``mpmath.mpf`` values with a known number of input digits.

Spectra that must support exact rationality questions are carried as
:class:`AlgebraicReal` values: finite rational combinations of the atoms
``1``, ``sqrt(d)`` and ``2*cos(2*pi*k/M)``.  Linear relations over Q between
such numbers are decided exactly by :func:`coordinate_matrix`, which maps them
into a basis that is linearly independent over Q.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr

from .errors import InvalidEntry

EXACT_RATIONAL = "exact-rational"
CLOSED_FORM = "closed-form"
FLOATING = "floating"
VALUE_KINDS = (EXACT_RATIONAL, CLOSED_FORM, FLOATING)

FLOAT_DIGITS = 15
GUARD_DIGITS = 15

_DECIMAL_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")
_PARSE_NAMES = {"sqrt": sp.sqrt, "cos": sp.cos, "pi": sp.pi, "Rational": sp.Rational}


def _significant_digits(text: str) -> int:
    mantissa = re.split(r"[eE]", text.lstrip("+-"))[0].replace(".", "").lstrip("0")
    return len(mantissa)


def parse_expression(text: str, evaluate: bool = True) -> sp.Expr:
    try:
        expr = parse_expr(text, local_dict=dict(_PARSE_NAMES), evaluate=evaluate)
    except Exception as exc:  # sympy raises a zoo of exception types
        raise InvalidEntry(f"cannot parse {text!r}: {exc}") from exc
    if not isinstance(expr, sp.Expr) or expr.free_symbols:
        raise InvalidEntry(f"{text!r} is not a numeric expression")
    return expr


def parse_entry(raw) -> tuple[object, str, int | None]:
    """Interpret one chain entry.

    Returns ``(value, kind, digits)`` where ``digits`` is the number of
    significant input digits for floating values and ``None`` otherwise.
    """
    if isinstance(raw, bool):
        raise InvalidEntry("booleans are not chain entries")
    if isinstance(raw, int):
        return sp.Integer(raw), EXACT_RATIONAL, None
    if isinstance(raw, Fraction):
        return sp.Rational(raw.numerator, raw.denominator), EXACT_RATIONAL, None
    if isinstance(raw, float):
        if not math.isfinite(raw):
            raise InvalidEntry(f"non-finite entry {raw!r}")
        return mpmath.mpf(raw), FLOATING, FLOAT_DIGITS
    if isinstance(raw, mpmath.mpf):
        return raw, FLOATING, max(1, int(raw.context.prec * math.log10(2)))
    if isinstance(raw, str):
        text = raw.strip()
        if _DECIMAL_RE.match(text) and any(c in text for c in ".eE"):
            digits = max(FLOAT_DIGITS, _significant_digits(text))
            with mpmath.workdps(digits + GUARD_DIGITS):
                return mpmath.mpf(text), FLOATING, digits
        raw = parse_expression(text)
    if isinstance(raw, sp.Basic):
        expr = sp.sympify(raw)
        if isinstance(expr, sp.Float):
            digits = max(FLOAT_DIGITS, int(expr._prec * math.log10(2)))
            return mpmath.mpf(expr._mpf_), FLOATING, digits
        if not expr.is_number or expr.free_symbols or expr.has(sp.nan, sp.zoo, sp.oo):
            raise InvalidEntry(f"{raw!r} is not a finite number")
        if expr.is_real is False:
            raise InvalidEntry(f"{raw!r} is not real")
        if expr.is_Rational:
            return expr, EXACT_RATIONAL, None
        return expr, CLOSED_FORM, None
    raise InvalidEntry(f"unsupported entry type {type(raw).__name__}")


def combine_kinds(kinds: Iterable[str]) -> str:
    kinds = set(kinds)
    if FLOATING in kinds:
        return FLOATING
    if CLOSED_FORM in kinds:
        return CLOSED_FORM
    return EXACT_RATIONAL


@lru_cache(maxsize=8192)
def _sympy_to_mpf(expr: sp.Expr, dps: int) -> mpmath.mpf:
    with mpmath.workdps(dps + 5):
        return mpmath.mpf(sp.N(expr, dps + 5)._mpf_)


def to_mpf(value, dps: int) -> mpmath.mpf:
    """Evaluate an entry (or AlgebraicReal) to ``dps`` decimal digits."""
    if isinstance(value, AlgebraicReal):
        return value.evaluate(dps)
    if isinstance(value, sp.Basic):
        if value.is_Rational:
            with mpmath.workdps(dps + 5):
                return mpmath.mpf(int(value.p)) / int(value.q)
        return _sympy_to_mpf(value, dps)
    if isinstance(value, Fraction):
        with mpmath.workdps(dps + 5):
            return mpmath.mpf(value.numerator) / value.denominator
    with mpmath.workdps(dps + 5):
        return mpmath.mpf(value)


def mpf_to_fraction(x: mpmath.mpf) -> Fraction:
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    man = -int(man) if sign else int(man)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2 ** (-exp))


def render(x, digits: int) -> str:
    """Decimal string with ``digits`` significant digits; deterministic."""
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        x = mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else mpmath.mpf(x)
    with mpmath.workdps(digits + 5):
        return mpmath.nstr(mpmath.mpf(x), digits, strip_zeros=True, min_fixed=-6, max_fixed=12)


def entry_to_json(value, kind: str, digits: int):
    if kind == FLOATING:
        return render(value, digits)
    if isinstance(value, sp.Integer):
        return int(value)
    return str(value)


# --------------------------------------------------------------------------
# algebraic reals


def _squarefree_split(n: int) -> tuple[int, int]:
    """n = c**2 * d with d squarefree; returns (c, d)."""
    c, d = 1, 1
    for p, e in sp.factorint(n).items():
        c *= p ** (e // 2)
        if e % 2:
            d *= p
    return c, d


def _canonical_cos(k: int, m: int) -> tuple[tuple, Fraction] | tuple[None, Fraction]:
    """Canonical atom for 2cos(2 pi k/m); rational values come back as (None, value)."""
    k %= m
    k = min(k, m - k)
    g = math.gcd(k, m)
    k, m = k // g, m // g
    rational = {1: 2, 2: -2, 3: -1, 4: 0, 6: 1}
    if m in rational:
        return None, Fraction(rational[m])
    return ("cos", k, m), Fraction(1)


ONE = ("1",)


@dataclass(frozen=True)
class AlgebraicReal:
    """A rational combination of the atoms 1, sqrt(d) and 2cos(2 pi k/M)."""

    terms: tuple[tuple[tuple, Fraction], ...] = ()

    @staticmethod
    def _build(mapping: dict) -> "AlgebraicReal":
        return AlgebraicReal(tuple(sorted((a, c) for a, c in mapping.items() if c != 0)))

    @classmethod
    def rational(cls, q) -> "AlgebraicReal":
        return cls._build({ONE: Fraction(q)})

    @classmethod
    def sqrt(cls, n, coeff=1) -> "AlgebraicReal":
        n = Fraction(n)
        if n < 0:
            raise ValueError("square root of a negative number")
        # sqrt(p/q) = sqrt(p*q)/q
        c, d = _squarefree_split(n.numerator * n.denominator)
        coeff = Fraction(coeff) * Fraction(c, n.denominator)
        if d == 1:
            return cls.rational(coeff)
        return cls._build({("sqrt", d): coeff})

    @classmethod
    def two_cos(cls, k: int, m: int, coeff=1) -> "AlgebraicReal":
        atom, value = _canonical_cos(k, m)
        if atom is None:
            return cls.rational(Fraction(coeff) * value)
        return cls._build({atom: Fraction(coeff)})

    def _as_dict(self) -> dict:
        return dict(self.terms)

    def __add__(self, other):
        if not isinstance(other, AlgebraicReal):
            other = AlgebraicReal.rational(other)
        out = self._as_dict()
        for a, c in other.terms:
            out[a] = out.get(a, 0) + c
        return AlgebraicReal._build(out)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicReal(tuple((a, -c) for a, c in self.terms))

    def __sub__(self, other):
        if not isinstance(other, AlgebraicReal):
            other = AlgebraicReal.rational(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, q):
        if isinstance(q, AlgebraicReal):
            if not q.is_rational:
                if self.is_rational:
                    return q * self.rational_value
                raise TypeError("product of two irrational AlgebraicReal values")
            q = q.rational_value
        q = Fraction(q)
        return AlgebraicReal._build({a: c * q for a, c in self.terms})

    __rmul__ = __mul__

    def __truediv__(self, q):
        return self * (1 / Fraction(q))

    @property
    def is_rational(self) -> bool:
        return all(a == ONE for a, _ in self.terms)

    @property
    def rational_value(self) -> Fraction:
        if not self.is_rational:
            raise ValueError("not rational")
        return dict(self.terms).get(ONE, Fraction(0))

    @property
    def families(self) -> set[str]:
        return {a[0] for a, _ in self.terms if a != ONE}

    def evaluate(self, dps: int) -> mpmath.mpf:
        with mpmath.workdps(dps + 10):
            total = mpmath.mpf(0)
            for atom, c in self.terms:
                coeff = mpmath.mpf(c.numerator) / c.denominator
                if atom == ONE:
                    total += coeff
                elif atom[0] == "sqrt":
                    total += coeff * mpmath.sqrt(atom[1])
                else:
                    total += coeff * 2 * mpmath.cospi(mpmath.mpf(2 * atom[1]) / atom[2])
        with mpmath.workdps(dps):
            return +total

    def to_sympy(self) -> sp.Expr:
        parts = []
        for atom, c in self.terms:
            q = sp.Rational(c.numerator, c.denominator)
            if atom == ONE:
                parts.append(q)
            elif atom[0] == "sqrt":
                parts.append(q * sp.sqrt(atom[1]))
            else:
                parts.append(2 * q * sp.cos(2 * sp.pi * sp.Rational(atom[1], atom[2])))
        return sp.Add(*parts)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for atom, c in self.terms:
            if atom == ONE:
                parts.append(str(c))
                continue
            coeff = {1: "", -1: "-"}.get(c, f"{c}*")
            if atom[0] == "sqrt":
                parts.append(f"{coeff}sqrt({atom[1]})")
            else:
                parts.append(f"{coeff}2*cos(2*pi*{atom[1]}/{atom[2]})")
        return " + ".join(parts).replace("+ -", "- ")

    @classmethod
    def parse(cls, text: str) -> "AlgebraicReal":
        value = cls.from_sympy(parse_expression(text, evaluate=False))
        if value is None:
            raise InvalidEntry(f"{text!r} is not a supported exact form")
        return value

    @classmethod
    def from_sympy(cls, expr) -> "AlgebraicReal | None":
        """Convert a sympy expression; None when it is not of a supported shape."""
        expr = sp.sympify(expr)
        return _walk(expr)


def _rational_of(expr) -> Fraction | None:
    value = _walk(expr)
    if value is not None and value.is_rational:
        return value.rational_value
    return None


def _walk(expr) -> AlgebraicReal | None:
    if expr.is_Rational:
        return AlgebraicReal.rational(Fraction(int(expr.p), int(expr.q)))
    if isinstance(expr, sp.Add):
        total = AlgebraicReal()
        for arg in expr.args:
            part = _walk(arg)
            if part is None:
                return None
            total = total + part
        return total
    if isinstance(expr, sp.Mul):
        product = AlgebraicReal.rational(1)
        for arg in expr.args:
            part = _walk(arg)
            if part is None:
                return None
            if product.is_rational:
                product = part * product.rational_value
            elif part.is_rational:
                product = product * part.rational_value
            else:
                return _walk_product(expr)
        return product
    if isinstance(expr, sp.Pow):
        base = _rational_of(expr.base)
        if base is None:
            return None
        exponent = expr.exp
        if exponent.is_Integer:
            if base == 0 and exponent < 0:
                return None
            return AlgebraicReal.rational(base ** int(exponent))
        if exponent == sp.Rational(1, 2) and base >= 0:
            return AlgebraicReal.sqrt(base)
        if exponent == sp.Rational(-1, 2) and base > 0:
            return AlgebraicReal.sqrt(1 / base)
        return None
    if isinstance(expr, sp.cos):
        ratio = sp.nsimplify(sp.simplify(expr.args[0].doit() / sp.pi))
        if not ratio.is_Rational:
            return None
        # cos(pi p/q) = (1/2) * 2cos(2 pi p/(2q))
        return AlgebraicReal.two_cos(int(ratio.p), 2 * int(ratio.q), Fraction(1, 2))
    return None


def _walk_product(expr) -> AlgebraicReal | None:
    # sqrt(a)*sqrt(b) style products left unevaluated by the parser
    evaluated = sp.sympify(expr).doit()
    if evaluated == expr:
        return None
    return _walk(evaluated)


@dataclass(frozen=True)
class ExactSpectrum:
    """Exact eigenvalues up to a common positive factor.

    The actual eigenvalues are ``scale * forms[s]``; ``scale`` is ``None`` for 1.
    Integer relations and gap ratios are invariant under the scale, so the
    forms alone decide them.
    """

    forms: tuple[AlgebraicReal, ...]
    scale: mpmath.mpf | None = None

    def values(self, dps: int) -> list[mpmath.mpf]:
        with mpmath.workdps(dps + 10):
            scale = mpmath.mpf(1) if self.scale is None else mpmath.mpf(self.scale)
            return [scale * f.evaluate(dps) for f in self.forms]

    def subset(self, indices: Sequence[int]) -> "ExactSpectrum":
        return ExactSpectrum(tuple(self.forms[i] for i in indices), self.scale)


# --------------------------------------------------------------------------
# coordinates in a Q-linearly independent basis


@lru_cache(maxsize=64)
def _cyclotomic_power_table(m: int) -> tuple[tuple[int, ...], ...]:
    """Coordinates of zeta_m**j (j = 0..m-1) in the power basis of Q(zeta_m)."""
    x = sp.Symbol("z")
    coeffs = [int(c) for c in sp.Poly(sp.cyclotomic_poly(m, x), x).all_coeffs()]
    degree = len(coeffs) - 1
    low = coeffs[::-1][:degree]  # z**degree = -sum(low[i] z**i)
    table = []
    current = [1] + [0] * (degree - 1)
    for _ in range(m):
        table.append(tuple(current))
        top = current[-1]
        shifted = [0] + current[:-1]
        current = [shifted[i] - top * low[i] for i in range(degree)]
    return tuple(table)


def _sqrt_conductor(d: int) -> int:
    m = 1
    for p in sp.factorint(d):
        m = math.lcm(m, 8 if p == 2 else (p if p % 4 == 1 else 4 * p))
    return m


def _group_ring_product(a: dict, b: dict, m: int) -> dict:
    out: dict[int, int] = {}
    for i, x in a.items():
        for j, y in b.items():
            k = (i + j) % m
            out[k] = out.get(k, 0) + x * y
    return out


@lru_cache(maxsize=256)
def _sqrt_in_cyclotomic_cached(d: int, m: int) -> tuple[tuple[int, int], ...]:
    # sqrt(p) from quadratic Gauss sums: sum_a (a|p) zeta_p^a is sqrt(p) for
    # p = 1 mod 4 and i*sqrt(p) for p = 3 mod 4; sqrt(2) = zeta_8 + zeta_8^-1
    value = {0: 1}
    for p in sp.factorint(d):
        if p == 2:
            factor = {m // 8: 1, (-(m // 8)) % m: 1}
        else:
            step = m // p
            factor = {(a * step) % m: int(sp.legendre_symbol(a, p)) for a in range(1, p)}
            if p % 4 == 3:
                factor = _group_ring_product(factor, {(3 * m // 4) % m: 1}, m)  # times -i
        value = _group_ring_product(value, factor, m)
    return tuple(sorted((k, v) for k, v in value.items() if v))


def _sqrt_in_cyclotomic(d: int, m: int) -> dict[int, int]:
    """sqrt(d) as an integer combination of powers of zeta_m (m a multiple of
    the conductor of Q(sqrt(d)))."""
    return dict(_sqrt_in_cyclotomic_cached(d, m))


def coordinate_matrix(forms: Sequence[AlgebraicReal]):
    """Rational coordinates of ``forms`` in a basis linearly independent over Q.

    Returns ``(keys, columns)`` where ``columns[s][i]`` is the coordinate of
    ``forms[s]`` along ``keys[i]``.  Square roots use the surd basis unless
    cosines are present, in which case everything lives in a cyclotomic field.
    """
    families = set().union(*(f.families for f in forms)) if forms else set()
    if "cos" not in families:
        keys = sorted({a for f in forms for a, _ in f.terms})
        columns = [[dict(f.terms).get(k, Fraction(0)) for k in keys] for f in forms]
        return keys, columns
    m = 1
    for f in forms:
        for atom, _ in f.terms:
            if atom[0] == "cos":
                m = math.lcm(m, atom[2])
            elif atom[0] == "sqrt":
                m = math.lcm(m, _sqrt_conductor(atom[1]))
    table = _cyclotomic_power_table(m)
    degree = len(table[0])
    keys = [ONE] + [("zeta", m, j) for j in range(1, degree)]
    columns = []
    for f in forms:
        vec = [Fraction(0)] * degree
        for atom, c in f.terms:
            if atom == ONE:
                vec[0] += c
                continue
            if atom[0] == "sqrt":
                powers = _sqrt_in_cyclotomic(atom[1], m)
            else:
                step = atom[1] * (m // atom[2])
                powers = {step % m: 1}
                powers[(-step) % m] = powers.get((-step) % m, 0) + 1
            for power, weight in powers.items():
                for i, v in enumerate(table[power]):
                    vec[i] += c * weight * v
        columns.append(vec)
    return keys, columns


def exact_values_equal(a: AlgebraicReal, b: AlgebraicReal) -> bool:
    coords = coordinate_matrix([a - b])
    if coords is None:
        return bool(sp.simplify((a - b).to_sympy()) == 0)
    return all(c == 0 for c in coords[1][0])
