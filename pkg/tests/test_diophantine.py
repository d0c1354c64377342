import math
import random
from fractions import Fraction

import mpmath
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from apstlab.diophantine import (
    INTERMEDIATE,
    PRINCIPAL,
    Convergent,
    IntegerRelationSet,
    affine_normalize,
    congruence_holds,
    continued_fraction,
    convergents,
    exhaustive_relations,
    generalized_convergents,
    integer_relations,
    intermediate_convergents,
    kronecker_solve,
    numeric_relations,
    parity_filter,
    required_digits,
)
from apstlab.errors import PrecisionExhausted, PrecisionInsufficient
from apstlab.numbers import AlgebraicReal
from apstlab.spectral import make_spectrum
from apstlab.synthesis import five_site_model, para_krawtchouk_model, uniform_model
from oracles import in_integer_span, kronecker_bruteforce, numeric_relations_bruteforce


def fractions(seq):
    return [Fraction(c.u, c.v) for c in seq]


def test_sqrt3_expansion_and_convergents():
    cf = continued_fraction(sp.sqrt(3), 12)
    assert cf.quotients == (1,) + (1, 2) * 5 + (1,)
    assert not cf.complete
    expected = [1, 2, Fraction(5, 3), Fraction(7, 4), Fraction(19, 11), Fraction(26, 15), Fraction(71, 41)]
    assert fractions(convergents(cf))[:7] == expected
    assert all(c.kind == PRINCIPAL for c in convergents(cf))


def test_integer_and_golden_ratio():
    cf = continued_fraction(2)
    assert cf.quotients == (2,) and cf.complete
    assert [str(c) for c in convergents(cf)] == ["2/1"]
    assert continued_fraction((1 + sp.sqrt(5)) / 2, 15).quotients == (1,) * 15
    assert continued_fraction(Fraction(12, 7)).quotients == (1, 1, 2, 2)


def test_floating_input_is_truncated_to_certified_terms():
    with mpmath.workdps(20):
        short = continued_fraction(mpmath.sqrt(2), 100)
    with mpmath.workdps(60):
        long = continued_fraction(mpmath.sqrt(2), 100)
    assert 10 < len(short.quotients) < len(long.quotients) < 100
    assert set(long.quotients[1:]) == {2}
    assert 20 <= short.source_digits <= 21


def test_precision_exhausted():
    with pytest.raises(PrecisionExhausted):
        continued_fraction("3.0000", 5, digits=2)


@pytest.mark.parametrize("z", [sp.sqrt(2), sp.sqrt(3), sp.sqrt(7), sp.pi, sp.E, (1 + sp.sqrt(5)) / 2, sp.sqrt(3) / 7])
def test_best_approximation_law(z):
    for c in convergents(continued_fraction(z, 18)):
        assert math.gcd(c.u, c.v) == 1
        with mpmath.workdps(80):
            err = abs(mpmath.mpf(sp.N(z, 80)) - mpmath.mpf(c.u) / c.v)
            assert err < mpmath.mpf(1) / c.v**2
            assert err <= mpmath.mpf(c.error_bound.numerator) / c.error_bound.denominator


def test_mediants():
    sqrt3 = [str(c) for c in intermediate_convergents(convergents(continued_fraction(sp.sqrt(3), 5)))]
    assert "12/7" in sqrt3
    pair = [Convergent(1, 1), Convergent(1, 2)]
    out = intermediate_convergents(pair)
    assert Fraction(3, 2) in fractions(out)
    assert {c.kind for c in out if Fraction(c.u, c.v) == Fraction(3, 2)} == {INTERMEDIATE}
    with pytest.raises(ValueError):
        intermediate_convergents(pair[:1])


def test_generalized_sequence_is_reduced_and_ordered():
    seq = generalized_convergents(sp.sqrt(3), 12)
    assert all(math.gcd(c.u, c.v) == 1 for c in seq)
    assert [c.v for c in seq] == sorted(c.v for c in seq)
    assert len(set(fractions(seq))) == len(seq)


def test_parity_lists_for_sqrt3():
    seq = generalized_convergents(sp.sqrt(3), 12)
    even_odd = fractions(parity_filter(seq, "even", "odd"))
    assert even_odd[:3] == [2, Fraction(12, 7), Fraction(26, 15)]
    odd = fractions(parity_filter(seq, "odd", "any"))
    published = [1, Fraction(5, 3), Fraction(7, 4), Fraction(19, 11), Fraction(45, 26), Fraction(71, 41)]
    it = iter(odd)
    assert all(p in it for p in published)
    assert parity_filter(seq) == seq
    with pytest.raises(ValueError):
        parity_filter(seq, "prime")


@pytest.mark.parametrize("seed", range(20))
def test_parity_survivors_do_not_run_out(seed):
    rng = random.Random(seed)
    z = sp.sqrt(rng.randint(2, 200))
    if z.is_Rational:
        z = sp.sqrt(rng.choice([2, 3, 5])) * rng.randint(1, 9) / rng.randint(1, 9)
    depth = 18
    seq = generalized_convergents(z, depth)
    needed = math.ceil(depth / 3)
    assert len(parity_filter(seq, "even", "odd")) >= needed
    assert len(parity_filter(seq, "odd", "any")) >= needed


# relations


def test_five_site_relations():
    rel = integer_relations(five_site_model(1, 1).spectrum)
    assert rel.exact and len(rel) == 3
    for row in ([1, 0, 0, 0, 1], [0, 1, 0, 1, 0], [0, 0, 1, 0, 0]):
        assert in_integer_span(rel.relations, row)


def test_five_site_rational_ratio_gives_extra_row():
    # a = 3, b = 1 (j1 = 1, j2 = 2): m x_0 - n x_1 = 0 with a/b = 3/1
    rel = integer_relations(five_site_model(1, 2).spectrum)
    assert len(rel) == 4
    assert in_integer_span(rel.relations, [1, -3, 0, 0, 0])
    assert in_integer_span(rel.relations, [0, 0, 0, -3, 1])


@pytest.mark.parametrize("gamma", ["sqrt(2)", "sqrt(3)", "sqrt(5)-1"])
def test_para_krawtchouk_lattice_after_normalization(gamma):
    spectrum, _ = affine_normalize(para_krawtchouk_model(5, gamma).spectrum)
    rel = integer_relations(spectrum)
    assert rel.exact
    expected = [[1, 0, 0, 0, 0, 0], [0, 1, 1, -1, 0, 0], [0, 0, 2, 0, -1, 0], [0, 1, 2, 0, 0, -1]]
    for row in expected:
        assert in_integer_span(rel.relations, row)
    for row in rel.relations:
        assert in_integer_span(expected, list(row))


@pytest.mark.parametrize(
    "forms",
    [
        [AlgebraicReal.two_cos(s, 2 * 6) for s in range(1, 5)],
        [AlgebraicReal.two_cos(s, 2 * 7) for s in range(1, 6)],
        [AlgebraicReal.rational(k) for k in (-2, -1, 1, 2)],
        [AlgebraicReal.from_sympy(v) for v in (-sp.sqrt(3), -1, 0, 1, sp.sqrt(3))],
        [AlgebraicReal.from_sympy(v) for v in (0, sp.sqrt(2), 2, 2 + sp.sqrt(2))],
    ],
)
def test_relation_lattice_complete_on_small_boxes(forms):
    spectrum = make_spectrum(forms)
    forms = spectrum.exact.forms
    rel = integer_relations(spectrum)
    assert rel.exact
    for row in rel.relations:
        total = sp.Add(*(c * f.to_sympy() for c, f in zip(row, forms)))
        assert sp.simplify(total) == 0
    for vec in exhaustive_relations(forms, 2):
        assert in_integer_span(rel.relations, list(vec))


def test_numeric_relations_match_bruteforce():
    with mpmath.workdps(80):
        values = [-mpmath.sqrt(2), mpmath.mpf(-1), mpmath.mpf(1), mpmath.sqrt(2) + 1]
        rows, residuals = numeric_relations(values, 70, 3)
        truth = numeric_relations_bruteforce(values, 3, 80)
    assert truth and all(r < 1e-50 for r in residuals)
    for vec in truth:
        assert in_integer_span(rows, list(vec))


def test_floating_relations_are_flagged_and_need_digits():
    with mpmath.workdps(45):
        values = [mpmath.mpf(v) / 3 for v in (-4, -1, 1, 4)]
        spectrum = make_spectrum(values, 40)
        rel = integer_relations(spectrum, 10)
    assert spectrum.exact is None
    assert not rel.exact and rel.residuals
    assert in_integer_span(rel.relations, [1, 0, 0, 1]) and in_integer_span(rel.relations, [0, 0, 4, -1])
    assert required_digits(4, 10) == 18
    with pytest.raises(PrecisionInsufficient):
        integer_relations(make_spectrum([-1.5, -0.5, 0.5, 1.5]), 10**3)
    assert set(rel.to_dict()) == {"relations", "exact", "coeff_bound"}


# Kronecker


@pytest.mark.parametrize("N", range(1, 12))
def test_zero_field_phases(N):
    rows = []
    for s in range((N + 1) // 2):
        row = [0] * (N + 1)
        row[s] += 1
        row[N - s] += 1
        rows.append(row)
    if N % 2 == 0:
        row = [0] * (N + 1)
        row[N // 2] = 1
        rows.append(row)
    cert = kronecker_solve(rows, N)
    assert cert.compatible
    if N % 2:
        assert cert.phi == (Fraction(1, 2) if N % 4 == 1 else Fraction(3, 2))
    else:
        assert set(cert.solutions) == {Fraction((N // 2) % 2)}


def test_five_site_odd_ratio_is_incompatible():
    # a/b = n/m with n, m odd: relation m x_0 - n x_1 = 0 (plus symmetry)
    rows = [[1, 0, 0, 0, 1], [0, 1, 0, 1, 0], [0, 0, 1, 0, 0], [1, -3, 0, 0, 0]]
    cert = kronecker_solve(rows, 4)
    assert not cert.compatible and cert.witness is not None
    S = sum(s * r for s, r in enumerate(cert.witness))
    assert sum(cert.witness) == 0 and S % 2 == 1
    assert in_integer_span(rows, list(cert.witness))


def test_empty_relations_leave_phase_free():
    cert = kronecker_solve([], 3)
    assert cert.compatible and cert.unconstrained and cert.phi is None
    assert cert.phi_json() is None
    assert kronecker_solve(IntegerRelationSet((), True, 10, 4), 3).unconstrained


def test_certificate_serialization_and_targets():
    cert = kronecker_solve([[1, 0, 0, 1]], 3)
    assert cert.phi == Fraction(3, 2)
    assert cert.phi_json() == {"num": 3, "den": 2}
    assert cert.targets(3) == [Fraction(1, 2), Fraction(3, 2), Fraction(1, 2), Fraction(3, 2)]


def test_row_length_is_checked():
    with pytest.raises(ValueError):
        kronecker_solve([[1, 1]], 3)


rows_strategy = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-3, 3), min_size=n + 1, max_size=n + 1), min_size=1, max_size=3).map(
        lambda rows: (n, rows)
    )
)


@settings(max_examples=150)
@given(rows_strategy)
def test_kronecker_matches_bruteforce(case):
    N, rows = case
    cert = kronecker_solve(rows, N)
    # any R_i is at most 4*3*... so denominators of solutions stay well below 48
    brute = kronecker_bruteforce(rows, 48)
    assert cert.compatible == bool(brute)
    if cert.compatible and not cert.unconstrained:
        assert set(cert.solutions) == brute
        assert all(congruence_holds(r, cert.phi) for r in rows)


@settings(max_examples=100)
@given(rows_strategy, st.integers(-5, 5), st.integers(-5, 5))
def test_congruence_closed_under_integer_combinations(case, a, b):
    N, rows = case
    cert = kronecker_solve(rows, N)
    if not cert.compatible or cert.unconstrained:
        return
    first, second = rows[0], rows[-1]
    combo = [a * x + b * y for x, y in zip(first, second)]
    assert congruence_holds(combo, cert.phi)


def test_affine_normalize():
    spectrum, amap = affine_normalize(uniform_model(4).spectrum)
    assert spectrum.values[0] == 0 and spectrum.values[1] == 1
    with mpmath.workdps(60):
        for raw, mapped in zip(uniform_model(4).spectrum.values, spectrum.values):
            assert abs(amap.apply(raw) - mapped) < 1e-40
            assert abs(amap.invert(mapped) - raw) < 1e-40
    ints = make_spectrum(list(range(5)))
    normalized, amap = affine_normalize(ints)
    assert list(normalized.values) == list(ints.values)
    assert amap.alpha == 1 and amap.beta == 0
