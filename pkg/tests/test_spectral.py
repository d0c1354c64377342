import math
import random

import mpmath
import numpy as np
import pytest

from apstlab.chain import build_chain, is_mirror_symmetric
from apstlab.errors import DegenerateSpectrum, PrecisionUnreachable, WeightMismatch
from apstlab.numbers import CLOSED_FORM, EXACT_RATIONAL, FLOATING, AlgebraicReal
from apstlab.spectral import (
    _Counter,
    build_frame,
    chi_sign_pattern,
    eigenvalues,
    evaluate_chi,
    frame_to_dict,
    make_spectrum,
    spectrum_from_dict,
    spectrum_to_dict,
)
from apstlab.synthesis import five_site_model, krawtchouk_model, para_krawtchouk_model, uniform_model
from oracles import dense_eigenvalues, mp_eigenvalues
from strategies import perturb_coupling, random_mirror_chain


def test_uniform_chain_cosine_spectrum():
    for N in (1, 4, 7, 10):
        spectrum = eigenvalues(build_chain(N + 1, [1] * N, [0] * (N + 1)), 40)
        with mpmath.workdps(50):
            expected = sorted(2 * mpmath.cos(mpmath.pi * s / (N + 2)) for s in range(1, N + 2))
            assert max(abs(a - b) for a, b in zip(spectrum.values, expected)) < mpmath.mpf(10) ** -40


def test_five_site_spectrum():
    spectrum = eigenvalues(build_chain(5, [2, 1, 1, 2], [0] * 5))
    with mpmath.workdps(60):
        a, b = mpmath.sqrt(6), 2
        expected = [-a, -b, 0, b, a]
    assert max(abs(x - y) for x, y in zip(spectrum.values, expected)) < mpmath.mpf(10) ** -49
    assert [str(f) for f in spectrum.exact.forms] == ["-sqrt(6)", "-2", "0", "2", "sqrt(6)"]


def test_two_site_spectrum():
    spectrum = eigenvalues(build_chain(2, [1], [0, 0]))
    assert spectrum.values == (-1, 1) and spectrum.exactness == EXACT_RATIONAL


def test_spectrum_metadata():
    spectrum = eigenvalues(build_chain(3, ["sqrt(2)", "sqrt(2)"], [0, 0, 0]), 30)
    assert spectrum.digits == 30 and spectrum.exactness == CLOSED_FORM
    floating = eigenvalues(build_chain(3, [0.5, 0.5], [0.0, 0.1, 0.0]))
    assert floating.digits == 15 and floating.exactness == FLOATING and floating.exact is None


def test_precision_limits():
    with pytest.raises(PrecisionUnreachable):
        eigenvalues(build_chain(3, [0.5, 0.5], [0, 0, 0]), 30)
    with pytest.raises(ValueError):
        eigenvalues(build_chain(2, [1], [0, 0]), 201)


@pytest.mark.parametrize("seed", range(8))
def test_eigenvalues_match_mpmath_oracle(seed):
    rng = random.Random(seed)
    chain = random_mirror_chain(rng, rng.randint(2, 12), dps=60)
    spectrum = eigenvalues(chain, 45)
    oracle = mp_eigenvalues(chain.couplings, chain.fields, 80)
    with mpmath.workdps(60):
        assert max(abs(a - b) for a, b in zip(spectrum.values, oracle)) < mpmath.mpf(10) ** -44


@pytest.mark.parametrize("seed", range(6))
def test_sturm_count_certificate(seed):
    rng = random.Random(100 + seed)
    n = rng.randint(2, 9)
    couplings = [rng.randint(1, 5) for _ in range(n - 1)]
    fields = [rng.randint(-3, 3) for _ in range(n)]
    chain = build_chain(n, couplings, fields)
    counter = _Counter(chain, 40)
    assert counter.exact
    evals = dense_eigenvalues(couplings, fields)
    for pivot in np.linspace(evals[0] - 1, evals[-1] + 1, 23):
        if np.min(np.abs(evals - pivot)) > 1e-9:
            assert counter(mpmath.mpf(float(pivot))) == int(np.sum(evals < pivot))


def test_clustered_eigenvalues_are_separated():
    # Wilkinson-type chain: its top two eigenvalues agree to about 13 digits
    n = 21
    fields = [abs(10 - i) for i in range(n)]
    spectrum = eigenvalues(build_chain(n, [1] * (n - 1), fields), 40)
    gaps = [b - a for a, b in zip(spectrum.values, spectrum.values[1:])]
    assert 0 < min(gaps) < 1e-12
    oracle = mp_eigenvalues([1] * (n - 1), fields, 80)
    with mpmath.workdps(60):
        assert max(abs(a - b) for a, b in zip(spectrum.values, oracle)) < mpmath.mpf(10) ** -39


def test_evaluate_chi_examples():
    chain = build_chain(2, [1], [0, 0])
    assert evaluate_chi(chain, 1) == [1, 1]
    assert evaluate_chi(chain, -1) == [1, -1]
    assert evaluate_chi(build_chain(4, [1, 2, 3], [1, 0, 0, 1]), 0.7)[0] == 1


def test_chi_at_eigenvalues_of_mirror_chain():
    model = five_site_model(1, 2)
    frame = build_frame(model.chain)
    for s, x in enumerate(frame.spectrum.values):
        chi = evaluate_chi(model.chain, x, frame.dps)
        assert abs(chi[-1] - (-1) ** (4 + s)) < 1e-40


def test_two_site_weights():
    frame = build_frame(build_chain(2, [1], [0, 0]))
    assert all(abs(w - mpmath.mpf(1) / 2) < 1e-45 for w in frame.weights)


@pytest.mark.parametrize("N", [3, 5, 7, 9])
@pytest.mark.parametrize("gamma", ["sqrt(2)", "3/2", "2/3"])
def test_para_krawtchouk_weight_split(N, gamma):
    frame = build_frame(para_krawtchouk_model(N, gamma).chain)
    assert abs(mpmath.fsum(frame.weights[0::2]) - 0.5) < 1e-40
    assert abs(mpmath.fsum(frame.weights[1::2]) - 0.5) < 1e-40


@pytest.mark.parametrize("seed", range(10))
def test_frame_invariants(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 10)
    couplings = [rng.uniform(0.2, 2) for _ in range(n - 1)]
    fields = [rng.uniform(-1, 1) for _ in range(n)]
    chain = build_chain(n, couplings, fields)
    frame = build_frame(chain)
    assert abs(mpmath.fsum(frame.weights) - 1) < 1e-12
    assert all(w > 0 for w in frame.weights)
    assert all(v == 1 for v in frame.chi_table[0])
    assert frame.orthonormality_residual() <= 10.0 ** -(frame.digits - 4)
    assert abs(frame.h_N - math.prod(j * j for j in couplings)) < 1e-10 * frame.h_N


def test_orthonormality_at_high_precision():
    frame = build_frame(para_krawtchouk_model(7, "sqrt(3)").chain, 60)
    assert frame.orthonormality_residual() <= mpmath.mpf(10) ** -56


def test_weight_routes_disagree_on_a_corrupted_spectrum():
    chain = build_chain(4, [1, 2, 1], [0, 0, 0, 0])
    good = eigenvalues(chain)
    with mpmath.workdps(70):
        shifted = list(good.values)
        shifted[1] = shifted[1] + mpmath.mpf(10) ** -20
    bad = type(good)(tuple(shifted), good.digits, good.exactness, None)
    with pytest.raises(WeightMismatch):
        build_frame(chain, spectrum=bad)


def test_chi_sign_pattern_examples():
    assert chi_sign_pattern(build_frame(five_site_model(1, 1).chain), 1e-10)
    assert not chi_sign_pattern(build_frame(build_chain(3, [1, 2], [0, 0, 0])), 1e-10)
    assert chi_sign_pattern(build_frame(krawtchouk_model(4).chain), 1e-10)


@pytest.mark.parametrize("seed", range(15))
def test_sign_pattern_equivalent_to_mirror_symmetry(seed):
    rng = random.Random(seed)
    chain = random_mirror_chain(rng, rng.randint(2, 13))
    assert is_mirror_symmetric(chain, 1e-30).symmetric
    assert chi_sign_pattern(build_frame(chain), 1e-10)
    broken = perturb_coupling(chain, rng.randrange(chain.N), 2e-3)
    if chain.N > 1 or broken.couplings[0] != chain.couplings[0]:
        mirror = is_mirror_symmetric(broken, 1e-9).symmetric
        assert chi_sign_pattern(build_frame(broken), 1e-10) == mirror


def test_model_hints_agree_with_solver():
    for model in (uniform_model(9), krawtchouk_model(6), para_krawtchouk_model(9, "sqrt(5)-1"), five_site_model("1/2", 3)):
        hinted = eigenvalues(model.chain)
        bare = eigenvalues(model.chain.with_spectrum(None))
        assert hinted.exact is not None
        assert max(abs(a - b) for a, b in zip(hinted.values, bare.values)) < 1e-45


def test_wrong_hint_rejected():
    model = five_site_model(1, 1)
    wrong = model.chain.with_spectrum(five_site_model(1, 2).chain.analytic_spectrum)
    with pytest.raises(ValueError):
        eigenvalues(wrong)


def test_make_spectrum():
    spectrum = make_spectrum(["sqrt(2)", -1, "1/2"])
    assert [str(f) for f in spectrum.exact.forms] == ["-1", "1/2", "sqrt(2)"]
    assert spectrum.exactness == CLOSED_FORM
    with pytest.raises(DegenerateSpectrum):
        make_spectrum([1, 2, 1])
    floating = make_spectrum([0.5, 0.25])
    assert floating.exactness == FLOATING and floating.digits == 15


def test_json_keeps_full_precision():
    frame = build_frame(para_krawtchouk_model(5, "sqrt(2)").chain, 60)
    doc = frame_to_dict(frame)
    assert all(isinstance(v, str) for v in doc["weights"])
    assert len(doc["spectrum"]["values"][1].replace(".", "").lstrip("0")) >= 59
    back = spectrum_from_dict(spectrum_to_dict(frame.spectrum))
    assert back.exact.forms == frame.spectrum.exact.forms
    floating = spectrum_from_dict({"values": ["0.1234567890123456789012345", "1.5"], "digits": 25})
    assert floating.digits == 25
