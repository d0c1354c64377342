"""Random chain generators shared by the test modules."""

from __future__ import annotations

import random

import mpmath

from apstlab.chain import build_chain


def random_mirror_chain(rng: random.Random, n_sites: int, dps: int = 40, zero_field: bool = False):
    """Mirror-symmetric floating chain with mpf entries at ``dps`` digits."""
    with mpmath.workdps(dps):
        N = n_sites - 1
        half_j = [mpmath.mpf(rng.uniform(0.3, 2.0)) for _ in range((N + 1) // 2)]
        couplings = [half_j[min(l, N - 1 - l)] for l in range(N)]
        half_b = [mpmath.mpf(0 if zero_field else rng.uniform(-1.0, 1.0)) for _ in range(N // 2 + 1)]
        fields = [half_b[min(s, N - s)] for s in range(N + 1)]
        return build_chain(n_sites, couplings, fields)


def perturb_coupling(chain, index: int, delta: float):
    with mpmath.workdps(chain.input_digits + 10):
        couplings = list(chain.couplings)
        couplings[index] = couplings[index] + mpmath.mpf(delta)
        return build_chain(chain.n_sites, couplings, list(chain.fields))
