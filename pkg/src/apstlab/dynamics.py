"""One-excitation time evolution as spectral sums over an eigenframe.

f_mn(t) = sum_s w_s chi_m(x_s) chi_n(x_s) exp(-i x_s t).  Single evaluations
run in mpmath at the frame's working precision; grid scans use numpy.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import mpmath
import numpy as np

from .spectral import EigenFrame

OPTIMIZE = "optimize"
_GOLDEN = (math.sqrt(5) - 1) / 2
_CHUNK = 4096


def _as_mpf(t):
    if isinstance(t, mpmath.mpf):
        return t
    try:
        return mpmath.mpf(t)
    except TypeError:
        # sympy numbers and other objects with a decimal rendering
        return mpmath.mpf(str(t.evalf(40)) if hasattr(t, "evalf") else str(t))


def _check_site(frame: EigenFrame, n: int) -> None:
    if not 0 <= n <= frame.N:
        raise IndexError(f"site {n} outside 0..{frame.N}")


def _spectral_sum(frame: EigenFrame, coefficients, t) -> mpmath.mpc:
    with mpmath.workdps(frame.dps):
        t = _as_mpf(t)
        return mpmath.fsum(c * mpmath.expj(-x * t) for c, x in zip(coefficients, frame.spectrum.values))


def amplitude(frame: EigenFrame, from_site: int, to_site: int, t) -> complex:
    """Transition amplitude <e_to| exp(-iJt) |e_from>."""
    _check_site(frame, from_site)
    _check_site(frame, to_site)
    chi = frame.chi_table
    coeffs = [frame.weights[s] * chi[from_site][s] * chi[to_site][s] for s in range(frame.N + 1)]
    return complex(_spectral_sum(frame, coeffs, t))


def mirror_amplitude(frame: EigenFrame, t) -> complex:
    """f_0N written with chi_N(x_s) replaced by (-1)^(N+s); valid for mirror chains only."""
    N = frame.N
    coeffs = [frame.weights[s] * (-1) ** (N + s) for s in range(N + 1)]
    return complex(_spectral_sum(frame, coeffs, t))


def end_fidelity(frame: EigenFrame, t) -> float:
    return abs(amplitude(frame, 0, frame.N, t)) ** 2


def return_amplitude(frame: EigenFrame, t) -> complex:
    return complex(_spectral_sum(frame, frame.weights, t))


def transfer_deviation(frame: EigenFrame, t, phi=OPTIMIZE) -> float:
    """sum_s w_s |exp(-i phi - i t x_s) - chi_N(x_s)|^2.

    With ``phi="optimize"`` the phase is set to arg f_0N(t), the minimiser.
    """
    N = frame.N
    with mpmath.workdps(frame.dps):
        t = _as_mpf(t)
        if phi == OPTIMIZE:
            f = mpmath.mpc(amplitude(frame, 0, N, t))
            phi = mpmath.arg(f) if f != 0 else mpmath.mpf(0)
        phi = _as_mpf(phi)
        total = mpmath.fsum(
            w * abs(mpmath.expj(-phi - t * x) - frame.chi_table[N][s]) ** 2
            for s, (w, x) in enumerate(zip(frame.weights, frame.spectrum.values))
        )
        return float(total)


# --------------------------------------------------------------------------
# scans


class AmplitudeSample(NamedTuple):
    time: float
    from_site: int
    to_site: int
    value: complex


@dataclass(frozen=True)
class TransferTrace:
    times: np.ndarray
    values: np.ndarray
    from_site: int
    to_site: int

    def __len__(self) -> int:
        return len(self.times)

    @property
    def fidelities(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def samples(self) -> Iterator[AmplitudeSample]:
        for t, v in zip(self.times, self.values):
            yield AmplitudeSample(float(t), self.from_site, self.to_site, complex(v))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "re", "im", "abs2"])
        for t, v in zip(self.times, self.values):
            writer.writerow([_fmt(t), _fmt(v.real), _fmt(v.imag), _fmt(abs(v) ** 2)])
        return buf.getvalue()


def _fmt(x: float) -> str:
    text = f"{float(x):.15g}"
    return "0" if text == "-0" else text


@dataclass(frozen=True)
class ScanResult:
    trace: TransferTrace
    argmax_t: float
    max_fidelity: float

    def summary(self) -> dict:
        return {"argmax_t": _fmt(self.argmax_t), "max_fidelity": _fmt(self.max_fidelity)}

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _grid_amplitudes(frame: EigenFrame, times: np.ndarray, from_site: int, to_site: int) -> np.ndarray:
    x, w, chi = frame.arrays()
    coeffs = w * chi[from_site] * chi[to_site]
    out = np.empty(len(times), dtype=complex)
    for start in range(0, len(times), _CHUNK):
        block = times[start : start + _CHUNK]
        out[start : start + _CHUNK] = np.exp(-1j * np.outer(block, x)) @ coeffs
    return out


def _golden_max(fun, lo: float, hi: float, iterations: int = 80) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iterations):
        if b - a < 1e-13 * max(1.0, abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc >= fd else (d, fd)


def grid_size(t_max: float, step: float) -> int:
    return int(math.floor(t_max / step + 1e-9)) + 1


def scan_fidelity(frame: EigenFrame, t_max: float, step: float, from_site: int = 0, to_site: int | None = None) -> ScanResult:
    """End fidelity on the grid 0, step, ..., plus golden-section refinement
    of the best grid point.  Ties go to the smallest t."""
    if not step > 0 or not t_max > 0:
        raise ValueError("t_max and step must be positive")
    to_site = frame.N if to_site is None else to_site
    _check_site(frame, from_site)
    _check_site(frame, to_site)
    times = np.arange(grid_size(t_max, step)) * float(step)
    values = _grid_amplitudes(frame, times, from_site, to_site)
    trace = TransferTrace(times, values, from_site, to_site)
    fid = np.abs(values) ** 2
    k = int(np.argmax(fid))
    best_t, best_f = float(times[k]), float(fid[k])
    lo = float(times[max(k - 1, 0)])
    hi = float(times[min(k + 1, len(times) - 1)])
    if hi > lo:
        x, w, chi = frame.arrays()
        coeffs = w * chi[from_site] * chi[to_site]
        t_ref, f_ref = _golden_max(lambda t: float(abs(np.exp(-1j * x * t) @ coeffs) ** 2), lo, hi)
        if f_ref > best_f:
            best_t, best_f = t_ref, f_ref
    return ScanResult(trace, best_t, best_f)
