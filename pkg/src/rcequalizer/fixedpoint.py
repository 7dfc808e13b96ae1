"""Bit-accurate emulation of the readout's fixed-point arithmetic.

Two signed formats are used:

* Q17 -- 18-bit words, 17 fractional bits, range [-1, 1 - 2**-17].  Step
  sizes, decay rate, mask entries and reservoir states.
* Q20 -- 25-bit words, 4 integer and 20 fractional bits, range
  [-16, 16 - 2**-20].  Channel output, readout output, weights and errors.

Products are formed exactly on integers (25 x 18 bits) and rescaled once,
rounding to nearest with ties to even.  Overflow saturates and is counted.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

Q17_FRAC = 17
Q17_MIN = -(1 << 17)
Q17_MAX = (1 << 17) - 1
Q20_FRAC = 20
Q20_MIN = -(1 << 24)
Q20_MAX = (1 << 24) - 1


@dataclass
class SaturationCounter:
    count: int = 0
    by_site: dict = field(default_factory=dict)

    def hit(self, site: str = "") -> None:
        self.count += 1
        self.by_site[site] = self.by_site.get(site, 0) + 1


def _clamp(raw: int, lo: int, hi: int, counter: SaturationCounter | None, site: str) -> int:
    if raw > hi:
        if counter is not None:
            counter.hit(site)
        return hi
    if raw < lo:
        if counter is not None:
            counter.hit(site)
        return lo
    return raw


def round_shift(p: int, shift: int) -> int:
    """``p / 2**shift`` rounded to nearest, ties to even (exact integer math)."""
    q = p >> shift
    r = p - (q << shift)
    half = 1 << (shift - 1)
    if r > half or (r == half and q & 1):
        q += 1
    return q


@dataclass(frozen=True)
class FixQ17:
    raw: int

    @property
    def value(self) -> float:
        return self.raw / (1 << Q17_FRAC)


@dataclass(frozen=True)
class FixQ20:
    raw: int

    @property
    def value(self) -> float:
        return self.raw / (1 << Q20_FRAC)


def quantize_q17(v: float, counter: SaturationCounter | None = None) -> FixQ17:
    # scaling by a power of two is exact, so round() sees the true value
    return FixQ17(_clamp(round(float(v) * (1 << Q17_FRAC)), Q17_MIN, Q17_MAX, counter, "quantize_q17"))


def quantize_q20(v: float, counter: SaturationCounter | None = None) -> FixQ20:
    return FixQ20(_clamp(round(float(v) * (1 << Q20_FRAC)), Q20_MIN, Q20_MAX, counter, "quantize_q20"))


def mul_25x18(a: FixQ20, b: FixQ17, counter: SaturationCounter | None = None) -> FixQ20:
    p = a.raw * b.raw
    return FixQ20(_clamp(round_shift(p, Q17_FRAC), Q20_MIN, Q20_MAX, counter, "mul_25x18"))


def mul_q17(a: FixQ17, b: FixQ17, counter: SaturationCounter | None = None) -> FixQ17:
    return FixQ17(_clamp(round_shift(a.raw * b.raw, Q17_FRAC), Q17_MIN, Q17_MAX, counter, "mul_q17"))


def add_q20(a: FixQ20, b: FixQ20, counter: SaturationCounter | None = None) -> FixQ20:
    return FixQ20(_clamp(a.raw + b.raw, Q20_MIN, Q20_MAX, counter, "add_q20"))


@dataclass(frozen=True)
class FixedTrainerState:
    w: tuple  # FixQ20 per neuron
    lam: FixQ17
    step_count: int = 0


def fixed_readout(x: list[FixQ17], w: tuple, counter: SaturationCounter | None = None) -> FixQ20:
    acc = FixQ20(0)
    for wi, xi in zip(w, x):
        acc = add_q20(acc, mul_25x18(wi, xi, counter), counter)
    return acc


def fixed_training_step(state: FixedTrainerState, x: list[FixQ17], d: int,
                        counter: SaturationCounter | None = None) -> tuple[FixedTrainerState, FixQ20]:
    """One readout + weight update, all in fixed point.

    Returns the new state and the output ``y`` computed before the update.
    """
    y = fixed_readout(x, state.w, counter)
    err = FixQ20(_clamp((d << Q20_FRAC) - y.raw, Q20_MIN, Q20_MAX, counter, "error"))
    scaled = mul_25x18(err, state.lam, counter)
    w = tuple(add_q20(wi, mul_25x18(scaled, xi, counter), counter) for wi, xi in zip(state.w, x))
    return FixedTrainerState(w, state.lam, state.step_count + 1), y


def fixed_lambda_decay(lam: FixQ17, lam_min: FixQ17, gamma: FixQ17,
                       counter: SaturationCounter | None = None) -> FixQ17:
    diff = FixQ17(lam.raw - lam_min.raw)
    return FixQ17(_clamp(lam_min.raw + mul_q17(gamma, diff, counter).raw, Q17_MIN, Q17_MAX, counter, "lambda"))


# ----------------------------------------------------------------------------
# numba versions for the streaming pipeline; they mirror the scalar functions
# above and report saturation through a caller-owned counter array.


@numba.njit(cache=True, inline="always")
def nb_round_shift(p, shift):
    q = p >> shift
    r = p - (q << shift)
    half = np.int64(1) << (shift - 1)
    if r > half or (r == half and (q & 1) == 1):
        q += 1
    return q


@numba.njit(cache=True, inline="always")
def nb_clamp(raw, lo, hi, sat, site):
    if raw > hi:
        sat[site] += 1
        return hi
    if raw < lo:
        sat[site] += 1
        return lo
    return raw


@numba.njit(cache=True)
def nb_quantize(v, frac, lo, hi, sat, site):
    return nb_clamp(np.int64(np.rint(v * (np.int64(1) << frac))), lo, hi, sat, site)
