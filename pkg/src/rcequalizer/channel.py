"""Nonlinear wireless channel.

A 10-tap FIR stage ``q(n) = sum_k c_k d(n + 2 - k)`` followed by a memoryless
cubic ``u(n) = p1 q + p2 q**2 + p3 q**3 + noise``.  The tap offset ``m`` is
added to every tap except the centre one, with the sign of the default tap,
so ``m = 0`` gives the standard channel.

Time variation is described by a :class:`ChannelSchedule` indexed by symbol
count.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .prng import NoiseSource, SymbolSource

FIR_TAPS = np.array([0.08, -0.12, 1.0, 0.18, -0.1, 0.091, -0.05, 0.04, 0.03, 0.01])
# direction in which the offset m moves each tap; the centre tap stays at 1
FIR_OFFSET_SIGN = np.array([1.0, -1.0, 0.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, 1.0])
LOOKAHEAD = 2
MEMORY = FIR_TAPS.size
WARMUP = MEMORY - 1

CALIBRATION_SEED = 0x5EED
SCHEDULE_KINDS = ("stationary", "monotonic", "oscillating", "switching")
PARAM_NAMES = ("p1", "p2", "p3", "m")


@dataclass(frozen=True)
class ChannelParams:
    p1: float = 1.0
    p2: float = 0.036
    p3: float = -0.011
    m: float = 0.0
    noise_amplitude: float = 0.0

    def __post_init__(self):
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be >= 0")

    def taps(self) -> np.ndarray:
        return FIR_TAPS + self.m * FIR_OFFSET_SIGN


@dataclass(frozen=True)
class ChannelSchedule:
    """How one channel parameter evolves with the symbol index.

    ``monotonic`` ramps linearly from ``start_value`` to ``end_value`` over
    ``duration`` symbols beginning at ``start`` and then holds.
    ``oscillating`` is a triangle wave between the two values with full
    period ``period``.  ``switching`` cycles through ``values`` every
    ``interval`` symbols.
    """

    kind: str = "stationary"
    parameter: str = "p1"
    start_value: float = 1.0
    end_value: float = 1.0
    start: int = 0
    duration: int = 1
    period: int = 2
    interval: int = 1
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if self.parameter not in PARAM_NAMES:
            raise ValueError(f"unknown channel parameter {self.parameter!r}; expected one of {PARAM_NAMES}")
        if self.kind == "switching" and not self.values:
            raise ValueError("switching schedule needs a non-empty value list")
        if min(self.duration, self.period, self.interval) < 1:
            raise ValueError("duration, period and interval must be >= 1")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


STATIONARY = ChannelSchedule()


def schedule_values(schedule: ChannelSchedule, n, base: float):
    """Value of the scheduled parameter at symbol index (or index array) ``n``."""
    n = np.asarray(n, dtype=np.float64)
    rel = n - schedule.start
    if schedule.kind == "stationary":
        out = np.full(n.shape, base, dtype=np.float64)
    elif schedule.kind == "monotonic":
        frac = np.clip(rel / schedule.duration, 0.0, 1.0)
        out = schedule.start_value + (schedule.end_value - schedule.start_value) * frac
    elif schedule.kind == "oscillating":
        phase = np.mod(np.maximum(rel, 0.0), schedule.period) / schedule.period
        tri = 1.0 - np.abs(1.0 - 2.0 * phase)
        out = schedule.start_value + (schedule.end_value - schedule.start_value) * tri
    else:
        idx = np.floor_divide(np.maximum(rel, 0.0), schedule.interval).astype(np.int64) % len(schedule.values)
        out = np.asarray(schedule.values)[idx]
    return out[()] if out.ndim == 0 else out


def schedule_params(schedule: ChannelSchedule, n: int, base: ChannelParams | None = None) -> ChannelParams:
    """Parameter set in force at symbol ``n``."""
    if n < 0:
        raise ValueError("symbol index must be >= 0")
    base = base or ChannelParams()
    if schedule.kind == "stationary":
        return base
    value = float(schedule_values(schedule, n, getattr(base, schedule.parameter)))
    return replace(base, **{schedule.parameter: value})


def nonlinearity(q, params: ChannelParams, noise=0.0):
    return params.p1 * q + params.p2 * q**2 + params.p3 * q**3 + noise


@dataclass
class FirState:
    """Delay line holding d(n+2) ... d(n-7), newest first."""

    line: deque = field(default_factory=lambda: deque([0.0] * MEMORY, maxlen=MEMORY))
    filled: int = 0

    def push(self, d: float) -> None:
        self.line.appendleft(float(d))
        self.filled = min(self.filled + 1, MEMORY)

    @property
    def primed(self) -> bool:
        return self.filled == MEMORY

    @property
    def center(self) -> float:
        return self.line[LOOKAHEAD]


def fir_step(state: FirState, params: ChannelParams) -> float:
    return float(np.dot(params.taps(), np.fromiter(state.line, float, MEMORY)))


class Channel:
    """Symbol-by-symbol channel driven by a schedule.

    Each :meth:`step` pushes the newest symbol d(n+2) and returns ``u(n)``
    together with the centre symbol d(n) that it carries.
    """

    def __init__(self, base: ChannelParams | None = None, schedule: ChannelSchedule = STATIONARY,
                 noise: NoiseSource | None = None):
        self.base = base or ChannelParams()
        self.schedule = schedule
        self.noise = noise
        self.fir = FirState()
        self.n = 0

    def step(self, d_next: float) -> tuple[float, float]:
        params = schedule_params(self.schedule, self.n, self.base)
        self.fir.push(d_next)
        q = fir_step(self.fir, params)
        nu = 0.0
        if self.noise is not None and params.noise_amplitude > 0:
            nu = self.noise.next_noise(params.noise_amplitude)
        self.n += 1
        return nonlinearity(q, params, nu), self.fir.center

    @property
    def primed(self) -> bool:
        return self.fir.primed


def channel_step(d_next: float, channel: Channel) -> tuple[float, float]:
    return channel.step(d_next)


@dataclass
class Transmission:
    """Vectorised channel output for a whole symbol stream.

    Index ``j`` is the pipeline step at which symbol ``symbols[j]`` entered
    the delay line.  ``u[j]`` carries centre symbol ``center[j] = symbols[j-2]``;
    ``valid[j]`` is False during the delay-line warm-up.
    """

    u: np.ndarray
    center: np.ndarray
    valid: np.ndarray
    params: dict


def param_arrays(schedule: ChannelSchedule, base: ChannelParams, length: int) -> dict:
    idx = np.arange(length)
    arrays = {name: np.full(length, getattr(base, name)) for name in PARAM_NAMES}
    if schedule.kind != "stationary":
        arrays[schedule.parameter] = schedule_values(schedule, idx, getattr(base, schedule.parameter))
    return arrays


def transmit(symbols: np.ndarray, base: ChannelParams | None = None, schedule: ChannelSchedule = STATIONARY,
             noise: np.ndarray | None = None) -> Transmission:
    """Run a symbol stream through the (possibly time-varying) channel.

    ``noise`` is the already-scaled noise sequence; ``None`` means noiseless.
    """
    base = base or ChannelParams()
    s = np.asarray(symbols, dtype=np.float64)
    L = s.size
    pa = param_arrays(schedule, base, L)
    lin = np.convolve(s, FIR_TAPS)[:L]
    off = np.convolve(s, FIR_OFFSET_SIGN)[:L]
    q = lin + pa["m"] * off
    u = pa["p1"] * q + pa["p2"] * q**2 + pa["p3"] * q**3
    if noise is not None:
        u = u + noise[:L]
    center = np.zeros(L)
    center[LOOKAHEAD:] = s[:L - LOOKAHEAD]
    valid = np.arange(L) >= WARMUP
    return Transmission(u, center, valid, pa)


def signal_power(params: ChannelParams | None = None, calibration_length: int = 100_000,
                 seed: int = CALIBRATION_SEED) -> float:
    """Mean square of the noiseless channel output over a calibration run."""
    symbols = SymbolSource.from_seed(seed).take(calibration_length + WARMUP)
    tx = transmit(symbols, replace(params or ChannelParams(), noise_amplitude=0.0))
    u = tx.u[tx.valid]
    return float(np.mean(u * u))


def noise_amplitude_for(snr_db: float, power: float) -> float:
    """Uniform-noise amplitude giving ``power / (A**2 / 3)`` equal to the SNR."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db}")
    return math.sqrt(3.0 * power / 10.0 ** (snr_db / 10.0))


def calibrate_noise_amplitude(snr_db: float, params: ChannelParams | None = None,
                              calibration_length: int = 100_000, seed: int = CALIBRATION_SEED) -> float:
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    if calibration_length < 10_000:
        raise ValueError("calibration_length must be >= 1e4")
    return noise_amplitude_for(snr_db, signal_power(params, calibration_length, seed))
