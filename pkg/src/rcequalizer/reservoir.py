"""Ring-topology sine reservoir.

Neuron ``i`` receives its predecessor's previous state, the masked input and
a phase bias::

    x_0(n+1) = sin(alpha * x_{N-1}(n-1) + beta * M_0 * u(n) + phi)
    x_i(n+1) = sin(alpha * x_{i-1}(n)   + beta * M_i * u(n) + phi)

The extra one-step delay on neuron 0 desynchronises the input from the loop.

The readout does not see ``x`` directly but ``readout_gain * x``: the
measurement chain (photodiode into ADC) only spans part of the digital
range.  The gain sets the scale at which the trainer's step sizes act.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

DEFAULT_WASHOUT = 100


@dataclass
class ReservoirConfig:
    mask: np.ndarray
    alpha: float = 0.6
    beta: float = 0.3
    phi: float = 0.1
    washout: int = DEFAULT_WASHOUT
    readout_gain: float = 0.5

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.float64)
        if self.mask.ndim != 1 or self.mask.size < 1:
            raise ValueError("mask must be a non-empty vector")
        if np.any(np.abs(self.mask) > 1):
            raise ValueError("mask entries must lie in [-1, 1]")
        if not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.readout_gain <= 0:
            raise ValueError("readout_gain must be > 0")
        if self.washout < 0:
            raise ValueError("washout must be >= 0")

    @property
    def n(self) -> int:
        return self.mask.size


@dataclass
class ReservoirState:
    x: np.ndarray
    x_prev_last: float = 0.0


def reservoir_init(cfg: ReservoirConfig) -> ReservoirState:
    return ReservoirState(np.zeros(cfg.n), 0.0)


def reservoir_step(state: ReservoirState, cfg: ReservoirConfig, u: float) -> ReservoirState:
    drive = cfg.beta * cfg.mask * u + cfg.phi
    fed = np.empty(cfg.n)
    fed[0] = state.x_prev_last
    fed[1:] = state.x[:-1]
    return ReservoirState(np.sin(cfg.alpha * fed + drive), float(state.x[-1]))


def map_attenuation_db(att_db: float) -> float:
    """Feedback gain for an amplitude attenuation given in dB."""
    if att_db < 0:
        raise ValueError("attenuation must be >= 0 dB")
    return 10.0 ** (-att_db / 20.0)


@numba.njit(cache=True)
def _states_kernel(u, mask, alpha, beta, phi, x0, x_prev_last):
    n_steps = u.size
    N = mask.size
    X = np.empty((n_steps, N))
    x = x0.copy()
    prev = x_prev_last
    for j in range(n_steps):
        bu = beta * u[j]
        X[j, 0] = np.sin(alpha * prev + bu * mask[0] + phi)
        for i in range(1, N):
            X[j, i] = np.sin(alpha * x[i - 1] + bu * mask[i] + phi)
        prev = x[N - 1]
        x = X[j]
    return X, prev


def run_states(cfg: ReservoirConfig, u: np.ndarray, state: ReservoirState | None = None) -> tuple[np.ndarray, ReservoirState]:
    """Drive the reservoir with a whole input sequence.

    Row ``j`` of the returned matrix is the state after consuming ``u[j]``.
    """
    state = state or reservoir_init(cfg)
    X, prev = _states_kernel(np.asarray(u, dtype=np.float64), cfg.mask, cfg.alpha, cfg.beta, cfg.phi,
                             state.x, state.x_prev_last)
    last = X[-1].copy() if len(X) else state.x.copy()
    return X, ReservoirState(last, float(prev))
