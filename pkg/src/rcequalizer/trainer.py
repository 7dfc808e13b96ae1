"""Online readout training by stochastic gradient descent.

The readout ``y = w . x`` is trained with ``w += lam * (d - y) * x`` while the
step size decays geometrically towards ``lambda_min`` every ``k`` updates.
Three modes are supported:

``full``
    decay towards ``lambda_min`` (normally 0) for ``train_length`` updates,
    then freeze the weights (``lam = 0``) for testing.
``non-stationary``
    decay towards ``lambda_min > 0`` and never stop, so the readout can
    follow a drifting channel.
``simplified``
    constant ``lam = lambda0`` for ever; ``train_length`` only marks where
    scoring starts.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

MODES = ("full", "non-stationary", "simplified")
MODE_CODES = {name: i for i, name in enumerate(MODES)}


@dataclass(frozen=True)
class TrainerConfig:
    lambda0: float = 0.4
    lambda_min: float = 0.0
    gamma: float = 0.999
    k: int = 20
    mode: str = "full"
    target_delay: int = 2
    ser_threshold: float = 0.05
    train_length: int | None = 45_000
    watchdog: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown trainer mode {self.mode!r}; expected one of {MODES}")
        if self.lambda0 < 0 or self.lambda_min < 0:
            raise ValueError("learning rates must be >= 0")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must be in [0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.target_delay < 0:
            raise ValueError("target_delay must be >= 0")
        if not 0 < self.ser_threshold <= 1:
            raise ValueError("ser_threshold must be in (0, 1]")
        if self.mode == "full" and self.lambda_min != 0:
            raise ValueError("full mode requires lambda_min = 0; use non-stationary mode instead")
        if self.mode == "non-stationary" and self.lambda_min <= 0:
            raise ValueError("non-stationary mode requires lambda_min > 0")
        if self.train_length is not None and self.train_length < 0:
            raise ValueError("train_length must be >= 0")


@dataclass(frozen=True)
class TrainerState:
    w: np.ndarray
    lam: float
    step_count: int = 0


def trainer_init(cfg: TrainerConfig, n: int) -> TrainerState:
    return TrainerState(np.zeros(n), cfg.lambda0, 0)


def readout(x: np.ndarray, w: np.ndarray) -> float:
    x = np.asarray(x)
    w = np.asarray(w)
    if x.shape != w.shape:
        raise ValueError(f"state and weight lengths differ: {x.shape} vs {w.shape}")
    return float(np.dot(w, x))


def weight_update(state: TrainerState, x: np.ndarray, d: float, y: float) -> TrainerState:
    w = state.w + state.lam * (d - y) * np.asarray(x)
    return replace(state, w=w, step_count=state.step_count + 1)


def training(state: TrainerState, cfg: TrainerConfig) -> bool:
    """Whether the trainer is still in its training phase."""
    if cfg.mode == "non-stationary" or cfg.train_length is None:
        return True
    return state.step_count < cfg.train_length


def lambda_step(state: TrainerState, cfg: TrainerConfig) -> TrainerState:
    """Apply the step-size schedule after an update.

    Call once per weight update, after :func:`weight_update`.
    """
    if cfg.mode == "simplified":
        return replace(state, lam=cfg.lambda0)
    if not training(state, cfg):
        return replace(state, lam=0.0)
    if state.step_count % cfg.k == 0:
        return replace(state, lam=cfg.lambda_min + cfg.gamma * (state.lam - cfg.lambda_min))
    return state


def watchdog(ser_window: float, state: TrainerState, cfg: TrainerConfig) -> TrainerState:
    """Restart training from ``lambda0`` when the window SER is too high."""
    if ser_window > cfg.ser_threshold:
        return replace(state, lam=cfg.lambda0, step_count=0)
    return state


def align_target(d: np.ndarray, delay: int, fill: float = np.nan) -> np.ndarray:
    """``out[n] = d[n - delay]``; the first ``delay`` entries are ``fill``."""
    if delay < 0:
        raise ValueError("delay must be >= 0")
    d = np.asarray(d, dtype=np.float64)
    out = np.full(d.shape, fill)
    if delay == 0:
        out[:] = d
    elif delay < d.size:
        out[delay:] = d[:-delay]
    return out
