"""Fused per-symbol equaliser loop.

One call runs the reservoir, readout, symbol decision, weight update,
step-size schedule and SER watchdog over a whole pre-computed channel
output.  The arithmetic matches the step functions in :mod:`reservoir`,
:mod:`trainer`, :mod:`evaluator` and :mod:`fixedpoint`; the loop only exists
so that multi-million-symbol runs take seconds.

Stream conventions: ``u[j]`` is consumed at step ``j``; the readout output of
step ``j`` is compared with ``target[j]``; steps with ``counted[j] == False``
(or ``j < washout``) are neither trained on nor scored.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from . import fixedpoint as fx
from .reservoir import ReservoirConfig
from .trainer import MODE_CODES, TrainerConfig

PHASE_SKIPPED, PHASE_TRAIN, PHASE_TEST = 0, 1, 2
SAT_SITES = ("input", "state", "multiply", "accumulate", "error", "lambda")


@dataclass
class SimulationResult:
    errors: np.ndarray        # int8 per step; -1 where not scored
    phase: np.ndarray         # int8 per step; PHASE_*
    window_errors: np.ndarray
    window_counts: np.ndarray
    window_lambda: np.ndarray  # step size at the end of each window, after the watchdog
    window_end: np.ndarray     # pipeline step at which each window closed
    weights: np.ndarray
    lam: float
    resets: np.ndarray         # pipeline steps where the watchdog fired
    outputs: np.ndarray | None = None
    saturation: dict = field(default_factory=dict)

    def test_ser(self, start: int = 0, stop: int | None = None) -> float:
        """SER over test-phase symbols in ``[start, stop)``; NaN if none."""
        sel = self.phase[start:stop] == PHASE_TEST
        n = int(sel.sum())
        return float(self.errors[start:stop][sel].sum() / n) if n else float("nan")

    def scored_ser(self, start: int = 0, stop: int | None = None) -> float:
        e = self.errors[start:stop]
        e = e[e >= 0]
        return float(e.mean()) if e.size else float("nan")

    @property
    def window_ser(self) -> np.ndarray:
        return self.window_errors / np.maximum(self.window_counts, 1)


@numba.njit(cache=True)
def _decide(y):
    if y >= 2.0:
        return 3
    if y >= 0.0:
        return 1
    if y >= -2.0:
        return -1
    return -3


@numba.njit(cache=True, nogil=True)
def _float_kernel(u, target, counted, mask, alpha, beta, phi, gain, mode, lam0, lam_min, gamma, k,
                  train_length, washout, window, use_watchdog, ser_threshold, state_noise, noise_seed,
                  record_outputs):
    L = u.size
    N = mask.size
    x = np.zeros(N)
    xn = np.zeros(N)
    xr = np.zeros(N)
    prev = 0.0
    w = np.zeros(N)
    lam = lam0
    step_count = 0
    errors = np.full(L, -1, dtype=np.int8)
    phase = np.zeros(L, dtype=np.int8)
    n_win = L // window + 1
    win_err = np.zeros(n_win, dtype=np.int64)
    win_cnt = np.zeros(n_win, dtype=np.int64)
    win_lam = np.zeros(n_win)
    win_end = np.zeros(n_win, dtype=np.int64)
    resets = np.zeros(n_win, dtype=np.int64)
    n_reset = 0
    outputs = np.zeros(L if record_outputs else 0)
    wi_ = 0
    cur_err = 0
    cur_cnt = 0
    if state_noise > 0:
        np.random.seed(noise_seed)
    for j in range(L):
        bu = beta * u[j]
        xn[0] = np.sin(alpha * prev + bu * mask[0] + phi)
        for i in range(1, N):
            xn[i] = np.sin(alpha * x[i - 1] + bu * mask[i] + phi)
        prev = x[N - 1]
        x, xn = xn, x
        if j < washout or not counted[j]:
            continue
        for i in range(N):
            xr[i] = gain * x[i]
        if state_noise > 0:
            for i in range(N):
                xr[i] += state_noise * (2.0 * np.random.random() - 1.0)
        y = 0.0
        for i in range(N):
            y += w[i] * xr[i]
        if record_outputs:
            outputs[j] = y
        d = target[j]
        err = 1 if _decide(y) != d else 0
        errors[j] = err
        in_train = mode == 1 or train_length < 0 or step_count < train_length
        if in_train or mode == 2:
            # simplified mode keeps adapting at lambda0 through the scored phase
            phase[j] = PHASE_TRAIN if in_train else PHASE_TEST
            scale = lam * (d - y)
            for i in range(N):
                w[i] += scale * xr[i]
            step_count += 1
            if mode != 2 and step_count % k == 0:
                lam = lam_min + gamma * (lam - lam_min)
            if mode == 0 and train_length >= 0 and step_count >= train_length:
                lam = 0.0
        else:
            phase[j] = PHASE_TEST
            lam = 0.0
        cur_err += err
        cur_cnt += 1
        if cur_cnt == window:
            if use_watchdog and cur_err / cur_cnt > ser_threshold:
                lam = lam0
                step_count = 0
                resets[n_reset] = j
                n_reset += 1
            win_err[wi_] = cur_err
            win_cnt[wi_] = cur_cnt
            win_lam[wi_] = lam
            win_end[wi_] = j
            wi_ += 1
            cur_err = 0
            cur_cnt = 0
    if cur_cnt > 0:
        win_err[wi_] = cur_err
        win_cnt[wi_] = cur_cnt
        win_lam[wi_] = lam
        win_end[wi_] = L - 1
        wi_ += 1
    return (errors, phase, win_err[:wi_], win_cnt[:wi_], win_lam[:wi_], win_end[:wi_], w, lam,
            resets[:n_reset], outputs)


@numba.njit(cache=True, nogil=True)
def _fixed_kernel(u, target, counted, mask, alpha, beta, phi, gain, mode, lam0, lam_min, gamma, k,
                  train_length, washout, window, use_watchdog, ser_threshold, adc_bits):
    Q17F = 17
    Q20F = 20
    Q17_LO = -(np.int64(1) << 17)
    Q17_HI = (np.int64(1) << 17) - 1
    Q20_LO = -(np.int64(1) << 24)
    Q20_HI = (np.int64(1) << 24) - 1
    sat = np.zeros(6, dtype=np.int64)
    L = u.size
    N = mask.size
    m_q = np.empty(N, dtype=np.int64)
    for i in range(N):
        m_q[i] = fx.nb_quantize(mask[i], Q17F, Q17_LO, Q17_HI, sat, 0)
    beta_q = fx.nb_quantize(beta, Q17F, Q17_LO, Q17_HI, sat, 0)
    lam0_q = fx.nb_quantize(lam0, Q17F, Q17_LO, Q17_HI, sat, 5)
    lmin_q = fx.nb_quantize(lam_min, Q17F, Q17_LO, Q17_HI, sat, 5)
    gamma_q = fx.nb_quantize(gamma, Q17F, Q17_LO, Q17_HI, sat, 5)
    adc_shift = 0
    if adc_bits > 0:
        adc_shift = Q17F + 1 - adc_bits
    x = np.zeros(N)
    xn = np.zeros(N)
    xq = np.zeros(N, dtype=np.int64)
    drive = np.zeros(N)
    prev = 0.0
    w = np.zeros(N, dtype=np.int64)
    lam = lam0_q
    step_count = 0
    errors = np.full(L, -1, dtype=np.int8)
    phase = np.zeros(L, dtype=np.int8)
    n_win = L // window + 1
    win_err = np.zeros(n_win, dtype=np.int64)
    win_cnt = np.zeros(n_win, dtype=np.int64)
    win_lam = np.zeros(n_win)
    win_end = np.zeros(n_win, dtype=np.int64)
    resets = np.zeros(n_win, dtype=np.int64)
    n_reset = 0
    wi_ = 0
    cur_err = 0
    cur_cnt = 0
    two = np.int64(2) << Q20F
    for j in range(L):
        u_q = fx.nb_quantize(u[j], Q20F, Q20_LO, Q20_HI, sat, 0)
        for i in range(N):
            mu = fx.nb_clamp(fx.nb_round_shift(u_q * m_q[i], Q17F), Q20_LO, Q20_HI, sat, 2)
            bmu = fx.nb_clamp(fx.nb_round_shift(mu * beta_q, Q17F), Q20_LO, Q20_HI, sat, 2)
            drive[i] = bmu / float(np.int64(1) << Q20F)
        xn[0] = np.sin(alpha * prev + drive[0] + phi)
        for i in range(1, N):
            xn[i] = np.sin(alpha * x[i - 1] + drive[i] + phi)
        prev = x[N - 1]
        x, xn = xn, x
        if j < washout or not counted[j]:
            continue
        for i in range(N):
            q = fx.nb_quantize(gain * x[i], Q17F, Q17_LO, Q17_HI, sat, 1)
            if adc_shift > 0:
                q = fx.nb_round_shift(q, adc_shift) << adc_shift
                q = fx.nb_clamp(q, Q17_LO, Q17_HI, sat, 1)
            xq[i] = q
        y = np.int64(0)
        for i in range(N):
            p = fx.nb_clamp(fx.nb_round_shift(w[i] * xq[i], Q17F), Q20_LO, Q20_HI, sat, 2)
            y = fx.nb_clamp(y + p, Q20_LO, Q20_HI, sat, 3)
        d = target[j]
        d_raw = np.int64(d) << Q20F
        if y >= two:
            dec = 3
        elif y >= 0:
            dec = 1
        elif y >= -two:
            dec = -1
        else:
            dec = -3
        err = 1 if dec != d else 0
        errors[j] = err
        in_train = mode == 1 or train_length < 0 or step_count < train_length
        if in_train or mode == 2:
            # simplified mode keeps adapting at lambda0 through the scored phase
            phase[j] = PHASE_TRAIN if in_train else PHASE_TEST
            e = fx.nb_clamp(d_raw - y, Q20_LO, Q20_HI, sat, 4)
            scaled = fx.nb_clamp(fx.nb_round_shift(e * lam, Q17F), Q20_LO, Q20_HI, sat, 2)
            for i in range(N):
                dw = fx.nb_clamp(fx.nb_round_shift(scaled * xq[i], Q17F), Q20_LO, Q20_HI, sat, 2)
                w[i] = fx.nb_clamp(w[i] + dw, Q20_LO, Q20_HI, sat, 3)
            step_count += 1
            if mode != 2 and step_count % k == 0:
                diff = lam - lmin_q
                lam = fx.nb_clamp(lmin_q + fx.nb_round_shift(gamma_q * diff, Q17F), Q17_LO, Q17_HI, sat, 5)
            if mode == 0 and train_length >= 0 and step_count >= train_length:
                lam = 0
        else:
            phase[j] = PHASE_TEST
            lam = 0
        cur_err += err
        cur_cnt += 1
        if cur_cnt == window:
            if use_watchdog and cur_err / cur_cnt > ser_threshold:
                lam = lam0_q
                step_count = 0
                resets[n_reset] = j
                n_reset += 1
            win_err[wi_] = cur_err
            win_cnt[wi_] = cur_cnt
            win_lam[wi_] = lam / float(np.int64(1) << Q17F)
            win_end[wi_] = j
            wi_ += 1
            cur_err = 0
            cur_cnt = 0
    if cur_cnt > 0:
        win_err[wi_] = cur_err
        win_cnt[wi_] = cur_cnt
        win_lam[wi_] = lam / float(np.int64(1) << Q17F)
        win_end[wi_] = L - 1
        wi_ += 1
    w_float = w / float(np.int64(1) << Q20F)
    return (errors, phase, win_err[:wi_], win_cnt[:wi_], win_lam[:wi_], win_end[:wi_], w_float,
            lam / float(np.int64(1) << Q17F), resets[:n_reset], sat)


def simulate(u: np.ndarray, target: np.ndarray, counted: np.ndarray, res: ReservoirConfig, tr: TrainerConfig,
             window: int = 10_000, fixed: bool = False, state_noise: float = 0.0, noise_seed: int = 0,
             adc_bits: int = 0, record_outputs: bool = False) -> SimulationResult:
    """Run the equaliser over a pre-computed input stream.

    ``target`` must already be aligned (see :func:`trainer.align_target`);
    entries where ``counted`` is False are ignored.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    target = np.ascontiguousarray(np.nan_to_num(target), dtype=np.float64)
    counted = np.ascontiguousarray(counted, dtype=np.bool_)
    if not (u.shape == target.shape == counted.shape):
        raise ValueError("u, target and counted must have the same length")
    train_length = -1 if tr.train_length is None else int(tr.train_length)
    common = (u, target, counted, res.mask, float(res.alpha), float(res.beta), float(res.phi),
              float(res.readout_gain), MODE_CODES[tr.mode], float(tr.lambda0), float(tr.lambda_min),
              float(tr.gamma), int(tr.k), train_length, int(res.washout), int(window), bool(tr.watchdog),
              float(tr.ser_threshold))
    if fixed:
        if state_noise:
            raise ValueError("state noise is only supported by the float pipeline")
        out = _fixed_kernel(*common, int(adc_bits))
        sat = {site: int(c) for site, c in zip(SAT_SITES, out[9])}
        return SimulationResult(*out[:9], outputs=None, saturation=sat)
    out = _float_kernel(*common, float(state_noise), int(noise_seed), bool(record_outputs))
    return SimulationResult(*out[:9], outputs=out[9] if record_outputs else None)
