"""The streaming kernels against step-by-step references built from the public pieces."""
from dataclasses import replace

import numpy as np
import pytest

from rcequalizer import fixedpoint as fx
from rcequalizer.channel import ChannelParams, ChannelSchedule, transmit
from rcequalizer.evaluator import decide
from rcequalizer.pipeline import PHASE_SKIPPED, PHASE_TEST, PHASE_TRAIN, simulate
from rcequalizer.prng import MaskRng, SymbolSource
from rcequalizer.reservoir import ReservoirConfig, reservoir_init, reservoir_step
from rcequalizer.trainer import (
    TrainerConfig, align_target, lambda_step, readout, trainer_init, training, watchdog, weight_update,
)


def make_streams(length, schedule=None, delay=2, seed=1):
    s = SymbolSource.from_seed(seed).take(length)
    tx = transmit(s, ChannelParams(), schedule or ChannelSchedule())
    upcoming = np.full(length, np.nan)
    upcoming[:-1] = tx.center[1:]
    target = align_target(upcoming, delay)
    counted = tx.valid & np.isfinite(target) & (np.arange(length) + 1 - delay >= 2)
    return tx.u, target, counted


def float_reference(u, target, counted, res, tr, window):
    s = reservoir_init(res)
    t = trainer_init(tr, res.n)
    L = u.size
    errors = np.full(L, -1)
    phase = np.zeros(L, dtype=int)
    windows, resets = [], []
    cur = []
    for j in range(L):
        s = reservoir_step(s, res, u[j])
        if j < res.washout or not counted[j]:
            continue
        x = res.readout_gain * s.x
        y = readout(x, t.w)
        d = target[j]
        errors[j] = int(decide(y) != d)
        in_train = training(t, tr)
        if in_train or tr.mode == "simplified":
            phase[j] = PHASE_TRAIN if in_train else PHASE_TEST
            t = lambda_step(weight_update(t, x, d, y), tr)
        else:
            phase[j] = PHASE_TEST
            t = replace(t, lam=0.0)
        cur.append(errors[j])
        if len(cur) == window:
            if tr.watchdog:
                before = t
                t = watchdog(sum(cur) / window, t, tr)
                if t is not before:
                    resets.append(j)
            windows.append((sum(cur), window, t.lam, j))
            cur = []
    if cur:
        windows.append((sum(cur), len(cur), t.lam, L - 1))
    return errors, phase, windows, resets, t


@pytest.mark.parametrize("mode, train_length, watch", [
    ("full", 1500, False), ("full", 1500, True), ("non-stationary", None, False), ("simplified", 1000, False)])
def test_float_kernel_matches_reference(mode, train_length, watch):
    sched = ChannelSchedule("switching", "p1", values=(1.0, 0.5), interval=2500)
    u, target, counted = make_streams(5000, sched)
    res = ReservoirConfig(MaskRng(3).draw_mask(12), washout=50)
    lmin = 0.01 if mode == "non-stationary" else 0.0
    tr = TrainerConfig(lambda0=0.4 if mode != "simplified" else 0.05, lambda_min=lmin, k=5, mode=mode,
                       train_length=train_length, watchdog=watch, ser_threshold=0.05)
    sim = simulate(u, target, counted, res, tr, window=200, record_outputs=True)
    errors, phase, windows, resets, t = float_reference(u, target, counted, res, tr, 200)
    assert np.array_equal(sim.errors, errors)
    assert np.array_equal(sim.phase, phase)
    assert np.allclose(sim.weights, t.w, atol=1e-9)
    assert sim.lam == pytest.approx(t.lam, abs=1e-12)
    assert list(sim.resets) == resets
    assert list(sim.window_errors) == [w[0] for w in windows]
    assert list(sim.window_counts) == [w[1] for w in windows]
    assert np.allclose(sim.window_lambda, [w[2] for w in windows])
    assert list(sim.window_end) == [w[3] for w in windows]
    if watch:
        assert resets, "switch should trip the watchdog"
    assert np.all(sim.phase[:50] == PHASE_SKIPPED)


def fixed_reference(u, target, counted, res, tr):
    c = fx.SaturationCounter()
    m_q = [fx.quantize_q17(m) for m in res.mask]
    beta_q = fx.quantize_q17(res.beta)
    lam0 = fx.quantize_q17(tr.lambda0)
    gamma = fx.quantize_q17(tr.gamma)
    lmin = fx.quantize_q17(tr.lambda_min)
    state = fx.FixedTrainerState(tuple(fx.FixQ20(0) for _ in res.mask), lam0)
    x = np.zeros(res.n)
    prev = 0.0
    errors = []
    for j in range(u.size):
        uq = fx.quantize_q20(u[j])
        drive = np.array([fx.mul_25x18(fx.mul_25x18(uq, mq), beta_q).value for mq in m_q])
        fed = np.concatenate([[prev], x[:-1]])
        prev = x[-1]
        x = np.sin(res.alpha * fed + drive + res.phi)
        if j < res.washout or not counted[j]:
            continue
        xq = [fx.quantize_q17(res.readout_gain * v) for v in x]
        d = int(target[j])
        if state.step_count < tr.train_length:
            state, y = fx.fixed_training_step(state, xq, d, c)
            if state.step_count % tr.k == 0:
                state = replace(state, lam=fx.fixed_lambda_decay(state.lam, lmin, gamma))
        else:
            y = fx.fixed_readout(xq, state.w)
        errors.append(int(decide(y.value) != d))
    return state, errors


def test_fixed_kernel_matches_scalar_ops():
    u, target, counted = make_streams(2500)
    res = ReservoirConfig(MaskRng(5).draw_mask(8), washout=30)
    tr = TrainerConfig(k=7, train_length=1500)
    sim = simulate(u, target, counted, res, tr, window=500, fixed=True)
    state, errors = fixed_reference(u, target, counted, res, tr)
    assert np.array_equal(sim.weights, [w.value for w in state.w])
    assert list(sim.errors[sim.errors >= 0]) == errors
    assert sum(sim.saturation.values()) == 0


def test_fixed_tracks_float():
    u, target, counted = make_streams(12_000)
    res = ReservoirConfig(MaskRng(7).draw_mask(50))
    tr = TrainerConfig(train_length=None)
    a = simulate(u, target, counted, res, tr)
    b = simulate(u, target, counted, res, tr, fixed=True)
    assert np.max(np.abs(a.weights - b.weights)) < 1e-3


def test_adc_bits_and_state_noise_change_results():
    u, target, counted = make_streams(6000)
    res = ReservoirConfig(MaskRng(2).draw_mask(20))
    tr = TrainerConfig(train_length=3000)
    base = simulate(u, target, counted, res, tr, fixed=True)
    coarse = simulate(u, target, counted, res, tr, fixed=True, adc_bits=6)
    assert not np.array_equal(base.weights, coarse.weights)
    noisy = simulate(u, target, counted, res, tr, state_noise=0.01, noise_seed=4)
    again = simulate(u, target, counted, res, tr, state_noise=0.01, noise_seed=4)
    assert np.array_equal(noisy.weights, again.weights)
    with pytest.raises(ValueError):
        simulate(u, target, counted, res, tr, fixed=True, state_noise=0.1)


def test_length_mismatch_raises():
    res = ReservoirConfig(np.zeros(3))
    with pytest.raises(ValueError):
        simulate(np.zeros(10), np.zeros(9), np.ones(10, bool), res, TrainerConfig())


def test_result_helpers():
    u, target, counted = make_streams(4000)
    res = ReservoirConfig(MaskRng(1).draw_mask(20))
    sim = simulate(u, target, counted, res, TrainerConfig(train_length=1000), window=500)
    test = sim.errors[sim.phase == PHASE_TEST]
    assert sim.test_ser() == pytest.approx(test.mean())
    scored = sim.errors[sim.errors >= 0]
    assert sim.scored_ser() == pytest.approx(scored.mean())
    assert np.sum(sim.window_ser * sim.window_counts) == scored.sum()
    never = simulate(u, target, counted, res, TrainerConfig(lambda_min=0.01, mode="non-stationary",
                                                            train_length=None))
    assert np.isnan(never.test_ser())
