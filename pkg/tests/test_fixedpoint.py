from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcequalizer import fixedpoint as fx
from rcequalizer.fixedpoint import (
    FixedTrainerState, FixQ17, FixQ20, SaturationCounter, add_q20, fixed_lambda_decay, fixed_readout,
    fixed_training_step, mul_25x18, mul_q17, quantize_q17, quantize_q20, round_shift,
)


def exact_round(p: int, shift: int) -> int:
    # Python's round() on a Fraction rounds half to even, exactly
    return round(Fraction(p, 1 << shift))


def test_round_shift_exhaustive_12_bit():
    for shift in range(1, 7):
        for p in range(-(1 << 12), 1 << 12):
            assert round_shift(p, shift) == exact_round(p, shift)


@given(st.integers(-(1 << 42), 1 << 42), st.integers(1, 20))
def test_round_shift_large(p, shift):
    assert round_shift(p, shift) == exact_round(p, shift)


@settings(deadline=None)
@given(st.integers(-(1 << 42), 1 << 42), st.integers(1, 20))
def test_numba_round_shift_matches(p, shift):
    assert fx.nb_round_shift(np.int64(p), shift) == round_shift(p, shift)


def test_mul_25x18_subgrid_against_fractions():
    # 12-bit subgrid spread across both operand ranges
    a_vals = [(i << 13) - (1 << 24) for i in range(0, 1 << 12, 7)]
    b_vals = [(i << 6) - (1 << 17) for i in range(0, 1 << 12, 5)]
    for a in a_vals:
        for b in b_vals:
            exact = Fraction(a, 1 << 20) * Fraction(b, 1 << 17)
            want = max(fx.Q20_MIN, min(fx.Q20_MAX, round(exact * (1 << 20))))
            assert mul_25x18(FixQ20(a), FixQ17(b)).raw == want


def test_saturation_is_counted():
    c = SaturationCounter()
    assert quantize_q17(1.0, c).raw == fx.Q17_MAX
    assert quantize_q17(-1.0, c).raw == fx.Q17_MIN
    assert quantize_q20(100.0, c).raw == fx.Q20_MAX
    assert quantize_q20(-16.0, c).raw == fx.Q20_MIN
    assert c.count == 2 and c.by_site == {"quantize_q17": 1, "quantize_q20": 1}
    big = FixQ20(fx.Q20_MAX)
    assert add_q20(big, big, c).raw == fx.Q20_MAX
    assert mul_25x18(FixQ20(fx.Q20_MIN), FixQ17(fx.Q17_MIN), c).raw == fx.Q20_MAX
    assert c.count == 4


def test_quantize_round_half_even():
    lsb = 2.0**-17
    assert quantize_q17(0.5 * lsb).raw == 0
    assert quantize_q17(1.5 * lsb).raw == 2
    assert quantize_q17(-2.5 * lsb).raw == -2
    assert quantize_q20(0.25).value == 0.25
    assert FixQ17(1 << 16).value == 0.5


def test_mul_q17():
    half = FixQ17(1 << 16)
    assert mul_q17(half, half).raw == 1 << 15
    assert mul_q17(FixQ17(fx.Q17_MIN), FixQ17(fx.Q17_MIN)).raw == fx.Q17_MAX


def test_training_step_tracks_float():
    rng = np.random.default_rng(0)
    n = 10
    w_f = np.zeros(n)
    state = FixedTrainerState(tuple(FixQ20(0) for _ in range(n)), quantize_q17(0.05))
    c = SaturationCounter()
    for _ in range(2000):
        xq = [quantize_q17(v) for v in rng.uniform(-0.5, 0.5, n)]
        x = np.array([q.value for q in xq])
        d = int(rng.choice([-3, -1, 1, 3]))
        y_f = w_f @ x
        state, y = fixed_training_step(state, xq, d, c)
        assert abs(y.value - y_f) < 1e-3
        w_f += 0.05 * (d - y_f) * x
    assert c.count == 0
    assert np.max(np.abs(np.array([w.value for w in state.w]) - w_f)) < 1e-3
    assert state.step_count == 2000


def test_readout_accumulates_with_saturation():
    c = SaturationCounter()
    w = tuple(FixQ20(fx.Q20_MAX) for _ in range(4))
    x = [FixQ17(fx.Q17_MAX)] * 4
    assert fixed_readout(x, w, c).raw == fx.Q20_MAX
    assert c.by_site.get("add_q20", 0) >= 1


def test_lambda_decay():
    lam = quantize_q17(0.4)
    g = quantize_q17(0.999)
    zero = FixQ17(0)
    out = fixed_lambda_decay(lam, zero, g)
    assert out.raw == round_shift(g.raw * lam.raw, 17)
    lmin = quantize_q17(0.01)
    for _ in range(20_000):
        lam = fixed_lambda_decay(lam, lmin, g)
    # decay stalls once gamma * diff rounds back to diff: diff <= 0.5 / (1 - gamma) LSB
    stall = 0.5 / (1 - g.raw / 2**17)
    diff = lam.raw - lmin.raw
    assert 0 < diff <= stall
    assert fixed_lambda_decay(lam, lmin, g) == lam
