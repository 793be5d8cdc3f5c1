import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from tafa.filter_core import ImpulseResponse, zoh_interpolate
from tafa.taf_pattern import (
    CollapsedPulseWarning,
    NormalizationError,
    PulseTrain,
    TafPattern,
    approximate,
    pattern_to_ct,
    quantize,
    read_pattern,
    runs,
    write_pattern,
)


def _train(coeffs, amplitude=1.0, t_tap=1.0):
    return approximate(zoh_interpolate(ImpulseResponse(coeffs, t_tap)), amplitude)


def test_approximate_examples():
    pt = _train([1.0])
    assert (pt.widths.tolist(), pt.centers.tolist(), pt.signs.tolist()) == ([1.0], [0.5], [1])
    pt = _train([0.5, 1.0])
    assert pt.widths.tolist() == [0.5, 1.0]
    assert pt.centers.tolist() == [0.5, 1.5]
    pt = _train([0.0, 1.0])
    assert len(pt) == 1 and pt.taps.tolist() == [1]


def test_approximate_rejects_overflow():
    with pytest.raises(NormalizationError):
        _train([0.5, 1.5])


def test_quantize_width_example():
    pt = PulseTrain([0.4], [0.5], [1], [0], 1.0, 1.0, 1)
    p = quantize(pt, 0.125)
    assert int(np.sum(p.bits != 0)) == 3       # 0.4 * 8 = 3.2 slots
    assert len(p) == 8


def test_full_width_pulse_is_exact():
    p = quantize(_train([1.0, -1.0]), 0.125)
    assert p.to_string() == "++++++++--------"


def test_tie_breaks_away_from_center():
    # 3 slots centred on a grid line: the leading edge falls on a half slot.
    pt = PulseTrain([3 / 8], [0.5], [1], [0], 1.0, 1.0, 1)
    p = quantize(pt, 0.125)
    assert p.to_string() == "00+++000"
    # Under the edge rule both edges tie and move outwards.
    pt = PulseTrain([0.25], [0.5 + 1 / 16], [1], [0], 1.0, 1.0, 1)
    assert quantize(pt, 0.125, rule="edges").to_string() == "000+++00"


def test_collapsed_pulses_warn():
    with pytest.warns(CollapsedPulseWarning) as rec:
        p = quantize(_train([0.01, 1.0, 0.01]), 0.125)
    assert rec[0].message.taps == (0, 2)
    assert p.to_string() == "00000000++++++++00000000"


def test_quantize_requires_divisor():
    with pytest.raises(ValueError):
        quantize(_train([1.0]), 0.3)


def test_pattern_to_ct_examples():
    ct = pattern_to_ct(TafPattern([1, 1, 0, 0], 1.0, 1), amplitude=2.0)
    assert ct.segments == [(0.0, 2.0, 2.0), (2.0, 4.0, 0.0)]
    ct = pattern_to_ct(TafPattern(np.zeros(8), 1.0, 2))
    assert np.all(ct.levels == 0) and ct.integral() == 0.0


def test_runs():
    assert runs([0, 1, 1, -1, 0, 0, 1]) == [(1, 3, 1), (3, 4, -1), (6, 7, 1)]
    assert runs([]) == []


def test_pattern_file_round_trip(tmp_path):
    p = TafPattern([1, 0, -1, -1, 0, 0, 1, 1], 0.25, 2, amplitude=1.5)
    write_pattern(tmp_path / "p.taf", p, {"seed": 3})
    q = read_pattern(tmp_path / "p.taf")
    np.testing.assert_array_equal(q.bits, p.bits)
    assert (q.clock_period, q.num_taps, q.amplitude, q.grid_factor) == (0.25, 2, 1.5, 4)
    (tmp_path / "bad.taf").write_text('{"clock_period_s": 1, "num_taps": 1}\n+x\n')
    with pytest.raises(ValueError, match=":2:"):
        read_pattern(tmp_path / "bad.taf")


def test_pattern_validation():
    with pytest.raises(ValueError):
        TafPattern([2, 0], 1.0, 1)
    with pytest.raises(ValueError):
        TafPattern([1, 0, 0], 1.0, 2)


@pytest.mark.parametrize("grid", [4, 8, 16])
def test_random_trains_width_error_bounded(grid):
    """1000 seeded random trains: per-tap slot count within one clock of the width."""
    rng = np.random.default_rng(grid)
    t_clk = 1.0 / grid
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        coeffs = rng.uniform(-1, 1, n)
        pt = _train(coeffs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CollapsedPulseWarning)
            p = quantize(pt, t_clk)
        assert len(p) == n * grid
        per_tap = np.abs(p.bits.reshape(n, grid)).sum(axis=1) * t_clk
        err = np.abs(per_tap[pt.taps] - pt.widths)
        assert np.all(err <= t_clk + 1e-12)
        worst = max(worst, err.max())
    # The width-first rule is in fact within half a slot.
    assert worst <= 0.5 * t_clk + 1e-12


@pytest.mark.parametrize("rule", ["width", "edges"])
def test_edge_displacement(rule):
    rng = np.random.default_rng(5)
    bound = 0.5 if rule == "edges" else 0.75
    for _ in range(300):
        coeffs = rng.uniform(0.2, 1, 4)   # positive, so every tap is its own run in its window
        pt = _train(coeffs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CollapsedPulseWarning)
            p = quantize(pt, 0.125, rule=rule)
        grid = p.bits.reshape(4, 8)
        for k, (w, c) in enumerate(zip(pt.widths, pt.centers)):
            on = np.flatnonzero(grid[k])
            if on.size == 0:
                continue
            lead, trail = (k * 8 + on[0]) / 8, (k * 8 + on[-1] + 1) / 8
            assert abs(lead - (c - w / 2)) <= bound / 8 + 1e-12
            assert abs(trail - (c + w / 2)) <= bound / 8 + 1e-12


coeff_arrays = arrays(np.float64, st.integers(1, 12), elements=st.floats(-1, 1, allow_nan=False)).filter(
    lambda a: np.any(a != 0))


@given(coeff_arrays, st.floats(1.0, 3.0), st.sampled_from([0.5, 2.0, 3.0]))
def test_area_preserved_before_quantization(coeffs, amplitude, t_tap):
    pt = _train(coeffs, amplitude, t_tap)
    np.testing.assert_allclose(pt.area(), t_tap * coeffs.sum(), rtol=1e-12, atol=1e-12)
    assert np.all((pt.widths >= 0) & (pt.widths <= t_tap + 1e-15))
    # Each pulse stays inside its own tap window.
    assert np.all(pt.centers - pt.widths / 2 >= pt.taps * t_tap - 1e-12)
    assert np.all(pt.centers + pt.widths / 2 <= (pt.taps + 1) * t_tap + 1e-12)


@given(coeff_arrays, st.floats(0.1, 10.0))
def test_approximate_scale_covariant(coeffs, k):
    a = _train(coeffs, 1.0)
    b = _train(coeffs * k, k)
    np.testing.assert_allclose(b.widths, a.widths, rtol=1e-12)
    np.testing.assert_array_equal(b.centers, a.centers)
    np.testing.assert_array_equal(b.signs, a.signs)


@given(coeff_arrays, st.sampled_from([4, 8, 16]))
def test_round_trip_integral_bound(coeffs, grid):
    pt = _train(coeffs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CollapsedPulseWarning)
        p = quantize(pt, 1.0 / grid)
    err = abs(pattern_to_ct(p).integral() - coeffs.sum())
    assert err <= len(pt) * 1.0 / grid + 1e-12
