"""Tests for the odometer / shift dynamics layer."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coblim.dynamics import (
    OdometerPoint,
    ShiftTrajectory,
    birkhoff,
    coordinate_matrix,
    fair_bits,
    level,
    odometer_advance,
    stream_generator,
    uniform_start_values,
)


# ---------------------------------------------------------------------------
# seeded streams
# ---------------------------------------------------------------------------

def test_stream_generator_reproducible():
    a = stream_generator(123, 7).random(16)
    b = stream_generator(123, 7).random(16)
    assert np.array_equal(a, b)


def test_streams_are_distinct():
    a = stream_generator(123, 0).random(16)
    b = stream_generator(123, 1).random(16)
    assert not np.array_equal(a, b)


def test_fair_bits_values_and_balance():
    bits = fair_bits(2024, 0, 20000)
    assert bits.dtype == np.uint8
    assert set(np.unique(bits)) <= {0, 1}
    # a fair coin stays within 5 sigma of n/2
    assert abs(int(bits.sum()) - 10000) < 5 * math.sqrt(20000 / 4)


def test_uniform_start_values_range():
    vals = uniform_start_values(9, 3, 100, bits=12)
    assert vals.min() >= 0 and vals.max() < (1 << 12)


# ---------------------------------------------------------------------------
# odometer arithmetic
# ---------------------------------------------------------------------------

@given(st.integers(min_value=1, max_value=16), st.data())
def test_from_bits_roundtrip(nbits, data):
    bits = data.draw(st.lists(st.integers(0, 1), min_size=nbits, max_size=nbits))
    pt = OdometerPoint.from_bits(bits)
    assert pt.bits == tuple(bits)
    assert pt.nbits == nbits


@given(
    st.integers(min_value=1, max_value=20),
    st.integers(min_value=0, max_value=1 << 30),
    st.integers(min_value=0, max_value=1 << 30),
    st.data(),
)
def test_advance_composes_and_wraps(nbits, s1, s2, data):
    value = data.draw(st.integers(min_value=0, max_value=(1 << nbits) - 1))
    pt = OdometerPoint(value, nbits)
    two_steps = odometer_advance(odometer_advance(pt, s1), s2)
    one_step = odometer_advance(pt, s1 + s2)
    assert two_steps == one_step
    assert odometer_advance(pt, 1 << nbits) == pt


@settings(deadline=None, max_examples=25)
@given(st.integers(min_value=2, max_value=10), st.data())
def test_advance_is_a_bijection(nbits, data):
    # measure preservation at full resolution: advancing every point by s
    # permutes the 2^B points
    s = data.draw(st.integers(min_value=0, max_value=(1 << nbits)))
    n = 1 << nbits
    image = {odometer_advance(OdometerPoint(v, nbits), s).value for v in range(n)}
    assert image == set(range(n))


@given(
    st.integers(min_value=1, max_value=20),
    st.integers(min_value=0, max_value=1 << 40),
    st.data(),
)
def test_level_advances_modulo_tower_height(nbits, steps, data):
    value = data.draw(st.integers(min_value=0, max_value=(1 << nbits) - 1))
    i = data.draw(st.integers(min_value=1, max_value=nbits))
    pt = OdometerPoint(value, nbits)
    before = level(pt, i)
    after = level(odometer_advance(pt, steps), i)
    assert after == (before + steps) % (1 << i)
    assert 0 <= before < (1 << i)


def test_level_counts_cylinder_measure():
    # exactly 2^{B-i} points sit on each tower level: mu(level = l) = 2^-i
    nbits, i = 10, 4
    counts = np.zeros(1 << i, dtype=int)
    for v in range(1 << nbits):
        counts[level(OdometerPoint(v, nbits), i)] += 1
    assert np.all(counts == 1 << (nbits - i))


def test_point_validation():
    with pytest.raises(ValueError):
        OdometerPoint(4, 2)
    with pytest.raises(ValueError):
        OdometerPoint(0, 0)
    with pytest.raises(ValueError):
        level(OdometerPoint(0, 4), 5)
    with pytest.raises(ValueError):
        odometer_advance(OdometerPoint(0, 4), -1)


# ---------------------------------------------------------------------------
# shift trajectories
# ---------------------------------------------------------------------------

def test_trajectory_coordinates_match_bit_expansion():
    traj = ShiftTrajectory.generate(42, 0, n=32, window=16)
    xs = traj.coordinates()
    for k in (0, 1, 17, 32):
        expected = sum(traj.bit(k - j) * 2.0 ** (-j - 1) for j in range(1, 17))
        assert xs[k] == expected  # exact float equality by construction


def test_trajectory_coordinates_range_and_shift_relation():
    traj = ShiftTrajectory.generate(7, 1, n=200, window=53)
    xs = traj.coordinates()
    assert xs.shape == (201,)
    assert xs.min() >= 0.0 and xs.max() < 0.5
    # x_{k+1} = x_k / 2 + eps_k / 4 (one new bit enters, window slides)
    for k in range(200):
        lhs = xs[k + 1]
        rhs = xs[k] / 2.0 + traj.bit(k) * 0.25
        # the oldest bit leaves the window, perturbing by at most 2^-(W+1)
        assert abs(lhs - rhs) <= 2.0 ** -54


def test_coordinate_matrix_matches_per_path():
    window, n, paths = 20, 15, 4
    eps = np.stack([fair_bits(5, s, n + 2 * window + 1) for s in range(paths)])
    batch = coordinate_matrix(eps, n, window)
    for s in range(paths):
        single = ShiftTrajectory(seed=5, stream=s, n=n, window=window, eps=eps[s])
        assert np.array_equal(batch[s], single.coordinates())


def test_trajectory_bit_bounds():
    traj = ShiftTrajectory.generate(1, 0, n=10, window=8)
    with pytest.raises(IndexError):
        traj.bit(-9)
    with pytest.raises(IndexError):
        traj.bit(19)


# ---------------------------------------------------------------------------
# Birkhoff sums
# ---------------------------------------------------------------------------

def test_birkhoff_partial_sums_definition():
    pt = OdometerPoint(5, 8)
    f = lambda w: float(w.value % 3)
    summary = birkhoff(f, pt, n=20)
    expected = np.concatenate(
        [[0.0], np.cumsum([f(odometer_advance(pt, k)) for k in range(20)])]
    )
    assert np.allclose(summary.partial_sums, expected)
    assert summary.final == expected[-1]
    assert summary.max_abs_partial == np.max(np.abs(expected[1:]))


def test_birkhoff_polygonal_interpolates_knots():
    pt = OdometerPoint(0, 8)
    f = lambda w: 1.0 if w.value % 2 == 0 else -1.0
    n = 16
    t = np.linspace(0.0, 1.0, 33)
    summary = birkhoff(f, pt, n=n, t_grid=t)
    # at knots t = k/n the polygonal path equals S_k
    for k in range(n + 1):
        assert summary.polygonal[2 * k] == pytest.approx(summary.partial_sums[k])


def test_birkhoff_records_transfer_maximum():
    pt = OdometerPoint(3, 8)
    f = lambda w: 0.0
    g = lambda w: float(w.value)
    summary = birkhoff(f, pt, n=10, g=g)
    assert summary.max_abs_g == max(float((3 + k) % 256) for k in range(1, 11))


def test_birkhoff_horizon_guard():
    with pytest.raises(ValueError):
        birkhoff(lambda w: 0.0, OdometerPoint(0, 4), n=9)  # 2n > 2^4


@given(st.integers(min_value=1, max_value=60))
def test_birkhoff_constant_function_telescopes(n):
    traj = ShiftTrajectory.generate(11, 2, n=64, window=10)
    summary = birkhoff(lambda x: 1.0, traj, n=n)
    assert summary.final == pytest.approx(n)
