import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cylcover import UsageError
from cylcover.lineproc import (Line, LineBatches, Window, canonical_direction, complement_basis,
                               covers, distance_point_line, keyed_rng, line_stream,
                               sample_line_hitting, sample_lines, window_intensity)

vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=5)


def nonzero(v):
    return np.linalg.norm(v) > 1e-3


def test_distance_examples():
    e1 = np.array([1.0, 0.0])
    assert distance_point_line([0, 0], Line.through([0, 0], e1)) == 0
    assert distance_point_line([0, 2], Line.through([0, 0], e1)) == 2
    L = Line.through([0, 0, 0], [0, 0, 1])
    assert distance_point_line([3, 4, 0], L) == pytest.approx(5, abs=1e-14)


def test_distance_dimension_mismatch():
    with pytest.raises(UsageError):
        distance_point_line([0, 0, 0], Line.through([0, 0], [1, 0]))


def test_covers_examples():
    L = Line.through([0, 0], [1, 0])
    assert covers(L, [0, 0.5], 0.4)
    assert not covers(L, [0, 0.95], 0.1)
    assert covers(L, [0, 0.75], 0.25)  # closed tube boundary
    for bad in (-0.1, 1.0):
        with pytest.raises(UsageError):
            covers(L, [0, 0], bad)


@given(vec)
def test_canonical_direction_idempotent_and_sign_free(v):
    v = np.array(v)
    if not nonzero(v):
        return
    u = canonical_direction(v)
    assert abs(np.linalg.norm(u) - 1) < 1e-12
    assert np.array_equal(canonical_direction(u), u)
    assert np.allclose(canonical_direction(-v), u, atol=1e-15)


@given(vec, vec)
def test_line_offset_orthogonal_and_distance_invariant(p, u):
    if len(p) != len(u) or not nonzero(np.array(u)):
        return
    L = Line.through(p, u)
    assert abs(np.dot(L.offset, L.dir)) < 1e-10 * max(1, np.linalg.norm(p))
    x = np.array(p) + 1.5
    shifted = Line(L.dir, L.offset + 3.0 * L.dir)
    flipped = Line(-L.dir, L.offset)
    ref = distance_point_line(x, L)
    assert distance_point_line(x, shifted) == pytest.approx(ref, abs=1e-9)
    assert distance_point_line(x, flipped) == pytest.approx(ref, abs=1e-12)


def test_complement_basis_examples():
    assert np.allclose(np.abs(complement_basis([0, 1.0])), [[1, 0]])
    b = complement_basis([0, 0, 1.0])
    assert np.allclose(np.abs(b) @ np.abs(b).T, np.eye(2))
    assert np.allclose(b[:, 2], 0)


@given(vec)
def test_complement_basis_gram(v):
    v = np.array(v)
    if not nonzero(v):
        return
    u = v / np.linalg.norm(v)
    m = np.vstack([u, complement_basis(u)])
    assert np.allclose(m @ m.T, np.eye(u.size), atol=1e-10)


@pytest.mark.parametrize("R,d,want", [(1, 2, 1), (1, 4, 1), (2, 3, 4), (5, 2, 5)])
def test_window_intensity(R, d, want):
    assert window_intensity(Window((0.0,) * d, R)) == want


def test_window_rejects_bad_radius():
    with pytest.raises(UsageError):
        Window((0, 0), 0)


def test_sampled_lines_hit_window():
    w = Window((1.0, -2.0, 0.5), 2.5)
    rng = keyed_rng(0)
    for _ in range(200):
        L = sample_line_hitting(w, rng)
        assert distance_point_line(w.center, L) <= w.radius + 1e-12
        assert abs(np.linalg.norm(L.dir) - 1) < 1e-12


def hit_fraction(window, center, r, n=100_000, seed=0):
    dirs, offs = sample_lines(window, keyed_rng(seed), n)
    w = np.asarray(center) - offs
    al = np.sum(w * dirs, 1)
    return np.mean(np.sum(w * w, 1) - al * al <= r * r)


def test_half_of_lines_hit_inner_ball():
    p = hit_fraction(Window((0.0, 0.0), 2.0), (0.0, 0.0), 1.0)
    assert abs(p - 0.5) < 3 * math.sqrt(0.25 / 1e5)


@pytest.mark.parametrize("d", [2, 3])
def test_off_centre_sub_ball(d):
    z = np.zeros(d)
    z[-1] = 1.0
    p = hit_fraction(Window((0.0,) * d, 3.0), z, 1.5, seed=d)
    want = 0.5 ** (d - 1)
    assert abs(p - want) < 3 * math.sqrt(want * (1 - want) / 1e5)


def test_isometry_invariance():
    # translate the window and the probe together: same hit law
    a = hit_fraction(Window((0.0, 0.0, 0.0), 2.0), (0.5, 0.0, 0.0), 0.7, seed=11)
    b = hit_fraction(Window((5.0, -3.0, 2.0), 2.0), (5.0, -3.5, 2.0), 0.7, seed=12)
    se = math.sqrt(2 * a * (1 - a) / 1e5)
    assert abs(a - b) < 3 * se


def test_stream_counts_and_order():
    w = Window((0.0, 0.0), 1.0)
    counts = np.empty(10_000)
    for i in range(counts.size):
        b = LineBatches(w, keyed_rng(3, i))
        n = 0
        while True:
            t, _, _ = b.next_batch()
            n += np.count_nonzero(t <= 10)
            if t[-1] > 10:
                break
        counts[i] = n
    assert 9.7 <= counts.mean() <= 10.3


def test_stream_strictly_increasing_and_replayable():
    w = Window((0.0, 0.0, 0.0), 2.0)
    a = line_stream(w, keyed_rng(5, 1))
    b = line_stream(w, keyed_rng(5, 1))
    prev = 0.0
    for _ in range(500):
        x, y = next(a), next(b)
        assert x.timestamp > prev
        prev = x.timestamp
        assert x.timestamp == y.timestamp
        assert np.array_equal(x.line.dir, y.line.dir)
        assert np.array_equal(x.line.offset, y.line.offset)


def test_keyed_rng_independent_of_order():
    a = keyed_rng(1, 2, "x").random(5)
    keyed_rng(1, 3, "x").random(5)
    assert np.array_equal(a, keyed_rng(1, 2, "x").random(5))
    assert not np.array_equal(a, keyed_rng(1, 2, "y").random(5))
