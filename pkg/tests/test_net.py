import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cylcover import ResourceError, UsageError
from cylcover.net import (Ball, Box, Points, Scaled, Union_, box_dimension_fit, build_net,
                          candidates, content_constant, integer_grid, net_count, packing_profile,
                          read_net_csv, unit_box, write_net_csv)


def min_dist(pts):
    if len(pts) < 2:
        return np.inf
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    return d[np.triu_indices(len(pts), 1)].min()


def test_examples():
    assert net_count(unit_box(2), 2.0) == 1
    for n, d in ((4, 2), (3, 3)):
        for rho in (0.3, 0.5, 0.99):
            assert net_count(integer_grid(n, d), rho) == n ** d
    seg = build_net(Box((0.0, 0.0), (1.0, 0.0)), 0.5, K=10)
    assert np.allclose(seg.points, [[0, 0], [0.5, 0], [1, 0]])


@pytest.mark.parametrize("spec,rho", [(unit_box(2), 0.13), (Ball((0.0, 0.0, 0.0), 1.0), 0.4),
                                      (Union_((unit_box(2), Box((2.0, 0.0), (3.0, 0.5)))), 0.2)])
def test_separated_and_maximal(spec, rho):
    net = build_net(spec, rho)
    pts = net.points
    # exact separation on lattice indices
    idx = net.indices
    sq = ((idx[:, None] - idx[None]) ** 2).sum(-1)
    np.fill_diagonal(sq, 10 ** 9)
    assert sq.min() >= 8 ** 2
    cand = candidates(spec, rho)
    gaps = np.sqrt(((cand[:, None] - pts[None]) ** 2).sum(-1)).min(1)
    assert gaps.max() < rho


def test_scale_covariance_exact():
    for n in (2, 3, 4):
        a = build_net(Scaled(unit_box(2), n), 0.3)
        b = build_net(unit_box(2), 0.3 / n)
        assert np.array_equal(a.indices, b.indices)
        assert len(a) == len(b)


def test_monotone_and_sandwich():
    A = unit_box(2)
    counts = [net_count(A, r) for r in (0.5, 0.4, 0.3, 0.2, 0.1)]
    assert counts == sorted(counts)
    one = net_count(A, 1.0)
    for rho, c in zip((0.5, 0.4, 0.3, 0.2, 0.1), counts):
        assert one <= c <= 36 / rho ** 2 * one


def test_subadditivity():
    a, b = unit_box(2), Box((3.0, 0.0), (4.0, 1.0))
    for rho in (0.25, 0.5):
        assert net_count(Union_((a, b)), rho) <= net_count(a, rho) + net_count(b, rho)


def test_deterministic():
    a = build_net(Ball((0.0, 0.0), 2.0), 0.3)
    b = build_net(Ball((0.0, 0.0), 2.0), 0.3)
    assert np.array_equal(a.points, b.points)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=40),
       st.floats(0.05, 3))
def test_point_set_net(points, rho):
    pts = np.array(points, float)
    net = build_net(Points(pts), rho)
    assert min_dist(net.points) >= rho
    gaps = np.sqrt(((pts[:, None] - net.points[None]) ** 2).sum(-1)).min(1)
    assert gaps.max() < rho


def test_errors():
    with pytest.raises(UsageError):
        build_net(unit_box(2), 0.0)
    with pytest.raises(UsageError):
        build_net(unit_box(2), 0.1, K=1)
    with pytest.raises(ResourceError):
        build_net(Box((0.0,) * 3, (1e3,) * 3), 0.01)


def test_box_dimension():
    fit = box_dimension_fit(unit_box(2), (0.2, 0.1, 0.05, 0.025))
    assert 1.9 <= fit.slope <= 2.1
    pt = box_dimension_fit(Points(np.zeros((1, 2))), (0.5, 0.1, 0.01))
    assert abs(pt.slope) <= 0.05
    finite = box_dimension_fit(integer_grid(3, 2), (0.5, 0.2, 0.1))
    assert abs(finite.slope) < 1e-12
    with pytest.raises(UsageError):
        box_dimension_fit(unit_box(2), (0.2, 0.1))


def test_content_constant():
    c = content_constant(unit_box(2), 2.0, (0.2, 0.1, 0.05, 0.025))
    assert c["ratio"] <= 2
    z = content_constant(unit_box(2), 0.0, (0.2, 0.1))
    assert np.array_equal(z["values"], z["counts"])
    n = 3
    a = content_constant(Scaled(unit_box(2), n), 2.0, (0.3,))["values"][0]
    b = content_constant(unit_box(2), 2.0, (0.1,))["values"][0]
    assert a == pytest.approx(b * n ** 2)


def test_packing_profile():
    single = build_net(Points(np.zeros((1, 2))), 0.5)
    assert not packing_profile(single, [0, 0])["annulus"].any()
    two = build_net(Points(np.array([[0.0, 0.0], [2.0, 0.0]])), 0.5)
    assert packing_profile(two, [0, 0])["inverse_distance_sum"] == pytest.approx(0.5)
    ratios = []
    for n in (8, 16, 32):
        g = build_net(integer_grid(n, 2), 1.0)
        ratios.append(packing_profile(g, [0, 0])["annulus_ratio"].max())
    assert max(ratios) < 10
    with pytest.raises(UsageError):
        packing_profile(two, [1, 1])


def test_csv_roundtrip():
    net = build_net(unit_box(2), 0.3)
    text = write_net_csv(net, extra_header={"version": "x"})
    rho, K, pts = read_net_csv(text)
    assert rho == 0.3 and K == 8 and np.array_equal(pts, net.points)
    buf = io.StringIO()
    write_net_csv(net, buf)
    assert buf.getvalue().startswith("# rho,K,d,count")
