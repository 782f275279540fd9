import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cylcover import UsageError
from cylcover.lineproc import Window, keyed_rng, sample_lines
from cylcover.measure import (MeasureValue, alpha_ratio, beta_ratio, beta_ratio_via_union,
                              dim_constants, gamma, lines_hit_ball, mc_pair_oracle,
                              pair_hit_closed_form_2d, pair_hit_measure, pair_union_measure,
                              reg_inc_beta)


@pytest.mark.parametrize("rho,d,want", [(0, 3, 1), (0.1, 3, 0.81), (0.5, 2, 0.5)])
def test_gamma(rho, d, want):
    assert gamma(rho, d) == pytest.approx(want, rel=1e-15)


@pytest.mark.parametrize("rho", [-0.1, 1.0])
def test_gamma_range(rho):
    with pytest.raises(UsageError):
        gamma(rho, 2)


def test_reg_inc_beta():
    assert reg_inc_beta(0, 2, 3) == 0 and reg_inc_beta(1, 2, 3) == 1
    assert reg_inc_beta(0.75, 1, 0.5) == pytest.approx(0.5, abs=1e-14)
    xs = np.linspace(0, 1, 101)
    v = [reg_inc_beta(x, 1.5, 0.5) for x in xs]
    assert np.all(np.diff(v) >= 0)
    with pytest.raises(UsageError):
        reg_inc_beta(1.2, 1, 1)


def test_dim_constants():
    assert dim_constants(2).C_d == 1
    k = dim_constants(3)
    assert k.C_d == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    assert k.C_tilde_d == pytest.approx(k.C_d / (12 * (1 + k.C_d)), rel=1e-15)
    assert k.C_tilde_d == pytest.approx(0.0386751, abs=1e-7)
    assert k.kappa_d == pytest.approx(4 * math.pi / 3)
    assert dim_constants(2).D_d == pytest.approx(2.0)
    with pytest.raises(UsageError):
        dim_constants(1)


def test_measure_value_rejects_negative():
    with pytest.raises(ValueError):
        MeasureValue(-1.0, "quadrature")


@pytest.mark.parametrize("r", [0.1, 0.5, 1, 1.9, 2, 2.1, 3, 8, 30])
def test_quadrature_matches_planar_closed_form(r):
    assert pair_hit_measure(r, 2).value == pytest.approx(pair_hit_closed_form_2d(r), abs=1e-10)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_pair_hit_shape(d):
    assert pair_hit_measure(0, d).value == 1
    rs = np.linspace(0, 20, 200)
    v = np.array([pair_hit_measure(r, d).value for r in rs])
    assert np.all(np.diff(v) <= 1e-12)
    assert v[-1] < 0.1
    cd = dim_constants(d).C_d
    for r in np.linspace(0, 2 * cd, 100):
        assert pair_hit_measure(r, d).value <= 1 - r / 12 + 1e-12
    assert pair_hit_measure(0.5, 3).abs_error <= 1e-8


def test_mc_oracle_agrees_at_r6_d3():
    mc = mc_pair_oracle(6, 3, 1_000_000, seed=3)
    assert abs(mc.value - pair_hit_measure(6, 3).value) < 3 * mc.abs_error


def test_mc_oracle_r0():
    mc = mc_pair_oracle(0, 3, 10_000)
    assert mc.value == pytest.approx(1.0)


def test_far_field_window():
    for d in (2, 3):
        v = [r ** (d - 1) * pair_hit_measure(r, d).value for r in (4, 8, 16, 32)]
        assert min(v) > 0.1 and max(v) < 10


def test_union_limits():
    assert pair_union_measure(0, 3).value == pytest.approx(1.0)
    assert pair_union_measure(1e4, 3, 0.2).value == pytest.approx(2 * gamma(0.2, 3), rel=1e-6)
    with pytest.raises(UsageError):
        pair_union_measure(1, 2, 1.0)


def _mc_union(r, d, radius, n=400_000, seed=0):
    R = r / 2 + radius
    c = np.zeros(d)
    c[0] = r / 2
    dirs, offs = sample_lines(Window(tuple(c), R), keyed_rng(seed, 0, "union-test"), n)
    b = np.zeros(d)
    b[0] = r
    hit = lines_hit_ball(dirs, offs, np.zeros(d), radius) | lines_hit_ball(dirs, offs, b, radius)
    p = hit.mean()
    return R ** (d - 1) * p, R ** (d - 1) * math.sqrt(p * (1 - p) / n)


def test_union_against_monte_carlo():
    v, se = _mc_union(1.0, 2, 1.0)
    assert abs(v - pair_union_measure(1.0, 2).value) < 3 * se


@pytest.mark.parametrize("rho,r,d", [(0.3, 1.0, 2), (0.2, 2.5, 3)])
def test_shrunk_ball_scaling_against_monte_carlo(rho, r, d):
    # lines hitting both (1 - rho)-balls, from union measure and inclusion-exclusion
    inter = gamma(rho, d) * pair_hit_measure(r / (1 - rho), d).value
    union_mc, se = _mc_union(r, d, 1 - rho, seed=int(10 * r))
    assert abs((2 * gamma(rho, d) - union_mc) - inter) < 3 * se


@given(st.floats(0.001, 0.65), st.integers(0, 6), st.sampled_from([2, 3, 4]))
def test_ratio_identities(rho, k, d):
    b = beta_ratio(rho, k, d)
    assert b == pytest.approx(beta_ratio_via_union(rho, k, d), abs=1e-8)
    assert alpha_ratio(rho, k, d) <= b + 1e-12
    cd = dim_constants(d).C_d
    if 2 ** k * rho / (1 - rho) <= 2 * cd:
        assert 1 + 2 ** k * rho / 12 < b < 2
    if 2 ** k * rho <= 2 * cd:
        assert 1 + 2 ** k * rho / 12 <= alpha_ratio(rho, k, d) + 1e-12 <= 2 + 1e-12


def test_ratios_tend_to_one():
    assert beta_ratio(1e-7, 0, 3) == pytest.approx(1, abs=1e-6)
    assert alpha_ratio(1e-7, 0, 3) == pytest.approx(1, abs=1e-6)
    with pytest.raises(UsageError):
        beta_ratio(0, 0, 2)
