import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import mc_oracle
from effcap_mac.fading import FadingModel
from effcap_mac.rates import LN2, DecodingOrder, SystemParams, all_orders, in_ergodic_region, vertex_rates
from effcap_mac.region import (RegionBoundary, best_sum, fixed_order_capacities, fixed_point_K,
                               optimal_boundary_g, polygon_radius, ray_radius, scheduled_capacities,
                               single_user_capacity, stationarity_residual, suboptimal_capacities,
                               suboptimal_orders, sum_rate_sweep, tdma_capacities,
                               timeshare_capacities, trace_region, two_user_timeshare)

O12, O21 = all_orders(2)


def _mc_capacities(rule, params, n=10_000_000, seed=77):
    """Independent Monte Carlo of both users' capacities for a per-state order rule."""
    beta = np.asarray(params.beta)
    snr = np.asarray(params.snr)

    def exponents(z):
        return beta * LN2 * rule(z, snr)

    lm, rel = mc_oracle(exponents, 2, n=n, seed=seed)
    return -lm / (beta * LN2), rel / (beta * LN2)


# -- time sharing ----------------------------------------------------------

def test_vertex_reduction(sym_params, models2):
    assert two_user_timeshare(1.0, sym_params, models2) == pytest.approx(
        fixed_order_capacities(O12, sym_params, models2), rel=1e-14)
    c = fixed_order_capacities(O12, sym_params, models2)
    # user 2 decoded last sees no interference: the single-user value
    assert c[1] == pytest.approx(single_user_capacity(1.0, sym_params.beta[0], models2[0]), rel=1e-13)
    assert c == pytest.approx([0.41555, 0.58942], abs=1e-5)


def test_timeshare_symmetry(sym_params, models2):
    c = two_user_timeshare(0.5, sym_params, models2)
    assert c[0] == pytest.approx(c[1], rel=1e-13)


def test_timeshare_against_monte_carlo_oracle(sym_params, models2):
    def rule(z, snr):
        return 0.5 * vertex_rates(z, snr, O12) + 0.5 * vertex_rates(z, snr, O21)

    x2, se = _mc_capacities(rule, sym_params)
    got = two_user_timeshare(0.5, sym_params, models2)
    assert np.all(np.abs(got - x2) < 3 * se)


def test_timeshare_rejects_bad_tau(sym_params, models2):
    with pytest.raises(ValueError):
        timeshare_capacities([0.7, 0.7], sym_params, models2)


def test_timeshare_single_exponent_beats_mixture(sym_params, models2):
    # rates combine inside one exponent, which is not the average of the vertices
    mix = 0.5 * (fixed_order_capacities(O12, sym_params, models2)
                 + fixed_order_capacities(O21, sym_params, models2))
    ts = two_user_timeshare(0.5, sym_params, models2)
    assert np.all(ts > mix)


def test_three_user_timeshare_monte_carlo(rayleigh):
    p = SystemParams.common_theta([1.0, 2.0, 0.5], 0.01)
    models = [rayleigh] * 3
    tau = np.full(6, 1 / 6)
    quad = timeshare_capacities(tau, p, models)
    mc = timeshare_capacities(tau, p, models, budget=1_000_000, method="monte-carlo", seed=1)
    assert mc == pytest.approx(quad, rel=5e-3)


# -- optimal switching -----------------------------------------------------

def test_boundary_examples():
    beta = 2.5
    sw = optimal_boundary_g(1.0, (1.0, 1.0), beta)
    assert sw.g(np.array([0.0, 1.5, 7.0])) == pytest.approx([0.0, 1.5, 7.0])
    sw = optimal_boundary_g(2.0 ** beta, (1.0, 1.0), beta)
    assert sw.g(np.array([0.0, 3.0])) == pytest.approx([1.0, 7.0])
    sw = optimal_boundary_g(math.inf, (1.0, 1.0), beta)
    assert np.all(sw.order12(np.array([0.0, 1.0]), np.array([50.0, 1e9])))
    sw = optimal_boundary_g(0.0, (1.0, 1.0), beta)
    assert not np.any(sw.order12(np.array([50.0]), np.array([0.0])))
    with pytest.raises(ValueError):
        optimal_boundary_g(-1.0, (1.0, 1.0), beta)


def test_k1_decodes_weaker_user_last():
    sw = optimal_boundary_g(1.0, (1.0, 1.0), 2.0)
    # z2 < z1: order (1,2), so user 2 (weaker) is decoded last
    assert sw.order12(np.array([3.0]), np.array([1.0]))[0]
    assert not sw.order12(np.array([1.0]), np.array([3.0]))[0]


def test_swapped_branch_orientation():
    sw = optimal_boundary_g(0.25, (1.0, 2.0), 1.5)
    assert sw.swapped
    z2 = np.array([0.5, 2.0])
    z1 = sw.g(z2)
    eps = 1e-6
    assert np.all(sw.order12(z1 + eps, z2))
    assert not np.any(sw.order12(z1 - eps, z2))


def test_scheduled_limits(sym_params, models2):
    assert scheduled_capacities(math.inf, sym_params, models2) == pytest.approx(
        fixed_order_capacities(O12, sym_params, models2), rel=1e-8)
    assert scheduled_capacities(0.0, sym_params, models2) == pytest.approx(
        fixed_order_capacities(O21, sym_params, models2), rel=1e-8)
    assert scheduled_capacities(1e40, sym_params, models2) == pytest.approx(
        fixed_order_capacities(O12, sym_params, models2), rel=1e-8)


def test_scheduled_symmetry(sym_params, models2):
    c = scheduled_capacities(1.0, sym_params, models2)
    assert c[0] == pytest.approx(c[1], rel=1e-13)
    a = scheduled_capacities(3.0, sym_params, models2)
    b = scheduled_capacities(1 / 3.0, sym_params, models2)
    assert a == pytest.approx(b[::-1], rel=1e-12)


def test_scheduled_against_monte_carlo_oracle(sym_params, models2):
    def rule(z, snr):
        first = np.log1p(snr[1] * z[:, 1]) <= np.log1p(snr[0] * z[:, 0])
        return np.where(first[:, None], vertex_rates(z, snr, O12), vertex_rates(z, snr, O21))

    x3, se = _mc_capacities(rule, sym_params)
    got = scheduled_capacities(1.0, sym_params, models2)
    assert np.all(np.abs(got - x3) < 3 * se)
    assert got == pytest.approx([0.54207, 0.54207], abs=1e-5)


def test_scheduled_requires_common_theta(models2):
    p = SystemParams((1.0, 1.0), (0.01, 0.02))
    with pytest.raises(ValueError):
        scheduled_capacities(1.0, p, models2)


# -- stationarity ----------------------------------------------------------

@pytest.mark.parametrize("K", [0.05, 0.3, 1.0, 3.0, 20.0])
def test_stationarity_identity(sym_params, models2, K):
    st_ = stationarity_residual(K, sym_params, models2)
    assert st_.residual <= 1e-12


def test_stationarity_detects_perturbation(sym_params, models2):
    sw = optimal_boundary_g(2.0, sym_params.snr, sym_params.beta[0])
    st_ = stationarity_residual(2.0, sym_params, models2, g=lambda z: sw.g(z) + 0.01)
    assert st_.residual > 1e-4


def test_implied_lambda_symmetric(sym_params, models2):
    assert stationarity_residual(1.0, sym_params, models2).lambda1 == pytest.approx(0.5, abs=1e-13)


@pytest.mark.parametrize("K", [0.2, 1.0, 4.0])
def test_fixed_point_roundtrip(sym_params, models2, K):
    lam1 = stationarity_residual(K, sym_params, models2).lambda1
    assert fixed_point_K(lam1, sym_params, models2) == pytest.approx(K, rel=1e-6)


def test_fixed_point_asymmetric(rayleigh):
    p = SystemParams.common_theta([10.0, 1.0], 0.01)
    models = [rayleigh, rayleigh]
    lam1 = stationarity_residual(5.0, p, models).lambda1
    assert fixed_point_K(lam1, p, models) == pytest.approx(5.0, rel=1e-6)


# -- suboptimal rule -------------------------------------------------------

def test_suboptimal_orders():
    z = np.array([[1.0, 2.0], [2.0, 1.0], [0.0, 1.0]])
    pi = suboptimal_orders(z, [0.5, 0.5])
    # user with the largest lambda/z decoded last
    assert pi.tolist() == [[1, 0], [0, 1], [1, 0]]


def test_suboptimal_equal_weights_symmetric(sym_params, models2):
    c = suboptimal_capacities([0.5, 0.5], sym_params, models2)
    # symmetric users: equal weights give the K = 1 optimal rule
    assert c == pytest.approx(scheduled_capacities(1.0, sym_params, models2), rel=1e-12)


def test_suboptimal_extremes_are_fixed_orders(sym_params, models2):
    assert suboptimal_capacities([1.0, 0.0], sym_params, models2) == pytest.approx(
        fixed_order_capacities(O21, sym_params, models2))
    assert suboptimal_capacities([0.0, 1.0], sym_params, models2) == pytest.approx(
        fixed_order_capacities(O12, sym_params, models2))


def test_suboptimal_quadrature_vs_monte_carlo(rayleigh):
    p = SystemParams.common_theta([10.0, 1.0], 0.01)
    models = [rayleigh, rayleigh]
    quad = suboptimal_capacities([0.3, 0.7], p, models)
    mc = suboptimal_capacities([0.3, 0.7], p, models, budget=1_000_000, method="monte-carlo")
    assert mc == pytest.approx(quad, rel=5e-3)


# -- TDMA ------------------------------------------------------------------

def test_tdma(sym_params, models2):
    c = tdma_capacities([1.0, 0.0], sym_params, models2)
    assert c[1] == 0.0
    assert c[0] == pytest.approx(single_user_capacity(1.0, sym_params.beta[0], models2[0]))
    assert tdma_capacities([0.5, 0.5], sym_params, models2) == pytest.approx([0.51760, 0.51760], abs=1e-5)


# -- tracing ---------------------------------------------------------------

@pytest.fixture(scope="module")
def traced(sym_params, models2):
    return {s: trace_region(s, sym_params, models2, n=41)
            for s in ("optimal", "suboptimal", "fixed-timeshare", "tdma")}


def test_traced_frontiers_concave(traced):
    for rb in traced.values():
        assert rb.is_concave(), rb.strategy
        assert np.all(rb.capacities >= 0)


def test_traced_endpoints(traced, sym_params, models2):
    single = single_user_capacity(1.0, sym_params.beta[0], models2[0])
    for s, rb in traced.items():
        assert rb.max_capacity() == pytest.approx([single, single], rel=1e-8), s


def test_traced_points_are_ergodically_achievable(traced, sym_params, models2):
    for rb in traced.values():
        for c in rb.capacities[::5]:
            assert in_ergodic_region(c * sym_params.B, sym_params.snr, models2, sym_params.B)


def test_mirror_symmetry(traced):
    c = traced["optimal"].capacities
    assert c == pytest.approx(c[::-1, ::-1], rel=1e-10)


def test_concavity_defect_detects_dent():
    c = np.array([[0.0, 1.0], [0.5, 0.6], [0.6, 0.59], [1.0, 0.0]])
    rb = RegionBoundary("x", "p", np.arange(4.0), c)
    assert not rb.is_concave()


def test_polygon_radius_square():
    pts = np.array([[1.0, 1.0]])
    assert polygon_radius(pts, math.pi / 4) == pytest.approx(math.sqrt(2))
    assert polygon_radius(pts, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("angle", [0.1, math.pi / 4, 1.3])
def test_ray_radius_on_frontier(sym_params, models2, traced, angle):
    r_opt = ray_radius("optimal", angle, sym_params, models2)
    r_fix = ray_radius("fixed-timeshare", angle, sym_params, models2)
    assert r_opt >= r_fix
    # the dense polygon is an inner approximation
    assert traced["optimal"].hull_radius(angle) <= r_opt + 1e-12
    assert traced["optimal"].hull_radius(angle) == pytest.approx(r_opt, rel=1e-3)


def test_three_user_trace(rayleigh):
    p = SystemParams.common_theta([1.0, 1.0, 1.0], 0.01)
    rb = trace_region("tdma", p, [rayleigh] * 3, n=2)
    assert rb.capacities.shape[1] == 3
    with pytest.raises(ValueError):
        trace_region("optimal", p, [rayleigh] * 3)


def test_sum_rate_sweep_monotone(rayleigh):
    p = SystemParams.common_theta([10.0, 1.0], 0.01)
    res = sum_rate_sweep(["fixed-timeshare", "tdma"], [1e-3, 1e-2, 1e-1], p, [rayleigh] * 2)
    for s in ("fixed-timeshare", "tdma"):
        assert np.all(np.diff(res[s]) < 0)
    with pytest.raises(ValueError):
        sum_rate_sweep(["tdma"], [1e-2, 1e-3], p, [rayleigh] * 2)


def test_best_sum_optimal_dominates(sym_params, models2):
    assert best_sum("optimal", sym_params, models2)[1] >= best_sum("fixed-timeshare", sym_params, models2)[1]


@settings(max_examples=8, deadline=None)
@given(logk=st.floats(-3, 3), s1=st.floats(0.2, 5), s2=st.floats(0.2, 5))
def test_optimal_switch_beats_fixed_orders(logk, s1, s2):
    # the weighted objective lambda1 C1 + lambda2 C2 at the implied weight is at
    # least as good as either fixed order
    m = FadingModel.rayleigh()
    p = SystemParams.common_theta([s1, s2], 0.01)
    K = math.exp(logk)
    lam1 = stationarity_residual(K, p, [m, m]).lambda1
    w = np.array([lam1, 1 - lam1])
    # the boundary problem maximises sum_j lambda_j * (-(1/beta) ln phi_j); compare in that objective
    best = w @ scheduled_capacities(K, p, [m, m])
    for o in all_orders(2):
        assert best >= w @ fixed_order_capacities(o, p, [m, m]) - 1e-12
