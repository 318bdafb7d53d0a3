"""Throughput regions under fixed transmit power.

Two-user decoding-order switching is described by a threshold curve: the
receiver decodes user 1 first (order (1,2)) when ``z2 <= t(z1)`` and user 2
first otherwise.  Expectations over such a rule are computed with the inner
integral split exactly at the curve,

    int_0^t f_a + int_t^inf f_b  =  int_0^inf f_a + int_t^inf (f_b - f_a),

so every quadrature panel sees a smooth integrand.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize
from scipy.spatial import ConvexHull

from .effcap import CapacityUnderflowError, log_mean_exp_neg, single_user_log_mgf
from .fading import (DEFAULT_MC_SAMPLES, FadingModel, mc_expectation, tensor_rule)
from .rates import LN2, SystemParams, all_orders, vertex_rates

STRATEGIES = ("optimal", "suboptimal", "fixed-timeshare", "tdma")
CONCAVITY_TOL = 1e-6


class RegionError(ArithmeticError):
    pass


def _powneg(base_minus_one, beta):
    """(1 + x)^(-beta) computed as exp(-beta log1p(x))."""
    return np.exp(-beta * np.log1p(base_minus_one))


def _check_mgf(value, what):
    if not np.isfinite(value) or value <= 0:
        raise CapacityUnderflowError(
            f"{what}: E{{exp(-theta T R)}} = {value!r} underflowed or diverged; "
            "use the log-sum-exp path (effective_capacity with a rate law)")
    return value


def switched_mgfs(threshold: Callable, snr_a: float, snr_b: float, beta_a: float,
                  beta_b: float, model_a: FadingModel, model_b: FadingModel,
                  budget: int | None = None) -> tuple[float, float]:
    """MGF terms E{(1+SINR)^(-beta)} for both users of a switched decoder.

    User ``a`` is decoded first (interfered by ``b``) when
    ``z_b < threshold(z_a)``; otherwise ``b`` is decoded first.  ``threshold``
    must be nonnegative.  Returns ``(E_a, E_b)``.
    """
    za, wa = model_a.rule(budget)
    t = np.maximum(np.asarray(threshold(za), dtype=float), 0.0)
    zb, wb = model_b.rule(budget)
    zt, wt = model_b.tail_rule(t, budget)
    xa = snr_a * za
    ya = 1.0 + xa
    sf = model_b.sf(t)

    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        # user a
        free_a = _powneg(xa, beta_a)
        intf_full = _powneg(xa[:, None] / (1.0 + snr_b * zb[None, :]), beta_a) @ wb
        intf_tail = np.sum(_powneg(xa[:, None] / (1.0 + snr_b * zt), beta_a) * wt, axis=1)
        inner_a = intf_full - intf_tail + free_a * sf
        # user b
        free_b_full = float(_powneg(snr_b * zb, beta_b) @ wb)
        free_b_tail = np.sum(_powneg(snr_b * zt, beta_b) * wt, axis=1)
        intf_b_tail = np.sum(_powneg(snr_b * zt / ya[:, None], beta_b) * wt, axis=1)
        inner_b = free_b_full - free_b_tail + intf_b_tail
    inner_a = np.nan_to_num(inner_a)
    inner_b = np.nan_to_num(inner_b)
    return (_check_mgf(float(wa @ inner_a), "switched_mgfs user a"),
            _check_mgf(float(wa @ inner_b), "switched_mgfs user b"))


# -- fixed order and time sharing -------------------------------------------

def timeshare_mgfs(tau: Sequence[float], params: SystemParams, models: Sequence[FadingModel],
                   budget: int | None = None, method: str = "quadrature",
                   seed: int = 0) -> np.ndarray:
    """Per-user ln E{exp(-theta_j T sum_m tau_m R_j^(m))} over the M! orders.

    ``tau`` is indexed like :func:`effcap_mac.rates.all_orders`.
    """
    M = params.M
    orders = all_orders(M)
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (len(orders),) or np.any(tau < -1e-15) or abs(tau.sum() - 1) > 1e-9:
        raise ValueError(f"tau must be a probability vector of length {len(orders)}")
    betas = np.asarray(params.beta)
    snr = np.asarray(params.snr)

    def exponents(z):
        # beta_j * ln 2 * (time-shared rate in bits/s/Hz) = theta_j T R_j
        r = sum(tm * vertex_rates(z, snr, o) for tm, o in zip(tau, orders) if tm > 0)
        return betas * LN2 * r

    if method == "monte-carlo":
        n = int(budget or DEFAULT_MC_SAMPLES)
        out = []
        for j in range(M):
            est = mc_expectation(lambda *zs: np.exp(-exponents(np.stack(zs, 1))[:, j]),
                                 models, n, seed)
            out.append(math.log(est.mean))
        return np.array(out)
    per_user = budget or (310 if M <= 2 else 62)
    z, w = tensor_rule(models, per_user)
    x = exponents(z)
    return np.array([log_mean_exp_neg(x[:, j], w) for j in range(M)])


def _tau_for(order_index: int, M: int) -> np.ndarray:
    tau = np.zeros(math.factorial(M))
    tau[order_index] = 1.0
    return tau


def timeshare_capacities(tau, params: SystemParams, models, budget=None,
                         method: str = "quadrature", seed: int = 0) -> np.ndarray:
    """Normalized effective capacities (bits/s/Hz) under fixed-order time sharing."""
    lm = timeshare_mgfs(tau, params, models, budget, method, seed)
    return -lm / (np.asarray(params.beta) * LN2)


def fixed_order_capacities(order, params, models, budget=None) -> np.ndarray:
    idx = [o.pi for o in all_orders(params.M)].index(tuple(order.pi))
    return timeshare_capacities(_tau_for(idx, params.M), params, models, budget)


def two_user_timeshare(tau12: float, params: SystemParams, models, budget=None) -> np.ndarray:
    """Capacities with weight ``tau12`` on order (1,2) and the rest on (2,1)."""
    return timeshare_capacities([tau12, 1.0 - tau12], params, models, budget)


# -- two-user optimal switching ---------------------------------------------

@dataclass(frozen=True)
class SwitchingBoundary:
    """Decision curve of the two-user optimal rule for a given K.

    For ``K >= 1`` the curve is ``z2 = g(z1)`` and order (1,2) is used when
    ``z2 <= g(z1)``.  For ``K < 1`` the curve is ``z1 = g(z2)`` and order
    (1,2) is used when ``z1 >= g(z2)``.
    """

    K: float
    snr: tuple[float, float]
    beta: float

    @property
    def swapped(self) -> bool:
        return self.K < 1

    @property
    def scale(self) -> float:
        """K^(1/beta) for K >= 1, K^(-1/beta) for K < 1 (always >= 1)."""
        if self.K == 0:
            return math.inf
        return math.exp(abs(math.log(self.K)) / self.beta)

    def g(self, z):
        s1, s2 = self.snr
        c = self.scale
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            if not self.swapped:
                return ((1.0 + s1 * z) * c - 1.0) / s2
            return ((1.0 + s2 * z) * c - 1.0) / s1

    def order12(self, z1, z2):
        """True where user 1 is decoded first (user 2 interference-free)."""
        s1, s2 = self.snr
        z1, z2 = np.asarray(z1, dtype=float), np.asarray(z2, dtype=float)
        if self.K == 0:
            return np.zeros(np.broadcast(z1, z2).shape, dtype=bool)
        if math.isinf(self.K):
            return np.ones(np.broadcast(z1, z2).shape, dtype=bool)
        # (1 + s2 z2) <= K^(1/beta) (1 + s1 z1), compared in logs
        return np.log1p(s2 * z2) <= math.log(self.K) / self.beta + np.log1p(s1 * z1)


def optimal_boundary_g(K: float, snr: Sequence[float], beta: float) -> SwitchingBoundary:
    if not K >= 0 or not beta > 0:
        raise ValueError("K must be >= 0 and beta > 0")
    return SwitchingBoundary(float(K), (float(snr[0]), float(snr[1])), float(beta))


def _require_common_theta(params: SystemParams):
    if params.M != 2:
        raise ValueError("two-user rule requires M = 2")
    if abs(params.theta[0] - params.theta[1]) > 1e-12 * params.theta[0]:
        raise ValueError("optimal switching is derived for a common theta only")
    return params.beta[0]


def scheduled_mgfs(K: float, params: SystemParams, models, budget=None) -> tuple[float, float]:
    """(phi_1, phi_2): E{(1+SINR_j)^(-beta)} under the K-parameterised rule."""
    beta = _require_common_theta(params)
    s1, s2 = params.snr
    m1, m2 = models
    if K == 0 or math.isinf(K):
        order = (1, 0) if K == 0 else (0, 1)
        lm = timeshare_mgfs(_tau_for([o.pi for o in all_orders(2)].index(order), 2),
                            params, models, budget)
        return float(np.exp(lm[0])), float(np.exp(lm[1]))
    sw = optimal_boundary_g(K, params.snr, beta)
    if not sw.swapped:
        return switched_mgfs(sw.g, s1, s2, beta, beta, m1, m2, budget)
    # user 2 decoded first when z1 < g(z2): roles of a/b exchanged
    e2, e1 = switched_mgfs(sw.g, s2, s1, beta, beta, m2, m1, budget)
    return e1, e2


def scheduled_capacities(K: float, params: SystemParams, models, budget=None) -> np.ndarray:
    """Normalized capacities (C1, C2) of the optimal switching rule for K."""
    phi = np.array(scheduled_mgfs(K, params, models, budget))
    return -np.log(phi) / (params.beta[0] * LN2)


@dataclass(frozen=True)
class Stationarity:
    residual: float
    lambda1: float
    phi1: float
    phi2: float


def stationarity_residual(K: float, params: SystemParams, models, z_grid=None,
                          g: Callable | None = None, budget=None) -> Stationarity:
    """Check the pointwise stationarity identity along the decision curve.

    Returns the max over ``z_grid`` of |((1+snr1 z1)/(1+snr2 g(z1)))^(-beta) - K|
    (roles exchanged for K < 1), plus the weight lambda_1 implied by K through
    K = (1 - lambda_1) phi_1 / (lambda_1 phi_2).  ``g`` overrides the analytic
    curve, e.g. to check a perturbed one.
    """
    if not K > 0:
        raise ValueError("K must be positive")
    beta = _require_common_theta(params)
    s1, s2 = params.snr
    sw = optimal_boundary_g(K, params.snr, beta)
    z = np.linspace(0.0, 20.0, 401) if z_grid is None else np.asarray(z_grid, dtype=float)
    gz = (sw.g if g is None else g)(z)
    if not sw.swapped:
        ratio = (1.0 + s1 * z) / (1.0 + s2 * gz)
    else:
        ratio = (1.0 + s1 * gz) / (1.0 + s2 * z)
    residual = float(np.max(np.abs(ratio ** (-beta) - K)))
    phi1, phi2 = scheduled_mgfs(K, params, models, budget)
    return Stationarity(residual, phi1 / (phi1 + K * phi2), phi1, phi2)


def fixed_point_K(lambda1: float, params: SystemParams, models, K0: float = 1.0,
                  damping: float = 0.5, tol: float = 1e-8, max_iter: int = 500,
                  budget=None) -> float:
    """Solve K = (1 - lambda_1) phi_1(K) / (lambda_1 phi_2(K)) for a weight.

    Damped iteration in log K.  If it stalls, falls back to a bracketed root
    search on the same map.
    """
    if not 0 < lambda1 < 1:
        raise ValueError("lambda1 must lie in (0, 1)")
    w = math.log((1.0 - lambda1) / lambda1)

    def F(logk):
        p1, p2 = scheduled_mgfs(math.exp(logk), params, models, budget)
        return w + math.log(p1) - math.log(p2)

    x = math.log(K0)
    for _ in range(max_iter):
        x_new = (1.0 - damping) * x + damping * F(x)
        if abs(x_new - x) < tol:
            return math.exp(x_new)
        x = x_new
    lo, hi = -1.0, 1.0
    while F(lo) - lo < 0:
        lo *= 2
    while F(hi) - hi > 0:
        hi *= 2
    return math.exp(optimize.brentq(lambda v: F(v) - v, lo, hi, xtol=tol))


# -- suboptimal lambda/z rule -----------------------------------------------

def suboptimal_orders(z, lam) -> np.ndarray:
    """Per-state decoding orders sorted by lambda_j / z_j ascending.

    The user with the largest lambda_j / z_j is decoded last.  Ties go to the
    lower user index first.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        key = np.where(z > 0, lam[None, :] / z, np.inf)
    return np.argsort(key, axis=1, kind="stable")


def suboptimal_capacities(lam: Sequence[float], params: SystemParams, models,
                          budget=None, method: str = "auto", seed: int = 0) -> np.ndarray:
    """Normalized capacities of the lambda/z ordering rule.

    Two users use the exact split at z2 = (lambda_2/lambda_1) z1; more users
    use Monte Carlo since the order regions are polyhedral cones in M
    dimensions.
    """
    lam = np.asarray(lam, dtype=float)
    M = params.M
    betas = np.asarray(params.beta)
    if method == "auto":
        method = "quadrature" if M == 2 else "monte-carlo"
    if M == 2 and method == "quadrature":
        l1, l2 = lam
        if l1 <= 0:
            return fixed_order_capacities(all_orders(2)[0], params, models, budget)
        if l2 <= 0:
            return fixed_order_capacities(all_orders(2)[1], params, models, budget)
        c = l2 / l1
        s1, s2 = params.snr
        e1, e2 = switched_mgfs(lambda z1: c * z1, s1, s2, betas[0], betas[1],
                               models[0], models[1], budget)
        return -np.log([e1, e2]) / (betas * LN2)
    n = int(budget or DEFAULT_MC_SAMPLES)
    snr = np.asarray(params.snr)
    out = []
    for j in range(M):
        def f(*zs, j=j):
            z = np.stack(zs, axis=1)
            r = vertex_rates(z, snr, suboptimal_orders(z, lam))[:, j]
            return np.exp(-betas[j] * LN2 * r)
        est = mc_expectation(f, models, n, seed)
        out.append(-math.log(est.mean) / (betas[j] * LN2))
    return np.array(out)


# -- TDMA -------------------------------------------------------------------

def tdma_capacities(deltas: Sequence[float], params: SystemParams, models,
                    budget=None) -> np.ndarray:
    """Normalized TDMA capacities; a zero time fraction gives zero capacity."""
    out = []
    for d, s, b, m in zip(deltas, params.snr, params.beta, models):
        if d <= 0:
            out.append(0.0)
            continue
        out.append(-single_user_log_mgf(s, b, m, min(float(d), 1.0), budget) / (b * LN2))
    return np.array(out)


def single_user_capacity(snr: float, beta: float, model: FadingModel, budget=None) -> float:
    return -single_user_log_mgf(snr, beta, model, 1.0, budget) / (beta * LN2)


# -- boundary tracing ---------------------------------------------------------

def _switch_point(u: float, params: SystemParams, models, budget=None) -> np.ndarray:
    """Optimal-rule capacities parameterised by u = ln K / beta (overflow-free)."""
    beta = _require_common_theta(params)
    s1, s2 = params.snr
    m1, m2 = models
    c = math.exp(min(abs(u), 700.0))
    if u >= 0:
        e1, e2 = switched_mgfs(lambda z: ((1.0 + s1 * z) * c - 1.0) / s2, s1, s2, beta, beta,
                               m1, m2, budget)
    else:
        e2, e1 = switched_mgfs(lambda z: ((1.0 + s2 * z) * c - 1.0) / s1, s2, s1, beta, beta,
                               m2, m1, budget)
    return -np.log([e1, e2]) / (beta * LN2)


def _sub_point(v: float, params, models, budget=None) -> np.ndarray:
    """Suboptimal-rule capacities parameterised by v = ln(lambda_2 / lambda_1)."""
    lam1 = 1.0 / (1.0 + math.exp(v))
    return suboptimal_capacities([lam1, 1.0 - lam1], params, models, budget)


@dataclass
class RegionBoundary:
    """Traced frontier: one capacity vector (bits/s/Hz) per generator value."""

    strategy: str
    parameter: str
    params: np.ndarray
    capacities: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.params)

    def ordered(self) -> np.ndarray:
        """Capacity points ordered with C1 increasing along the curve (M=2)."""
        c = self.capacities
        if c[0, 0] > c[-1, 0]:
            c = c[::-1]
        return c

    def concavity_defect(self) -> float:
        """Largest left turn along the ordered frontier (<= 0 when concave).

        Uses the cross product of consecutive segments, i.e. a discrete second
        difference scaled by the segment lengths.
        """
        if self.capacities.shape[1] != 2:
            raise ValueError("concavity test is defined for two users")
        c = self.ordered()
        d = np.diff(c, axis=0)
        if len(d) < 2:
            return 0.0
        cross = d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0]
        return float(np.max(cross))

    def is_concave(self, tol: float = CONCAVITY_TOL) -> bool:
        return self.concavity_defect() <= tol

    def max_capacity(self) -> np.ndarray:
        return self.capacities.max(axis=0)

    def hull_radius(self, angle: float) -> float:
        """Radius along a ray of the downward-closed convex hull of the points."""
        return polygon_radius(self.capacities, angle)

    def rows(self):
        for p, c in zip(self.params, self.capacities):
            yield (self.strategy, float(p), *map(float, c))


def polygon_radius(points, angle: float) -> float:
    """Ray radius of conv(points, 0, axis projections), for 2-D points."""
    pts = np.asarray(points, dtype=float)
    cmax = pts.max(axis=0)
    allp = np.vstack([pts, [[0.0, 0.0], [cmax[0], 0.0], [0.0, cmax[1]]]])
    hull = ConvexHull(allp)
    d = np.array([math.cos(angle), math.sin(angle)])
    nd = hull.equations[:, :2] @ d
    off = -hull.equations[:, 2]
    ok = nd > 1e-15
    return float(np.min(off[ok] / nd[ok]))


def default_grid(strategy: str, n: int, beta: float) -> tuple[str, np.ndarray, np.ndarray]:
    """(parameter name, reported parameter values, internal sweep values)."""
    if strategy == "optimal":
        # K = exp(beta*u); |u| <= ln 50 puts the end points within e^-49 of the
        # fixed orders, and the range always covers K in [1e-4, 1e4].
        umax = max(math.log(50.0), math.log(1e4) / beta)
        u = np.linspace(-umax, umax, n)
        with np.errstate(over="ignore"):
            K = np.exp(beta * u)
        return "K", K, u
    if strategy == "suboptimal":
        v = np.linspace(-math.log(1e6), math.log(1e6), n)
        return "lambda1", 1.0 / (1.0 + np.exp(v)), v
    if strategy == "fixed-timeshare":
        tau = np.linspace(0.0, 1.0, n)
        return "tau12", tau, tau
    if strategy == "tdma":
        d = np.linspace(0.0, 1.0, n)
        return "delta1", d, d
    raise ValueError(f"unknown strategy {strategy!r}")


def _point(strategy, x, params, models, budget=None):
    if strategy == "optimal":
        return _switch_point(x, params, models, budget)
    if strategy == "suboptimal":
        return _sub_point(x, params, models, budget)
    if strategy == "fixed-timeshare":
        return two_user_timeshare(float(x), params, models, budget)
    if strategy == "tdma":
        return tdma_capacities([x, 1.0 - x], params, models, budget)
    raise ValueError(f"unknown strategy {strategy!r}")


def trace_region(strategy: str, params: SystemParams, models, n: int = 161,
                 budget=None, seed: int = 0, workers: int = 1) -> RegionBoundary:
    """Trace a throughput-region frontier.

    Two users: sweeps K (optimal), lambda_1 (suboptimal), tau (fixed orders
    time-shared) or delta_1 (TDMA).  M >= 3: for a grid of weight vectors on
    the simplex, the frontier point maximising lambda . C (suboptimal rule
    applied directly; time-share and TDMA fractions optimised).
    """
    if params.M != 2:
        return _trace_multi(strategy, params, models, n, budget, seed)
    if strategy == "optimal":
        _require_common_theta(params)
    name, shown, xs = default_grid(strategy, n, params.beta[0])
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as ex:
            caps = list(ex.map(lambda x: _point(strategy, x, params, models, budget), xs))
    else:
        caps = [_point(strategy, x, params, models, budget) for x in xs]
    rb = RegionBoundary(strategy, name, np.asarray(shown, dtype=float), np.array(caps))
    defect = rb.concavity_defect()
    rb.metadata["concavity_defect"] = defect
    if defect > CONCAVITY_TOL:
        msg = f"{strategy}: grid of {n} points does not certify concavity (defect {defect:.3g})"
        rb.metadata["warning"] = msg
        warnings.warn(msg)
    return rb


def _simplex_grid(M: int, n: int) -> np.ndarray:
    pts = [c for c in itertools.product(range(n + 1), repeat=M - 1) if sum(c) <= n]
    lam = np.array([[*c, n - sum(c)] for c in pts], dtype=float) / n
    return lam


def _maximise_on_simplex(obj, dim: int) -> np.ndarray:
    x0 = np.full(dim, 1.0 / dim)
    res = optimize.minimize(lambda x: -obj(np.clip(x, 0, None) / max(np.clip(x, 0, None).sum(), 1e-300)),
                            x0, method="SLSQP", bounds=[(0.0, 1.0)] * dim,
                            constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0}],
                            options={"ftol": 1e-10, "maxiter": 200})
    x = np.clip(res.x, 0, None)
    return x / x.sum()


def _trace_multi(strategy, params, models, n, budget, seed):
    M = params.M
    if strategy == "optimal":
        raise ValueError("optimal order switching is only available for two users")
    lams = _simplex_grid(M, max(1, min(n, 12)))
    caps, tags = [], []
    for lam in lams:
        if strategy == "suboptimal":
            c = suboptimal_capacities(lam, params, models, budget, seed=seed)
        elif strategy == "fixed-timeshare":
            dim = math.factorial(M)
            tau = _maximise_on_simplex(lambda t: lam @ timeshare_capacities(t, params, models, budget), dim)
            c = timeshare_capacities(tau, params, models, budget)
        elif strategy == "tdma":
            d = _maximise_on_simplex(lambda x: lam @ tdma_capacities(np.maximum(x, 1e-12), params, models, budget), M)
            c = tdma_capacities(d, params, models, budget)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        caps.append(c)
        tags.append(lam[0])
    rb = RegionBoundary(strategy, "lambda1", np.array(tags), np.array(caps))
    rb.metadata["lambdas"] = lams
    rb.metadata["note"] = "concavity test not applied for M >= 3"
    return rb


# -- exact ray intersections (two users) -------------------------------------

def _param_interval(strategy, beta):
    if strategy == "optimal":
        umax = max(math.log(50.0), math.log(1e4) / beta)
        return -umax, umax
    if strategy == "suboptimal":
        return -math.log(1e6), math.log(1e6)
    return 0.0, 1.0


def ray_radius(strategy: str, angle: float, params: SystemParams, models, budget=None,
               xtol: float = 1e-12) -> float:
    """Distance from the origin to a two-user frontier along a ray.

    Locates the frontier point whose polar angle equals ``angle`` by root
    search on the strategy's generator parameter; rays outside the curve's
    angular span exit through the axis-aligned edges of the region.
    """
    lo, hi = _param_interval(strategy, params.beta[0])
    if strategy == "tdma":
        lo, hi = 1e-9, 1.0 - 1e-9

    def ang(x):
        c = _point(strategy, x, params, models, budget)
        return math.atan2(c[1], c[0]), c

    a_lo, c_lo = ang(lo)
    a_hi, c_hi = ang(hi)
    d = np.array([math.cos(angle), math.sin(angle)])
    if a_lo > a_hi:
        lo, hi, a_lo, a_hi, c_lo, c_hi = hi, lo, a_hi, a_lo, c_hi, c_lo
    if angle <= a_lo:
        return float(c_lo[0] / d[0])
    if angle >= a_hi:
        return float(c_hi[1] / d[1])
    x = optimize.brentq(lambda v: ang(v)[0] - angle, lo, hi, xtol=xtol)
    return float(np.hypot(*ang(x)[1]))


# -- sum rate ---------------------------------------------------------------

def _max_scalar(f, lo, hi, n_grid=25):
    xs = np.linspace(lo, hi, n_grid)
    vals = [f(x) for x in xs]
    i = int(np.argmax(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n_grid - 1)]
    res = optimize.minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-9 * max(1.0, hi - lo)})
    best = max(vals[i], -res.fun)
    x = xs[i] if vals[i] >= -res.fun else res.x
    return float(x), float(best)


def best_sum(strategy: str, params: SystemParams, models, budget=None) -> tuple[float, float]:
    """(argmax parameter, max C1 + C2) over the strategy's parameter."""
    if strategy == "optimal":
        lo, hi = _param_interval("optimal", params.beta[0])
        lo, hi = max(lo, -8.0), min(hi, 8.0)
    elif strategy == "suboptimal":
        lo, hi = -math.log(1e6), math.log(1e6)
    else:
        lo, hi = (0.0, 1.0) if strategy == "fixed-timeshare" else (1e-6, 1.0 - 1e-6)
    return _max_scalar(lambda x: float(np.sum(_point(strategy, x, params, models, budget))), lo, hi)


def sum_rate_sweep(strategies: Sequence[str], thetas: Sequence[float], params: SystemParams,
                   models, budget=None) -> dict:
    """Best sum of normalized effective capacities per strategy and theta.

    Returns ``{"theta": array, strategy: array, ...}``.  Each entry is the
    equal-weight point of the strategy's frontier (scalar maximisation over
    its generator: K, lambda_1, tau or delta_1).
    """
    thetas = np.asarray(thetas, dtype=float)
    if np.any(thetas <= 0) or np.any(np.diff(thetas) <= 0):
        raise ValueError("theta grid must be positive and ascending")
    out = {"theta": thetas}
    for s in strategies:
        out[s] = np.array([best_sum(s, params.with_theta(t), models, budget)[1] for t in thetas])
    return out
