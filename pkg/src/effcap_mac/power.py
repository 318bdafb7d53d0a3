"""QoS-aware power control for a fixed successive-decoding order.

With the order fixed, the weighted problem separates into one problem per
user, solved from the last-decoded user backwards.  Each user sees its gain
normalised by noise plus the interference of later-decoded users,
``x_j = z_j / (1 + I_j)``, and transmits at

    mu_j = ((x_j / alpha_j)^(1/(beta_j+1)) - 1)^+ / x_j,

which is zero below the threshold ``x_j <= alpha_j``.  The thresholds are
calibrated so that every average power constraint E{mu_j} = SNR_j binds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .effcap import log_mean_exp_neg
from .fading import FadingModel, sample
from .rates import LN2, DecodingOrder, SystemParams, powered_rates

ALPHA_BRACKET = (1e-12, 1e12)


class CalibrationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PowerPolicy:
    order: DecodingOrder
    alpha: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        if len(self.alpha) != self.order.M or len(self.beta) != self.order.M:
            raise ValueError("alpha and beta need one entry per user")
        if any(not a > 0 for a in self.alpha):
            raise ValueError("thresholds alpha must be positive")


def _user_power(x, alpha, beta):
    """Allocated SNR for normalised gain x (array); zero at or below alpha."""
    x = np.asarray(x, dtype=float)
    on = x > alpha
    safe = np.where(on, x, 1.0)
    level = np.expm1(np.log(safe / alpha) / (beta + 1.0))
    return np.where(on, level / safe, 0.0)


def policy_mu(z, policy: PowerPolicy) -> np.ndarray:
    """Allocated SNR levels for gain vectors ``z`` of shape ``(..., M)``.

    Evaluated in reverse decoding order so that each user's interference from
    later-decoded users is already known.
    """
    z = np.asarray(z, dtype=float)
    mu = np.zeros_like(z)
    interference = np.zeros(z.shape[:-1])
    for j in reversed(policy.order.pi):
        x = z[..., j] / (1.0 + interference)
        mu[..., j] = _user_power(x, policy.alpha[j], policy.beta[j])
        interference = interference + mu[..., j] * z[..., j]
    return mu


def two_user_policy(z1, z2, alphas: Sequence[float], betas: Sequence[float]):
    """Explicit branch form for order (2,1): user 2 decoded first, user 1 last.

    Returns ``(mu1, mu2)``.
    """
    a1, a2 = alphas
    b1, b2 = betas
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        mu1 = np.where(z1 > a1, 1.0 / (a1 ** (1 / (b1 + 1)) * z1 ** (b1 / (b1 + 1))) - 1.0 / z1, 0.0)
        r = (z1 / a1) ** (1.0 / (b1 + 1))
        lone = 1.0 / (a2 ** (1 / (b2 + 1)) * z2 ** (b2 / (b2 + 1))) - 1.0 / z2
        shared = ((z1 / a1) ** (b2 / ((b1 + 1) * (b2 + 1)))
                  / (a2 ** (1 / (b2 + 1)) * z2 ** (b2 / (b2 + 1))) - r / z2)
        mu2 = np.select([(z1 <= a1) & (z2 > a2), (z1 > a1) & (z2 / a2 > r)], [lone, shared], 0.0)
    return mu1, mu2


# -- expectations with exact threshold splits -------------------------------

def _interference_rule(policy: PowerPolicy, j: int, models, budget):
    """Nodes/weights over the interference I_j seen by user j.

    Returns ``(I, w)`` such that ``sum(w * f(I)) = E{f(I_j)}``.  Exact
    quadrature (threshold kinks split) for up to one interferer; more
    interferers fall back to a fixed-seed sample average.
    """
    later = policy.order.later(j)
    if not later:
        return np.zeros(1), np.ones(1)
    if len(later) == 1:
        k = later[0]
        a = policy.alpha[k]
        zk, wk = models[k].tail_rule(np.array([a]), budget)
        zk, wk = zk[0], wk[0]
        mu = _user_power(zk, a, policy.beta[k])
        # below the threshold user k is silent: I = 0 with mass P(z_k <= alpha_k)
        return np.concatenate(([0.0], mu * zk)), np.concatenate(([float(models[k].cdf(a))], wk))
    n = 200_000
    zs = np.stack([sample(models[i], 12345, n, stream=i) for i in range(policy.order.M)], axis=1)
    mu = policy_mu(zs, policy)
    I = np.sum(mu[:, list(later)] * zs[:, list(later)], axis=1)
    return I, np.full(n, 1.0 / n)


def _user_terms(j, alpha, policy, models, budget, beta=None):
    """(E{mu_j}, E{(1+mu_j x_j)^(-beta_j)}) for threshold ``alpha``."""
    beta = policy.beta[j] if beta is None else beta
    I, wI = _interference_rule(policy, j, models, budget)
    t = alpha * (1.0 + I)  # gain threshold for transmitting
    zt, wt = models[j].tail_rule(t, budget)
    x = zt / (1.0 + I)[:, None]
    mu = _user_power(x, alpha, beta)
    power = np.sum(mu * wt, axis=1)
    p = 1.0 / (beta + 1.0)
    # above threshold (1 + mu x) = (x/alpha)^(1/(beta+1))
    with np.errstate(divide="ignore"):
        log_ratio = np.log(np.maximum(x, 1e-300) / alpha)
    on = np.sum(np.exp(-beta * p * log_ratio) * wt, axis=1)
    mgf = models[j].cdf(t) + on
    return float(wI @ power), wI, mgf


def expected_power(j: int, policy: PowerPolicy, models, budget=None) -> float:
    return _user_terms(j, policy.alpha[j], policy, models, budget)[0]


def calibrate(order: DecodingOrder, params: SystemParams, models: Sequence[FadingModel],
              tolerance: float = 1e-8, budget=None) -> PowerPolicy:
    """Thresholds meeting E{mu_j} = SNR_j, solved in reverse decoding order.

    E{mu_j} decreases in alpha_j once later users' policies are fixed, so each
    threshold is a bracketed root search on log alpha_j.
    """
    M = params.M
    alpha = [1.0] * M
    betas = params.beta
    lo, hi = (math.log(a) for a in ALPHA_BRACKET)
    for j in reversed(order.pi):
        target = params.snr[j]

        def excess(log_a, j=j):
            alpha[j] = math.exp(log_a)
            pol = PowerPolicy(order, tuple(alpha), betas)
            return math.log(max(expected_power(j, pol, models, budget), 1e-300)) - math.log(target)

        f_lo, f_hi = excess(lo), excess(hi)
        if not (f_lo > 0 > f_hi):
            raise CalibrationError(
                f"no threshold in {ALPHA_BRACKET} meets E{{mu_{j + 1}}} = {target:g}")
        root = optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                               maxiter=500)
        alpha[j] = math.exp(root)
        got = expected_power(j, PowerPolicy(order, tuple(alpha), betas), models, budget)
        if abs(got - target) / target > tolerance:
            raise CalibrationError(
                f"user {j + 1}: relative power error {abs(got - target) / target:.3g} "
                f"exceeds {tolerance:g}")
    return PowerPolicy(order, tuple(alpha), betas)


def powered_vertex_capacities(policy: PowerPolicy, params: SystemParams, models,
                              budget=None) -> np.ndarray:
    """Normalized effective capacities of the order's vertex under the policy."""
    out = np.empty(params.M)
    for j in range(params.M):
        _, wI, mgf = _user_terms(j, policy.alpha[j], policy, models, budget)
        out[j] = -math.log(float(wI @ mgf)) / (params.beta[j] * LN2)
    return out


def constant_power_capacities(order: DecodingOrder, params: SystemParams, models,
                              budget=None) -> np.ndarray:
    """Capacities with mu frozen at the average SNRs, via the powered-rate law."""
    from .fading import tensor_rule
    z, w = tensor_rule(models, budget or (310 if params.M <= 2 else 62))
    r = powered_rates(z, np.asarray(params.snr), order)
    betas = np.asarray(params.beta)
    return np.array([-log_mean_exp_neg(betas[j] * LN2 * r[:, j], w) / (betas[j] * LN2)
                     for j in range(params.M)])


def waterfilling_cutoff(snr: float, model: FadingModel, budget=None) -> float:
    """Cutoff alpha with E{(1/alpha - 1/z)^+} = snr (classic single-user)."""
    def excess(log_a):
        a = math.exp(log_a)
        zt, wt = model.tail_rule(np.array([a]), budget)
        return math.log(max(float(np.sum((1.0 / a - 1.0 / zt[0]) * wt[0])), 1e-300)) - math.log(snr)

    return math.exp(optimize.brentq(excess, -20.0, 20.0, xtol=1e-14))


def policy_table(policy: PowerPolicy, z_grid: Sequence[float]):
    """Rows (z1, ..., zM, mu1, ..., muM) over the tensor grid (M <= 2)."""
    z_grid = np.asarray(z_grid, dtype=float)
    M = policy.order.M
    grids = np.meshgrid(*([z_grid] * M), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=1)
    mu = policy_mu(z, policy)
    return np.hstack([z, mu])
