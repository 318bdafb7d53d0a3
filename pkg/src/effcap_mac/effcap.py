"""Effective capacity of i.i.d. block-fading service processes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .fading import (DEFAULT_MC_SAMPLES, FadingError, FadingModel, mc_expectation,
                     tensor_rule)
from .rates import LN2

MAX_TENSOR_NODES = 4_000_000


class CapacityUnderflowError(FloatingPointError):
    pass


@dataclass(frozen=True)
class QosSpec:
    theta: float
    T: float = 2e-3
    B: float = 1e5

    def __post_init__(self):
        if not (self.theta > 0 and self.T > 0 and self.B > 0):
            raise ValueError("theta, T and B must be positive")

    @property
    def theta_tb(self) -> float:
        return self.theta * self.T * self.B

    @property
    def beta(self) -> float:
        return self.theta_tb / LN2


@dataclass(frozen=True)
class EffCapResult:
    c_bits_per_sec: float
    B: float
    method: str
    budget: int
    seed: int | None = None
    stderr: float | None = None  # bits/s, Monte Carlo only

    @property
    def c_normalized(self) -> float:
        return self.c_bits_per_sec / self.B

    @property
    def stderr_normalized(self) -> float | None:
        return None if self.stderr is None else self.stderr / self.B


def log_mean_exp_neg(x, weights=None) -> float:
    """ln E{exp(-x)} under the probability weights ``w``, stable for tiny and
    huge exponents.

    The weights are renormalised to sum to one (quadrature rules miss the
    far tail by a few ulps).  When the mean is near one (small exponents) it
    goes through expm1/log1p so that 1 - E{e^{-x}} keeps full relative
    precision; otherwise log-sum-exp.
    """
    x = np.asarray(x, dtype=float).ravel()
    w = np.full(x.shape, 1.0 / x.size) if weights is None else np.asarray(weights, dtype=float).ravel()
    if np.any(np.isnan(x)):
        raise FadingError("rate law returned NaN")
    pos = w > 0
    x, w = x[pos], w[pos]
    w = w / w.sum()
    lse = float(logsumexp(-x, b=w))
    if lse > -0.7:
        return float(np.log1p(np.dot(w, np.expm1(-x))))
    if not np.isfinite(lse):
        raise CapacityUnderflowError(
            "E{exp(-theta T R)} underflowed; rescale rates or use the log-sum-exp path")
    return lse


def effective_capacity(rate_law: Callable, models: FadingModel | Sequence[FadingModel],
                       qos: QosSpec, method: str = "quadrature", budget: int | None = None,
                       seed: int = 0) -> EffCapResult:
    """C(theta) = -ln E{exp(-theta T R)} / (theta T) for i.i.d. frames.

    ``rate_law`` maps an array of gain vectors with shape ``(n, M)`` to the
    user's rates in bits/s, shape ``(n,)``.  Quadrature uses the tensor
    product of the per-user rules; ``"monte-carlo"`` reports a delta-method
    standard error.
    """
    if isinstance(models, FadingModel):
        models = [models]
    models = list(models)
    tT = qos.theta * qos.T
    if method == "monte-carlo":
        n = int(budget or DEFAULT_MC_SAMPLES)

        def f(*zs):
            r = np.asarray(rate_law(np.stack(zs, axis=1)), dtype=float)
            return np.exp(-tT * r)

        est = mc_expectation(f, models, n, seed)
        if est.mean <= 0:
            raise CapacityUnderflowError(
                "Monte Carlo E{exp(-theta T R)} underflowed; use the log-sum-exp path "
                "(quadrature) or rescale the rate law")
        c = -math.log(est.mean) / tT
        se = est.stderr / (est.mean * tT)
        return EffCapResult(c, qos.B, method, n, seed, se)
    if method not in ("quadrature", "laguerre"):
        raise FadingError(f"unknown method {method!r}")
    if method == "laguerre":
        rules = [m.laguerre_rule(budget or 64) for m in models]
        grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        z = np.stack([g.ravel() for g in grids], axis=1)
        w = np.ones(1)
        for _, wj in rules:
            w = np.outer(w, wj).ravel()
    else:
        per_user = (budget or 310)
        if per_user ** len(models) > MAX_TENSOR_NODES:
            per_user = max(62, int(MAX_TENSOR_NODES ** (1.0 / len(models))))
        z, w = tensor_rule(models, per_user)
    r = np.asarray(rate_law(z), dtype=float)
    if not np.all(np.isfinite(r)):
        i = int(np.argmax(~np.isfinite(r)))
        raise FadingError(f"rate law is not finite at quadrature node z={tuple(z[i])}")
    lm = log_mean_exp_neg(tT * r, w)
    return EffCapResult(-lm / tT, qos.B, method, int(len(w)), None, None)


def single_user_log_mgf(snr: float, beta: float, model: FadingModel, delta: float = 1.0,
                        budget: int | None = None) -> float:
    """ln E{(1 + snr z / delta)^(-delta beta)} by the model's quadrature rule."""
    z, w = model.rule(budget)
    return log_mean_exp_neg(delta * beta * np.log1p(snr * z / delta), w)


def effective_capacity_tdma(delta: float, snr: float, model: FadingModel, qos: QosSpec,
                            method: str = "quadrature", budget: int | None = None,
                            seed: int = 0) -> EffCapResult:
    """Effective capacity of a TDMA user served only in its slot fraction.

    Per frame the user delivers delta*T*B*log2(1 + snr z/delta) bits.
    """
    if not 0 < delta <= 1:
        raise ValueError(f"TDMA time fraction must lie in (0, 1], got {delta}")
    B = qos.B

    def law(z):
        return delta * B * np.log1p(snr * z[:, 0] / delta) / LN2

    if method == "quadrature":
        lm = single_user_log_mgf(snr, qos.beta, model, delta, budget)
        c = -lm / (qos.theta * qos.T)
        return EffCapResult(c, B, method, len(model.rule(budget)[0]))
    return effective_capacity(law, [model], qos, method, budget, seed)


def normalized_capacity(log_mgf: float, beta: float) -> float:
    """bits/s/Hz from ln E{exp(-theta T R)} and the normalized exponent."""
    return -log_mgf / (beta * LN2)
