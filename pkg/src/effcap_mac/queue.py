"""Discrete-time queue simulation for checking the QoS-exponent semantics.

A constant source feeds ``a*T`` bits per frame into a buffer drained by
``s[i] = T*R[i]`` bits, with ``R[i]`` drawn i.i.d. per frame.  The queue obeys
the Lindley recursion ``Q[i+1] = max(Q[i] + a*T - s[i], 0)``, and the tail
exponent of the stationary queue is estimated from the empirical survival
function.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np
from scipy import stats

from .fading import CHUNK, FadingModel, sample

MIN_FRAMES = 100_000
MIN_EXCEEDANCES = 1000
WARMUP_FRACTION = 0.01
TAIL_WINDOW = (0.95, 0.999)


class InsufficientTailError(ValueError):
    pass


@numba.njit(cache=True)
def lindley(increments, q0=0.0):
    """Q[i] after frame i, starting from q0: Q[i] = max(Q[i-1] + x[i], 0)."""
    q = np.empty(increments.shape[0])
    cur = q0
    for i in range(increments.shape[0]):
        cur = cur + increments[i]
        if cur < 0.0:
            cur = 0.0
        q[i] = cur
    return q


@dataclass
class QueueTrace:
    q: np.ndarray              # bits, after each frame
    service: np.ndarray        # bits per frame
    arrival_rate: float        # bits/s
    T: float
    seed: int | None
    warning: str | None = None

    @property
    def frames(self) -> int:
        return len(self.q)

    def recompute(self) -> np.ndarray:
        return lindley(self.arrival_rate * self.T - self.service)


def simulate(rate_law: Callable, models: FadingModel | Sequence[FadingModel],
             arrival_rate: float, frames: int, seed: int, T: float = 2e-3,
             check_frames: bool = True) -> QueueTrace:
    """Simulate the buffer of one user served at ``rate_law(z)`` bits/s.

    ``rate_law`` maps gain vectors of shape ``(n, M)`` to rates.  A trace is
    returned even for an unstable load, with ``warning`` set.
    """
    if isinstance(models, FadingModel):
        models = [models]
    frames = int(frames)
    if check_frames and frames < MIN_FRAMES:
        raise ValueError(f"need at least {MIN_FRAMES} frames, got {frames}")
    if arrival_rate < 0:
        raise ValueError("arrival rate must be nonnegative")
    z = np.stack([sample(m, seed, frames, stream=j) for j, m in enumerate(models)], axis=1)
    service = T * np.asarray(rate_law(z), dtype=float)
    del z
    q = lindley(arrival_rate * T - service)
    msg = None
    if arrival_rate * T >= service.mean():
        msg = (f"arrival {arrival_rate:g} bits/s is not below the mean service "
               f"{service.mean() / T:g} bits/s; queue is unstable")
        warnings.warn(msg)
    return QueueTrace(q, service, float(arrival_rate), T, seed, msg)


@dataclass(frozen=True)
class DecayEstimate:
    theta: float
    ci_low: float
    ci_high: float
    q_low: float
    q_high: float
    batches: int
    batch_thetas: tuple = field(repr=False, default=())


def _tail_slope(sorted_q, qs):
    n = len(sorted_q)
    surv = (n - np.searchsorted(sorted_q, qs, side="left")) / n
    ok = surv > 0
    if ok.sum() < 2:
        return math.nan
    slope = np.polyfit(qs[ok], np.log(surv[ok]), 1)[0]
    return -slope


def estimate_decay(trace: QueueTrace | np.ndarray, window: tuple[float, float] = TAIL_WINDOW,
                   batches: int = 20, warmup: float = WARMUP_FRACTION, points: int = 40,
                   confidence: float = 0.95) -> DecayEstimate:
    """Least-squares slope of ln P(Q >= q) over a percentile window of Q.

    The first ``warmup`` fraction of frames is discarded.  The confidence
    interval comes from batch means: the same fit is repeated on ``batches``
    contiguous blocks.
    """
    q = trace.q if isinstance(trace, QueueTrace) else np.asarray(trace, dtype=float)
    q = q[int(len(q) * warmup):]
    sq = np.sort(q)
    q_lo, q_hi = np.quantile(sq, window)
    if q_lo <= 0:
        positive = sq[sq > 0]
        q_lo = positive[0] if len(positive) else 0.0
    exceed = len(sq) - np.searchsorted(sq, q_lo, side="left")
    if exceed < MIN_EXCEEDANCES or not q_hi > q_lo:
        frac = max(exceed, 1) / len(sq)
        need = int(math.ceil(MIN_EXCEEDANCES / frac / (1.0 - warmup)))
        raise InsufficientTailError(
            f"only {exceed} samples at or above q={q_lo:g}; about {need} frames are needed "
            f"for {MIN_EXCEEDANCES} tail exceedances")
    qs = np.linspace(q_lo, q_hi, points)
    theta = _tail_slope(sq, qs)
    per = len(q) // batches
    bt = np.array([_tail_slope(np.sort(q[b * per:(b + 1) * per]), qs) for b in range(batches)])
    bt = bt[np.isfinite(bt)]
    if len(bt) >= 2:
        half = stats.t.ppf(0.5 + confidence / 2, len(bt) - 1) * bt.std(ddof=1) / math.sqrt(len(bt))
    else:
        half = math.inf
    return DecayEstimate(float(theta), float(theta - half), float(theta + half),
                         float(q_lo), float(q_hi), int(len(bt)), tuple(bt))
