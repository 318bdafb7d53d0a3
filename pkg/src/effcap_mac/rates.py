"""Instantaneous service rates for superposition coding and TDMA.

Users are indexed from 0.  A decoding order lists user indices in the order
the receiver decodes them: ``order[0]`` is decoded first and sees interference
from everyone after it, ``order[-1]`` is decoded last and sees only noise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fading import FadingModel

LN2 = math.log(2.0)


@dataclass(frozen=True)
class SystemParams:
    """Frame duration ``T`` (s), bandwidth ``B`` (Hz), linear average SNRs and
    QoS exponents ``theta`` (1/bit), one per user."""

    snr: tuple[float, ...]
    theta: tuple[float, ...]
    T: float = 2e-3
    B: float = 1e5

    def __post_init__(self):
        object.__setattr__(self, "snr", tuple(float(s) for s in self.snr))
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        if not (self.T > 0 and self.B > 0):
            raise ValueError("T and B must be positive")
        if len(self.snr) != len(self.theta) or not self.snr:
            raise ValueError("snr and theta need one entry per user")
        if any(not s > 0 for s in self.snr) or any(not t > 0 for t in self.theta):
            raise ValueError("all snr and theta values must be positive")

    @classmethod
    def common_theta(cls, snr: Sequence[float], theta: float, T: float = 2e-3, B: float = 1e5):
        return cls(tuple(snr), (theta,) * len(snr), T, B)

    @property
    def M(self) -> int:
        return len(self.snr)

    @property
    def beta(self) -> tuple[float, ...]:
        """Normalized QoS exponents theta*T*B/ln 2."""
        return tuple(t * self.T * self.B / LN2 for t in self.theta)

    def with_theta(self, theta) -> "SystemParams":
        if np.ndim(theta) == 0:
            theta = (float(theta),) * self.M
        return SystemParams(self.snr, tuple(theta), self.T, self.B)


@dataclass(frozen=True)
class DecodingOrder:
    pi: tuple[int, ...]

    def __post_init__(self):
        pi = tuple(int(i) for i in self.pi)
        if sorted(pi) != list(range(len(pi))):
            raise ValueError(f"decoding order {pi} is not a permutation of 0..{len(pi) - 1}")
        object.__setattr__(self, "pi", pi)

    @property
    def M(self) -> int:
        return len(self.pi)

    def position(self, user: int) -> int:
        return self.pi.index(user)

    def later(self, user: int) -> tuple[int, ...]:
        """Users decoded after ``user`` (its interferers)."""
        return self.pi[self.position(user) + 1:]

    @classmethod
    def from_one_based(cls, text_or_seq) -> "DecodingOrder":
        if isinstance(text_or_seq, str):
            text_or_seq = [int(t) for t in text_or_seq.replace(",", " ").split()]
        return cls(tuple(int(i) - 1 for i in text_or_seq))

    def one_based(self) -> str:
        return ",".join(str(i + 1) for i in self.pi)


def all_orders(M: int) -> list[DecodingOrder]:
    return [DecodingOrder(p) for p in itertools.permutations(range(M))]


def _order_matrix(order, n, M):
    if isinstance(order, DecodingOrder):
        return np.broadcast_to(np.asarray(order.pi), (n, M))
    order = np.asarray(order, dtype=int)
    if order.ndim == 1:
        return np.broadcast_to(order, (n, M))
    return order


def powered_rates(z, mu, order, B: float = 1.0) -> np.ndarray:
    """Successive-decoding rates (bits/s) with per-state SNR levels ``mu``.

    ``z`` and ``mu`` have shape ``(..., M)``.  ``order`` is a
    :class:`DecodingOrder`, or an integer array of per-state permutations with
    shape ``(n, M)`` for state-dependent decoding.
    """
    z = np.asarray(z, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), z.shape)
    lead = z.shape[:-1]
    M = z.shape[-1]
    x = (mu * z).reshape(-1, M)
    n = x.shape[0]
    pi = _order_matrix(order, n, M)
    xs = np.take_along_axis(x, pi, axis=1)
    # interference for position k: received power of positions k+1..M-1
    later = np.cumsum(xs[:, ::-1], axis=1)[:, ::-1] - xs
    rs = B * np.log1p(xs / (1.0 + later)) / LN2
    rates = np.empty_like(rs)
    np.put_along_axis(rates, pi, rs, axis=1)
    return rates.reshape(lead + (M,))


def vertex_rates(z, snr, order, B: float = 1.0) -> np.ndarray:
    """Fixed-power successive-decoding rates, one per user."""
    return powered_rates(z, np.asarray(snr, dtype=float), order, B)


def tdma_rate(z, snr: float, delta: float, B: float = 1.0):
    """Burst rate of a user holding the channel for a fraction ``delta`` of the
    frame with its power concentrated by ``1/delta``."""
    if not 0 < delta <= 1:
        raise ValueError(f"TDMA time fraction must lie in (0, 1], got {delta}")
    return B * np.log1p(snr * np.asarray(z, dtype=float) / delta) / LN2


def _laplace(model: FadingModel, s: np.ndarray) -> np.ndarray:
    """E{exp(-s z)} for an array of s >= 0."""
    if model.kind == "rayleigh":
        return 1.0 / (1.0 + s * model.mean_gain)
    z, w = model.rule()
    return np.exp(-np.outer(s, z)) @ w


def ergodic_subset_capacity(subset: Sequence[int], snr, models: Sequence[FadingModel],
                            B: float = 1.0) -> float:
    """B * E{log2(1 + sum_{j in S} snr_j z_j)} for independent gains.

    Uses ln(1+y) = int_0^inf (1 - e^{-s y}) e^{-s} / s ds, so the expectation
    reduces to a 1-D integral of the product of per-user Laplace transforms,
    whatever the subset size.
    """
    s, w = FadingModel.rayleigh().rule()
    prod = np.ones_like(s)
    for j in subset:
        prod = prod * _laplace(models[j], s * snr[j])
    return float(B * np.dot(w, -np.expm1(np.log(prod)) / s) / LN2)


def in_ergodic_region(rates, snr, models: Sequence[FadingModel], B: float = 1.0,
                      slack: float = 1e-9) -> bool:
    """Whether average rates (bits/s) satisfy every subset-sum constraint."""
    rates = np.asarray(rates, dtype=float)
    M = len(rates)
    if M > 10:
        raise ValueError("subset enumeration limited to M <= 10")
    if np.any(rates < -slack):
        return False
    for r in range(1, M + 1):
        for subset in itertools.combinations(range(M), r):
            if rates[list(subset)].sum() > ergodic_subset_capacity(subset, snr, models, B) + slack * max(1.0, B):
                return False
    return True
