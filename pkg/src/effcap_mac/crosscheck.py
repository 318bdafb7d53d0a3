"""Quadrature against Monte Carlo for the capacities a configuration produces.

Each scheme is computed twice: by the deterministic routes used everywhere
else in the package and by a plain sample average of exp(-theta T R) over
the scheme's rate law.  The two share no code beyond the rate law itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .effcap import QosSpec, effective_capacity
from .rates import SystemParams, all_orders, vertex_rates
from .region import (fixed_order_capacities, optimal_boundary_g, scheduled_capacities,
                     suboptimal_capacities, suboptimal_orders, tdma_capacities)


@dataclass(frozen=True)
class CrossCheck:
    label: str
    user: int               # 1-based
    quadrature: float       # bits/s/Hz
    monte_carlo: float
    stderr: float

    @property
    def z_score(self) -> float:
        return (self.monte_carlo - self.quadrature) / self.stderr if self.stderr > 0 else math.inf


def _schemes(params: SystemParams, models, budget):
    """(label, rate law in bits/s/Hz, quadrature capacities) per scheme."""
    M = params.M
    snr = np.asarray(params.snr)
    for o in all_orders(M):
        yield (f"order {o.one_based()}", lambda z, o=o: vertex_rates(z, snr, o),
               fixed_order_capacities(o, params, models, budget))
    d = 1.0 / M
    yield (f"tdma delta={d:.6g}",
           lambda z: d * np.log2(1.0 + snr * z / d),
           tdma_capacities([d] * M, params, models, budget))
    if M == 2:
        lam = (0.5, 0.5)
        yield ("suboptimal lambda1=0.5",
               lambda z: vertex_rates(z, snr, suboptimal_orders(z, lam)),
               suboptimal_capacities(lam, params, models, budget))
        if abs(params.theta[0] - params.theta[1]) <= 1e-12 * params.theta[0]:
            sw = optimal_boundary_g(1.0, params.snr, params.beta[0])

            def law(z):
                first = sw.order12(z[:, 0], z[:, 1])
                pi = np.where(first[:, None], [0, 1], [1, 0])
                return vertex_rates(z, snr, pi)

            yield "optimal K=1", law, scheduled_capacities(1.0, params, models, budget)


def cross_check(params: SystemParams, models, samples: int = 1_000_000, seed: int = 0,
                budget=None) -> list[CrossCheck]:
    out = []
    for label, law, quad in _schemes(params, models, budget):
        for j in range(params.M):
            qos = QosSpec(params.theta[j], params.T, params.B)
            res = effective_capacity(lambda z, law=law, j=j: params.B * law(z)[:, j], models,
                                     qos, "monte-carlo", samples, seed)
            out.append(CrossCheck(label, j + 1, float(quad[j]), res.c_normalized,
                                  float(res.stderr_normalized)))
    return out
