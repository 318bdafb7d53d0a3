"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed as the tests run and collected again in the terminal
summary under "acceptance criteria".
"""

import math
import os
import time

import numpy as np
import pytest
from scipy import optimize, special

from conftest import report
from effcap_mac.config import load
from effcap_mac.crosscheck import cross_check
from effcap_mac.effcap import QosSpec, effective_capacity
from effcap_mac.fading import FadingModel
from effcap_mac.power import (PowerPolicy, calibrate, expected_power, policy_mu,
                              waterfilling_cutoff)
from effcap_mac.queue import estimate_decay, simulate
from effcap_mac.rates import LN2, DecodingOrder, SystemParams, all_orders, vertex_rates
from effcap_mac.region import (fixed_point_K, ray_radius, single_user_capacity,
                               stationarity_residual, sum_rate_sweep, trace_region)

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")
RAYLEIGH = FadingModel.rayleigh(1.0)
MODELS = [RAYLEIGH, RAYLEIGH]
FIG2 = SystemParams.common_theta([1.0, 1.0], 0.01)                  # 0 dB, 0 dB
FIG3 = SystemParams.common_theta([10.0, 1.0], 0.01)                 # 10 dB, 0 dB
STRATEGIES = ("optimal", "suboptimal", "fixed-timeshare", "tdma")


def test_1_region_dominance():
    t0 = time.time()
    angles = np.linspace(0.0, math.pi / 2, 21)
    radii = {s: np.array([ray_radius(s, a, FIG2, MODELS) for a in angles])
             for s in ("optimal", "suboptimal", "fixed-timeshare")}
    tol = 1e-9
    order_ok = bool(np.all(radii["optimal"] >= radii["suboptimal"] - tol)
                    and np.all(radii["suboptimal"] >= radii["fixed-timeshare"] - tol))
    gap = float(np.max((radii["optimal"] - radii["suboptimal"]) / radii["optimal"]))
    tdma = trace_region("tdma", FIG2, MODELS, n=41)
    outside = 0
    for c in tdma.capacities[1:-1]:
        a = math.atan2(c[1], c[0])
        if math.hypot(*c) > ray_radius("fixed-timeshare", a, FIG2, MODELS) + 1e-9:
            outside += 1
    elapsed = time.time() - t0
    ok = order_ok and gap <= 0.01 and outside >= 1 and elapsed < 120
    report(1, "region dominance", ok,
           f"ordering={'ok' if order_ok else 'violated'}, max suboptimal gap={gap:.3%}, "
           f"TDMA points outside fixed-order region={outside}, {elapsed:.0f}s")
    assert ok


def test_2_sum_rate_crossover():
    t0 = time.time()
    thetas = np.logspace(-4, 1, 11)
    res = sum_rate_sweep(STRATEGIES, thetas, FIG3, MODELS)
    fixed0, tdma0 = res["fixed-timeshare"][0], res["tdma"][0]
    last = np.array([res[s][-1] for s in STRATEGIES])
    spread = float((last.max() - last.min()) / last.max())
    elapsed = time.time() - t0
    ok = fixed0 > tdma0 and spread < 0.05 and elapsed < 120
    report(2, "sum-rate crossover", ok,
           f"theta={thetas[0]:g}: fixed {fixed0:.4f} vs TDMA {tdma0:.4f}; "
           f"spread at theta={thetas[-1]:g}: {spread:.2%}, {elapsed:.0f}s")
    assert ok


def test_3_ergodic_limit():
    T, B = 2e-3, 1e5
    qos = QosSpec(1e-4 / (T * B), T, B)                            # theta T B = 1e-4
    c = effective_capacity(lambda z: B * np.log2(1 + z[:, 0]), RAYLEIGH, qos).c_normalized
    want = math.exp(1.0) * special.exp1(1.0) / LN2
    rel = abs(c - want) / want
    ok = rel <= 0.005
    report(3, "ergodic limit", ok, f"C={c:.6f}, closed form {want:.6f}, rel err {rel:.2e}")
    assert ok


def test_4_concavity():
    worst, bad = -math.inf, []
    for name, p in (("0/0 dB", FIG2), ("10/0 dB", FIG3)):
        for s in STRATEGIES:
            rb = trace_region(s, p, MODELS, n=161)
            d = rb.concavity_defect()
            worst = max(worst, d)
            if not rb.is_concave(1e-6):
                bad.append(f"{s}@{name}")
    ok = not bad
    report(4, "frontier concavity", ok,
           f"8 frontiers, largest defect {worst:.2e}" + (f", failing: {bad}" if bad else ""))
    assert ok


def test_5_stationarity():
    Ks = np.logspace(-2, 2, 10)
    worst_res, worst_fp = 0.0, 0.0
    for p in (FIG2, FIG3):
        for K in Ks:
            st = stationarity_residual(K, p, MODELS)
            worst_res = max(worst_res, st.residual)
            k_fp = fixed_point_K(st.lambda1, p, MODELS)
            worst_fp = max(worst_fp, abs(k_fp - K) / K)
    ok = worst_res <= 1e-12 and worst_fp <= 1e-6
    report(5, "stationarity", ok,
           f"max residual {worst_res:.2e} over 10 K x 2 setups, fixed-point rel err {worst_fp:.2e}")
    assert ok


def test_6_telescoping():
    rng = np.random.default_rng(6)
    worst = 0.0
    for M in (2, 3):
        z = rng.exponential(size=(10_000, M))
        snr = rng.uniform(0.1, 10.0, M)
        total = np.log2(1.0 + z @ snr)
        for o in all_orders(M):
            worst = max(worst, float(np.max(np.abs(vertex_rates(z, snr, o).sum(axis=1) - total))))
    ok = worst <= 1e-12
    report(6, "telescoping identity", ok, f"max abs deviation {worst:.2e} (B=1), M in {{2,3}}")
    assert ok


def _argmin(x, alpha, beta):
    # minimiser of (1 + mu x)^(-beta) + beta alpha mu, from the derivative root
    if x <= 0:
        return 0.0
    d = lambda mu: -x * (1 + mu * x) ** (-beta - 1) + alpha
    if d(0.0) >= 0:
        return 0.0
    return optimize.brentq(d, 0.0, 1.0 / alpha, xtol=1e-15, rtol=1e-15)


def test_7_power_policy():
    rng = np.random.default_rng(7)
    order = DecodingOrder((1, 0))
    worst_mu = 0.0
    for beta in (0.5, 1.0, 3.0):
        z = rng.exponential(size=(1000, 2)) * 3.0
        alphas = (0.3, 0.6)
        mu = policy_mu(z, PowerPolicy(order, alphas, (beta, beta)))
        for i in range(len(z)):
            m1 = _argmin(z[i, 0], alphas[0], beta)
            m2 = _argmin(z[i, 1] / (1 + m1 * z[i, 0]), alphas[1], beta)
            worst_mu = max(worst_mu, abs(mu[i, 0] - m1), abs(mu[i, 1] - m2))
    worst_pow = 0.0
    for p in (FIG2, FIG3):
        pol = calibrate(order, p, MODELS)
        for j in range(2):
            worst_pow = max(worst_pow, abs(expected_power(j, pol, MODELS) - p.snr[j]) / p.snr[j])
    theta = 1e-6 * LN2 / (2e-3 * 1e5)
    pol = calibrate(DecodingOrder((0,)), SystemParams.common_theta([1.0], theta), [RAYLEIGH])
    wf = waterfilling_cutoff(1.0, RAYLEIGH)
    wf_err = abs(pol.alpha[0] - wf)
    ok = worst_mu <= 1e-6 and worst_pow <= 1e-3 and wf_err <= 1e-4
    report(7, "power-policy optimality", ok,
           f"pointwise {worst_mu:.2e}, power constraint {worst_pow:.2e}, "
           f"waterfilling cutoff diff {wf_err:.2e}")
    assert ok


def test_8_queue_tail():
    t0 = time.time()
    T, B, frames = 2e-3, 1e5, 10_000_000
    law = lambda z: B * np.log2(1 + z[:, 0])
    factors = (0.85, 0.9, 0.95, 1.0, 1.03)
    parts, ok = [], True
    for theta, seed in ((0.001, 81), (0.01, 82)):
        C = single_user_capacity(1.0, QosSpec(theta, T, B).beta, RAYLEIGH) * B
        est = {f: estimate_decay(simulate(law, RAYLEIGH, f * C, frames, seed, T)).theta for f in factors}
        ratio = est[1.0] / theta
        mono = all(est[a] >= est[b] for a, b in zip(factors, factors[1:]))
        ok &= 0.8 <= ratio <= 1.25 and mono
        parts.append(f"theta={theta:g}: ratio {ratio:.3f}, sweep {'monotone' if mono else 'NOT monotone'}")
    elapsed = time.time() - t0
    ok &= elapsed < 300
    report(8, "queue-tail semantics", ok, "; ".join(parts) + f", {elapsed:.0f}s")
    assert ok


def test_9_cross_validation():
    worst, n, fails = 0.0, 0, []
    for name in sorted(os.listdir(CONFIGS)):
        cfg = load(os.path.join(CONFIGS, name))
        p = SystemParams(cfg.snr, cfg.theta, cfg.T, cfg.B)
        models = [FadingModel.rayleigh(m) for m in cfg.models_mean]
        for r in cross_check(p, models, 1_000_000, cfg.seed):
            n += 1
            worst = max(worst, abs(r.z_score))
            if abs(r.z_score) > 3:
                fails.append(f"{name}:{r.label}:user{r.user}")
    ok = not fails
    report(9, "quadrature vs Monte Carlo", ok,
           f"{n} comparisons over shipped configs, max |z| {worst:.2f}" + (f", failing {fails}" if fails else ""))
    assert ok
