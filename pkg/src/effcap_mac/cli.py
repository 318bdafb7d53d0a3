"""``effcap-mac`` command-line entry point.

    effcap-mac <command> --config <file> [--set key=value ...] --out <dir>

Commands: region, sumrate, power, validate, effcap.  Every CSV starts with
``#`` metadata lines (tool version, command, RNG, method, seed and the full
config echo), then a header row.  Exit codes: 0 ok, 1 config error, 2
numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import traceback

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, RunConfig, load
from .fading import RNG_NAME, FadingModel

log = logging.getLogger("effcap_mac")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(path: str, cfg: RunConfig, header, rows, extra_meta=()):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# tool: effcap-mac {__version__}\n")
        fh.write(f"# command: {cfg.command}\n")
        fh.write(f"# rng: {RNG_NAME}\n")
        fh.write(f"# method: {cfg.method}\n")
        fh.write(f"# seed: {cfg.seed}\n")
        for line in extra_meta:
            fh.write(f"# {line}\n")
        for line in cfg.echo():
            fh.write(f"# config: {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    log.info("wrote %s", path)
    return path


def _setup(cfg: RunConfig):
    from .rates import SystemParams
    params = SystemParams(cfg.snr, cfg.theta, cfg.T, cfg.B)
    models = [FadingModel.rayleigh(m) for m in cfg.models_mean]
    return params, models


def _budget(cfg):
    return cfg.budget or None


def cmd_region(cfg: RunConfig) -> list[str]:
    from .region import trace_region
    params, models = _setup(cfg)
    rows, meta = [], []
    for s in cfg.strategies:
        if s == "optimal" and (params.M != 2 or len(set(params.theta)) != 1):
            raise ConfigError("strategies: 'optimal' needs two users with a common theta")
        rb = trace_region(s, params, models, cfg.grid_points, _budget(cfg), cfg.seed)
        for p, c in zip(rb.params, rb.capacities):
            rows.append((s, rb.parameter, p, *c))
        if "concavity_defect" in rb.metadata:
            meta.append(f"{s}.concavity_defect: {rb.metadata['concavity_defect']:.3g}")
        if "warning" in rb.metadata:
            meta.append(f"warning: {rb.metadata['warning']}")
    header = ["strategy", "parameter_name", "parameter"] + [f"C{j + 1}" for j in range(params.M)]
    return [write_csv(os.path.join(cfg.out, "region.csv"), cfg, header, rows, meta)]


def cmd_sumrate(cfg: RunConfig) -> list[str]:
    from .region import sum_rate_sweep
    params, models = _setup(cfg)
    if params.M != 2:
        raise ConfigError("snr: the sum-rate sweep is defined for two users")
    thetas = np.logspace(math.log10(cfg.theta_min), math.log10(cfg.theta_max), cfg.theta_points)
    res = sum_rate_sweep(cfg.strategies, thetas, params, models, _budget(cfg))
    header = ["theta", "beta"] + [f"sum_{s}" for s in cfg.strategies]
    beta_of = lambda t: t * cfg.T * cfg.B / math.log(2)
    rows = [(t, beta_of(t), *[res[s][i] for s in cfg.strategies]) for i, t in enumerate(thetas)]
    return [write_csv(os.path.join(cfg.out, "sumrate.csv"), cfg, header, rows)]


def cmd_power(cfg: RunConfig) -> list[str]:
    from .power import (calibrate, expected_power, policy_table,
                        powered_vertex_capacities)
    from .rates import DecodingOrder
    from .region import fixed_order_capacities
    params, models = _setup(cfg)
    order = DecodingOrder.from_one_based(cfg.order)
    pol = calibrate(order, params, models, budget=_budget(cfg))
    c_pc = powered_vertex_capacities(pol, params, models, _budget(cfg))
    c_fp = fixed_order_capacities(order, params, models, _budget(cfg))
    rows = [(j + 1, params.snr[j], params.theta[j], params.beta[j], pol.alpha[j],
             expected_power(j, pol, models, _budget(cfg)), c_pc[j], c_fp[j])
            for j in range(params.M)]
    header = ["user", "snr", "theta", "beta", "alpha", "mean_power", "C_power_control",
              "C_fixed_power"]
    out = [write_csv(os.path.join(cfg.out, "power_thresholds.csv"), cfg, header, rows,
                     [f"order: {order.one_based()}"])]
    if params.M <= 2:
        table = policy_table(pol, np.linspace(0.0, cfg.z_max, cfg.z_points))
        header = [f"z{j + 1}" for j in range(params.M)] + [f"mu{j + 1}" for j in range(params.M)]
        out.append(write_csv(os.path.join(cfg.out, "power_policy.csv"), cfg, header, table,
                             [f"order: {order.one_based()}"]))
    return out


def cmd_validate(cfg: RunConfig) -> list[str]:
    from .effcap import QosSpec
    from .queue import estimate_decay, simulate
    from .region import single_user_capacity
    params, models = _setup(cfg)
    j = cfg.user - 1
    snr, theta, model = params.snr[j], params.theta[j], models[j]
    qos = QosSpec(theta, cfg.T, cfg.B)
    C = single_user_capacity(snr, qos.beta, model, _budget(cfg)) * cfg.B

    def law(z):
        return cfg.B * np.log1p(snr * z[:, 0]) / math.log(2)

    rows = []
    for f in cfg.arrival_factors:
        tr = simulate(law, model, f * C, cfg.frames, cfg.seed, cfg.T)
        est = estimate_decay(tr)
        rows.append((f, f * C, theta, est.theta, est.ci_low, est.ci_high, est.theta / theta,
                     est.q_low, est.q_high, est.batches, tr.warning or ""))
    header = ["arrival_factor", "arrival_bits_per_s", "theta", "theta_hat", "ci_low", "ci_high",
              "ratio", "q_low", "q_high", "batches", "warning"]
    return [write_csv(os.path.join(cfg.out, "validate.csv"), cfg, header, rows,
                      [f"effective_capacity_bits_per_s: {C:.12g}"])]


def cmd_effcap(cfg: RunConfig) -> list[str]:
    from .crosscheck import cross_check
    params, models = _setup(cfg)
    rows = [(r.label, r.user, r.quadrature, r.monte_carlo, r.stderr, r.z_score)
            for r in cross_check(params, models, cfg.mc_samples, cfg.seed)]
    header = ["scheme", "user", "C_quadrature", "C_monte_carlo", "mc_stderr", "z_score"]
    return [write_csv(os.path.join(cfg.out, "effcap.csv"), cfg, header, rows)]


HANDLERS = {
    "region": cmd_region,
    "sumrate": cmd_sumrate,
    "power": cmd_power,
    "validate": cmd_validate,
    "effcap": cmd_effcap,
}


def _where(exc: BaseException) -> str:
    """module.function of the innermost package frame that raised."""
    where = "effcap_mac"
    for fr in traceback.extract_tb(exc.__traceback__):
        if f"{os.sep}effcap_mac{os.sep}" in fr.filename:
            mod = os.path.splitext(os.path.basename(fr.filename))[0]
            where = f"{mod}.{fr.name}"
    return where


def run(cfg: RunConfig) -> list[str]:
    return HANDLERS[cfg.command](cfg)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="effcap-mac", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        overrides = list(args.set)
        if args.out is not None:
            overrides.append(f"out={args.out}")
        cfg = load(args.config, overrides, args.command)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        for path in run(cfg):
            print(path)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (ArithmeticError, ValueError, FloatingPointError) as e:
        print(f"numeric error in {_where(e)}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
