"""Flat ``key = value`` run configuration with command-line overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

COMMANDS = ("region", "sumrate", "power", "validate", "effcap")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


@dataclass
class RunConfig:
    command: str = "effcap"
    T: float = 2e-3
    B: float = 1e5
    snr: tuple = (1.0, 1.0)
    theta: tuple = (0.01, 0.01)
    fading: str = "rayleigh"
    mean_gain: tuple = (1.0,)
    strategies: tuple = ("optimal", "suboptimal", "fixed-timeshare", "tdma")
    grid_points: int = 161
    theta_min: float = 1e-4
    theta_max: float = 10.0
    theta_points: int = 11
    order: str = "2,1"
    z_max: float = 10.0
    z_points: int = 41
    method: str = "quadrature"
    budget: int = 0
    mc_samples: int = 1_000_000
    seed: int = 0
    frames: int = 10_000_000
    arrival_factors: tuple = (0.85, 0.9, 0.95, 1.0, 1.03)
    user: int = 1
    out: str = field(default=".", metadata={"echo": False})

    @property
    def M(self) -> int:
        return len(self.snr)

    @property
    def models_mean(self) -> tuple:
        if len(self.mean_gain) == 1:
            return self.mean_gain * self.M
        return self.mean_gain

    def echo(self) -> list[str]:
        """Canonical ``key=value`` lines that re-parse to this config."""
        lines = []
        for f in dataclasses.fields(self):
            if f.metadata.get("echo", True) is False:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return lines


_LIST_FLOAT = {"snr", "theta", "mean_gain", "arrival_factors"}
_INT = {"grid_points", "theta_points", "z_points", "budget", "mc_samples", "seed", "frames", "user"}
_FLOAT = {"T", "B", "theta_min", "theta_max", "z_max"}
_STR = {"command", "fading", "order", "method", "out"}


def parse_pairs(lines) -> dict[str, str]:
    pairs = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value, got {raw.strip()!r}")
        k, v = line.split("=", 1)
        pairs[k.strip()] = v.strip()
    return pairs


def build(pairs: dict[str, str], command: str | None = None) -> RunConfig:
    """Validate raw pairs into a :class:`RunConfig` (dB converted once here)."""
    cfg = RunConfig()
    kw = {}
    pairs = dict(pairs)
    if "snr_db" in pairs:
        if "snr" in pairs:
            raise ConfigError("snr: give either snr or snr_db, not both")
        try:
            kw["snr"] = tuple(10.0 ** (x / 10.0) for x in _floats(pairs.pop("snr_db")))
        except ValueError as e:
            raise ConfigError(f"snr_db: {e}") from None
    for k, v in pairs.items():
        try:
            if k in _LIST_FLOAT:
                kw[k] = _floats(v)
            elif k == "strategies":
                kw[k] = tuple(s for s in v.replace(",", " ").split())
            elif k in _INT:
                kw[k] = int(float(v)) if "e" in v.lower() else int(v)
            elif k in _FLOAT:
                kw[k] = float(v)
            elif k in _STR:
                kw[k] = v
            else:
                raise ConfigError(f"{k}: unknown configuration key")
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"{k}: cannot parse {v!r} ({e})") from None
    if command is not None:
        kw["command"] = command
    cfg = dataclasses.replace(cfg, **kw)
    if "theta" in kw and len(cfg.theta) == 1:
        cfg.theta = cfg.theta * cfg.M
    elif "theta" not in kw and len(cfg.theta) != cfg.M:
        cfg.theta = (cfg.theta[0],) * cfg.M
    if "order" not in kw and cfg.M != 2:
        cfg.order = ",".join(str(j) for j in range(cfg.M, 0, -1))
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    from .region import STRATEGIES

    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key}: {msg}")

    need(cfg.command in COMMANDS, "command", f"must be one of {', '.join(COMMANDS)}")
    need(cfg.T > 0 and math.isfinite(cfg.T), "T", "must be positive")
    need(cfg.B > 0 and math.isfinite(cfg.B), "B", "must be positive")
    need(len(cfg.snr) >= 1 and all(s > 0 and math.isfinite(s) for s in cfg.snr), "snr",
         "must be a list of positive values")
    need(len(cfg.theta) == cfg.M, "theta", f"needs 1 or {cfg.M} values")
    need(all(t > 0 for t in cfg.theta), "theta", "must be positive")
    need(cfg.fading == "rayleigh", "fading", "only 'rayleigh' is available from config files")
    need(len(cfg.mean_gain) in (1, cfg.M) and all(m > 0 for m in cfg.mean_gain), "mean_gain",
         f"needs 1 or {cfg.M} positive values")
    need(all(s in STRATEGIES for s in cfg.strategies), "strategies",
         f"each must be one of {', '.join(STRATEGIES)}")
    need(cfg.grid_points >= 3, "grid_points", "must be at least 3")
    need(0 < cfg.theta_min < cfg.theta_max, "theta_min", "need 0 < theta_min < theta_max")
    need(cfg.theta_points >= 2, "theta_points", "must be at least 2")
    need(cfg.method in ("quadrature", "monte-carlo"), "method", "quadrature or monte-carlo")
    need(cfg.budget >= 0, "budget", "must be nonnegative (0 = default)")
    need(cfg.mc_samples >= 2, "mc_samples", "must be at least 2")
    need(cfg.frames >= 100_000, "frames", "must be at least 100000")
    need(len(cfg.arrival_factors) >= 1 and all(a >= 0 for a in cfg.arrival_factors),
         "arrival_factors", "must be nonnegative")
    need(1 <= cfg.user <= cfg.M, "user", f"must be between 1 and {cfg.M}")
    need(cfg.z_max > 0 and cfg.z_points >= 2, "z_max", "policy grid needs z_max > 0, z_points >= 2")
    try:
        from .rates import DecodingOrder
        order = DecodingOrder.from_one_based(cfg.order)
    except ValueError as e:
        raise ConfigError(f"order: {e}") from None
    need(order.M == cfg.M, "order", f"must list all {cfg.M} users")


def load(path: str | None, overrides=(), command: str | None = None) -> RunConfig:
    lines = []
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as e:
            raise ConfigError(f"config: cannot read {path} ({e.strerror})") from None
    pairs = parse_pairs(lines)
    pairs.update(parse_pairs(overrides))
    return build(pairs, command)


def from_metadata(text: str) -> RunConfig:
    """Rebuild the config echoed in an output file's ``# config:`` lines."""
    pairs = {}
    for line in text.splitlines():
        if line.startswith("# config: "):
            k, v = line[len("# config: "):].split("=", 1)
            pairs[k] = v
    return build(pairs)
