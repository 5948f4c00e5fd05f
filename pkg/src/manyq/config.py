"""Scenario configuration: strict YAML schema with documented defaults.

A scenario file declares the system primitives (distributions by kind and
parameters), initial condition, run controls, and optionally a fluid-model
section.  Parsing is strict: unknown keys anywhere are an error, and
exactly one of ``patience`` / ``no_abandonment: true`` may be present.
Every emitted artifact later embeds the sha256 of the config text, so the
raw text is kept on the parsed object.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import yaml

from .distributions import Distribution, Exponential, make_distribution
from .fluid import AtomicInitial, EquilibriumInitial, FluidInput, InitialMeasure, ZeroMeasure, from_grid

__all__ = ["ScenarioConfig", "ConfigError", "parse_config", "load_config"]

_TOP_KEYS = {
    "n_servers",
    "arrival",
    "service",
    "patience",
    "no_abandonment",
    "initial",
    "run",
    "fluid",
    "convergence",
    "interchange",
}
_RUN_KEYS = {"horizon", "warmup", "replications", "seed", "dt", "audit", "max_events", "log_events"}
_FLUID_KEYS = {"lam", "X0", "nu0", "eta0", "horizon", "dt"}
_CONV_KEYS = {"lam_bar", "n_servers", "horizon", "warmup"}
_INTER_KEYS = {"n_servers", "horizon", "dt", "patience_gap"}


class ConfigError(ValueError):
    """Invalid or malformed scenario configuration."""


@dataclass
class ScenarioConfig:
    text: str = field(repr=False)
    n_servers: object = None  # int or list of ints
    arrival: Distribution | None = None
    lam_bar: float | None = None
    service: Distribution | None = None
    patience: Distribution | None = None
    no_abandonment: bool = False
    initial: object = "empty"
    stationary_start: bool = False
    horizon: float = 100.0
    warmup: float | None = None
    replications: int = 1
    seed: int = 0
    dt: float = 1e-3
    audit: bool = True
    max_events: int = 200_000_000
    log_events: bool = True
    fluid: dict | None = None
    convergence: dict | None = None
    interchange: dict | None = None

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    @property
    def warmup_or_default(self) -> float:
        return 0.2 * self.horizon if self.warmup is None else self.warmup

    def fluid_input(self) -> FluidInput:
        if self.fluid is None:
            raise ConfigError("scenario has no 'fluid' section")
        if self.service is None:
            raise ConfigError("fluid model needs a 'service' distribution")
        f = self.fluid
        nu0 = _initial_measure(f.get("nu0", "zero"), self.service, "fluid.nu0")
        eta0 = _initial_measure(f.get("eta0", "zero"), self.patience, "fluid.eta0")
        return FluidInput(
            X0=float(f.get("X0", 0.0)),
            nu0=nu0,
            eta0=eta0,
            lam=float(f["lam"]),
            service=self.service,
            patience=self.patience,
        )


def _require_map(node, where):
    if not isinstance(node, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(node).__name__}")
    return node


def _check_keys(node, allowed, where):
    extra = set(node) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def _initial_measure(spec, law, where) -> InitialMeasure:
    """Fluid initial-profile spec: 'zero' | {equilibrium: scale} | {atoms: ...} | {grid: ...}."""
    if spec == "zero" or spec is None:
        return ZeroMeasure()
    spec = _require_map(spec, where)
    _check_keys(spec, {"equilibrium", "atoms", "grid"}, where)
    if len(spec) != 1:
        raise ConfigError(f"{where} must declare exactly one profile form")
    if "equilibrium" in spec:
        if law is None:
            raise ConfigError(f"{where}: equilibrium profile needs the matching distribution")
        return EquilibriumInitial(law, float(spec["equilibrium"]))
    if "atoms" in spec:
        pairs = spec["atoms"]
        locs = [float(p[0]) for p in pairs]
        w = [float(p[1]) for p in pairs]
        return AtomicInitial(locs, w)
    g = _require_map(spec["grid"], f"{where}.grid")
    _check_keys(g, {"x", "density"}, f"{where}.grid")
    return from_grid(np.asarray(g["x"], dtype=float), np.asarray(g["density"], dtype=float))


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a YAML scenario; raises ConfigError on any problem."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}") from e
    if data is None:
        data = {}
    data = _require_map(data, "scenario")
    _check_keys(data, _TOP_KEYS, "scenario")

    cfg = ScenarioConfig(text=text)

    if "patience" in data and data.get("no_abandonment"):
        raise ConfigError("declare either 'patience' or 'no_abandonment: true', not both")
    cfg.no_abandonment = bool(data.get("no_abandonment", False))

    for name in ("service", "patience"):
        if name in data:
            try:
                setattr(cfg, name, make_distribution(data[name]))
            except ValueError as e:
                raise ConfigError(f"bad '{name}' distribution: {e}") from e

    if "arrival" in data:
        a = _require_map(data["arrival"], "arrival")
        _check_keys(a, {"distribution", "rate_scaling"}, "arrival")
        if "distribution" in a and "rate_scaling" in a:
            raise ConfigError("arrival: give 'distribution' or 'rate_scaling', not both")
        if "distribution" in a:
            try:
                cfg.arrival = make_distribution(a["distribution"])
            except ValueError as e:
                raise ConfigError(f"bad arrival distribution: {e}") from e
        elif "rate_scaling" in a:
            rs = _require_map(a["rate_scaling"], "arrival.rate_scaling")
            _check_keys(rs, {"lam_bar"}, "arrival.rate_scaling")
            cfg.lam_bar = float(rs["lam_bar"])
            if cfg.lam_bar <= 0:
                raise ConfigError("arrival.rate_scaling.lam_bar must be positive")
        else:
            raise ConfigError("arrival needs 'distribution' or 'rate_scaling'")

    if "n_servers" in data:
        n = data["n_servers"]
        if isinstance(n, list):
            if not n or any((not isinstance(k, int)) or k < 1 for k in n):
                raise ConfigError("n_servers list must hold positive integers")
            cfg.n_servers = list(n)
        elif isinstance(n, int) and n >= 1:
            cfg.n_servers = n
        else:
            raise ConfigError(f"n_servers must be a positive integer or list, got {n!r}")

    if "initial" in data:
        init = data["initial"]
        if init == "empty":
            cfg.initial = "empty"
        elif init == "stationary":
            cfg.initial = "empty"
            cfg.stationary_start = True
        elif isinstance(init, dict):
            _check_keys(init, {"in_service_ages", "queue_waits"}, "initial")
            cfg.initial = init
        else:
            raise ConfigError(f"initial must be 'empty', 'stationary', or an ages mapping, got {init!r}")

    if "run" in data:
        r = _require_map(data["run"], "run")
        _check_keys(r, _RUN_KEYS, "run")
        if "horizon" in r:
            cfg.horizon = float(r["horizon"])
            if cfg.horizon <= 0:
                raise ConfigError("run.horizon must be positive")
        if "warmup" in r:
            cfg.warmup = float(r["warmup"])
            if not 0 <= cfg.warmup < cfg.horizon:
                raise ConfigError("run.warmup must lie in [0, horizon)")
        if "replications" in r:
            cfg.replications = int(r["replications"])
            if cfg.replications < 1:
                raise ConfigError("run.replications must be at least 1")
        if "seed" in r:
            cfg.seed = int(r["seed"])
        if "dt" in r:
            cfg.dt = float(r["dt"])
            if cfg.dt <= 0:
                raise ConfigError("run.dt must be positive")
        if "audit" in r:
            cfg.audit = bool(r["audit"])
        if "log_events" in r:
            cfg.log_events = bool(r["log_events"])
        if "max_events" in r:
            cfg.max_events = int(r["max_events"])
            if cfg.max_events < 1:
                raise ConfigError("run.max_events must be positive")

    if "fluid" in data:
        f = _require_map(data["fluid"], "fluid")
        _check_keys(f, _FLUID_KEYS, "fluid")
        if "lam" not in f:
            raise ConfigError("fluid section needs 'lam'")
        cfg.fluid = f
    if "convergence" in data:
        c = _require_map(data["convergence"], "convergence")
        _check_keys(c, _CONV_KEYS, "convergence")
        cfg.convergence = c
    if "interchange" in data:
        i = _require_map(data["interchange"], "interchange")
        _check_keys(i, _INTER_KEYS, "interchange")
        cfg.interchange = i
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text)
