"""Command-line entry point: reproducible experiments from a scenario file.

Subcommands::

    manyq simulate    --config scenario.yaml   # event-driven run + audit
    manyq fluid       --config scenario.yaml   # deterministic fluid solve
    manyq invariant   --config scenario.yaml   # invariant-state description
    manyq stationary  --config scenario.yaml   # long-run estimates
    manyq convergence --config scenario.yaml   # scaled estimates along N
    manyq interchange [--config scenario.yaml] # order-of-limits demo
    manyq validate                             # full acceptance suite

Outputs are CSV (time series, tables) and JSON (summaries); every artifact
embeds the sha256 of the config text and the root seed, and reruns with
identical inputs are byte-identical.  The output directory is --out if
given, else $MANYQ_OUT, else ./manyq-out.  Exit codes: 0 ok, 1 validation
failure, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .distributions import Exponential
from .engine import init_state, run
from .fluid import solve_fluid
from .harness import convergence_study, ensemble_estimate, interchange_demo
from .invariant import invariant_manifold
from .rng import replication_streams

__all__ = ["main"]


class ValidationFailure(Exception):
    pass


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _write_json(path, payload, cfg_hash, seed):
    payload = dict(_to_jsonable(payload))
    payload["config_sha256"] = cfg_hash
    payload["seed"] = seed
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows, cfg_hash, seed):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_sha256={cfg_hash} seed={seed}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _need(cfg: ScenarioConfig, attr, what):
    v = getattr(cfg, attr)
    if v is None:
        raise ConfigError(f"this subcommand needs '{what}' in the config")
    return v


def _single_n(cfg):
    n = _need(cfg, "n_servers", "n_servers")
    if isinstance(n, list):
        raise ConfigError("this subcommand needs a single n_servers value, not a list")
    return n


def _arrival_for(cfg, n_servers):
    if cfg.arrival is not None:
        return cfg.arrival
    if cfg.lam_bar is not None:
        return Exponential(float(round(cfg.lam_bar * n_servers)))
    raise ConfigError("this subcommand needs an 'arrival' section")


def _patience_for(cfg):
    if cfg.no_abandonment:
        return None
    return cfg.patience  # may be None, which some subcommands reject themselves


def _cmd_simulate(cfg: ScenarioConfig, out, quiet, threads):
    n = _single_n(cfg)
    arrival = _arrival_for(cfg, n)
    service = _need(cfg, "service", "service")
    st = init_state(
        n, arrival, service, _patience_for(cfg),
        initial=cfg.initial,
        streams=replication_streams(cfg.seed, 0),
        stationary_start=cfg.stationary_start,
    )
    traj = run(
        st, cfg.horizon,
        audit_every_event=cfg.audit,
        log_events=cfg.log_events,
        max_events=cfg.max_events,
    )
    rows = [
        (r.time, r.kind, r.X, r.nu_mass, r.eta_mass, r.Q, r.R, r.S, r.D, r.K, r.chi)
        for r in traj.log
    ]
    _write_csv(
        os.path.join(out, "trajectory.csv"),
        ["time", "event_kind", "X", "nu_mass", "eta_mass", "Q", "R", "S", "D", "K", "chi"],
        rows, cfg.sha256, cfg.seed,
    )
    summary = {
        "n_servers": n,
        "horizon": cfg.horizon,
        "events": traj.events,
        "audit_enabled": cfg.audit,
        "audit_failures": traj.audit_failures,
        "counters": traj.counters(),
    }
    if traj.first_audit_failure is not None:
        summary["first_audit_failure"] = traj.first_audit_failure
    _write_json(os.path.join(out, "summary.json"), summary, cfg.sha256, cfg.seed)
    if not quiet:
        print(f"simulate: {traj.events} events, audit failures: {traj.audit_failures}")
    if cfg.audit and traj.audit_failures:
        raise ValidationFailure(f"{traj.audit_failures} audit violations")


def _cmd_fluid(cfg: ScenarioConfig, out, quiet, threads):
    inp = cfg.fluid_input()
    horizon = float(cfg.fluid.get("horizon", cfg.horizon))
    dt = float(cfg.fluid.get("dt", cfg.dt))
    sol = solve_fluid(inp, horizon, dt)
    rows = zip(sol.t, sol.X, sol.Q, sol.B, sol.K, sol.R, sol.eta_mass, sol.hs_nu)
    _write_csv(
        os.path.join(out, "fluid.csv"),
        ["t", "X", "Q", "B", "K", "R", "eta_mass", "hs_nu"],
        rows, cfg.sha256, cfg.seed,
    )
    summary = {
        "horizon": horizon,
        "dt": dt,
        "final": sol.at(horizon),
        "mass_balance_residual": sol.mass_balance_residual(),
    }
    _write_json(os.path.join(out, "summary.json"), summary, cfg.sha256, cfg.seed)
    if not quiet:
        print(f"fluid: X({horizon:g}) = {sol.X[-1]:.6f}, Q({horizon:g}) = {sol.Q[-1]:.6f}")


def _cmd_invariant(cfg: ScenarioConfig, out, quiet, threads):
    if cfg.fluid is not None and "lam" in cfg.fluid:
        lam = float(cfg.fluid["lam"])
    elif cfg.lam_bar is not None:
        lam = cfg.lam_bar
    else:
        raise ConfigError("invariant needs 'fluid.lam' or 'arrival.rate_scaling.lam_bar'")
    service = _need(cfg, "service", "service")
    inv = invariant_manifold(lam, service, _patience_for(cfg))
    _write_json(os.path.join(out, "invariant.json"), inv, cfg.sha256, cfg.seed)
    if not quiet:
        print(f"invariant: regime={inv['regime']}, B = [{inv['b_l']}, {inv['b_r']}]")


def _cmd_stationary(cfg: ScenarioConfig, out, quiet, threads):
    n = _single_n(cfg)
    arrival = _arrival_for(cfg, n)
    service = _need(cfg, "service", "service")
    res = ensemble_estimate(
        cfg.replications,
        threads=threads,
        n_servers=n,
        arrival=arrival,
        service=service,
        patience=_patience_for(cfg),
        horizon=cfg.horizon,
        warmup=cfg.warmup_or_default,
        seed=cfg.seed,
        initial=cfg.initial,
        stationary_start=cfg.stationary_start,
    )
    summary = {
        "n_servers": n,
        "horizon": cfg.horizon,
        "warmup": cfg.warmup_or_default,
        "replications": cfg.replications,
        "mean": res["mean"],
        "se": res["se"],
        "scaled_mean": {k: v / n for k, v in res["mean"].items()},
    }
    _write_json(os.path.join(out, "stationary.json"), summary, cfg.sha256, cfg.seed)
    rows = [(k, res["mean"][k], res["se"][k]) for k in sorted(res["mean"])]
    _write_csv(
        os.path.join(out, "stationary.csv"), ["quantity", "mean", "se"], rows, cfg.sha256, cfg.seed
    )
    if not quiet:
        print(f"stationary: X mean = {res['mean']['X']:.4f} over {cfg.replications} replications")


def _cmd_convergence(cfg: ScenarioConfig, out, quiet, threads):
    conv = cfg.convergence or {}
    lam_bar = conv.get("lam_bar", cfg.lam_bar)
    if lam_bar is None:
        raise ConfigError("convergence needs 'convergence.lam_bar' or 'arrival.rate_scaling.lam_bar'")
    ns = conv.get("n_servers", cfg.n_servers if isinstance(cfg.n_servers, list) else None)
    if not ns:
        raise ConfigError("convergence needs a list of n_servers")
    service = _need(cfg, "service", "service")
    patience = _patience_for(cfg)
    res = convergence_study(
        float(lam_bar), service, patience,
        n_servers_list=ns,
        horizon=conv.get("horizon"),
        warmup=conv.get("warmup"),
        seed=cfg.seed,
    )
    _write_json(os.path.join(out, "convergence.json"), res, cfg.sha256, cfg.seed)
    target = res["invariant"]["x_star"]
    rows = [
        (r["N"], r["x_scaled"], r["x_halfwidth"], target, r["x_star_gap"]) for r in res["rows"]
    ]
    _write_csv(
        os.path.join(out, "convergence.csv"),
        ["N", "estimate", "ci", "target", "distance"],
        rows, cfg.sha256, cfg.seed,
    )
    if not quiet:
        for r in res["rows"]:
            print(f"convergence: N={r['N']}: scaled X = {r['x_scaled']:.4f} (target {target})")


def _cmd_interchange(cfg: ScenarioConfig, out, quiet, threads):
    sec = (cfg.interchange if cfg is not None else None) or {}
    res = interchange_demo(
        n_servers_list=tuple(sec.get("n_servers", (10, 100, 1000))),
        fluid_horizon=float(sec.get("horizon", 20.0)),
        dt=float(sec.get("dt", 1e-3)),
        patience_gap=float(sec.get("patience_gap", 3.0)),
    )
    cfg_hash = cfg.sha256 if cfg is not None else "none"
    seed = cfg.seed if cfg is not None else 0
    _write_json(os.path.join(out, "interchange.json"), res, cfg_hash, seed)
    rows = [
        (r["N"], r["tail_exact"], r["tail_bound"], r["x_scaled_mean"]) for r in res["rows"]
    ]
    _write_csv(
        os.path.join(out, "interchange.csv"),
        ["N", "tail_exact", "tail_bound", "x_scaled_mean"],
        rows, cfg_hash, seed,
    )
    if not quiet:
        print(
            f"interchange: stationary scaled limit ~ 1, fluid stays at "
            f"{res['fluid']['X_end']:.4f}; gap {res['limit_gap']:.3f}"
        )


def _cmd_validate(cfg, out, quiet, threads):
    from . import validation

    results = validation.run_all()
    payload = {"results": results, "all_passed": all(r["passed"] for r in results)}
    cfg_hash = cfg.sha256 if cfg is not None else "none"
    seed = cfg.seed if cfg is not None else 0
    _write_json(os.path.join(out, "validation.json"), payload, cfg_hash, seed)
    for r in results:
        line = f"criterion {r['criterion']} ({r['name']}): {'PASS' if r['passed'] else 'FAIL'}"
        print(line)
    if not payload["all_passed"]:
        raise ValidationFailure("acceptance criteria failed")


_COMMANDS = {
    "simulate": (_cmd_simulate, True),
    "fluid": (_cmd_fluid, True),
    "invariant": (_cmd_invariant, True),
    "stationary": (_cmd_stationary, True),
    "convergence": (_cmd_convergence, True),
    "interchange": (_cmd_interchange, False),
    "validate": (_cmd_validate, False),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="manyq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="scenario YAML file")
        p.add_argument("--seed", type=int, default=None, help="override the config root seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="parallel replications")
        p.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    fn, needs_config = _COMMANDS[args.command]

    try:
        if args.config is not None:
            cfg = load_config(args.config)
        elif needs_config:
            raise ConfigError(f"'{args.command}' requires --config")
        else:
            cfg = parse_config("")
        if args.seed is not None:
            cfg.seed = args.seed
        out = args.out or os.environ.get("MANYQ_OUT") or "manyq-out"
        os.makedirs(out, exist_ok=True)
        fn(cfg, out, args.quiet, max(1, args.threads))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ValidationFailure as e:
        print(f"validation failure: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        # invalid parameter combinations surface as ValueError from the library
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
