"""End-to-end acceptance checks, shared by the test suite and the CLI.

Each ``check_*`` function exercises one pinned correctness claim and
returns {criterion, name, passed, details}; ``run_all`` runs the lot.  The
claims pin exact bookkeeping identities, closed-form references for the
fluid and invariant computations, the Markovian stationary law, Monte Carlo
agreement with the transport formulas, and reproducibility of the CLI.
"""

from __future__ import annotations

import filecmp
import os
import tempfile

import numpy as np

from .distributions import Erlang, Exponential, PiecewiseLinearCdf, Shifted, Uniform
from .engine import init_state, run
from .fluid import (
    AtomicInitial,
    EquilibriumInitial,
    FluidInput,
    ZeroMeasure,
    from_grid,
    renewal_density,
    solve_entry_renewal,
    solve_fluid,
)
from .harness import convergence_study, interchange_demo
from .invariant import invariant_manifold, verify_fixed_point
from .measure import PointMeasure
from .rng import replication_streams
from .stationary import estimate_stationary, mmn_stationary_pmf, representation_check

__all__ = ["run_all"] + [f"check_{i}" for i in range(1, 10)]


def _result(criterion, name, passed, **details):
    return {"criterion": criterion, "name": name, "passed": bool(passed), "details": details}


# -- criterion 1: exact bookkeeping identities ------------------------------

_AUDIT_MIXES = [
    # (label, n_servers, arrival, service, patience, initial, horizon)
    ("mmm", 3, Exponential(4.0), Exponential(1.0), Exponential(1.0), "empty", 5500.0),
    ("erl_unif", 2, Erlang(2, 4.0), Erlang(2, 2.0), Uniform(0.0, 2.0), "empty", 8500.0),
    ("no_abandon", 4, Exponential(5.0), Uniform(0.5, 1.5), None, "empty", 5500.0),
    (
        "shifted_busy",
        2,
        Uniform(0.0, 0.5),
        Exponential(1.0),
        Shifted(0.5, Exponential(2.0)),
        {"in_service_ages": [0.3, 0.7], "queue_waits": [0.1, 0.2]},
        5500.0,
    ),
]


def check_1(n_seeds: int = 5):
    """Zero audit violations over >= 1e6 events, >= 5 seeds, >= 4 mixes."""
    total_events = 0
    violations = 0
    first = None
    for label, n, arr, srv, pat, init, horizon in _AUDIT_MIXES:
        for seed in range(n_seeds):
            st = init_state(
                n, arr, srv, pat, initial=init, streams=replication_streams(seed, 0)
            )
            traj = run(st, horizon, audit_every_event=True)
            total_events += traj.events
            violations += traj.audit_failures
            if traj.audit_failures and first is None:
                first = {"mix": label, "seed": seed, **traj.first_audit_failure}
    passed = violations == 0 and total_events >= 1_000_000
    return _result(
        1, "exact-identity audit", passed,
        events=total_events, violations=violations, first_failure=first,
        seeds=n_seeds, mixes=len(_AUDIT_MIXES),
    )


# -- criterion 2: Erlang-service fluid example ------------------------------

def _erlang_fluid_input():
    return FluidInput(
        X0=1.0,
        nu0=AtomicInitial([0.0], [1.0]),
        eta0=AtomicInitial([0.0], [1.0]),
        lam=1.0,
        service=Erlang(2, 2.0),
        patience=None,
    )


def check_2(dt: float = 1e-3, horizon: float = 10.0):
    """Erlang(2,2) service, unit inflow, everything starting fresh.

    The instantaneous departure rate should follow 1 - exp(-4t), and the
    trajectory should approach X = 5/4, Q = 1/4.  The variant replaces the
    fresh start by the age density (1 + 2x) / (a + a^2) on [0, a], a = 1/2,
    whose queue settles at (1 - a) / (4 (1 + a)) = 1/12.
    """
    sol = solve_fluid(_erlang_fluid_input(), horizon, dt)
    ref = 1.0 - np.exp(-4.0 * sol.t)
    hs_err = float(np.max(np.abs(sol.hs_nu - ref)))
    q_err = abs(sol.Q[-1] - 0.25)
    x_err = abs(sol.X[-1] - 1.25)

    a = 0.5
    x = np.linspace(0.0, a, 4001)
    dens = (1.0 + 2.0 * x) / (a + a * a)
    inp2 = FluidInput(
        X0=1.0, nu0=from_grid(x, dens), eta0=ZeroMeasure(), lam=1.0,
        service=Erlang(2, 2.0), patience=None,
    )
    sol2 = solve_fluid(inp2, horizon, dt)
    q2_err = abs(sol2.Q[-1] - 1.0 / 12.0)

    passed = hs_err <= 5e-3 and q_err <= 1e-2 and x_err <= 1e-2 and q2_err <= 1e-2
    return _result(
        2, "erlang fluid example", passed,
        hs_err=hs_err, q_err=float(q_err), x_err=float(x_err), variant_q_err=float(q2_err),
    )


# -- criterion 3: renewal-density cross-checks ------------------------------

def check_3(dt: float = 1e-3, horizon: float = 10.0):
    """Erlang(2,2) renewal density vs 1 - exp(-4t); entry process two ways."""
    n = int(round(horizon / dt))
    t = np.arange(n + 1) * dt
    u = renewal_density(Erlang(2, 2.0), dt, n)
    u_err = float(np.max(np.abs(u - (1.0 - np.exp(-4.0 * t)))))

    sol = solve_fluid(_erlang_fluid_input(), horizon, dt)
    k_renewal = solve_entry_renewal(sol, u=u)
    k_err = float(np.max(np.abs(k_renewal - sol.K)))
    passed = u_err <= 1e-4 and k_err <= 5e-3
    return _result(3, "renewal-density oracle", passed, u_err=u_err, k_err=k_err)


# -- criterion 4: invariant manifold ----------------------------------------

def check_4(dt: float = 1e-3):
    """Closed-form fixed points, the interval case, and solver stasis."""
    details = {}
    ok = True
    for lam, gamma in ((2.0, 1.0), (1.5, 0.5), (1.0, 1.0)):
        inv = invariant_manifold(lam, Exponential(1.0), Exponential(gamma))
        expected = 1.0 + (lam - 1.0) / gamma
        err = abs(inv["x_star"] - expected)
        details[f"x_star_err_lam{lam}_gamma{gamma}"] = err
        ok &= err <= 1e-8 and inv["unique"]

    flat = PiecewiseLinearCdf(((0.0, 0.0), (1.0, 0.5), (2.0, 0.5), (3.0, 1.0)))
    inv2 = invariant_manifold(2.0, Exponential(1.0), flat)
    bl_err = abs(inv2["b_l"] - 2.5)
    br_err = abs(inv2["b_r"] - 3.5)
    details["flat_b_l_err"] = bl_err
    details["flat_b_r_err"] = br_err
    ok &= bl_err <= 1e-6 and br_err <= 1e-6 and not inv2["unique"]

    for lam, gamma, x_star in ((0.5, 1.0, 0.5), (2.0, 1.0, 2.0)):
        rep = verify_fixed_point(lam, Exponential(1.0), Exponential(gamma), x_star, horizon=20.0, dt=dt)
        worst = max(rep["x_defect"], rep["nu_defect"], rep["eta_defect"])
        details[f"fixed_point_defect_lam{lam}"] = worst
        ok &= worst <= 10.0 * dt
    return _result(4, "invariant manifold", ok, **details)


# -- criterion 5: Markovian N-server stationary law -------------------------

def check_5(target_events: int = 10_000_000):
    """Detailed balance, the N=2 closed form, and long-run agreement."""
    n, lam = 2, 1.0
    kmax = 3 * n
    pmf = mmn_stationary_pmf(n, lam, kmax)
    db_err = 0.0
    for k in range(kmax):
        db_err = max(db_err, abs(lam * pmf[k] - min(k + 1, n) * pmf[k + 1]))
    p0_err = abs(pmf[0] - 1.0 / 3.0)

    # arrivals + departures each run at rate about 1, so ~2 events per unit time
    horizon = target_events / 2.0
    est = estimate_stationary(
        n, Exponential(lam), Exponential(1.0), None,
        horizon=horizon, seed=0, track_histogram=True,
    )
    kcut = 40
    emp = est.histogram_pmf(kcut)
    ana = mmn_stationary_pmf(n, lam, kcut)
    tv = 0.5 * (np.sum(np.abs(emp - ana)) + abs((1.0 - emp.sum()) - (1.0 - ana.sum())))
    passed = db_err <= 1e-14 and p0_err <= 1e-12 and tv <= 0.01 and est.events >= target_events * 0.8
    return _result(
        5, "markovian stationary pmf", passed,
        detailed_balance_err=float(db_err), p0_err=float(p0_err),
        tv_distance=float(tv), events=est.events,
    )


# -- criterion 6: transport-formula Monte Carlo check -----------------------

def check_6(n_reps: int = 10_000):
    """z-scores of simulated E<f, eta_t> against the closed-form prediction."""
    out = representation_check(
        5, Exponential(5.0), Exponential(1.0), Exponential(1.0),
        times=(1.0, 2.0, 5.0), c=0.5, n_reps=n_reps, seed=0,
    )
    worst = max(abs(r["z"]) for r in out)
    return _result(
        6, "transport-formula check", worst <= 4.0,
        worst_z=float(worst), cells=[{k: r[k] for k in ("t", "f", "z")} for r in out],
    )


# -- criterion 7: convergence to the invariant state ------------------------

def check_7(seed: int = 0):
    """Overloaded Markovian family: per-server estimates approach x* = 2."""
    res = convergence_study(2.0, Exponential(1.0), Exponential(1.0), (10, 50, 200), seed=seed)
    rows = res["rows"]
    gaps = [r["x_star_gap"] for r in rows]
    hws = [r["x_halfwidth"] for r in rows]
    decreasing = all(
        gaps[i + 1] <= gaps[i] + hws[i] + hws[i + 1] for i in range(len(gaps) - 1)
    )
    final_ok = gaps[-1] <= 0.05
    little_ok = all(r["little_deviation_scaled"] <= 0.02 for r in rows)
    return _result(
        7, "convergence to invariant state",
        decreasing and final_ok and little_ok,
        gaps=gaps, halfwidths=hws,
        little=[r["little_deviation_scaled"] for r in rows],
        decreasing=decreasing,
    )


# -- criterion 8: order-of-limits counterexample ----------------------------

def check_8():
    """Stationary laws concentrate at 1 while the fluid stays at 2."""
    res = interchange_demo((10, 100, 1000))
    tails_ok = all(r["tail_exact"] <= r["tail_bound"] for r in res["rows"])
    fluid_ok = res["fluid"]["max_dev_from_2"] <= 5e-3
    gap_ok = res["limit_gap"] >= 0.4
    return _result(
        8, "order-of-limits counterexample",
        tails_ok and fluid_ok and gap_ok,
        tails=[(r["N"], r["tail_exact"], r["tail_bound"]) for r in res["rows"]],
        fluid_dev=res["fluid"]["max_dev_from_2"], limit_gap=res["limit_gap"],
    )


# -- criterion 9: structural properties -------------------------------------

def _galois_violations(n_measures, seed):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_measures):
        size = rng.integers(0, 12)
        m = PointMeasure(rng.exponential(1.0, size))
        if size:
            q = rng.uniform(0.0, float(size))
            q = max(q, 1e-9)
            if m.cumulative(m.quantile(q)) < q:
                bad += 1
            x = rng.exponential(1.0)
            if m.cumulative(x) > 0 and m.quantile(m.cumulative(x)) > x:
                bad += 1
    return bad


def _refinement_ratio():
    """Empirical order of the fluid solver on two scenarios; want >= 1."""
    ratios = []
    scenarios = [
        (_erlang_fluid_input(), 4.0),
        (
            FluidInput(
                X0=0.0, nu0=ZeroMeasure(), eta0=ZeroMeasure(), lam=2.0,
                service=Exponential(1.0), patience=Exponential(1.0),
            ),
            4.0,
        ),
    ]
    for inp, horizon in scenarios:
        ref = solve_fluid(inp, horizon, 5e-4)
        errs = []
        for dt in (8e-3, 4e-3, 2e-3):
            sol = solve_fluid(inp, horizon, dt)
            xs = np.interp(sol.t, ref.t, ref.X)
            errs.append(float(np.max(np.abs(sol.X - xs))))
        ratios.append(min(errs[0] / errs[1], errs[1] / errs[2]))
    return min(ratios)


_REPRO_CONFIG = """
n_servers: 3
arrival: {distribution: {kind: exponential, rate: 2.5}}
service: {kind: erlang, shape: 2, rate: 2}
patience: {kind: exponential, rate: 1}
run: {horizon: 50, seed: 7}
fluid: {lam: 1.5, X0: 1.5, nu0: {equilibrium: 1.0}, eta0: {equilibrium: 1.5}, horizon: 2.0, dt: 0.001}
"""

_REPRO_CONV_CONFIG = """
service: {kind: exponential, rate: 1}
patience: {kind: exponential, rate: 1}
arrival: {rate_scaling: {lam_bar: 2.0}}
convergence: {n_servers: [3, 5], horizon: 60, warmup: 10}
run: {seed: 7}
interchange: {n_servers: [5, 10], horizon: 2.0, dt: 0.01}
"""


def _reproducibility():
    """Run every CLI subcommand twice and compare artifacts byte-for-byte."""
    from .cli import main as cli_main

    mismatches = []
    with tempfile.TemporaryDirectory() as tmp:
        cfg_a = os.path.join(tmp, "scenario.yaml")
        cfg_b = os.path.join(tmp, "scaling.yaml")
        with open(cfg_a, "w") as fh:
            fh.write(_REPRO_CONFIG)
        with open(cfg_b, "w") as fh:
            fh.write(_REPRO_CONV_CONFIG)
        jobs = [
            ("simulate", cfg_a),
            ("fluid", cfg_a),
            ("invariant", cfg_a),
            ("stationary", cfg_a),
            ("convergence", cfg_b),
            ("interchange", cfg_b),
        ]
        for name, cfg in jobs:
            d1 = os.path.join(tmp, name + "-1")
            d2 = os.path.join(tmp, name + "-2")
            for d in (d1, d2):
                code = cli_main([name, "--config", cfg, "--out", d, "--quiet"])
                if code != 0:
                    mismatches.append(f"{name}: exit code {code}")
                    break
            else:
                files = sorted(os.listdir(d1))
                if files != sorted(os.listdir(d2)):
                    mismatches.append(f"{name}: different artifact sets")
                for f in files:
                    if not filecmp.cmp(os.path.join(d1, f), os.path.join(d2, f), shallow=False):
                        mismatches.append(f"{name}/{f}: bytes differ")
    return mismatches


def check_9(n_measures: int = 10_000, seed: int = 123):
    """Quantile Galois pairs, solver refinement order, CLI reproducibility."""
    bad = _galois_violations(n_measures, seed)
    ratio = _refinement_ratio()
    mismatches = _reproducibility()
    passed = bad == 0 and ratio >= 1.8 and not mismatches
    return _result(
        9, "property suite", passed,
        galois_violations=bad, refinement_ratio=float(ratio), cli_mismatches=mismatches,
    )


def run_all():
    return [globals()[f"check_{i}"]() for i in range(1, 10)]
