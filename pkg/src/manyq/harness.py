"""Scaling experiments: many-server limits and the order-of-limits gap.

``convergence_study`` simulates a family of systems indexed by server count
N with arrival rate round(lam_bar * N), and compares the per-server
stationary estimates against the invariant state of the fluid model.
``interchange_demo`` runs the configuration where that comparison breaks:
taking N to infinity first (stationary laws concentrate near one customer
per server) versus letting the fluid run from a congested start (which
never drains), so the two orders of limits disagree.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .distributions import Distribution, Exponential, Shifted
from .fluid import EquilibriumInitial, FluidInput, solve_fluid
from .invariant import invariant_manifold
from .stationary import StationaryEstimate, estimate_stationary, littles_law_check, mmn_tail, mmn_stationary_pmf

__all__ = ["convergence_study", "interchange_demo", "ensemble_estimate"]


def _one_replication(kwargs):
    rep = kwargs.pop("replication")
    est = estimate_stationary(replication=rep, **kwargs)
    return rep, est


def ensemble_estimate(n_reps: int, threads: int = 1, **kwargs) -> dict:
    """Average ``estimate_stationary`` over replications 0..n_reps-1.

    Replications use disjoint child streams of the same root seed, so the
    result is identical whether they run sequentially or on a process pool.
    """
    if n_reps < 1:
        raise ValueError("need at least one replication")
    jobs = [dict(kwargs, replication=r) for r in range(n_reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = sorted(pool.map(_one_replication, jobs), key=lambda p: p[0])
    else:
        results = [_one_replication(j) for j in jobs]
    ests = [e for _, e in results]
    names = ests[0].mean.keys()
    mean = {n: float(np.mean([e.mean[n] for e in ests])) for n in names}
    se = {
        n: float(np.std([e.mean[n] for e in ests], ddof=1) / np.sqrt(n_reps)) if n_reps > 1 else float("nan")
        for n in names
    }
    return {"n_reps": n_reps, "mean": mean, "se": se, "replications": ests}


def convergence_study(
    lam_bar: float,
    service: Distribution,
    patience,
    n_servers_list=(10, 50, 200),
    horizon: float | None = None,
    warmup: float | None = None,
    seed: int = 0,
    make_arrival=lambda rate: Exponential(rate),
) -> dict:
    """Per-server stationary estimates along N, against the fluid invariant.

    The N-th system gets arrival rate round(lam_bar * N).  Each row reports
    the scaled mean of X and of the potential queue mass, the gap to the
    invariant total mass x_star, and the infinite-server check of the
    potential queue mass (rate times mean patience).
    """
    inv = invariant_manifold(lam_bar, service, patience)
    if not inv["unique"]:
        raise ValueError(
            "the invariant state is not unique for these primitives "
            f"(admissible total mass spans [{inv['b_l']}, {inv['b_r']}]); there is no "
            "single target to converge to — see interchange_demo for what happens then"
        )
    rows = []
    for N in n_servers_list:
        lam_N = round(lam_bar * N)
        # smaller systems fluctuate more per server, so give them more time
        h = horizon if horizon is not None else 400.0 + 40_000.0 / N
        w = warmup if warmup is not None else 0.2 * h
        est = estimate_stationary(
            N,
            make_arrival(lam_N),
            service,
            patience,
            horizon=h,
            warmup=w,
            seed=seed,
        )
        little = littles_law_check(
            est.mean["eta_mass"], lam_N, patience.mean if patience is not None else float("inf")
        )
        rows.append(
            {
                "N": N,
                "lam": lam_N,
                "x_scaled": est.scaled("X"),
                "x_halfwidth": est.halfwidth["X"] / N,
                "eta_scaled": est.scaled("eta_mass"),
                "x_star_gap": abs(est.scaled("X") - inv["x_star"]) if inv["x_star"] is not None else None,
                "little_deviation_scaled": little["deviation"] / N,
                "events": est.events,
            }
        )
    return {"invariant": inv, "rows": rows}


def interchange_demo(
    n_servers_list=(10, 100, 1000),
    fluid_horizon: float = 20.0,
    dt: float = 1e-3,
    patience_gap: float = 3.0,
) -> dict:
    """The two orders of limits disagree for almost-critical load.

    The N-th system has Markovian rate-(N-1) arrivals, unit-rate service,
    and patience supported above ``patience_gap``.  Stationary waits stay
    far below the gap, so reneging never triggers and each system is an
    exact birth-death queue whose tail P(X >= 3N/2) stays below the
    geometric bound ((N-1)/N)^(N/2), itself bounded away from 1 (it tends
    to exp(-1/2)).  The fluid model started with two customers per server
    never drains: the head-of-line wait stays below the gap, the reneging
    rate is identically zero, and X stays at 2 — all mass above the 3/2
    threshold.  Any limit of the stationary laws therefore disagrees with
    the long-run fluid state: the two orders of limits do not commute.
    """
    service = Exponential(1.0)
    patience = Shifted(patience_gap, Exponential(1.0))
    rows = []
    for N in n_servers_list:
        lam = N - 1
        m = N + N // 2
        tail = mmn_tail(N, lam, m)
        bound = ((N - 1) / N) ** (N / 2)
        # E[X] = lam + E[Q] with the geometric overflow queue
        rho = lam / N
        pN = float(mmn_stationary_pmf(N, lam, N)[N])
        mean_x = lam + pN * rho / (1.0 - rho) ** 2
        rows.append(
            {
                "N": N,
                "lam": lam,
                "tail_threshold": m,
                "tail_exact": tail,
                "tail_bound": bound,
                "x_scaled_mean": mean_x / N,
            }
        )

    inp = FluidInput(
        X0=2.0,
        nu0=EquilibriumInitial(service, 1.0),
        eta0=EquilibriumInitial(patience, 1.0),
        lam=1.0,
        service=service,
        patience=patience,
    )
    sol = solve_fluid(inp, fluid_horizon, dt)
    fluid = {
        "X_end": float(sol.X[-1]),
        "max_dev_from_2": float(np.max(np.abs(sol.X - 2.0))),
        "total_reneged": float(sol.R[-1]),
    }
    # the fluid trajectory sits at 2, so it puts all its mass above the 3/2
    # threshold; the stationary laws keep at most tail_exact there, so any
    # subsequential stationary limit disagrees with the fluid rest point
    return {
        "rows": rows,
        "fluid": fluid,
        "fluid_mass_above_threshold": 1.0,
        "stationary_mass_above_threshold": rows[-1]["tail_exact"],
        "limit_gap": 1.0 - rows[-1]["tail_exact"],
        "bound_limit": float(np.exp(-0.5)),
    }
