"""Invariant states of the fluid model and the candidate-limit set B.

For arrival rate lam (per unit of capacity), the invariant in-service
profile is (lam ^ 1) times the equilibrium measure of the service law and
the invariant potential queue profile is lam times the equilibrium measure
of the patience law.  Subcritically the total mass X is pinned at lam; at
or above criticality X can sit anywhere in

    B(lam) = { x >= 1 : Gr(q(x)) = (lam - 1) / lam },

where q(x) is the generalized inverse of the cumulative of lam * eta_star
at level (x - 1)^+.  B(lam) is a closed interval [b_l, b_r]; the fluid is
at rest anywhere inside it, so the invariant state is unique exactly when
the interval degenerates to a point.
"""

from __future__ import annotations

import numpy as np

from .distributions import Distribution
from .fluid import EquilibriumInitial, FluidInput, solve_fluid
from .measure import SurvivalMeasure

__all__ = ["compute_B_lambda", "invariant_manifold", "verify_fixed_point"]

_UNIQUE_TOL = 1e-9


def compute_B_lambda(lam: float, patience: Distribution, xtol: float = 1e-10):
    """Endpoints [b_l, b_r] of the interval B(lam); requires lam >= 1.

    Monotonicity of x -> Gr(q(x)) is checked on a grid before bisecting for
    the leftmost point at or above the target and the rightmost at or below
    it.
    """
    if lam < 1:
        raise ValueError("B(lam) is defined for lam >= 1")
    target = (lam - 1.0) / lam
    eta = SurvivalMeasure(patience, lam)
    q_total = eta.total_mass

    def phi(x):
        q = min(max(x - 1.0, 0.0), q_total)
        return patience.cdf(eta.quantile(q))

    lo_x, hi_x = 1.0, 1.0 + q_total
    grid = np.linspace(lo_x, hi_x, 1001)
    vals = np.array([phi(x) for x in grid])
    if np.any(np.diff(vals) < -1e-9):
        raise RuntimeError("Gr(q(x)) is not nondecreasing; patience law inconsistent")
    if vals[-1] < target - 1e-12:
        raise RuntimeError("no x with Gr(q(x)) reaching the target level")

    # leftmost x with phi(x) >= target
    if phi(lo_x) >= target:
        b_l = lo_x
    else:
        a, b = lo_x, hi_x
        while b - a > xtol * max(1.0, b):
            m = 0.5 * (a + b)
            if phi(m) >= target:
                b = m
            else:
                a = m
        b_l = b

    # rightmost x with phi(x) <= target
    if phi(hi_x) <= target:
        b_r = hi_x
    else:
        a, b = b_l, hi_x  # phi(b_l) == target by continuity
        while b - a > xtol * max(1.0, b):
            m = 0.5 * (a + b)
            if phi(m) <= target:
                a = m
            else:
                b = m
        b_r = a
    if b_r < b_l:
        b_r = b_l
    return float(b_l), float(b_r)


def invariant_manifold(lam: float, service: Distribution, patience) -> dict:
    """Describe the set of invariant fluid states for the given primitives.

    Returns lambda, regime, the interval [b_l, b_r] of admissible total
    masses, whether the state is unique (and x_star if so), and the
    invariant in-service / potential-queue masses.
    """
    if lam <= 0:
        raise ValueError("arrival rate must be positive")
    nu_mass = min(lam, 1.0) * service.mean
    if patience is None:
        if lam >= 1.0:
            raise ValueError(
                "no invariant state without abandonment at or above critical load: "
                "the queue has no mechanism to shed mass, so X is undetermined "
                "(lam = 1) or grows without bound (lam > 1)"
            )
        return {
            "lambda": lam,
            "regime": "subcritical",
            "b_l": lam,
            "b_r": lam,
            "unique": True,
            "x_star": lam,
            "nu_mass": nu_mass,
            "eta_mass": float("inf"),
        }
    eta_mass = lam * patience.mean
    if lam < 1.0:
        return {
            "lambda": lam,
            "regime": "subcritical",
            "b_l": lam,
            "b_r": lam,
            "unique": True,
            "x_star": lam,
            "nu_mass": nu_mass,
            "eta_mass": eta_mass,
        }
    b_l, b_r = compute_B_lambda(lam, patience)
    unique = (b_r - b_l) <= _UNIQUE_TOL
    return {
        "lambda": lam,
        "regime": "critical" if lam == 1.0 else "supercritical",
        "b_l": b_l,
        "b_r": b_r,
        "unique": unique,
        "x_star": b_l if unique else None,
        "nu_mass": nu_mass,
        "eta_mass": eta_mass,
    }


def verify_fixed_point(
    lam: float,
    service: Distribution,
    patience,
    x_star: float,
    horizon: float = 20.0,
    dt: float = 1e-3,
) -> dict:
    """Run the fluid solver from an invariant state and measure its drift.

    Returns the sup-norm defects of X, the in-service mass, and the
    potential queue mass over [0, horizon]; each should be O(dt) for a true
    fixed point.
    """
    if patience is None and lam >= 1.0:
        raise ValueError("no fixed point to verify without abandonment at lam >= 1")
    nu0 = EquilibriumInitial(service, min(lam, 1.0))
    eta0 = EquilibriumInitial(patience, lam) if patience is not None else None
    if eta0 is None:
        from .fluid import ZeroMeasure

        eta0 = ZeroMeasure()
    inp = FluidInput(X0=x_star, nu0=nu0, eta0=eta0, lam=lam, service=service, patience=patience)
    sol = solve_fluid(inp, horizon, dt)
    eta_defect = (
        float(np.max(np.abs(sol.eta_mass - lam * patience.mean))) if patience is not None else 0.0
    )
    return {
        "x_defect": float(np.max(np.abs(sol.X - x_star))),
        "nu_defect": float(np.max(np.abs(sol.B - nu0.total_mass))),
        "eta_defect": eta_defect,
        "reneging_rate_end": float((sol.R[-1] - sol.R[-2]) / sol.dt) if len(sol.R) > 1 else 0.0,
    }
