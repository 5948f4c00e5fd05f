"""Deterministic fluid model of the many-server queue with reneging.

All quantities are normalized per server: capacity is 1, arrivals come in at
constant rate ``lam``.  The in-service age density ages under the service
hazard and is refilled through the entry rate kdot; the potential queue
measure ages under the patience hazard and is refilled by the arrival
inflow.  The waiting mass is Q = (X - 1)^+ and the reneging rate is the
patience hazard integrated over the oldest-Q part of the potential queue
measure.

The solver marches on a uniform grid: per step it ages everything in
service, lets waiting mass renege, then admits new mass up to the freed
capacity.  ``solve_entry_renewal`` recomputes the cumulative service-entry
process from the same trajectory through its renewal-equation
representation, as an independent consistency check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution

__all__ = [
    "InitialMeasure",
    "ZeroMeasure",
    "EquilibriumInitial",
    "AtomicInitial",
    "from_grid",
    "FluidInput",
    "EtaFlow",
    "FluidSolution",
    "solve_fluid",
    "renewal_density",
    "solve_entry_renewal",
]

_CHUNK = 512


class InitialMeasure:
    """Initial age/elapsed-time profile, queried through its aged versions.

    ``aged_mass(law, t)`` is the mass still alive at time t when each unit
    at location x survives with probability S(x + t) / S(x) for the lifetime
    law; ``aged_flux`` is the corresponding instantaneous loss rate
    (density g(x + t) / S(x) integrated over the measure).
    """

    total_mass: float
    support_hint: float

    def aged_mass(self, law, t):
        raise NotImplementedError

    def aged_flux(self, law, t):
        raise NotImplementedError

    def transported_cum(self, law, t, x, strict=False):
        """Mass of the aged measure on [0, x] ([0, x) if strict) at time t."""
        raise NotImplementedError

    def transported_hazard_mass(self, law, t, x, strict=False):
        """Hazard-weighted aged mass on [0, x]: the exit-rate contribution."""
        raise NotImplementedError

    def transported_atom_at(self, law, t, x):
        """Aged weight of atoms sitting exactly at location x at time t."""
        return 0.0


class ZeroMeasure(InitialMeasure):
    total_mass = 0.0
    support_hint = 0.0

    def aged_mass(self, law, t):
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0

    aged_flux = aged_mass

    def transported_cum(self, law, t, x, strict=False):
        return 0.0

    transported_hazard_mass = transported_cum


@dataclass(frozen=True)
class EquilibriumInitial(InitialMeasure):
    """Density scale * (1 - G(x)) where G is the law the measure ages under.

    Because the density is the survival function of its own aging law, every
    aged quantity is closed-form.
    """

    law: Distribution
    scale: float

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")
        if not np.isfinite(self.law.mean):
            raise ValueError("equilibrium profile of an infinite-mean law has infinite mass")

    @property
    def total_mass(self):
        return self.scale * self.law.mean

    @property
    def support_hint(self):
        end = self.law.support_end
        return end if np.isfinite(end) else 64.0 * self.law.mean

    def _check(self, law):
        if law != self.law:
            raise ValueError(
                "equilibrium initial profile must age under its own law; "
                "tabulate it with from_grid otherwise"
            )

    def aged_mass(self, law, t):
        self._check(law)
        out = self.scale * (law.mean - law.integrated_sf(t))
        return out

    def aged_flux(self, law, t):
        self._check(law)
        return self.scale * law.sf(t)

    def transported_cum(self, law, t, x, strict=False):
        self._check(law)
        return self.scale * (law.integrated_sf(max(x, t)) - law.integrated_sf(t))

    def transported_hazard_mass(self, law, t, x, strict=False):
        self._check(law)
        return self.scale * (law.cdf(max(x, t)) - law.cdf(t))


class AtomicInitial(InitialMeasure):
    """Weighted atoms at nonnegative locations (includes tabulated densities)."""

    def __init__(self, locations, weights):
        u = np.asarray(locations, dtype=float)
        w = np.asarray(weights, dtype=float)
        if u.shape != w.shape or u.ndim != 1:
            raise ValueError("locations and weights must be matching 1-d arrays")
        if len(u) and (np.any(u < 0) or np.any(w < 0)):
            raise ValueError("locations and weights must be nonnegative")
        order = np.argsort(u, kind="stable")
        self.u = u[order]
        self.w = w[order]

    @property
    def total_mass(self):
        return float(self.w.sum())

    @property
    def support_hint(self):
        return float(self.u[-1]) if len(self.u) else 0.0

    def _ratios(self, law, t):
        """surviving weight per atom at time(s) t: w * S(u + t) / S(u)."""
        s0 = np.asarray(law.sf(self.u), dtype=float)
        if np.any(s0 <= 0):
            raise ValueError("initial atom beyond the support of its lifetime law")
        return s0

    def _chunked(self, law, t, fn):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        s0 = self._ratios(law, t)
        out = np.empty(len(tt))
        for i in range(0, len(tt), _CHUNK):
            blk = tt[i : i + _CHUNK, None] + self.u[None, :]
            out[i : i + _CHUNK] = (fn(blk) * (self.w / s0)[None, :]).sum(axis=1)
        return float(out[0]) if scalar else out

    def aged_mass(self, law, t):
        if not len(self.u):
            return np.zeros(np.shape(t)) if np.ndim(t) else 0.0
        return self._chunked(law, t, law.sf)

    def aged_flux(self, law, t):
        if not len(self.u):
            return np.zeros(np.shape(t)) if np.ndim(t) else 0.0
        return self._chunked(law, t, law.pdf)

    def _mask(self, t, x, strict):
        y = self.u + t
        return (y < x - 1e-12) if strict else (y <= x + 1e-12)

    def transported_cum(self, law, t, x, strict=False):
        if not len(self.u):
            return 0.0
        m = self._mask(t, x, strict)
        if not m.any():
            return 0.0
        s0 = self._ratios(law, t)
        return float(np.sum(self.w[m] * law.sf(self.u[m] + t) / s0[m]))

    def transported_hazard_mass(self, law, t, x, strict=False):
        if not len(self.u):
            return 0.0
        m = self._mask(t, x, strict)
        if not m.any():
            return 0.0
        s0 = self._ratios(law, t)
        return float(np.sum(self.w[m] * law.pdf(self.u[m] + t) / s0[m]))

    def transported_atom_at(self, law, t, x):
        m = np.abs(self.u + t - x) <= 1e-12
        if not m.any():
            return 0.0
        s0 = self._ratios(law, t)
        return float(np.sum(self.w[m] * law.sf(self.u[m] + t) / s0[m]))


def from_grid(x, density, cells_per_point=1) -> AtomicInitial:
    """Midpoint discretization of a tabulated density into weighted atoms."""
    x = np.asarray(x, dtype=float)
    density = np.asarray(density, dtype=float)
    if x.ndim != 1 or x.shape != density.shape or len(x) < 2:
        raise ValueError("grid and density must be matching 1-d arrays")
    mids = 0.5 * (x[:-1] + x[1:])
    w = 0.5 * (density[:-1] + density[1:]) * np.diff(x)
    return AtomicInitial(mids, w)


@dataclass
class FluidInput:
    """Normalized initial condition and primitives for the fluid model.

    The initial state must be admissible: idle capacity equals unserved
    space, 1 - <1, nu0> = (1 - X0)^+, and the waiting mass (X0 - 1)^+ must
    fit inside the potential queue measure.
    """

    X0: float
    nu0: InitialMeasure
    eta0: InitialMeasure
    lam: float
    service: Distribution
    patience: Distribution | None = None

    def validate(self, tol=1e-8):
        if self.lam <= 0:
            raise ValueError("arrival rate must be positive")
        if self.X0 < 0:
            raise ValueError("X0 must be nonnegative")
        b0 = self.nu0.total_mass
        if abs((1.0 - b0) - max(1.0 - self.X0, 0.0)) > tol:
            raise ValueError(
                f"non-idling violated at t=0: in-service mass {b0} vs X0 {self.X0}"
            )
        if max(self.X0 - 1.0, 0.0) > self.eta0.total_mass + tol:
            raise ValueError(
                f"waiting mass {max(self.X0 - 1.0, 0.0)} exceeds potential queue mass "
                f"{self.eta0.total_mass}"
            )


class EtaFlow:
    """Closed-form evolution of the potential queue measure.

    Eta is exogenous: it ages the initial profile under the patience law and
    adds arrival inflow with density lam * (1 - Gr(x)) on [0, t).  With no
    patience law nothing ever leaves, so only the mass is tracked.
    """

    def __init__(self, eta0: InitialMeasure, patience, lam: float):
        self.eta0 = eta0
        self.patience = patience
        self.lam = lam

    def mass(self, t):
        if self.patience is None:
            return self.eta0.total_mass + self.lam * np.asarray(t, dtype=float)
        return self.eta0.aged_mass(self.patience, t) + self.lam * self.patience.integrated_sf(t)

    def cumulative(self, t, x, strict=False):
        if self.patience is None:
            return self.lam * min(x, t) + (
                self.eta0.total_mass if x >= t else 0.0
            )  # initial atoms all sit at >= t only when they started at 0
        return self.lam * self.patience.integrated_sf(min(x, t)) + self.eta0.transported_cum(
            self.patience, t, x, strict
        )

    def quantile(self, t, q):
        """Leftmost x with cumulative(t, x) >= q."""
        if q <= 0:
            return 0.0
        hi = t + self.eta0.support_hint
        if self.patience is not None:
            end = self.patience.support_end
            hi = max(hi, min(t, end if np.isfinite(end) else t))
        hi = max(hi, t, 1e-9)
        if self.cumulative(t, hi) < q:
            return hi
        lo = 0.0
        while hi - lo > 1e-10 * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if self.cumulative(t, mid) >= q:
                hi = mid
            else:
                lo = mid
        return hi

    def reneging_rate(self, t, q):
        """Patience hazard integrated over the oldest q units of eta at time t."""
        if self.patience is None or q <= 0:
            return 0.0
        total = self.mass(t)
        q = min(q, total)
        chi = self.quantile(t, q)
        law = self.lam * self.patience.cdf(min(chi, t))
        rate = law + self.eta0.transported_hazard_mass(self.patience, t, chi, strict=True)
        atom = self.eta0.transported_atom_at(self.patience, t, chi)
        if atom > 0.0:
            below = self.cumulative(t, chi, strict=True)
            part = min(max(q - below, 0.0), atom)
            rate += part * self.patience.hazard(chi)
        return rate


@dataclass
class FluidSolution:
    """Trajectory on a uniform grid; Q = (X - 1)^+ and B = <1, nu>."""

    t: np.ndarray
    X: np.ndarray
    Q: np.ndarray
    B: np.ndarray
    K: np.ndarray
    R: np.ndarray
    eta_mass: np.ndarray
    hs_nu: np.ndarray
    kdot: np.ndarray
    inp: FluidInput = field(repr=False)
    eta: EtaFlow = field(repr=False)

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    def at(self, time):
        """Linear interpolation of every tracked component at one time."""
        out = {}
        for name in ("X", "Q", "B", "K", "R", "eta_mass", "hs_nu"):
            out[name] = float(np.interp(time, self.t, getattr(self, name)))
        return out

    def mass_balance_residual(self):
        """sup over the grid of |Q(0) + lam t - K - R - Q|; O(dt) small."""
        q0 = max(self.inp.X0 - 1.0, 0.0)
        lhs = q0 + self.inp.lam * self.t - self.K - self.R
        return float(np.max(np.abs(lhs - self.Q)))


def solve_fluid(inp: FluidInput, horizon: float, dt: float = 1e-3) -> FluidSolution:
    """March the fluid dynamics to ``horizon`` on a uniform grid of step dt.

    Each step ages the in-service mass exactly under the service law
    (cohorts keep their entry midpoint), applies one explicit reneging
    substep, then admits waiting and newly arrived mass up to the freed
    capacity.  First-order accurate overall; the aging itself is exact.
    """
    inp.validate()
    if dt <= 0 or horizon <= 0:
        raise ValueError("horizon and dt must be positive")
    n = int(round(horizon / dt))
    if abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError("horizon must be a multiple of dt")
    t = np.arange(n + 1) * dt
    sv, lam = inp.service, inp.lam

    mid = (np.arange(1, n + 2) - 0.5) * dt
    Smid = np.asarray(sv.sf(mid), dtype=float)
    gmid = np.asarray(sv.pdf(mid), dtype=float)
    init_mass = np.asarray(inp.nu0.aged_mass(sv, t), dtype=float)
    init_flux = np.asarray(inp.nu0.aged_flux(sv, t), dtype=float)
    eta = EtaFlow(inp.eta0, inp.patience, lam)

    X = np.empty(n + 1)
    B = np.empty(n + 1)
    K = np.zeros(n + 1)
    R = np.zeros(n + 1)
    kdot = np.zeros(n + 1)  # last slot stays 0; kept for shape symmetry
    X[0] = inp.X0
    B[0] = inp.nu0.total_mass
    Q = max(inp.X0 - 1.0, 0.0)

    for k in range(n):
        aged = init_mass[k + 1]
        if k > 0:
            aged += dt * np.dot(kdot[:k], Smid[k:0:-1])
        r_k = dt * eta.reneging_rate(t[k], Q) if Q > 0.0 else 0.0
        r_k = min(r_k, Q)
        demand = Q - r_k + lam * dt
        e_k = min(demand, 1.0 - aged)
        e_k = max(e_k, 0.0)
        kdot[k] = e_k / dt
        B[k + 1] = aged + e_k * Smid[0]
        d_k = B[k] + e_k - B[k + 1]
        X[k + 1] = max(X[k] + lam * dt - d_k - r_k, 0.0)
        K[k + 1] = K[k] + e_k
        R[k + 1] = R[k] + r_k
        Q = max(X[k + 1] - 1.0, 0.0)

    hs = init_flux.copy()
    if n > 0:
        conv = np.convolve(kdot[:n], gmid[:n])
        hs[1:] += dt * conv[: n]
    Qarr = np.maximum(X - 1.0, 0.0)
    eta_mass = np.asarray(eta.mass(t), dtype=float)
    return FluidSolution(
        t=t, X=X, Q=Qarr, B=B, K=K, R=R, eta_mass=eta_mass, hs_nu=hs, kdot=kdot, inp=inp, eta=eta
    )


def renewal_density(law: Distribution, dt: float, n: int) -> np.ndarray:
    """Density u of the renewal function of ``law`` on the grid 0..n*dt.

    Solves u = g + g * u (convolution) by marching with the trapezoid rule;
    second-order accurate for smooth densities.
    """
    g = np.asarray(law.pdf(np.arange(n + 1) * dt), dtype=float)
    u = np.zeros(n + 1)
    u[0] = g[0]
    denom = 1.0 - 0.5 * dt * g[0]
    for m in range(1, n + 1):
        acc = 0.5 * g[m] * u[0]
        if m > 1:
            acc += np.dot(g[m - 1 : 0 : -1], u[1:m])
        u[m] = (g[m] + dt * acc) / denom
    return u


def solve_entry_renewal(sol: FluidSolution, u: np.ndarray | None = None) -> np.ndarray:
    """Cumulative service entries recomputed through the renewal equation.

    K = b + b * u where b(t) is the in-service mass minus what the initial
    profile alone would have retained, and u is the renewal density of the
    service law.  Independent of the solver's own K except through B.
    """
    n = len(sol.t) - 1
    dt = sol.dt
    if u is None:
        u = renewal_density(sol.inp.service, dt, n)
    aged0 = np.asarray(sol.inp.nu0.aged_mass(sol.inp.service, sol.t), dtype=float)
    b = sol.B - aged0
    conv = np.convolve(b, u)[: n + 1]
    return b + dt * (conv - 0.5 * (b * u[0] + b[0] * u))
