"""Long-run simulation estimates and exact stationary references.

``estimate_stationary`` runs one replication to a fixed horizon and returns
time-average estimates of X, the in-service mass, the potential queue mass
and the queue length, with batch-means confidence intervals.  The exact
birth-death stationary law of the N-server Markovian queue
(``mmn_stationary_pmf`` / ``mmn_tail``) serves as reference for validating
those estimates, and ``representation_check`` / ``tightness_check`` test
the transport representation of the potential queue measure against
simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import gammaln, logsumexp

from .distributions import Distribution, Exponential
from .engine import init_state, run
from .rng import replication_streams

__all__ = [
    "TimeAverageCollector",
    "StationaryEstimate",
    "estimate_stationary",
    "mmn_stationary_pmf",
    "mmn_tail",
    "mean_eta_formula",
    "mean_nu_formula",
    "representation_check",
    "tightness_check",
    "tightness_profile",
    "littles_law_check",
]


class TimeAverageCollector:
    """Time-weighted accumulator for (X, nu_mass, eta_mass, Q).

    With a ``batch_length`` the accumulation is also split into equal-length
    batches (holding intervals straddling a boundary are divided exactly),
    giving independent-ish batch means for confidence intervals.  Plain
    Python floats throughout: this sits on the per-event hot path.
    """

    def __init__(self, batch_length=None, track_histogram=False):
        self.total_time = 0.0
        self.sum_x = 0.0
        self.sum_nu = 0.0
        self.sum_eta = 0.0
        self.sum_q = 0.0
        self.batch_length = batch_length
        self.batches = []  # rows (duration, sx, snu, seta, sq)
        self._bt = 0.0
        self._bx = 0.0
        self._bnu = 0.0
        self._beta = 0.0
        self._bq = 0.0
        self.hist = {} if track_histogram else None

    def update(self, dt, X, nu, eta, Q):
        if dt <= 0.0:
            return
        self.total_time += dt
        self.sum_x += X * dt
        self.sum_nu += nu * dt
        self.sum_eta += eta * dt
        self.sum_q += Q * dt
        if self.hist is not None:
            h = self.hist
            h[X] = h.get(X, 0.0) + dt
        L = self.batch_length
        if L is None:
            return
        while self._bt + dt >= L:
            take = L - self._bt
            self.batches.append(
                (L, self._bx + X * take, self._bnu + nu * take, self._beta + eta * take, self._bq + Q * take)
            )
            dt -= take
            self._bt = self._bx = self._bnu = self._beta = self._bq = 0.0
        if dt > 0.0:
            self._bt += dt
            self._bx += X * dt
            self._bnu += nu * dt
            self._beta += eta * dt
            self._bq += Q * dt

    def batch_means(self):
        b = np.array(self.batches, dtype=float)
        if not len(b):
            return np.empty((0, 4))
        return b[:, 1:] / b[:, :1]


@dataclass
class StationaryEstimate:
    """Time-average point estimates with batch-means half-widths (95%)."""

    n_servers: int
    horizon: float
    warmup: float
    seed: int
    replication: int
    events: int
    mean: dict
    halfwidth: dict
    histogram: dict | None = field(default=None, repr=False)

    def scaled(self, name):
        """Per-server value of one tracked mean."""
        return self.mean[name] / self.n_servers

    def histogram_pmf(self, kmax):
        """Observed fraction of time in each X value, 0..kmax."""
        if self.histogram is None:
            raise ValueError("histogram was not tracked")
        span = self.horizon - self.warmup
        out = np.zeros(kmax + 1)
        for k, w in self.histogram.items():
            if k <= kmax:
                out[k] = w / span
        return out


_NAMES = ("X", "nu_mass", "eta_mass", "Q")


def estimate_stationary(
    n_servers: int,
    arrival: Distribution,
    service: Distribution,
    patience=None,
    *,
    horizon: float,
    warmup: float | None = None,
    seed: int = 0,
    replication: int = 0,
    n_batches: int = 20,
    initial="empty",
    stationary_start: bool = False,
    track_histogram: bool = False,
    max_events: int = 200_000_000,
) -> StationaryEstimate:
    """One replication: warm up, then time-average over [warmup, horizon]."""
    if warmup is None:
        warmup = 0.2 * horizon
    if not 0 <= warmup < horizon:
        raise ValueError("need 0 <= warmup < horizon")
    streams = replication_streams(seed, replication)
    st = init_state(
        n_servers, arrival, service, patience,
        initial=initial, streams=streams, stationary_start=stationary_start,
    )
    ev0 = 0
    if warmup > 0:
        t0 = run(st, warmup, max_events=max_events)
        ev0 = t0.events
    col = TimeAverageCollector(
        batch_length=(horizon - warmup) / n_batches, track_histogram=track_histogram
    )
    traj = run(st, horizon, collector=col, max_events=max_events)

    span = col.total_time
    means = {n: getattr(col, "sum_" + a) / span for n, a in zip(_NAMES, ("x", "nu", "eta", "q"))}
    bm = col.batch_means()
    hw = {}
    for i, n in enumerate(_NAMES):
        if len(bm) >= 2:
            s = float(np.std(bm[:, i], ddof=1))
            hw[n] = float(stats.t.ppf(0.975, len(bm) - 1) * s / np.sqrt(len(bm)))
        else:
            hw[n] = float("nan")
    return StationaryEstimate(
        n_servers=n_servers,
        horizon=horizon,
        warmup=warmup,
        seed=seed,
        replication=replication,
        events=ev0 + traj.events,
        mean=means,
        halfwidth=hw,
        histogram=col.hist,
    )


def _mmn_logweights(n_servers, lam, kmax):
    k = np.arange(kmax + 1)
    logl = np.log(lam)
    below = k * logl - gammaln(k + 1)
    above = k * logl - gammaln(n_servers + 1) - (k - n_servers) * np.log(n_servers)
    return np.where(k < n_servers, below, above)


def _mmn_logZ(n_servers, lam):
    rho = lam / n_servers
    if rho >= 1:
        raise ValueError("stationary law requires lam < n_servers")
    logw = _mmn_logweights(n_servers, lam, n_servers)
    head = logsumexp(logw[:n_servers]) if n_servers > 0 else -np.inf
    tail = logw[n_servers] - np.log1p(-rho)  # geometric sum from k = N on
    return logsumexp([head, tail])


def mmn_stationary_pmf(n_servers: int, lam: float, kmax: int) -> np.ndarray:
    """Exact stationary pmf of the Markovian N-server queue on 0..kmax.

    Birth rate lam, death rate min(k, N); requires lam < N.  Computed in
    the log domain so it stays exact for N in the thousands.
    """
    logZ = _mmn_logZ(n_servers, lam)
    return np.exp(_mmn_logweights(n_servers, lam, kmax) - logZ)


def mmn_tail(n_servers: int, lam: float, m: int) -> float:
    """Exact P(X >= m) under the same stationary law, for m >= N."""
    if m < n_servers:
        raise ValueError("tail formula applies from m = N on")
    rho = lam / n_servers
    logw_m = _mmn_logweights(n_servers, lam, m)[m]
    return float(np.exp(logw_m - np.log1p(-rho) - _mmn_logZ(n_servers, lam)))


def _transport_formula(initial, law, inflow_t, inflow_v, f, t):
    """initial-term + Stieltjes-convolution term of the transport identity.

    E<f, m_t> = integral f(x+t) S(x+t)/S(x) m_0(dx)
              + integral_0^t f(t-s) S(t-s) d inflow(s),

    with ``inflow`` a nondecreasing sampled function on the grid
    (inflow_t, inflow_v), integrated by midpoint increments.
    """
    out = 0.0
    if initial is not None:
        u, w = initial
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        if len(u):
            s0 = np.asarray(law.sf(u), dtype=float)
            out += float(np.sum(w * f(u + t) * law.sf(u + t) / s0))
    tt = np.asarray(inflow_t, dtype=float)
    vv = np.asarray(inflow_v, dtype=float)
    m = tt <= t
    tt, vv = tt[m], vv[m]
    if len(tt) >= 2:
        mids = 0.5 * (tt[:-1] + tt[1:])
        inc = np.diff(vv)
        out += float(np.sum(f(t - mids) * law.sf(t - mids) * inc))
    return out


def mean_eta_formula(eta0, arrival_fn_t, arrival_fn_v, patience, f, t):
    """Expected <f, eta_t> from the transport identity.

    ``eta0`` is None or (locations, weights) of the initial profile;
    ``arrival_fn_*`` sample the nondecreasing expected-arrivals function
    E[E(s)] on a grid (for Poisson arrivals that is rate * s, exactly).
    """
    return _transport_formula(eta0, patience, arrival_fn_t, arrival_fn_v, f, t)


def mean_nu_formula(nu0, entry_fn_t, entry_fn_v, service, f, t):
    """Expected <f, nu_t>; same identity driven by expected service entries."""
    return _transport_formula(nu0, service, entry_fn_t, entry_fn_v, f, t)


def representation_check(
    n_servers: int,
    arrival: Exponential,
    service: Distribution,
    patience: Distribution,
    times=(1.0, 2.0, 5.0),
    c: float = 0.5,
    n_reps: int = 10_000,
    seed: int = 0,
) -> list:
    """Compare E<f, eta_t> from replications against the transport formula.

    From an empty start the initial term vanishes and, for Poisson
    arrivals, the expected inflow term is rate * integral_0^t f(x) Sr(x) dx.
    Checked for f = 1 and f = indicator of [c, infinity); returns one dict
    per (t, f) with the z-score of observed vs predicted.
    """
    if not isinstance(arrival, Exponential):
        raise ValueError("the closed-form prediction needs Poisson arrivals")
    times = sorted(times)
    obs = np.zeros((len(times), n_reps, 2))

    for rep in range(n_reps):
        def snap(state, t, rep=rep):
            i = times.index(t)
            el = state.eta_elapsed(at=t)
            obs[i, rep, 0] = len(el)
            obs[i, rep, 1] = int(np.sum(el >= c))

        streams = replication_streams(seed, rep)
        st = init_state(n_servers, arrival, service, patience, streams=streams)
        run(st, times[-1] + 1e-9, snapshot_times=times, snapshot_fn=snap)

    rate = arrival.rate
    out = []
    for i, t in enumerate(times):
        preds = {
            "1": rate * patience.integrated_sf(t),
            "tail": rate * max(patience.integrated_sf(t) - patience.integrated_sf(min(c, t)), 0.0),
        }
        for j, fname in enumerate(("1", "tail")):
            x = obs[i, :, j]
            se = float(np.std(x, ddof=1) / np.sqrt(n_reps))
            mean = float(np.mean(x))
            z = (mean - preds[fname]) / se if se > 0 else 0.0
            out.append(
                {"t": t, "f": fname, "c": c, "observed": mean, "predicted": preds[fname], "z": float(z)}
            )
    return out


def tightness_check(
    n_servers: int,
    arrival: Exponential,
    service: Distribution,
    patience: Distribution,
    c: float,
    horizon: float,
    warmup: float,
    n_snapshots: int = 200,
    seed: int = 0,
) -> dict:
    """Stationary self-consistency of the potential queue tail at lag 2c.

    Averages, over snapshots of one long run, both sides of

        E[eta*[c, H)] = E[ sum_atoms Sr(x + 2c) / Sr(x) ]
                        + rate * integral_c^{2c} Sr(x) dx,

    which transports the stationary profile forward by 2c.  Returns the two
    sides and the standard error of their per-snapshot difference.
    """
    if not isinstance(arrival, Exponential):
        raise ValueError("the closed-form inflow term needs Poisson arrivals")
    snaps = np.linspace(warmup, horizon, n_snapshots)
    lhs, rhs1 = [], []

    def snap(state, t):
        el = state.eta_elapsed(at=t)
        lhs.append(float(np.sum(el >= c)))
        if len(el):
            rhs1.append(float(np.sum(patience.sf(el + 2 * c) / patience.sf(el))))
        else:
            rhs1.append(0.0)

    streams = replication_streams(seed, 0)
    st = init_state(n_servers, arrival, service, patience, streams=streams)
    run(st, horizon + 1e-9, snapshot_times=snaps, snapshot_fn=snap)

    inflow = arrival.rate * (patience.integrated_sf(2 * c) - patience.integrated_sf(c))
    lhs = np.array(lhs)
    rhs = np.array(rhs1) + inflow
    diff = lhs - rhs
    return {
        "lhs": float(np.mean(lhs)),
        "rhs": float(np.mean(rhs)),
        "diff": float(np.mean(diff)),
        "diff_se": float(np.std(diff, ddof=1) / np.sqrt(len(diff))),
        "n_snapshots": len(diff),
    }


def tightness_profile(
    n_servers: int,
    arrival: Exponential,
    service: Distribution,
    patience: Distribution,
    c_grid,
    horizon: float,
    warmup: float,
    n_snapshots: int = 200,
    seed: int = 0,
) -> dict:
    """Tail profiles c -> mean mass of eta and nu in [c, H) at stationarity.

    Estimated from evenly spaced snapshots of one long run; both profiles
    are nonincreasing in c by construction.  For each c the lag-2c
    self-consistency residual of the eta tail (see ``tightness_check``) is
    reported alongside.
    """
    c_grid = np.asarray(sorted(c_grid), dtype=float)
    snaps = np.linspace(warmup, horizon, n_snapshots)
    eta_tail = np.zeros(len(c_grid))
    nu_tail = np.zeros(len(c_grid))
    rhs = np.zeros(len(c_grid))

    def snap(state, t):
        el = state.eta_elapsed(at=t)
        ages = state.nu_ages(at=t)
        for i, c in enumerate(c_grid):
            eta_tail[i] += np.sum(el >= c)
            nu_tail[i] += np.sum(ages >= c)
            if len(el):
                rhs[i] += np.sum(patience.sf(el + 2 * c) / patience.sf(el))

    streams = replication_streams(seed, 0)
    st = init_state(n_servers, arrival, service, patience, streams=streams)
    run(st, horizon + 1e-9, snapshot_times=snaps, snapshot_fn=snap)

    eta_tail /= n_snapshots
    nu_tail /= n_snapshots
    rhs /= n_snapshots
    rhs += arrival.rate * (patience.integrated_sf(2 * c_grid) - patience.integrated_sf(c_grid))
    return {
        "c": c_grid,
        "eta_tail": eta_tail,
        "nu_tail": nu_tail,
        "self_consistency_residual": eta_tail - rhs,
        "n_snapshots": n_snapshots,
    }


def littles_law_check(eta_mean: float, arrival_rate: float, patience_mean: float) -> dict:
    """Potential queue mass vs arrival rate x mean patience (infinite-server view)."""
    expected = arrival_rate * patience_mean
    return {
        "observed": eta_mean,
        "expected": expected,
        "deviation": abs(eta_mean - expected),
        "relative": abs(eta_mean - expected) / expected if expected > 0 else float("nan"),
    }
