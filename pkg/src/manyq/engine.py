"""Event-driven simulator of the N-server FCFS non-idling queue with reneging.

The state carried between events is the four-component descriptor: backward
recurrence time of the arrival process, customer count X, the in-service age
measure (nu) and the potential queue measure (eta).  Eta keeps every
customer's elapsed time-in-system until it reaches that customer's patience
time, whether or not the customer is still waiting; a waiting customer whose
patience runs out reneges, one already in service just drops out of eta.

Cumulative counters: E arrivals, R reneging, S potential reneging (all eta
exits), D service completions, K service entries.  ``audit`` checks the
exact bookkeeping identities after every event.
"""

from __future__ import annotations

import bisect
import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, equilibrium_interarrival
from .rng import ReplicationStreams, replication_streams

__all__ = [
    "SystemState",
    "EventRecord",
    "AuditViolation",
    "init_state",
    "run",
    "head_of_line_wait",
    "audit",
]

# event ranks at equal timestamps: completion before expiry before arrival
_COMPLETION, _EXPIRY, _ARRIVAL = 0, 1, 2
_KIND_NAMES = {_COMPLETION: "service_completion", _EXPIRY: "patience_expiry", _ARRIVAL: "arrival"}

# customer record indices
_ARR, _STATUS, _SERV, _IN_ETA = 0, 1, 2, 3
_WAITING, _IN_SERVICE, _DONE = 0, 1, 2


@dataclass
class EventRecord:
    time: float
    kind: str
    customer: int
    X: int
    nu_mass: int
    eta_mass: int
    Q: int
    R: int
    S: int
    D: int
    K: int
    chi: float


class AuditViolation(Exception):
    pass


class SystemState:
    """Mutable replication-local simulation state."""

    def __init__(self, n_servers, arrival, service, patience, streams):
        self.N = n_servers
        self.arrival = arrival
        self.service = service
        self.patience = patience  # None means no abandonment
        self.streams = streams
        self.clock = 0.0
        self.last_arrival = 0.0
        self.heap = []
        self.cust = {}  # id -> [arrival, status, service_req, in_eta]
        self.in_service = {}  # id -> service start time (may be < 0 initially)
        self.waiting = deque()  # ids in arrival order; lazy removal
        self.eta_ids = []  # sorted ids currently in eta (abandonment mode)
        self.E = 0
        self.Q = 0
        self.R = 0
        self.S = 0
        self.D = 0
        self.K = 0
        self.X = 0
        self.E0 = 0
        self.Q0 = 0
        self.eta0_count = 0
        self.events_processed = 0
        self.entry_order = None  # list of customer ids, if entry tracking is on

    # -- derived quantities ------------------------------------------------

    @property
    def no_abandon(self):
        return self.patience is None

    @property
    def alpha_E(self):
        return self.clock - self.last_arrival

    @property
    def nu_mass(self):
        return len(self.in_service)

    @property
    def eta_mass(self):
        if self.no_abandon:
            return self.E + self.eta0_count
        return len(self.eta_ids)

    def nu_ages(self, at=None):
        t = self.clock if at is None else at
        return np.array([t - s for s in self.in_service.values()])

    def eta_elapsed(self, at=None):
        if self.no_abandon:
            raise NotImplementedError("eta atoms are not stored in no-abandonment mode")
        t = self.clock if at is None else at
        return np.array([t - self.cust[i][_ARR] for i in self.eta_ids])

    def _head_waiting(self):
        """Front of the FIFO after discarding reneged entries; None if empty."""
        w = self.waiting
        if self.no_abandon:
            return w[0] if w else None
        cust = self.cust
        while w:
            c = cust.get(w[0])
            if c is not None and c[_STATUS] == _WAITING:
                return w[0]
            i = w.popleft()
            if c is not None and c[_STATUS] == _DONE and not c[_IN_ETA]:
                del cust[i]
        return None

    def head_of_line_wait(self):
        h = self._head_waiting()
        if h is None:
            return 0.0
        arr = self.waiting_arrival(h)
        return self.clock - arr

    def waiting_arrival(self, head):
        if self.no_abandon:
            return head[1]
        return self.cust[head][_ARR]

    # -- event handlers ----------------------------------------------------

    def _enter_service(self, cid, t, arrival_time, service_req):
        self.K += 1
        self.in_service[cid] = t
        if self.entry_order is not None:
            self.entry_order.append(cid)
        heapq.heappush(self.heap, (t + service_req, _COMPLETION, cid))

    def _on_arrival(self, t):
        self.E += 1
        cid = self.E
        self.last_arrival = t
        self.X += 1
        v = self.service.sample(self.streams.services)
        if self.no_abandon:
            if len(self.in_service) < self.N:
                self._enter_service(cid, t, t, v)
            else:
                self.Q += 1
                self.waiting.append((cid, t, v))
        else:
            r = self.patience.sample(self.streams.patiences)
            self.cust[cid] = [t, _WAITING, v, True]
            self.eta_ids.append(cid)
            heapq.heappush(self.heap, (t + r, _EXPIRY, cid))
            if len(self.in_service) < self.N:
                self.cust[cid][_STATUS] = _IN_SERVICE
                self._enter_service(cid, t, t, v)
            else:
                self.Q += 1
                self.waiting.append(cid)
        nxt = self.arrival.sample(self.streams.arrivals)
        heapq.heappush(self.heap, (t + nxt, _ARRIVAL, 0))
        return cid

    def _on_completion(self, t, cid):
        self.D += 1
        self.X -= 1
        del self.in_service[cid]
        if not self.no_abandon:
            c = self.cust[cid]
            c[_STATUS] = _DONE
            if not c[_IN_ETA]:
                del self.cust[cid]
        head = self._head_waiting()
        if head is not None:
            if self.no_abandon:
                hid, arr, v = self.waiting.popleft()
                self.Q -= 1
                self._enter_service(hid, t, arr, v)
            else:
                self.waiting.popleft()
                self.Q -= 1
                c = self.cust[head]
                c[_STATUS] = _IN_SERVICE
                self._enter_service(head, t, c[_ARR], c[_SERV])

    def _on_expiry(self, t, cid):
        self.S += 1
        c = self.cust[cid]
        c[_IN_ETA] = False
        i = bisect.bisect_left(self.eta_ids, cid)
        del self.eta_ids[i]
        if c[_STATUS] == _WAITING:
            # reneging: still in queue when patience ran out
            self.R += 1
            self.X -= 1
            self.Q -= 1
            c[_STATUS] = _DONE  # tombstone; FIFO cleanup frees it
        elif c[_STATUS] == _DONE:
            del self.cust[cid]


def init_state(
    n_servers: int,
    arrival: Distribution,
    service: Distribution,
    patience,
    initial="empty",
    seed=None,
    streams: ReplicationStreams | None = None,
    stationary_start: bool = False,
) -> SystemState:
    """Build a valid pre-run state and schedule the first arrival.

    ``initial`` is ``"empty"`` or a mapping with keys ``in_service_ages``
    and ``queue_waits``.  Initial in-service customers get residual service
    times from the conditional law given their age, and (with abandonment)
    residual patience conditional on having survived their elapsed time.
    ``stationary_start`` draws the first interarrival from the equilibrium
    law of the arrival distribution, making the arrival process
    time-stationary from t = 0.
    """
    if n_servers < 1:
        raise ValueError("need at least one server")
    if streams is None:
        streams = replication_streams(0 if seed is None else seed, 0)
    st = SystemState(n_servers, arrival, service, patience, streams)

    if initial == "empty":
        ages, waits = [], []
    elif isinstance(initial, dict):
        extra = set(initial) - {"in_service_ages", "queue_waits"}
        if extra:
            raise ValueError(f"unknown initial-condition keys: {sorted(extra)}")
        ages = sorted(float(a) for a in initial.get("in_service_ages", ())) [::-1]
        waits = sorted(float(w) for w in initial.get("queue_waits", ())) [::-1]
    else:
        raise ValueError(f"bad initial condition: {initial!r}")

    if len(ages) > n_servers:
        raise ValueError(f"{len(ages)} initial in-service customers exceed {n_servers} servers")
    if waits and len(ages) < n_servers:
        raise ValueError("queue may only be nonempty when all servers are busy (non-idling)")
    if patience is None and waits:
        # still allowed: queue waits just have no expiry events
        pass

    st.E0 = len(ages) + len(waits)
    st.X = st.E0
    st.Q = st.Q0 = len(waits)
    st.eta0_count = st.E0

    cid = -st.E0 + 1
    for u in ages:  # oldest first => smallest id
        # initial in-service customers predate t = 0, so they are not
        # counted in K (entries into service on (0, t])
        resid = service.conditional_residual(u, streams.services) if u > 0 else service.sample(streams.services)
        st.in_service[cid] = -u
        heapq.heappush(st.heap, (resid, _COMPLETION, cid))
        if patience is not None:
            st.cust[cid] = [-u, _IN_SERVICE, resid, True]
            st.eta_ids.append(cid)
            rp = patience.conditional_residual(u, streams.patiences) if u > 0 else patience.sample(streams.patiences)
            heapq.heappush(st.heap, (rp, _EXPIRY, cid))
        cid += 1
    for w in waits:
        v = service.sample(streams.services)
        if patience is None:
            st.waiting.append((cid, -w, v))
        else:
            st.cust[cid] = [-w, _WAITING, v, True]
            st.eta_ids.append(cid)
            rp = patience.conditional_residual(w, streams.patiences) if w > 0 else patience.sample(streams.patiences)
            heapq.heappush(st.heap, (rp, _EXPIRY, cid))
            st.waiting.append(cid)
        cid += 1

    first = equilibrium_interarrival(arrival).sample(streams.arrivals) if stationary_start else arrival.sample(streams.arrivals)
    heapq.heappush(st.heap, (first, _ARRIVAL, 0))
    return st


def head_of_line_wait(state: SystemState) -> float:
    """Waiting time of the longest-waiting queued customer; 0 if no queue."""
    return state.head_of_line_wait()


def audit(state: SystemState):
    """Exact bookkeeping identities; returns a dict of integer residuals.

    All residuals must be exactly zero in a correct run.  The head-of-line
    identity compares Q with the eta mass at or below the head-of-line wait,
    evaluated at the post-event state.
    """
    N, X = state.N, state.X
    nu = state.nu_mass
    report = {
        "non_idling": (N - nu) - max(N - X, 0),
        "x_split": X - nu - state.Q,
        "queue_mass_balance": (state.Q0 + state.E) - (state.Q + state.R + state.K),
    }
    head = state._head_waiting()
    if head is None:
        report["hol_quantile"] = state.Q  # must be 0
    else:
        if state.no_abandon:
            # eta keeps every arrival, so atoms at or below the head's
            # elapsed time are exactly the ids >= head id
            count = state.E + 1 - head[0]
        else:
            count = len(state.eta_ids) - bisect.bisect_left(state.eta_ids, head)
        report["hol_quantile"] = count - state.Q
    return report


@dataclass
class Trajectory:
    state: SystemState
    events: int
    log: list = field(default_factory=list)
    audit_failures: int = 0
    first_audit_failure: dict | None = None

    def counters(self):
        s = self.state
        return {"E": s.E, "Q": s.Q, "R": s.R, "S": s.S, "D": s.D, "K": s.K, "X": s.X}


def run(
    state: SystemState,
    horizon: float,
    audit_every_event: bool = False,
    collector=None,
    snapshot_times=(),
    snapshot_fn=None,
    log_events: bool = False,
    max_events: int = 200_000_000,
) -> Trajectory:
    """Advance the state to ``horizon`` (events strictly before it).

    ``collector.update(dt, X, nu_mass, eta_mass, Q)`` is called with the
    holding time of each visited state; ``snapshot_fn(state, t)`` is called
    at each requested snapshot time with the clock advanced virtually to t.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    traj = Trajectory(state=state, events=0)
    heap = state.heap
    snaps = sorted(snapshot_times)
    si = 0
    n_events = 0

    while heap:
        t, rank, cid = heap[0]
        stop = min(t, horizon)
        while si < len(snaps) and snaps[si] <= stop:
            if snapshot_fn is not None:
                snapshot_fn(state, snaps[si])
            si += 1
        if t >= horizon:
            break
        if n_events >= max_events:
            raise RuntimeError(
                f"event cap {max_events} hit at t={state.clock:.6g} "
                f"(X={state.X}); raise max_events if intended"
            )
        heapq.heappop(heap)
        if collector is not None:
            collector.update(t - state.clock, state.X, state.nu_mass, state.eta_mass, state.Q)
        state.clock = t
        if rank == _ARRIVAL:
            cid = state._on_arrival(t)
        elif rank == _COMPLETION:
            state._on_completion(t, cid)
        else:
            state._on_expiry(t, cid)
        n_events += 1
        state.events_processed += 1

        if audit_every_event:
            rep = audit(state)
            if any(v != 0 for v in rep.values()):
                traj.audit_failures += 1
                if traj.first_audit_failure is None:
                    traj.first_audit_failure = {"time": t, "kind": _KIND_NAMES[rank], **rep}
        if log_events:
            traj.log.append(
                EventRecord(
                    time=t,
                    kind=_KIND_NAMES[rank],
                    customer=cid,
                    X=state.X,
                    nu_mass=state.nu_mass,
                    eta_mass=state.eta_mass,
                    Q=state.Q,
                    R=state.R,
                    S=state.S,
                    D=state.D,
                    K=state.K,
                    chi=state.head_of_line_wait(),
                )
            )

    if collector is not None and horizon > state.clock:
        collector.update(horizon - state.clock, state.X, state.nu_mass, state.eta_mass, state.Q)
    state.clock = horizon
    while si < len(snaps) and snaps[si] <= horizon:
        if snapshot_fn is not None:
            snapshot_fn(state, snaps[si])
        si += 1
    traj.events = n_events
    return traj
