"""Event-driven simulation of a many-server queue with impatient customers.

Runs a 10-server system with Erlang service and uniform patience, auditing
the internal bookkeeping identities after every event:

  * non-idling: idle servers exist only when the queue is empty,
  * head count: customers in system = in service + waiting,
  * mass balance: initial queue + arrivals = waiting + reneged + entered,
  * the waiting count equals the mass of elapsed times at or below the
    head-of-line wait.

Run:  python3 demos/demo_simulate_audit.py
"""

from manyq import Erlang, Exponential, Uniform, audit, init_state, run
from manyq.rng import replication_streams

n, horizon = 10, 2000.0
state = init_state(
    n_servers=n,
    arrival=Exponential(9.0),
    service=Erlang(2, 2.0),
    patience=Uniform(0.0, 4.0),
    streams=replication_streams(root_seed=2026, replication=0),
)
traj = run(state, horizon, audit_every_event=True)
c = traj.counters()

print(f"{n}-server system over horizon {horizon:g}: {traj.events} events")
print(f"  arrivals            E = {c['E']}")
print(f"  service entries     K = {c['K']}")
print(f"  departures          D = {c['D']}")
print(f"  reneged from queue  R = {c['R']}")
print(f"  patience expiries   S = {c['S']}  (includes already-served customers)")
print(f"  in system at end    X = {c['X']}, waiting Q = {c['Q']}")
print(f"  audit checks: {traj.events} events audited, {traj.audit_failures} violations")
print(f"  final-state residuals: {audit(state)}")
assert traj.audit_failures == 0
assert c["E"] == c["Q"] + c["R"] + c["K"]
print("all conservation identities hold exactly")
