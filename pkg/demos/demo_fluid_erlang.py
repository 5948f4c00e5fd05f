"""Deterministic fluid dynamics of a critically loaded Erlang-service queue.

Starts the fluid model with every server busy on a brand-new Erlang(2)
job, unit arrival rate, and no abandonment.  Erlang service has increasing
hazard, so the fresh jobs finish slowly at first and a queue builds up
during the transient.  At exactly critical load there is no spare service
capacity and no reneging, so that transient queue never drains: the fluid
model freezes with X = 1.25 and a permanent queue of 0.25 per server -
the long-run state remembers the initial condition.

Run:  python3 demos/demo_fluid_erlang.py
"""

import numpy as np

from manyq import AtomicInitial, Erlang, FluidInput, solve_fluid

inp = FluidInput(
    X0=1.0,
    nu0=AtomicInitial([0.0], [1.0]),  # all servers busy, age 0
    eta0=AtomicInitial([0.0], [1.0]),
    lam=1.0,
    service=Erlang(2, 2.0),
    patience=None,
)
sol = solve_fluid(inp, horizon=30.0, dt=1e-3)

print("critically loaded fluid model, Erlang(2, 2) service, all-busy start")
print(f"{'t':>6} {'X':>9} {'Q':>9} {'in service B':>13}")
for t in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0):
    row = sol.at(t)
    print(f"{t:6.1f} {row['X']:9.5f} {row['Q']:9.5f} {row['B']:13.5f}")

print(f"\nfinal X = {sol.X[-1]:.5f}: the 0.25 queue built during the slow start")
print("is frozen forever - critical load leaves no capacity to drain it and")
print("there is no abandonment to shed it")
print(f"mass-balance residual over the whole run: {sol.mass_balance_residual():.2e}")
