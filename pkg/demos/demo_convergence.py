"""Scaled stationary behavior approaching the fluid invariant state.

Simulates overloaded systems (1.5 arrivals per server per unit time,
exponential service and patience) for growing server counts N, and
compares the long-run average number in system per server against the
unique rest point x* of the fluid model.  The gap shrinks as N grows.

Takes a few minutes (the N = 10 system is run extra long so its
per-server noise does not dominate).

Run:  python3 demos/demo_convergence.py
"""

from manyq import Exponential, convergence_study

res = convergence_study(
    lam_bar=1.5,
    service=Exponential(1.0),
    patience=Exponential(1.0),
    n_servers_list=(10, 50, 200),
    seed=7,
)

inv = res["invariant"]
print(f"fluid invariant state: x* = {inv['x_star']:.4f} ({inv['regime']})")
print(f"{'N':>5} {'X/N':>8} {'±ci':>8} {'|X/N - x*|':>11} {'eta/N':>8}")
for r in res["rows"]:
    print(
        f"{r['N']:5d} {r['x_scaled']:8.4f} {r['x_halfwidth']:8.4f} "
        f"{r['x_star_gap']:11.4f} {r['eta_scaled']:8.4f}"
    )
print("\nthe per-server estimates close in on x* as N grows; the potential")
print("queue mass per server tracks lam_bar x mean patience = 1.5 throughout")
