"""The two orders of limits (many servers vs. long run) need not commute.

Family of systems: the N-th has Markovian arrivals at rate N - 1, unit
exponential service, and patience that never fires before a wait of 3.
Stationary waits stay tiny, so no customer ever reneges and each system is
an exact birth-death queue: its stationary law keeps only a bounded
fraction of mass above 3N/2 customers.  But the fluid model started with
two customers per server never drains - the head-of-line wait stays below
the patience gap, so the reneging mechanism never engages and X sits at 2
forever.  Long-run-then-scale and scale-then-long-run give different
answers.

Run:  python3 demos/demo_interchange.py
"""

from manyq import interchange_demo

res = interchange_demo(n_servers_list=(10, 100, 1000))

print("stationary laws (exact birth-death computation):")
print(f"{'N':>5} {'P(X >= 3N/2)':>13} {'geometric bound':>16} {'E[X]/N':>8}")
for r in res["rows"]:
    print(
        f"{r['N']:5d} {r['tail_exact']:13.5f} {r['tail_bound']:16.5f} "
        f"{r['x_scaled_mean']:8.4f}"
    )
print(f"  bound tends to exp(-1/2) = {res['bound_limit']:.5f}: tails stay bounded away from 1")

f = res["fluid"]
print("\nfluid model from two customers per server:")
print(f"  X after horizon = {f['X_end']:.6f}  (max deviation from 2: {f['max_dev_from_2']:.2e})")
print(f"  total mass reneged = {f['total_reneged']:.2e}")

print("\nmass above the 3/2-per-server threshold:")
print(f"  long-run fluid state keeps     {res['fluid_mass_above_threshold']:.3f}")
print(f"  stationary laws keep at most   {res['stationary_mass_above_threshold']:.3f}")
print(f"  gap between the two limits >=  {res['limit_gap']:.3f}")
