"""Rest points of the fluid model, and when there is more than one.

For arrival rate lam at or above capacity, the admissible long-run total
masses form a closed interval B(lam).  With strictly increasing patience
hazard that interval is a single point x*; with a patience law whose
distribution function has a flat stretch, a whole interval of rest points
appears and the fluid model simply stays wherever it starts inside it.

Run:  python3 demos/demo_invariant_manifold.py
"""

from manyq import (
    Exponential,
    PiecewiseLinearCdf,
    invariant_manifold,
    verify_fixed_point,
)

service = Exponential(1.0)

print("exponential(1) patience, strictly increasing distribution function:")
for lam in (0.5, 1.0, 2.0, 3.0):
    inv = invariant_manifold(lam, service, Exponential(1.0))
    print(
        f"  lam = {lam:3.1f}: {inv['regime']:13s} B = [{inv['b_l']:.4f}, {inv['b_r']:.4f}]"
        f"  unique = {inv['unique']}"
    )

flat = PiecewiseLinearCdf(((0.0, 0.0), (1.0, 0.5), (2.0, 0.5), (3.0, 1.0)))
inv = invariant_manifold(2.0, service, flat)
print("\npatience with a flat stretch (no mass on waits in [1, 2]), lam = 2:")
print(f"  B = [{inv['b_l']:.4f}, {inv['b_r']:.4f}]  unique = {inv['unique']}")

print("\nintegrating the fluid model from candidate rest points (lam = 2, exp patience):")
for x in (2.0, 2.4):
    rep = verify_fixed_point(2.0, service, Exponential(1.0), x, horizon=10.0)
    verdict = "at rest" if rep["x_defect"] < 1e-2 else "drifts away"
    print(f"  start X = {x:3.1f}: max |X - start| = {rep['x_defect']:.4f}  -> {verdict}")
