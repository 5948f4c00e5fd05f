"""Many-server queue toolkit: simulation, fluid model, invariant states.

The library follows one N-server FCFS non-idling queue with generally
distributed interarrival, service, and patience times, through four views:

- ``engine``: exact event-driven simulation of the measure-valued state
  (arrival recurrence time, customer count, in-service age measure,
  potential queue measure) with per-event identity auditing;
- ``fluid``: the deterministic per-server dynamics that emerge as the
  number of servers grows;
- ``invariant``: the rest points of those dynamics and when they are unique;
- ``stationary`` / ``harness``: long-run estimates, exact Markovian
  references, and the experiments comparing the two orders of limits.
"""

from .distributions import (
    Distribution,
    Erlang,
    EquilibriumDistribution,
    Exponential,
    PiecewiseLinearCdf,
    Shifted,
    Uniform,
    equilibrium_interarrival,
    make_distribution,
)
from .engine import SystemState, audit, head_of_line_wait, init_state, run
from .fluid import (
    AtomicInitial,
    EquilibriumInitial,
    EtaFlow,
    FluidInput,
    FluidSolution,
    ZeroMeasure,
    from_grid,
    renewal_density,
    solve_entry_renewal,
    solve_fluid,
)
from .harness import convergence_study, ensemble_estimate, interchange_demo
from .invariant import compute_B_lambda, invariant_manifold, verify_fixed_point
from .measure import GridDensityMeasure, PointMeasure, SurvivalMeasure, equilibrium_measure
from .rng import ReplicationStreams, replication_streams
from .stationary import (
    StationaryEstimate,
    estimate_stationary,
    littles_law_check,
    mean_eta_formula,
    mean_nu_formula,
    mmn_stationary_pmf,
    mmn_tail,
    representation_check,
    tightness_check,
    tightness_profile,
)

__version__ = "0.1.0"
