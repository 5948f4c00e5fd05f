"""Seed-stream splitting for reproducible multi-replication experiments.

One root seed fans out deterministically:

    root -> replication i -> (arrival stream, service stream, patience stream)

Replication streams are numpy ``SeedSequence`` children, so replications can
run in any order (or in parallel) and still produce identical draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ReplicationStreams", "replication_streams"]


@dataclass
class ReplicationStreams:
    arrivals: np.random.Generator
    services: np.random.Generator
    patiences: np.random.Generator


def replication_streams(root_seed: int, replication: int) -> ReplicationStreams:
    """Three independent generators for one replication of one experiment."""
    ss = np.random.SeedSequence(entropy=root_seed, spawn_key=(replication,))
    kids = ss.spawn(3)
    return ReplicationStreams(
        arrivals=np.random.default_rng(kids[0]),
        services=np.random.default_rng(kids[1]),
        patiences=np.random.default_rng(kids[2]),
    )
