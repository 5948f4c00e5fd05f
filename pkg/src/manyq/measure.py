"""Finite point measures and density measures on [0, H).

``PointMeasure`` is a finite sum of unit Dirac atoms: the concrete form of
the in-service age measure and the potential queue measure of an N-server
system.  ``SurvivalMeasure`` and ``GridDensityMeasure`` carry absolutely
continuous mass: survival-weighted equilibrium profiles and tabulated
densities respectively.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, _bisect_increasing

__all__ = ["PointMeasure", "SurvivalMeasure", "GridDensityMeasure", "equilibrium_measure"]


class PointMeasure:
    """Sorted multiset of nonnegative atom locations, one unit of mass each."""

    __slots__ = ("_atoms",)

    def __init__(self, atoms=()):
        a = sorted(float(x) for x in atoms)
        if a and a[0] < 0:
            raise ValueError(f"atoms must be nonnegative, got {a[0]}")
        self._atoms = a

    @property
    def atoms(self):
        return tuple(self._atoms)

    @property
    def total_mass(self):
        return len(self._atoms)

    def __len__(self):
        return len(self._atoms)

    def __eq__(self, other):
        return isinstance(other, PointMeasure) and self._atoms == other._atoms

    def __repr__(self):
        return f"PointMeasure({self._atoms})"

    def shift(self, dt):
        """All atoms translated by dt >= 0 (deterministic aging)."""
        if dt < 0:
            raise ValueError("shift must be nonnegative")
        m = PointMeasure.__new__(PointMeasure)
        m._atoms = [x + dt for x in self._atoms]
        return m

    def add_atom(self, x):
        if x < 0:
            raise ValueError("atom must be nonnegative")
        m = PointMeasure.__new__(PointMeasure)
        m._atoms = list(self._atoms)
        bisect.insort(m._atoms, float(x))
        return m

    def remove_atom(self, x):
        i = bisect.bisect_left(self._atoms, x)
        if i == len(self._atoms) or self._atoms[i] != x:
            raise ValueError(f"atom {x} not present")
        m = PointMeasure.__new__(PointMeasure)
        m._atoms = self._atoms[:i] + self._atoms[i + 1 :]
        return m

    def tail_mass(self, c):
        """Number of atoms in [c, H)."""
        return len(self._atoms) - bisect.bisect_left(self._atoms, c)

    def cumulative(self, x):
        """Mass of [0, x] (closed right endpoint)."""
        return bisect.bisect_right(self._atoms, x)

    def quantile(self, q):
        """inf{x >= 0 : mass of [0, x] >= q}; 0 for q = 0.

        With unit atoms this is the ceil(q)-th order statistic.
        """
        if q < 0:
            raise ValueError("quantile level must be nonnegative")
        if q == 0:
            return 0.0
        n = len(self._atoms)
        k = int(np.ceil(q))
        if k > n:
            raise ValueError(f"quantile level {q} exceeds total mass {n}")
        return self._atoms[k - 1]

    def to_csv_row(self):
        return ",".join(repr(x) for x in self._atoms)

    def histogram(self, bin_edges):
        counts, _ = np.histogram(self._atoms, bins=bin_edges)
        return counts


@dataclass(frozen=True)
class SurvivalMeasure:
    """Measure with density scale * (1 - G(x)) on [0, H) for a lifetime law G.

    With scale = c this is c * mean(G) total mass; scale 1/mean gives the
    equilibrium probability law of G.
    """

    dist: Distribution
    scale: float

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")
        if self.scale > 0 and not np.isfinite(self.dist.mean):
            raise ValueError("survival measure of an infinite-mean law has infinite mass")

    @property
    def total_mass(self):
        return self.scale * self.dist.mean if self.scale > 0 else 0.0

    def density(self, x):
        return self.scale * self.dist.sf(x)

    def cumulative(self, x):
        return self.scale * self.dist.integrated_sf(x)

    def quantile(self, q):
        """Generalized inverse of the cumulative; leftmost point on flats."""
        if q < 0:
            raise ValueError("quantile level must be nonnegative")
        if q == 0:
            return 0.0
        if q > self.total_mass * (1 + 1e-12):
            raise ValueError(f"quantile level {q} exceeds total mass {self.total_mass}")
        q = min(q, self.total_mass)
        return _bisect_increasing(lambda x: self.cumulative(x) / self.total_mass, q / self.total_mass, self.dist)

    def on_grid(self, x):
        x = np.asarray(x, dtype=float)
        return GridDensityMeasure(x, self.scale * self.dist.sf(x))


class GridDensityMeasure:
    """Nonnegative density tabulated on an increasing grid; trapezoidal mass."""

    def __init__(self, x, density):
        x = np.asarray(x, dtype=float)
        density = np.asarray(density, dtype=float)
        if x.ndim != 1 or x.shape != density.shape or len(x) < 2:
            raise ValueError("grid and density must be matching 1-d arrays")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(density < 0):
            raise ValueError("density must be nonnegative")
        self.x = x
        self.density = density
        seg = 0.5 * (density[:-1] + density[1:]) * np.diff(x)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def total_mass(self):
        return float(self._cum[-1])

    def cumulative(self, x):
        out = np.interp(x, self.x, self._cum)
        return float(out) if np.ndim(x) == 0 else out

    def quantile(self, q):
        """inf{x : cumulative(x) >= q}; flat stretches return their left edge."""
        if q < 0:
            raise ValueError("quantile level must be nonnegative")
        if q == 0:
            return 0.0
        if q > self.total_mass * (1 + 1e-12):
            raise ValueError(f"quantile level {q} exceeds total mass {self.total_mass}")
        q = min(q, self.total_mass)
        i = int(np.searchsorted(self._cum, q, side="left"))
        if i == 0:
            return float(self.x[0])
        c0, c1 = self._cum[i - 1], self._cum[i]
        if c1 == c0:
            return float(self.x[i - 1])
        # trapezoidal cumulative is quadratic within the cell; linear
        # interpolation keeps the O(dx^2) grid error
        frac = (q - c0) / (c1 - c0)
        return float(self.x[i - 1] + frac * (self.x[i] - self.x[i - 1]))

    def histogram(self, bin_edges):
        edges = np.asarray(bin_edges, dtype=float)
        return np.diff(self.cumulative(edges))


def equilibrium_measure(d: Distribution, scale: float) -> SurvivalMeasure:
    """Measure with density scale * (1 - G(x)): total mass scale * mean(G)."""
    return SurvivalMeasure(d, scale)
