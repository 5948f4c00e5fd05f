"""Lifetime distributions: cdf, density, hazard, mean, and inverse-cdf sampling.

Supported families are the ones a GI/G/N+G scenario file can declare:
exponential, Erlang, uniform, piecewise-linear cdf, and a shifted-support
wrapper (used e.g. for patience laws supported away from zero).  All laws
must have a density on their support; atomic laws are rejected.
"""

from __future__ import annotations

import bisect
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "Distribution",
    "Exponential",
    "Erlang",
    "Uniform",
    "PiecewiseLinearCdf",
    "Shifted",
    "EquilibriumDistribution",
    "make_distribution",
    "equilibrium_interarrival",
]

_SF_CLAMP = 1e-12


class Distribution:
    """Base class for a nonnegative lifetime law with a density.

    Subclasses provide ``cdf``, ``pdf``, ``integrated_sf`` (the integral of
    the survival function from 0 to x), ``ppf``, ``mean`` and
    ``support_end``.  Everything else derives from those.
    """

    mean: float
    support_end: float  # H = sup{x : cdf(x) < 1}, may be inf

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def integrated_sf(self, x):
        """Integral of 1 - cdf over [0, x]."""
        raise NotImplementedError

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def hazard(self, x):
        """Hazard rate pdf(x) / sf(x); only defined where cdf(x) < 1."""
        s = self.sf(x)
        if np.ndim(x) == 0:
            if s <= 0.0:
                raise ValueError(f"hazard undefined at x={x}: survival is zero")
            return self.pdf(x) / s
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0.0):
            raise ValueError("hazard undefined where survival is zero")
        return np.asarray(self.pdf(x), dtype=float) / s

    def sample(self, rng):
        """One inverse-cdf draw using ``rng`` (numpy Generator)."""
        return self.ppf(rng.random())

    def sample_n(self, rng, n):
        return self.ppf(rng.random(n))

    def conditional_residual(self, age, rng):
        """Residual lifetime beyond ``age``, given survival to ``age``.

        Sampled by inverse cdf of G(age + .) / (1 - G(age)).
        """
        g = self.cdf(age)
        if g >= 1.0:
            raise ValueError(f"no residual life beyond age {age}: cdf is 1")
        u = rng.random()
        return self.ppf(g + u * (1.0 - g)) - age


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"exponential rate must be positive, got {self.rate}")

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def support_end(self):
        return np.inf

    def cdf(self, x):
        return -np.expm1(-self.rate * np.asarray(x, dtype=float)) if np.ndim(x) else -np.expm1(-self.rate * x)

    def sf(self, x):
        return np.exp(-self.rate * x)

    def pdf(self, x):
        return self.rate * np.exp(-self.rate * x)

    def hazard(self, x):
        return self.rate if np.ndim(x) == 0 else np.full(np.shape(x), self.rate)

    def ppf(self, u):
        return -np.log1p(-u) / self.rate

    def integrated_sf(self, x):
        return -np.expm1(-self.rate * x) / self.rate


@dataclass(frozen=True)
class Erlang(Distribution):
    shape: int
    rate: float

    def __post_init__(self):
        if not (isinstance(self.shape, (int, np.integer)) and self.shape >= 1):
            raise ValueError(f"erlang shape must be a positive integer, got {self.shape}")
        if not self.rate > 0:
            raise ValueError(f"erlang rate must be positive, got {self.rate}")

    @property
    def mean(self):
        return self.shape / self.rate

    @property
    def support_end(self):
        return np.inf

    def cdf(self, x):
        return special.gammainc(self.shape, self.rate * np.maximum(x, 0.0))

    def pdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        r = self.rate
        k = self.shape
        return r * (r * x) ** (k - 1) * np.exp(-r * x) / special.factorial(k - 1)

    def ppf(self, u):
        return special.gammaincinv(self.shape, u) / self.rate

    def integrated_sf(self, x):
        # sf(y) = sum_{j<k} Pois(j; r y); each term integrates to gammainc(j+1, r x)/r
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for j in range(self.shape):
            total = total + special.gammainc(j + 1, self.rate * x)
        out = total / self.rate
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float
    b: float

    def __post_init__(self):
        if not (0 <= self.a < self.b):
            raise ValueError(f"uniform needs 0 <= a < b, got ({self.a}, {self.b})")

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    @property
    def support_end(self):
        return self.b

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.a) & (x <= self.b)
        out = np.where(inside, 1.0 / (self.b - self.a), 0.0)
        return float(out) if out.ndim == 0 else out

    def ppf(self, u):
        return self.a + u * (self.b - self.a)

    def integrated_sf(self, x):
        x = np.asarray(x, dtype=float)
        w = self.b - self.a
        below = np.minimum(x, self.a)
        y = np.clip(x - self.a, 0.0, w)
        mid = y - y * y / (2.0 * w)
        out = below + mid
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PiecewiseLinearCdf(Distribution):
    """Distribution declared by an ordered list of (x, cdf) knots.

    The cdf is linearly interpolated between knots; flat stretches give a
    density of zero there.  Knots must start at (0, 0), be nondecreasing,
    and end with cdf 1.
    """

    knots: tuple = field()

    def __post_init__(self):
        knots = tuple((float(x), float(p)) for x, p in self.knots)
        object.__setattr__(self, "knots", knots)
        xs = [x for x, _ in knots]
        ps = [p for _, p in knots]
        if len(knots) < 2:
            raise ValueError("piecewise cdf needs at least two knots")
        if xs[0] != 0.0 or ps[0] != 0.0:
            raise ValueError("piecewise cdf must start at (0, 0)")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("piecewise cdf x-knots must be strictly increasing")
        if any(b < a for a, b in zip(ps, ps[1:])):
            raise ValueError("piecewise cdf values must be nondecreasing")
        if abs(ps[-1] - 1.0) > 1e-12:
            raise ValueError(f"piecewise cdf must reach 1, got {ps[-1]}")
        object.__setattr__(self, "_xs", np.array(xs))
        object.__setattr__(self, "_ps", np.array(ps))
        # integral of the survival function, exact at knots (sf is linear between)
        sf = 1.0 - self._ps
        seg = 0.5 * (sf[:-1] + sf[1:]) * np.diff(self._xs)
        object.__setattr__(self, "_isf_knots", np.concatenate([[0.0], np.cumsum(seg)]))

    @property
    def mean(self):
        return float(self._isf_knots[-1])

    @property
    def support_end(self):
        ps = self._ps
        i = int(np.searchsorted(ps, 1.0 - 1e-15, side="left"))
        return float(self._xs[i])

    def cdf(self, x):
        out = np.interp(x, self._xs, self._ps, left=0.0, right=1.0)
        return float(out) if np.ndim(x) == 0 else out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self._xs, x, side="right") - 1, 0, len(self._xs) - 2)
        slope = (self._ps[idx + 1] - self._ps[idx]) / (self._xs[idx + 1] - self._xs[idx])
        out = np.where((x >= 0) & (x <= self._xs[-1]), slope, 0.0)
        return float(out) if out.ndim == 0 else out

    def hazard(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s = 1.0 - self.cdf(x)
        if np.any(s < _SF_CLAMP):
            warnings.warn("piecewise hazard: survival clamped at 1e-12", RuntimeWarning)
        out = self.pdf(x) / np.maximum(s, _SF_CLAMP)
        return float(out[0]) if scalar else out

    def ppf(self, u):
        """Generalized inverse inf{x : cdf(x) >= u}; flat stretches map to their left edge."""
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty_like(u)
        for k, uu in enumerate(u):
            i = int(np.searchsorted(self._ps, uu, side="left"))
            if i == 0:
                out[k] = 0.0
                continue
            i = min(i, len(self._ps) - 1)
            p0, p1 = self._ps[i - 1], self._ps[i]
            x0, x1 = self._xs[i - 1], self._xs[i]
            if p1 == p0:
                out[k] = x0
            else:
                out[k] = x0 + (uu - p0) / (p1 - p0) * (x1 - x0)
        return float(out[0]) if scalar else out

    def integrated_sf(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xs, ps, isf = self._xs, self._ps, self._isf_knots
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        x0 = xs[idx]
        sf0 = 1.0 - ps[idx]
        slope = (ps[idx + 1] - ps[idx]) / (xs[idx + 1] - xs[idx])
        d = np.clip(x - x0, 0.0, xs[idx + 1] - x0)
        out = isf[idx] + sf0 * d - 0.5 * slope * d * d
        out = np.where(x >= xs[-1], isf[-1], out)
        out = np.where(x <= 0, 0.0, out)
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class Shifted(Distribution):
    """Law of lo + V where V follows ``inner``; support starts at ``lo``."""

    lo: float
    inner: Distribution

    def __post_init__(self):
        if not self.lo >= 0:
            raise ValueError(f"shift must be nonnegative, got {self.lo}")

    @property
    def mean(self):
        return self.lo + self.inner.mean

    @property
    def support_end(self):
        return self.lo + self.inner.support_end

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= self.lo, 0.0, self.inner.cdf(np.maximum(x - self.lo, 0.0)))
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.lo, 0.0, self.inner.pdf(np.maximum(x - self.lo, 0.0)))
        return float(out) if out.ndim == 0 else out

    def hazard(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.lo, 0.0, self.inner.hazard(np.maximum(x - self.lo, 0.0)))
        return float(out) if out.ndim == 0 else out

    def ppf(self, u):
        return self.lo + self.inner.ppf(u)

    def integrated_sf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.minimum(x, self.lo) + self.inner.integrated_sf(np.maximum(x - self.lo, 0.0))
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EquilibriumDistribution(Distribution):
    """Equilibrium (stationary-excess) law of ``inner``.

    Its cdf is (1/mean) * integral_0^t of the inner survival function, which
    is the interarrival law that starts a renewal process in equilibrium.
    """

    inner: Distribution

    def __post_init__(self):
        if not np.isfinite(self.inner.mean):
            raise ValueError("equilibrium law requires a finite mean")

    @property
    def mean(self):
        # E[V^2]/(2 E[V]) in general; derived numerically only where needed
        raise NotImplementedError("equilibrium mean not needed; use cdf/ppf")

    @property
    def support_end(self):
        return self.inner.support_end

    def cdf(self, x):
        return self.inner.integrated_sf(x) / self.inner.mean

    def pdf(self, x):
        return self.inner.sf(x) / self.inner.mean

    def ppf(self, u):
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.array([_bisect_increasing(self.cdf, uu, self.inner) for uu in u])
        return float(out[0]) if scalar else out

    def integrated_sf(self, x):
        raise NotImplementedError


def _bisect_increasing(f, target, dist, xtol=1e-12):
    """Leftmost x >= 0 with f(x) >= target, for nondecreasing f with f(0)=0."""
    if target <= 0.0:
        return 0.0
    if target > 1.0:
        raise ValueError(f"target {target} above 1")
    hi = dist.support_end
    if not np.isfinite(hi):
        hi = max(2.0 * dist.mean, 1.0)
        while f(hi) < target:
            hi *= 2.0
            if hi > 1e18:
                raise ValueError("bisection bracket exhausted")
    lo = 0.0
    while hi - lo > xtol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def make_distribution(spec) -> Distribution:
    """Build a Distribution from a declarative spec.

    ``spec`` is a mapping with a ``kind`` key:

    - ``{"kind": "exponential", "rate": r}``
    - ``{"kind": "erlang", "shape": k, "rate": r}``
    - ``{"kind": "uniform", "a": a, "b": b}``
    - ``{"kind": "piecewise", "knots": [[x, cdf], ...]}``
    - ``{"kind": "shifted", "lo": c, "inner": <spec>}``

    Deterministic (atomic) laws are rejected: every supported kind has a
    density on its support.
    """
    if not isinstance(spec, dict):
        raise ValueError(f"distribution spec must be a mapping, got {type(spec).__name__}")
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "exponential":
        return _take(Exponential, spec, ["rate"])
    if kind == "erlang":
        return _take(Erlang, spec, ["shape", "rate"])
    if kind == "uniform":
        return _take(Uniform, spec, ["a", "b"])
    if kind == "piecewise":
        knots = spec.pop("knots", None)
        _reject_extras("piecewise", spec)
        if knots is None:
            raise ValueError("piecewise spec needs 'knots'")
        return PiecewiseLinearCdf(tuple(tuple(k) for k in knots))
    if kind == "shifted":
        lo = spec.pop("lo", None)
        inner = spec.pop("inner", None)
        _reject_extras("shifted", spec)
        if lo is None or inner is None:
            raise ValueError("shifted spec needs 'lo' and 'inner'")
        return Shifted(float(lo), make_distribution(inner))
    if kind == "deterministic":
        raise ValueError("deterministic (atomic) laws are not supported: a density is required")
    raise ValueError(f"unknown distribution kind: {kind!r}")


def _take(cls, spec, names):
    kwargs = {}
    for n in names:
        if n not in spec:
            raise ValueError(f"{cls.__name__.lower()} spec needs {n!r}")
        kwargs[n] = spec.pop(n)
    _reject_extras(cls.__name__.lower(), spec)
    if "shape" in kwargs:
        kwargs["shape"] = int(kwargs["shape"])
    return cls(**{k: (float(v) if k != "shape" else v) for k, v in kwargs.items()})


def _reject_extras(kind, leftover):
    if leftover:
        raise ValueError(f"unknown keys in {kind} spec: {sorted(leftover)}")


def equilibrium_interarrival(d: Distribution) -> Distribution:
    """Interarrival law F0 that makes a renewal process time-stationary.

    F0(t) = lambda * integral_0^t (1 - F(y)) dy, with lambda = 1/mean(F).
    For the exponential this is the exponential itself.
    """
    if not np.isfinite(d.mean):
        raise ValueError("equilibrium interarrival requires a finite mean")
    if isinstance(d, Exponential):
        return d
    return EquilibriumDistribution(d)
