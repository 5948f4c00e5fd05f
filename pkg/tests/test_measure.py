import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manyq.distributions import Exponential, PiecewiseLinearCdf
from manyq.measure import GridDensityMeasure, PointMeasure, SurvivalMeasure, equilibrium_measure


def test_shift_add_remove():
    m = PointMeasure([0.2, 0.7])
    assert m.shift(0.3).atoms == (0.5, 1.0)
    assert PointMeasure([]).shift(1.0).atoms == ()
    assert PointMeasure([0.0]).shift(0.0).atoms == (0.0,)
    assert m.add_atom(0.0).atoms == (0.0, 0.2, 0.7)
    assert m.add_atom(0.0).remove_atom(0.7).atoms == (0.0, 0.2)
    with pytest.raises(ValueError):
        m.remove_atom(0.9)
    with pytest.raises(ValueError):
        m.shift(-1.0)


def test_tail_mass():
    m = PointMeasure([0.2, 0.7, 1.4])
    assert m.tail_mass(0.7) == 2  # closed left endpoint
    assert m.tail_mass(0.0) == m.total_mass
    assert PointMeasure([]).tail_mass(3.0) == 0


def test_quantile_order_statistics():
    m = PointMeasure([0.2, 0.7])
    assert m.quantile(1) == 0.2
    assert m.quantile(2) == 0.7
    assert m.quantile(1.5) == 0.7  # fractional level rounds up to next atom
    assert m.quantile(0) == 0.0
    with pytest.raises(ValueError):
        m.quantile(3)


@given(
    atoms=st.lists(st.floats(0.0, 10.0), min_size=0, max_size=25),
    data=st.data(),
)
@settings(max_examples=300, deadline=None)
def test_quantile_galois_property(atoms, data):
    m = PointMeasure(atoms)
    if m.total_mass:
        q = data.draw(st.floats(1e-9, float(m.total_mass)))
        assert m.cumulative(m.quantile(q)) >= q
    x = data.draw(st.floats(0.0, 12.0))
    c = m.cumulative(x)
    if c > 0:
        assert m.quantile(c) <= x


# dyadic rationals keep every sum exact, so the identity is float-clean
_DYADIC = st.integers(0, 640).map(lambda k: k / 64.0)


@given(
    atoms=st.lists(_DYADIC, min_size=0, max_size=15),
    dt=_DYADIC,
    c=_DYADIC,
)
@settings(max_examples=200, deadline=None)
def test_shift_commutes_with_tail_mass(atoms, dt, c):
    m = PointMeasure(atoms)
    assert m.shift(dt).tail_mass(c + dt) == m.tail_mass(c)


def test_survival_measure_exponential():
    # density 2 e^{-x}: cumulative at ln 2 is 2 (1 - 1/2) = 1
    m = SurvivalMeasure(Exponential(1.0), 2.0)
    assert m.total_mass == pytest.approx(2.0)
    assert m.cumulative(np.log(2.0)) == pytest.approx(1.0, abs=1e-12)
    assert m.quantile(1.0) == pytest.approx(np.log(2.0), abs=1e-8)
    assert m.quantile(0.0) == 0.0
    with pytest.raises(ValueError):
        m.quantile(2.5)


def test_survival_measure_flat_patience_cumulative():
    flat = PiecewiseLinearCdf(((0.0, 0.0), (1.0, 0.5), (2.0, 0.5), (3.0, 1.0)))
    m = equilibrium_measure(flat, 2.0)
    # survival is 1 - x/2 on [0,1], 1/2 on [1,2], then linear to 0 at 3
    assert m.cumulative(1.0) == pytest.approx(1.5, abs=1e-12)
    assert m.cumulative(2.0) == pytest.approx(2.5, abs=1e-12)
    assert m.total_mass == pytest.approx(3.0, abs=1e-12)


def test_grid_density_measure_quantile_flats():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    dens = np.array([1.0, 1.0, 0.0, 0.0])  # mass only on [0, 1.5] effectively
    m = GridDensityMeasure(x, dens)
    assert m.total_mass == pytest.approx(1.5)
    assert m.quantile(1.0) == pytest.approx(1.0, abs=1e-9)
    # a level inside the flat stretch of the cumulative returns its left edge
    assert m.quantile(1.5) <= 2.0 + 1e-9
    assert m.cumulative(0.5) == pytest.approx(0.5)


def test_grid_density_validation():
    with pytest.raises(ValueError):
        GridDensityMeasure([0.0, 1.0], [1.0, -0.5])
    with pytest.raises(ValueError):
        GridDensityMeasure([0.0, 0.0], [1.0, 1.0])


def test_histograms():
    m = PointMeasure([0.1, 0.4, 1.2])
    counts = m.histogram([0.0, 0.5, 1.0, 1.5])
    assert list(counts) == [2, 0, 1]
    sm = SurvivalMeasure(Exponential(1.0), 1.0).on_grid(np.linspace(0, 5, 501))
    h = sm.histogram([0.0, 1.0, 2.0])
    assert h[0] == pytest.approx(1.0 - np.exp(-1.0), abs=1e-4)
