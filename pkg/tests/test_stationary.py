import numpy as np
import pytest

from manyq.distributions import Exponential
from manyq.stationary import (
    TimeAverageCollector,
    estimate_stationary,
    littles_law_check,
    mean_eta_formula,
    mmn_stationary_pmf,
    mmn_tail,
    tightness_check,
)


def test_mmn_pmf_two_servers_geometric():
    # N = 2, lam = 1: p0 = 1/3, p_k = (1/3) (1/2)^{k-1} for k >= 1
    pmf = mmn_stationary_pmf(2, 1.0, 20)
    assert pmf[0] == pytest.approx(1.0 / 3.0, abs=1e-12)
    for k in range(1, 21):
        assert pmf[k] == pytest.approx((1.0 / 3.0) * 0.5 ** (k - 1), abs=1e-12)


def test_mmn_pmf_detailed_balance_and_normalization():
    n, lam = 4, 3.0
    pmf = mmn_stationary_pmf(n, lam, 400)
    assert np.sum(pmf) == pytest.approx(1.0, abs=1e-10)
    for k in range(100):
        assert lam * pmf[k] == pytest.approx(min(k + 1, n) * pmf[k + 1], abs=1e-12)


def test_mmn_tail_matches_direct_sum():
    n, lam = 4, 3.0
    pmf = mmn_stationary_pmf(n, lam, 4000)
    for m in (4, 6, 10):
        assert mmn_tail(n, lam, m) == pytest.approx(float(np.sum(pmf[m:])), abs=1e-10)
    with pytest.raises(ValueError):
        mmn_tail(4, 3.0, 2)
    with pytest.raises(ValueError):
        mmn_stationary_pmf(2, 2.0, 10)


def test_mean_eta_formula_poisson_empty_start():
    # Poisson rate 1, exp(1) patience: E[eta mass at t] = 1 - e^{-t}
    pat = Exponential(1.0)
    ts = np.linspace(0.0, 3.0, 3001)
    f_one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    val = mean_eta_formula(None, ts, ts, pat, f_one, 3.0)
    assert val == pytest.approx(1.0 - np.exp(-3.0), abs=1e-6)
    assert mean_eta_formula(None, ts, ts, pat, f_one, 0.0) == 0.0
    # tail function with threshold beyond t contributes nothing
    f_tail = lambda x: (np.asarray(x, dtype=float) >= 5.0).astype(float)
    assert mean_eta_formula(None, ts, ts, pat, f_tail, 3.0) == 0.0


def test_mean_eta_formula_initial_term():
    pat = Exponential(1.0)
    f_one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    # two atoms, no inflow: mass decays by the conditional survival ratio
    val = mean_eta_formula(([0.5, 1.0], [1.0, 1.0]), [0.0], [0.0], pat, f_one, 2.0)
    assert val == pytest.approx(2.0 * np.exp(-2.0), abs=1e-12)


def test_collector_batch_splitting():
    col = TimeAverageCollector(batch_length=1.0)
    col.update(0.6, 2, 1.0, 3.0, 1)
    col.update(0.9, 4, 2.0, 5.0, 2)  # straddles the boundary at 1.0
    col.update(0.5, 0, 0.0, 0.0, 0)
    assert len(col.batches) == 2
    bm = col.batch_means()
    assert bm[0, 0] == pytest.approx(0.6 * 2 + 0.4 * 4)  # first batch X mean
    assert bm[1, 0] == pytest.approx(0.5 * 4 + 0.5 * 0)
    assert col.total_time == pytest.approx(2.0)
    assert col.sum_x == pytest.approx(0.6 * 2 + 0.9 * 4)


def test_estimate_stationary_reproducible_and_calibrated():
    kw = dict(horizon=4000.0, seed=11, replication=0, track_histogram=True)
    a = estimate_stationary(2, Exponential(1.0), Exponential(1.0), **kw)
    b = estimate_stationary(2, Exponential(1.0), Exponential(1.0), **kw)
    assert a.mean == b.mean and a.events == b.events
    assert a.warmup == pytest.approx(800.0)

    # exact stationary mean of X for N = 2, lam = 1 is 4/3
    pmf = mmn_stationary_pmf(2, 1.0, 200)
    exact = float(np.sum(np.arange(201) * pmf))
    assert abs(a.mean["X"] - exact) <= max(4 * a.halfwidth["X"], 0.1)
    assert a.histogram_pmf(0)[0] == pytest.approx(1.0 / 3.0, abs=0.05)
    assert a.scaled("X") == pytest.approx(a.mean["X"] / 2)


def test_estimate_stationary_validates_warmup():
    with pytest.raises(ValueError):
        estimate_stationary(1, Exponential(1.0), Exponential(1.0), horizon=10.0, warmup=10.0)


def test_littles_law_check_arithmetic():
    out = littles_law_check(2.2, 2.0, 1.0)
    assert out["expected"] == pytest.approx(2.0)
    assert out["deviation"] == pytest.approx(0.2)
    assert out["relative"] == pytest.approx(0.1)


def test_tightness_self_consistency():
    out = tightness_check(
        2, Exponential(1.5), Exponential(1.0), Exponential(1.0),
        c=0.5, horizon=2000.0, warmup=200.0, n_snapshots=300, seed=3,
    )
    assert abs(out["diff"]) <= 4 * out["diff_se"] + 0.02
    assert out["lhs"] > 0.0
