import numpy as np
import pytest

from survbench.errors import ConfigError
from survbench.estimators import aalen_johansen
from survbench.grid import TimeGrid
from survbench.simulate import (HazardSpec, SimConfig, analytic_cif, simulate_cohort,
                                trajectory_summary)


def exp_config(n, lam1=0.1, lam2=0.05, seed=0, censor_rate=0.0, d=2, horizon=80.0):
    z3 = np.zeros(3 * d)
    return SimConfig(n=n, d=d, seed=seed, censor_rate=censor_rate, horizon=horizon,
                     alpha01=HazardSpec(1.0, 1.0 / lam1, np.zeros(2), z3),
                     alpha02=HazardSpec(1.0, 1.0 / lam2, np.zeros(2), z3),
                     alpha12=HazardSpec(1.0, 10.0, np.zeros(2), z3))


def outcome_arrays(cohort):
    times = np.array([s.outcome.time for s in cohort.sequences])
    causes = np.array([s.outcome.cause for s in cohort.sequences])
    return times, causes


def test_competing_exponentials_cif_closed_form():
    cohort = simulate_cohort(exp_config(100_000))
    times, causes = outcome_arrays(cohort)
    f1, _ = aalen_johansen(times, causes)
    # (lam1 / (lam1+lam2)) * (1 - exp(-0.15 t)); 0.5179 at t = 10
    for t in (2.0, 5.0, 10.0, 20.0):
        expect = (0.1 / 0.15) * (1.0 - np.exp(-0.15 * t))
        assert abs(f1(t) - expect) < 0.01
    assert f1(10.0) == pytest.approx(0.5179, abs=0.01)


def test_heavy_censoring_dominates():
    cohort = simulate_cohort(exp_config(2000, censor_rate=100.0, seed=1))
    _, causes = outcome_arrays(cohort)
    assert np.mean(causes == 0) >= 0.99


def test_same_seed_identical():
    a = simulate_cohort(exp_config(50, seed=3))
    b = simulate_cohort(exp_config(50, seed=3))
    for sa, sb in zip(a.sequences, b.sequences):
        np.testing.assert_array_equal(sa.matrix, sb.matrix)
        assert sa.outcome == sb.outcome


def test_invalid_hazard_raises():
    with pytest.raises(ConfigError):
        HazardSpec(0.0, 1.0, np.zeros(2), np.zeros(6))
    with pytest.raises(ConfigError):
        exp_config(0)


def test_analytic_cif_basics():
    cfg = exp_config(10)
    x = np.zeros(2 + 3 * 2)
    assert analytic_cif(cfg, 1, x, 0.0) == 0.0
    assert analytic_cif(cfg, 1, x, 10.0) == pytest.approx(0.51791, abs=1e-4)
    total = analytic_cif(cfg, 1, x, 1e6) + analytic_cif(cfg, 2, x, 1e6)
    assert total == pytest.approx(1.0, abs=1e-9)
    ts = np.linspace(0, 40, 30)
    vals = analytic_cif(cfg, 2, x, ts)
    assert np.all(np.diff(vals) >= 0) and np.all((vals >= 0) & (vals <= 1))


def test_analytic_cif_quadrature_matches_closed_form_shape1():
    # force the quadrature path with an epsilon-different shape
    d = 1
    z3 = np.zeros(3)
    cfg_q = SimConfig(n=1, d=d, horizon=50.0,
                      alpha01=HazardSpec(1.0 + 1e-12, 10.0, np.zeros(2), z3),
                      alpha02=HazardSpec(1.0, 20.0, np.zeros(2), z3),
                      alpha12=HazardSpec(1.0, 10.0, np.zeros(2), z3))
    x = np.zeros(2 + 3)
    lam1, lam2 = 0.1, 0.05
    for t in (1.0, 5.0, 15.0):
        expect = lam1 / (lam1 + lam2) * (1 - np.exp(-(lam1 + lam2) * t))
        assert analytic_cif(cfg_q, 1, x, t) == pytest.approx(expect, abs=1e-8)


def test_empirical_aj_matches_analytic_supnorm():
    cfg = exp_config(50_000, seed=5)
    cohort = simulate_cohort(cfg)
    times, causes = outcome_arrays(cohort)
    cifs = aalen_johansen(times, causes)
    x = np.zeros(2 + 3 * 2)
    grid = np.linspace(1.0, 40.0, 25)
    for cause, f in enumerate(cifs, start=1):
        gap = np.max(np.abs(f(grid) - analytic_cif(cfg, cause, x, grid)))
        assert gap < 0.01


def test_slope_effect_raises_event1_rate():
    d = 2
    gamma = np.zeros(3 * d)
    gamma[2 * d] = 1.5  # slope of feature 0
    base = exp_config(20_000, seed=7, d=d, horizon=40.0)
    boosted = SimConfig(n=20_000, d=d, seed=7, horizon=40.0, drift_std=0.3,
                        alpha01=HazardSpec(1.0, 10.0, np.zeros(2), gamma),
                        alpha02=base.alpha02, alpha12=base.alpha12)
    cohort = simulate_cohort(boosted)
    slopes, hosp = [], []
    for s in cohort.sequences:
        slopes.append(trajectory_summary(np.where(s.mask, s.matrix, 0.0))[2 * d])
        hosp.append(s.outcome.cause == 1)
    slopes, hosp = np.array(slopes), np.array(hosp)
    rate_pos = hosp[slopes > 0].mean()
    rate_neg = hosp[slopes <= 0].mean()
    assert rate_pos > rate_neg + 0.05


def test_outcome_times_positive_and_second_events_ordered():
    cfg = exp_config(3000, seed=11, censor_rate=0.03)
    cohort = simulate_cohort(cfg)
    for s in cohort.sequences:
        assert s.outcome.time > 0
        if s.outcome.second_event is not None:
            assert s.outcome.cause == 1
            assert s.outcome.second_event.time > 0


def test_trajectory_summary_constant_slope_zero():
    summary = trajectory_summary(np.full((6, 3), 2.5))
    d = 3
    np.testing.assert_allclose(summary[:d], 2.5)
    np.testing.assert_allclose(summary[d:2 * d], 2.5)
    np.testing.assert_allclose(summary[2 * d:], 0.0, atol=1e-15)
