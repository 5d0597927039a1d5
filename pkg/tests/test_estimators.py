import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from survbench.estimators import (StepFunction, aalen_johansen, aalen_johansen_curve,
                                  censoring_survival, jackknife_pseudo, kaplan_meier)
from survbench.grid import TimeGrid

from oracles import aj_oracle, censored_sample, km_oracle, pseudo_oracle


def test_step_function_lookup():
    f = StepFunction(np.array([1.0, 3.0]), np.array([0.5, 0.2]), init=1.0)
    assert f(0.5) == 1.0
    assert f(1.0) == 0.5
    assert f(2.9) == 0.5
    assert f(3.0) == 0.2
    assert f.before(1.0) == 1.0
    assert f.before(3.0) == 0.5
    assert f.before(10.0) == 0.2


def test_km_all_events():
    f = kaplan_meier([1, 2, 3], [1, 1, 1])
    np.testing.assert_allclose(f.values, [2 / 3, 1 / 3, 0.0])


def test_km_all_censored():
    f = kaplan_meier([1, 2, 3], [0, 0, 0])
    np.testing.assert_allclose(f.values, [1.0, 1.0, 1.0])


def test_km_hand_mix():
    f = kaplan_meier([1, 2, 3, 4], [1, 0, 1, 1])
    assert f(1) == pytest.approx(3 / 4)
    assert f(3) == pytest.approx(3 / 8)
    assert f(4) == pytest.approx(0.0)


def test_km_empty_raises():
    with pytest.raises(ValueError):
        kaplan_meier([], [])


def test_censoring_survival_no_censoring():
    g = censoring_survival([1, 2, 3], [1, 2, 1])
    np.testing.assert_allclose(g.values, 1.0)


def test_censoring_survival_hand():
    g = censoring_survival([1, 2, 3, 4], [1, 0, 2, 1])
    assert g(2) == pytest.approx(2 / 3)


def test_censoring_survival_all_censored():
    times = [1.0, 2.0, 3.0]
    g = censoring_survival(times, [0, 0, 0])
    np.testing.assert_allclose(g.values, [2 / 3, 1 / 3, 0.0])


def test_censoring_survival_event_censor_tie():
    # event at t=2 leaves the risk set before the censoring at t=2 is counted
    g = censoring_survival([1, 2, 2, 3], [0, 1, 0, 2])
    assert g(1) == pytest.approx(3 / 4)
    assert g(2) == pytest.approx(3 / 4 * (1 - 1 / 2))


def test_aalen_johansen_hand():
    f1, f2 = aalen_johansen([1, 2, 3, 4], [1, 0, 2, 1])
    assert f1(1) == pytest.approx(0.25)
    assert f2(3) == pytest.approx(0.375)
    assert f1(4) == pytest.approx(0.625)
    assert f1(4) + f2(4) == pytest.approx(1.0)


def test_aalen_johansen_single_cause_is_km_complement():
    rng = np.random.default_rng(0)
    times = rng.exponential(5, size=40) + 0.1
    (f1,) = aalen_johansen(times, np.ones(40, dtype=int), n_causes=1)
    km = kaplan_meier(times, np.ones(40, dtype=int))
    np.testing.assert_allclose(f1.values, 1.0 - km.values, atol=1e-12)


def test_jackknife_uncensored_is_indicator():
    times = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    causes = np.array([1, 2, 1, 1, 2])
    grid = TimeGrid(np.array([1.5, 3.5, 6.0]))
    pv = jackknife_pseudo(times, causes, grid)
    for i in range(5):
        for k, tk in enumerate(grid.edges):
            for c in (1, 2):
                expect = float(times[i] <= tk and causes[i] == c)
                assert pv[i, k, c - 1] == pytest.approx(expect, abs=1e-12)


def test_jackknife_mean_identity():
    rng = np.random.default_rng(3)
    times, causes = censored_sample(rng, 60)
    grid = TimeGrid(np.array([1.0, 2.0, 5.0, 8.0]))
    pv = jackknife_pseudo(times, causes, grid)
    curve = aalen_johansen_curve(times, causes, grid)
    np.testing.assert_allclose(pv.mean(axis=0), curve.values.T, atol=1e-10)


def test_jackknife_matches_brute_force_small():
    rng = np.random.default_rng(7)
    times, causes = censored_sample(rng, 10)
    grid = TimeGrid(np.array([1.0, 2.0, 4.0]))
    pv = jackknife_pseudo(times, causes, grid)
    np.testing.assert_allclose(pv, pseudo_oracle(times, causes, grid.edges), atol=1e-12)


def test_jackknife_needs_two():
    with pytest.raises(ValueError):
        jackknife_pseudo([1.0], [1], TimeGrid(np.array([1.0])))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(5, 60))
def test_estimator_invariants_fuzz(seed, n):
    rng = np.random.default_rng(seed)
    times, causes = censored_sample(rng, n)
    km = kaplan_meier(times, (causes > 0).astype(int))
    assert np.all(np.diff(km.values) <= 1e-12)
    assert np.all((km.values >= -1e-12) & (km.values <= 1 + 1e-12))
    g = censoring_survival(times, causes)
    assert np.all(np.diff(g.values) <= 1e-12)
    cifs = aalen_johansen(times, causes)
    total = np.zeros_like(cifs[0].values)
    for f in cifs:
        assert np.all(np.diff(f.values) >= -1e-12)
        assert np.all((f.values >= -1e-12) & (f.values <= 1 + 1e-12))
        total += f.values
    assert np.all(total <= 1 + 1e-9)
    # with no censoring the CIFs and the survivor partition the mass
    events = np.maximum(causes, 1)
    cif_nc = aalen_johansen(times, events)
    km_nc = kaplan_meier(times, np.ones_like(events))
    mass = sum(f.values for f in cif_nc) + km_nc.values
    np.testing.assert_allclose(mass, 1.0, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 40))
def test_aj_matches_oracle_fuzz(seed, n):
    rng = np.random.default_rng(seed)
    times, causes = censored_sample(rng, n, with_ties=bool(seed % 2))
    grid = TimeGrid(np.linspace(0.5, times.max() + 1, 7))
    curve = aalen_johansen_curve(times, causes, grid)
    np.testing.assert_allclose(curve.values, aj_oracle(times, causes, grid.edges),
                               atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 30))
def test_jackknife_matches_oracle_fuzz(seed, n):
    rng = np.random.default_rng(seed)
    times, causes = censored_sample(rng, n, with_ties=bool(seed % 2))
    grid = TimeGrid(np.linspace(1.0, times.max() + 1, 5))
    pv = jackknife_pseudo(times, causes, grid)
    np.testing.assert_allclose(pv, pseudo_oracle(times, causes, grid.edges), atol=1e-12)


def test_km_oracle_agrees():
    rng = np.random.default_rng(11)
    times, causes = censored_sample(rng, 50)
    km = kaplan_meier(times, (causes > 0).astype(int))
    for t, s in km_oracle(times, (causes > 0).astype(int)).items():
        assert km(t) == pytest.approx(s, abs=1e-12)
