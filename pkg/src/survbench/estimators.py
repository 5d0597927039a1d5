"""Nonparametric estimators: Kaplan-Meier, censoring survival, Aalen-Johansen
cumulative incidence, and jackknife pseudo-values."""

from dataclasses import dataclass

import numpy as np

from .grid import CIFCurve, TimeGrid


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function: value(t) = values[j] for the largest
    jump time <= t, and init before the first jump."""

    times: np.ndarray
    values: np.ndarray
    init: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape:
            raise ValueError("times and values must align")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("jump times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        full = np.concatenate([[self.init], self.values])
        return full[idx + 1]

    def before(self, t):
        """Left limit: value just before t."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="left") - 1
        full = np.concatenate([[self.init], self.values])
        return full[idx + 1]


def _event_table(times, causes, min_causes: int = 1):
    """Sorted unique event times with per-cause death counts and at-risk sizes.

    Ties between events and censorings at the same time follow the convention
    that events happen first: the risk set at t includes everyone with T >= t.
    """
    times = np.asarray(times, dtype=float)
    causes = np.asarray(causes, dtype=int)
    if times.size == 0:
        raise ValueError("empty sample")
    if np.any(times <= 0):
        raise ValueError("times must be positive")
    n = times.size
    uniq, inv, counts = np.unique(times, return_inverse=True, return_counts=True)
    n_at_risk = n - np.concatenate([[0], np.cumsum(counts)[:-1]])
    n_causes = max(int(causes.max()) if causes.size else 0, min_causes)
    d = np.zeros((n_causes + 1, uniq.size))
    np.add.at(d, (causes, inv), 1.0)
    return uniq, d, n_at_risk.astype(float), inv


def kaplan_meier(times, event_flags) -> StepFunction:
    """Product-limit survival estimate; flags are 1 for events, 0 censored."""
    flags = np.asarray(event_flags).astype(int)
    uniq, d, n_at_risk, _ = _event_table(times, flags)
    surv = np.cumprod(1.0 - d[1] / n_at_risk)
    return StepFunction(uniq, surv)


def censoring_survival(times, cause_labels) -> StepFunction:
    """Kaplan-Meier estimate of the censoring distribution G.

    The censoring process treats any observed event (cause > 0) as censoring
    of the censoring time; events at t leave the risk set before censorings
    at t are counted.
    """
    causes = np.asarray(cause_labels, dtype=int)
    uniq, d, n_at_risk, _ = _event_table(times, causes)
    d_event = d[1:].sum(axis=0)
    d_cens = d[0]
    at_risk_c = n_at_risk - d_event
    factors = np.where(at_risk_c > 0, 1.0 - d_cens / np.maximum(at_risk_c, 1.0), 1.0)
    return StepFunction(uniq, np.cumprod(factors))


def aalen_johansen(times, cause_labels, n_causes: int | None = None) -> list[StepFunction]:
    """Cumulative incidence per cause; returns [F_1, ..., F_C] step functions."""
    causes = np.asarray(cause_labels, dtype=int)
    if n_causes is None:
        n_causes = int(causes.max())
    uniq, d, n_at_risk, _ = _event_table(times, causes)
    if d.shape[0] - 1 < n_causes:
        d = np.vstack([d, np.zeros((n_causes - d.shape[0] + 1, uniq.size))])
    d_tot = d[1 : n_causes + 1].sum(axis=0)
    surv = np.cumprod(1.0 - d_tot / n_at_risk)
    surv_before = np.concatenate([[1.0], surv[:-1]])
    out = []
    for c in range(1, n_causes + 1):
        inc = surv_before * d[c] / n_at_risk
        out.append(StepFunction(uniq, np.cumsum(inc), init=0.0))
    return out


def aalen_johansen_curve(times, cause_labels, grid: TimeGrid, n_causes: int = 2) -> CIFCurve:
    cifs = aalen_johansen(times, cause_labels, n_causes)
    return CIFCurve(grid, np.stack([f(grid.edges) for f in cifs]))


def jackknife_pseudo(times, cause_labels, grid: TimeGrid, n_causes: int = 2) -> np.ndarray:
    """Jackknife pseudo-values n*F - (n-1)*F^(-i) evaluated on the grid.

    Returns an (n, K, C) array. Subjects sharing (time, cause) share their
    leave-one-out estimate, so the recomputation runs once per distinct
    (time, cause) pair on the shared event table instead of once per subject.
    """
    times = np.asarray(times, dtype=float)
    causes = np.asarray(cause_labels, dtype=int)
    n = times.size
    if n < 2:
        raise ValueError("need at least two subjects for pseudo-values")
    uniq, d, n_at_risk, inv = _event_table(times, causes)
    if d.shape[0] - 1 < n_causes:
        d = np.vstack([d, np.zeros((n_causes - d.shape[0] + 1, uniq.size))])
    d = d[: n_causes + 1]
    grid_idx = np.searchsorted(uniq, grid.edges, side="right") - 1

    def cif_on_grid(dmat, at_risk):
        d_tot = dmat[1:].sum(axis=0)
        surv_before = np.concatenate([[1.0], np.cumprod(1.0 - d_tot / at_risk)[:-1]])
        cum = np.cumsum(surv_before * dmat[1:] / at_risk, axis=1)
        full = np.concatenate([np.zeros((n_causes, 1)), cum], axis=1)
        return full[:, grid_idx + 1]  # (C, K)

    f_full = cif_on_grid(d, n_at_risk)
    pv = np.empty((n, grid.k, n_causes))
    seen = {}
    for i in range(n):
        key = (inv[i], causes[i])
        if key not in seen:
            j, c = key
            d_loo = d.copy()
            d_loo[c, j] -= 1.0
            at_risk_loo = n_at_risk - (np.arange(uniq.size) <= j)
            at_risk_loo = np.maximum(at_risk_loo, 1.0)  # past the last subject nothing is at risk
            seen[key] = n * f_full - (n - 1) * cif_on_grid(d_loo, at_risk_loo)
        pv[i] = seen[key].T
    return pv
