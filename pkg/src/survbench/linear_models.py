"""Cause-specific Cox proportional hazards and Fine-Gray subdistribution
fitters on static snapshots, with Breslow tie handling throughout."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError
from .estimators import StepFunction, censoring_survival
from .grid import CIFCurve, TimeGrid

BETA_BOUND = 50.0
RIDGE_EPS = 1e-8


@dataclass
class CoxModel:
    cause: int
    beta: np.ndarray
    baseline_times: np.ndarray  # unique event times of the cause
    baseline_increments: np.ndarray  # Breslow d-Lambda0 at each time
    iterations: int
    grad_norm: float
    ridge_used: bool = False
    cov: np.ndarray | None = None  # inverse Hessian at the optimum

    @property
    def cumulative_baseline(self) -> StepFunction:
        return StepFunction(self.baseline_times, np.cumsum(self.baseline_increments), init=0.0)

    def risk_score(self, x):
        return np.exp(np.atleast_2d(x) @ self.beta)

    def wald_ci(self, level_z: float = 1.96):
        se = np.sqrt(np.diag(self.cov))
        return np.stack([self.beta - level_z * se, self.beta + level_z * se], axis=1)


@dataclass
class FineGrayModel:
    cause: int
    beta: np.ndarray
    baseline_times: np.ndarray
    baseline_increments: np.ndarray  # subdistribution Breslow increments
    weight_table: dict = field(default_factory=dict, repr=False)
    iterations: int = 0
    grad_norm: float = 0.0
    ridge_used: bool = False
    cov: np.ndarray | None = None

    def predict_cif(self, x, grid: TimeGrid) -> CIFCurve:
        """Subdistribution CIF 1 - exp(-Lambda_sub(t) exp(beta x)), one cause."""
        lam = StepFunction(self.baseline_times, np.cumsum(self.baseline_increments), init=0.0)
        risk = float(np.exp(np.asarray(x) @ self.beta))
        vals = 1.0 - np.exp(-lam(grid.edges) * risk)
        return CIFCurve(grid, vals[None, :])


def _check_data(x, times, causes):
    x = np.asarray(x, dtype=float)
    times = np.asarray(times, dtype=float)
    causes = np.asarray(causes, dtype=int)
    if x.ndim != 2 or len(x) != len(times) or len(times) != len(causes):
        raise DataError("covariates and outcomes must align")
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite covariates")
    if np.any(times <= 0):
        raise DataError("event times must be positive")
    return x, times, causes


def cox_partial_loglik(beta, x, times, causes, cause: int):
    """Breslow partial log-likelihood with gradient and Hessian.

    Events of other causes act as censorings. Returns (value, grad, hess);
    the Hessian is negative semidefinite.
    """
    x, times, causes = _check_data(x, times, causes)
    beta = np.asarray(beta, dtype=float)
    n, p = x.shape
    order = np.argsort(-times, kind="mergesort")  # descending: cumulative = risk sets
    xs, ts, cs = x[order], times[order], causes[order]
    eta = xs @ beta
    eta = np.clip(eta, -700, 700)
    w = np.exp(eta)
    s0 = np.cumsum(w)
    s1 = np.cumsum(w[:, None] * xs, axis=0)
    s2 = np.cumsum(w[:, None, None] * (xs[:, :, None] * xs[:, None, :]), axis=0)

    # last index within each run of tied times (cumsums there cover T >= t)
    is_event = cs == cause
    if not is_event.any():
        raise DataError(f"no events of cause {cause}")
    boundary = np.concatenate([ts[1:] != ts[:-1], [True]])
    run_end = np.empty(n, dtype=int)
    idx = np.nonzero(boundary)[0]
    start = 0
    for e in idx:
        run_end[start:e + 1] = e
        start = e + 1

    ev = np.nonzero(is_event)[0]
    r = run_end[ev]
    uniq_r, first_pos = np.unique(r, return_index=True)
    value = float(eta[ev].sum())
    grad = xs[ev].sum(axis=0)
    hess = np.zeros((p, p))
    for u in uniq_r:
        members = ev[r == u]
        d = len(members)
        m0, m1, m2 = s0[u], s1[u], s2[u]
        mu = m1 / m0
        value -= d * np.log(m0)
        grad -= d * mu
        hess -= d * (m2 / m0 - np.outer(mu, mu))
    return value, grad, hess


def _newton(score_fn, p, tol, max_iter):
    """Maximize via Newton-Raphson with step-halving; returns diagnostics."""
    beta = np.zeros(p)
    value, grad, hess = score_fn(beta)
    ridge_used = False
    trace = [value]
    for it in range(1, max_iter + 1):
        if np.max(np.abs(grad)) < tol:
            return beta, it - 1, float(np.max(np.abs(grad))), ridge_used, hess, trace
        neg_h = -hess
        try:
            step = np.linalg.solve(neg_h, grad)
        except np.linalg.LinAlgError:
            ridge_used = True
            try:
                step = np.linalg.solve(neg_h + RIDGE_EPS * np.eye(p), grad)
            except np.linalg.LinAlgError:
                raise NumericError(
                    f"Hessian singular even with ridge eps={RIDGE_EPS}; increase ridge")
        scale = 1.0
        for _ in range(40):
            cand = beta + scale * step
            cand_value, cand_grad, cand_hess = score_fn(cand)
            if np.isfinite(cand_value) and cand_value >= value - 1e-12:
                break
            scale *= 0.5
        beta, value, grad, hess = cand, cand_value, cand_grad, cand_hess
        trace.append(value)
        over = np.nonzero(np.abs(beta) > BETA_BOUND)[0]
        if over.size:
            raise NumericError(
                f"coefficient {int(over[0])} diverged past {BETA_BOUND}: monotone likelihood?")
    return beta, max_iter, float(np.max(np.abs(grad))), ridge_used, hess, trace


def fit_cs_cox(x, times, causes, cause: int, tol: float = 1e-8,
               max_iter: int = 100) -> CoxModel:
    """Newton-Raphson cause-specific Cox fit with Breslow baseline."""
    x, times, causes = _check_data(x, times, causes)

    def score(beta):
        return cox_partial_loglik(beta, x, times, causes, cause)

    beta, iters, gnorm, ridge_used, hess, _ = _newton(score, x.shape[1], tol, max_iter)
    cov = None
    try:
        cov = np.linalg.inv(-hess + (RIDGE_EPS * np.eye(x.shape[1]) if ridge_used else 0.0))
    except np.linalg.LinAlgError:
        pass
    times_u, dlam = _breslow_baseline(beta, x, times, causes, cause)
    return CoxModel(cause, beta, times_u, dlam, iters, gnorm, ridge_used, cov)


def _breslow_baseline(beta, x, times, causes, cause):
    eta = np.clip(x @ beta, -700, 700)
    w = np.exp(eta)
    event_times = np.unique(times[causes == cause])
    dlam = np.empty_like(event_times)
    for k, u in enumerate(event_times):
        d = np.sum((times == u) & (causes == cause))
        dlam[k] = d / w[times >= u].sum()
    return event_times, dlam


def predict_cif_cox(models: dict[int, CoxModel], x, grid: TimeGrid) -> CIFCurve:
    """Compose cause-specific Breslow hazards into CIFs by product-limiting
    the combined hazard: F_c(t) = sum_{t_j <= t} S(t_j-) dLambda_c(t_j | x).

    The curve extends flat past the last event time.
    """
    x = np.asarray(x, dtype=float)
    causes = sorted(models)
    all_times = np.unique(np.concatenate([models[c].baseline_times for c in causes]))
    dlam = np.zeros((len(causes), all_times.size))
    for ci, c in enumerate(causes):
        m = models[c]
        pos = np.searchsorted(all_times, m.baseline_times)
        dlam[ci, pos] = m.baseline_increments * float(np.exp(x @ m.beta))
    total = dlam.sum(axis=0)
    over = total > 1.0
    if over.any():  # keep the discrete survivor in [0, 1]
        dlam[:, over] /= total[over]
        total = np.minimum(total, 1.0)
    surv_before = np.concatenate([[1.0], np.cumprod(1.0 - total)[:-1]])
    cum = np.cumsum(surv_before * dlam, axis=1)
    idx = np.searchsorted(all_times, grid.edges, side="right") - 1
    full = np.concatenate([np.zeros((len(causes), 1)), cum], axis=1)
    return CIFCurve(grid, full[:, idx + 1])


def fine_gray_loglik(beta, x, times, causes, cause: int, ghat: StepFunction):
    """Weighted Breslow partial log-likelihood for the subdistribution hazard.

    Competing-event subjects stay in the risk set after their event with
    weight G(t)/G(T_i); genuinely at-risk subjects have weight 1.
    """
    x, times, causes = _check_data(x, times, causes)
    beta = np.asarray(beta, dtype=float)
    p = x.shape[1]
    eta = np.clip(x @ beta, -700, 700)
    w = np.exp(eta)
    event_times = np.unique(times[causes == cause])
    competing = (causes > 0) & (causes != cause)
    g_at_t = np.where(competing, ghat(times), 1.0)
    wc = np.where(g_at_t > 0, w / np.maximum(g_at_t, 1e-300), 0.0)

    value = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    for u in event_times:
        ev = (times == u) & (causes == cause)
        d = int(ev.sum())
        at_risk = times >= u
        gt = float(ghat(u))
        weights = np.where(at_risk, w, np.where(competing & (times < u), gt * wc, 0.0))
        m0 = weights.sum()
        m1 = weights @ x
        m2 = (weights[:, None] * x).T @ x
        mu = m1 / m0
        value += float(eta[ev].sum()) - d * np.log(m0)
        grad += x[ev].sum(axis=0) - d * mu
        hess -= d * (m2 / m0 - np.outer(mu, mu))
    return value, grad, hess


def fit_fine_gray(x, times, causes, cause: int, tol: float = 1e-8,
                  max_iter: int = 100) -> FineGrayModel:
    """IPCW-weighted Fine-Gray fit; the censoring survivor comes from the
    marginal Kaplan-Meier of the censoring process."""
    x, times, causes = _check_data(x, times, causes)
    ghat = censoring_survival(times, causes)

    def score(beta):
        return fine_gray_loglik(beta, x, times, causes, cause, ghat)

    beta, iters, gnorm, ridge_used, hess, _ = _newton(score, x.shape[1], tol, max_iter)
    cov = None
    try:
        cov = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        pass

    eta = np.clip(x @ beta, -700, 700)
    w = np.exp(eta)
    competing = (causes > 0) & (causes != cause)
    event_times = np.unique(times[causes == cause])
    dlam = np.empty_like(event_times)
    weight_table = {}
    for k, u in enumerate(event_times):
        gt = float(ghat(u))
        gti = ghat(times)
        frac = np.where(gti > 0, gt / np.maximum(gti, 1e-300), 0.0)
        weights = np.where(times >= u, 1.0, np.where(competing & (times < u), frac, 0.0))
        d = np.sum((times == u) & (causes == cause))
        dlam[k] = d / float((weights * w).sum())
        weight_table[float(u)] = weights
    return FineGrayModel(cause, beta, event_times, dlam, weight_table,
                         iters, gnorm, ridge_used, cov)
