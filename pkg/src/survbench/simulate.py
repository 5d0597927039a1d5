"""Synthetic illness-death cohort generator with analytic CIF oracles.

Covariate histories are Gaussian random walks; transition times follow
proportional-hazards Weibull laws whose linear predictor combines static
covariates and trajectory summaries (last value, mean, least-squares slope),
so recurrent models have a learnable longitudinal signal.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .cohort import Cohort, FeatureMeta, Outcome, PatientSequence, SecondEvent
from .errors import ConfigError
from .grid import TimeGrid

_TINY = 1e-12


@dataclass
class HazardSpec:
    """Weibull proportional-hazards transition: h(t) = (k/s)(t/s)^(k-1) exp(eta)."""

    shape: float
    scale: float
    beta: np.ndarray  # on static covariates
    gamma: np.ndarray  # on (last, mean, slope) trajectory summaries, length 3*d

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        if self.shape <= 0 or self.scale <= 0:
            raise ConfigError("Weibull shape and scale must be positive")

    def linear_predictor(self, static, summary):
        return float(self.beta @ static + self.gamma @ summary)

    def cumulative_hazard(self, t, eta):
        return (np.asarray(t, dtype=float) / self.scale) ** self.shape * np.exp(eta)

    def hazard(self, t, eta):
        t = np.asarray(t, dtype=float)
        return (self.shape / self.scale) * (t / self.scale) ** (self.shape - 1.0) * np.exp(eta)

    def sample(self, rng, eta):
        u = np.clip(rng.random(), _TINY, 1.0 - _TINY)
        return self.scale * (-np.log(1.0 - u) * np.exp(-eta)) ** (1.0 / self.shape)


@dataclass
class SimConfig:
    n: int
    d: int
    alpha01: HazardSpec
    alpha02: HazardSpec
    alpha12: HazardSpec
    walk_std: float = 0.5
    drift: np.ndarray | float = 0.0
    drift_std: float = 0.0
    init_std: float = 1.0
    censor_rate: float = 0.0
    horizon: float = 36.0
    seq_len: tuple[int, int] = (6, 24)
    obs_prob: float = 1.0
    n_static: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ConfigError("need n >= 1 subjects and d >= 1 features")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.censor_rate < 0:
            raise ConfigError("censoring rate must be >= 0")
        self.drift = np.broadcast_to(np.asarray(self.drift, dtype=float), (self.d,)).copy()
        for spec in (self.alpha01, self.alpha02, self.alpha12):
            if spec.gamma.size != 3 * self.d:
                raise ConfigError("gamma must have one entry per (last, mean, slope) summary")
            if spec.beta.size != self.n_static:
                raise ConfigError("beta must match the static covariate count")


def trajectory_summary(matrix: np.ndarray) -> np.ndarray:
    """Per-feature (last, mean, slope) of a T x d trajectory, flattened."""
    t = matrix.shape[0]
    last = matrix[-1]
    mean = matrix.mean(axis=0)
    x = np.arange(t, dtype=float)
    xc = x - x.mean()
    denom = (xc ** 2).sum()
    slope = (xc @ (matrix - mean)) / denom if denom > 0 else np.zeros(matrix.shape[1])
    return np.concatenate([last, mean, slope])


def _sample_statics(rng, n_static):
    vals = rng.normal(size=n_static)
    if n_static >= 2:
        vals[1] = float(rng.random() < 0.5)  # sex-like indicator
    return vals


def simulate_cohort(cfg: SimConfig) -> Cohort:
    """Draw a cohort; deterministic given cfg.seed with per-subject streams."""
    features = [FeatureMeta(name=f"x{j}", kind="continuous") for j in range(cfg.d)]
    static_names = ["age", "sex"][: cfg.n_static] + [f"s{j}" for j in range(2, cfg.n_static)]
    sequences = []
    for i in range(cfg.n):
        rng = np.random.default_rng((cfg.seed, i))
        static = _sample_statics(rng, cfg.n_static)
        t_len = int(rng.integers(cfg.seq_len[0], cfg.seq_len[1] + 1))
        drift = cfg.drift + cfg.drift_std * rng.normal(size=cfg.d)
        latent = np.zeros((t_len, cfg.d))
        latent[0] = cfg.init_std * rng.normal(size=cfg.d)
        if t_len > 1:
            steps = drift + cfg.walk_std * rng.normal(size=(t_len - 1, cfg.d))
            latent[1:] = latent[0] + np.cumsum(steps, axis=0)
        summary = trajectory_summary(latent)

        eta01 = cfg.alpha01.linear_predictor(static, summary)
        eta02 = cfg.alpha02.linear_predictor(static, summary)
        t1 = cfg.alpha01.sample(rng, eta01)
        t2 = cfg.alpha02.sample(rng, eta02)
        censor = cfg.horizon
        if cfg.censor_rate > 0:
            censor = min(rng.exponential(1.0 / cfg.censor_rate), cfg.horizon)
        first, cause = (t1, 1) if t1 <= t2 else (t2, 2)
        if censor < first:
            outcome = Outcome(cause=0, time=censor)
        elif cause == 2:
            outcome = Outcome(cause=2, time=first)
        else:
            eta12 = cfg.alpha12.linear_predictor(static, summary)
            t12 = cfg.alpha12.sample(rng, eta12)
            if first + t12 <= censor:
                outcome = Outcome(cause=1, time=first, second_event=SecondEvent(t12, 2))
            else:
                outcome = Outcome(cause=1, time=first,
                                  second_event=SecondEvent(censor - first, 0))

        mask = rng.random((t_len, cfg.d)) < cfg.obs_prob
        for r in np.nonzero(~mask.any(axis=1))[0]:
            mask[r, int(rng.integers(cfg.d))] = True  # every kept month has >= 1 record
        matrix = np.where(mask, latent, 0.0)
        sequences.append(PatientSequence(f"p{i:06d}", np.arange(t_len), matrix, mask,
                                         static, outcome))
    grid = TimeGrid.monthly(cfg.horizon)
    return Cohort(sequences, features, static_names, grid, "semi-competing")


def analytic_cif(cfg: SimConfig, cause: int, x: np.ndarray, t) -> np.ndarray:
    """True CIF of the first transition for a subject with covariate vector x.

    x concatenates the static covariates and the 3*d trajectory summaries.
    Shape-1 baselines use the closed competing-exponentials form; otherwise
    the cause-specific density is integrated numerically.
    """
    x = np.asarray(x, dtype=float)
    static, summary = x[: cfg.n_static], x[cfg.n_static:]
    specs = {1: cfg.alpha01, 2: cfg.alpha02}
    etas = {c: s.linear_predictor(static, summary) for c, s in specs.items()}
    t = np.asarray(t, dtype=float)
    if specs[1].shape == 1.0 and specs[2].shape == 1.0:
        rates = {c: np.exp(etas[c]) / specs[c].scale for c in specs}
        total = rates[1] + rates[2]
        return rates[cause] / total * (1.0 - np.exp(-total * t))

    def density(u):
        surv = np.exp(-sum(specs[c].cumulative_hazard(u, etas[c]) for c in specs))
        return specs[cause].hazard(u, etas[cause]) * surv

    def single(tk):
        if tk <= 0:
            return 0.0
        val, _ = integrate.quad(density, 0.0, tk, limit=200)
        return val

    if t.ndim == 0:
        return np.float64(single(float(t)))
    return np.array([single(tk) for tk in t])
