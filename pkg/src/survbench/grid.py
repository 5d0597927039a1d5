"""Discrete time grid and the CIF prediction contract shared by all models."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Right bin edges t_1 < ... < t_K, in months, with t_1 > 0.

    Bin k (0-indexed) covers the interval (t_{k-1}, t_k], with t_0 = 0.
    """

    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size == 0:
            raise ValueError("grid needs at least one edge")
        if edges[0] <= 0 or np.any(np.diff(edges) <= 0):
            raise ValueError("grid edges must be strictly increasing and start > 0")
        object.__setattr__(self, "edges", edges)

    @property
    def k(self) -> int:
        return len(self.edges)

    @property
    def horizon(self) -> float:
        return float(self.edges[-1])

    def bin_index(self, t) -> np.ndarray:
        """Index of the bin containing t; times past the last edge map to K-1."""
        idx = np.searchsorted(self.edges, np.asarray(t, dtype=float), side="left")
        return np.minimum(idx, self.k - 1)

    @classmethod
    def monthly(cls, horizon: float) -> "TimeGrid":
        return cls(np.arange(1.0, np.ceil(horizon) + 1.0))

    @classmethod
    def from_quantiles(cls, times, k: int = 30) -> "TimeGrid":
        """Grid at k uniform quantiles of the observed times (deduplicated)."""
        times = np.asarray(times, dtype=float)
        qs = np.quantile(times[times > 0], np.linspace(0, 1, k + 1)[1:])
        edges = np.unique(qs)
        return cls(edges)


@dataclass
class CIFCurve:
    """Per-cause cumulative incidence F(t_k | x) on a shared grid.

    values has shape (n_causes, K); cause c is row c-1.
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[1] != self.grid.k:
            raise ValueError("CIF values do not match grid size")

    @property
    def n_causes(self) -> int:
        return self.values.shape[0]

    def cause(self, c: int) -> np.ndarray:
        return self.values[c - 1]

    def validate(self, tol: float = 1e-9):
        v = self.values
        if np.any(v < -tol) or np.any(v > 1 + tol):
            raise ValueError("CIF values outside [0, 1]")
        if np.any(np.diff(v, axis=1) < -tol):
            raise ValueError("CIF not nondecreasing")
        if v[:, -1].sum() > 1 + tol:
            raise ValueError("total CIF mass exceeds 1")
        return self

    def resample(self, grid: TimeGrid) -> "CIFCurve":
        """Evaluate on another grid by right-continuous lookup (flat extension)."""
        if grid is self.grid or np.array_equal(grid.edges, self.grid.edges):
            return self
        idx = np.searchsorted(self.grid.edges, grid.edges, side="right") - 1
        out = np.zeros((self.n_causes, grid.k))
        inside = idx >= 0
        out[:, inside] = self.values[:, idx[inside]]
        return CIFCurve(grid, out)


def isotonic_running_max(values: np.ndarray) -> np.ndarray:
    """Project each row onto nondecreasing curves in [0, 1]."""
    return np.minimum(np.maximum.accumulate(np.clip(values, 0.0, 1.0), axis=-1), 1.0)
