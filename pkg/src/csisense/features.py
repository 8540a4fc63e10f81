"""Seven per-stream statistics and their assembly into per-trace feature vectors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .preprocess import AmplitudeTrace

FEATURE_NAMES = (
    "std",
    "mean_abs_dev",
    "skewness",
    "kurtosis",
    "entropy",
    "velocity_std",
    "median",
)


def _as_series(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size == 0:
        raise ValueError("feature of an empty sequence is undefined")
    return a


def std_dev(x) -> float:
    """Population standard deviation (divisor N)."""
    a = _as_series(x)
    return float(np.sqrt(np.mean((a - a.mean()) ** 2)))


def mean_abs_deviation(x) -> float:
    a = _as_series(x)
    return float(np.mean(np.abs(a - a.mean())))


def _standardized_moment(a: np.ndarray, power: int) -> float:
    dev = a - a.mean()
    var = np.mean(dev**2)
    # relative floor: deviations this small are rounding noise of a constant
    if var <= (1e-12 * max(1.0, float(np.max(np.abs(a))))) ** 2:
        return 0.0
    return float(np.mean(dev**power) / var ** (power / 2))


def skewness(x) -> float:
    """Third standardised moment; 0 for constant input."""
    return _standardized_moment(_as_series(x), 3)


def kurtosis(x) -> float:
    """Fourth standardised moment, non-excess (a Gaussian gives 3); 0 for constant input."""
    return _standardized_moment(_as_series(x), 4)


def entropy(x, n_bins: int = 16) -> float:
    """Shannon entropy in bits of an equal-width histogram over [min, max]."""
    a = _as_series(x)
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = a.min(), a.max()
    if hi <= lo:
        return 0.0
    counts, _ = np.histogram(a, bins=n_bins, range=(lo, hi))
    p = counts[counts > 0] / a.size
    return float(-np.sum(p * np.log2(p)))


def velocity_std(x) -> float:
    """Population std of first differences; needs at least two samples."""
    a = _as_series(x)
    if a.size < 2:
        raise ValueError("velocity needs at least two samples")
    return std_dev(np.diff(a))


def median(x) -> float:
    return float(np.median(_as_series(x)))


def stream_features(x, n_bins: int = 16) -> np.ndarray:
    """All seven statistics of one sequence, in ``FEATURE_NAMES`` order."""
    return feature_table(_as_series(x)[None, :], n_bins)[0]


def _histogram_entropy(rows: np.ndarray, n_bins: int) -> np.ndarray:
    # same bin assignment as np.histogram with range=(min, max), row by row
    lo = rows.min(axis=1, keepdims=True)
    hi = rows.max(axis=1, keepdims=True)
    flat = hi <= lo
    span = np.where(flat, 1.0, hi - lo)
    edges = lo + (span / n_bins) * np.arange(n_bins + 1)[None, :]
    edges[:, -1:] = np.where(flat, edges[:, -1:], hi)
    idx = ((rows - lo) * (n_bins / span)).astype(np.intp)
    idx[idx >= n_bins] = n_bins - 1
    idx = np.clip(idx, 0, n_bins - 1)
    r = np.arange(rows.shape[0])[:, None]
    idx = idx - (rows < edges[r, idx])
    idx = idx + ((rows >= edges[r, idx + 1]) & (idx != n_bins - 1))
    counts = np.zeros((rows.shape[0], n_bins))
    np.add.at(counts, (np.broadcast_to(r, idx.shape), idx), 1.0)
    p = counts / rows.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return np.where(flat[:, 0], 0.0, -terms.sum(axis=1))


def feature_table(rows, n_bins: int = 16) -> np.ndarray:
    """Vectorised :func:`stream_features` over the rows of a 2-D array.

    Returns shape (n_rows, 7).
    """
    # contiguous rows make each row's reductions independent of memory layout
    a = np.ascontiguousarray(rows, dtype=float)
    if a.ndim != 2 or a.shape[1] == 0:
        raise ValueError("expected a non-empty 2-D array of sequences")
    if a.shape[1] < 2:
        raise ValueError("velocity needs at least two samples")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    dev = a - a.mean(axis=1, keepdims=True)
    var = np.mean(dev**2, axis=1)
    floor = (1e-12 * np.maximum(1.0, np.abs(a).max(axis=1))) ** 2
    degenerate = var <= floor
    safe = np.where(degenerate, 1.0, var)
    skew = np.where(degenerate, 0.0, np.mean(dev**3, axis=1) / safe**1.5)
    kurt = np.where(degenerate, 0.0, np.mean(dev**4, axis=1) / safe**2)
    vel = np.diff(a, axis=1)
    vel_dev = vel - vel.mean(axis=1, keepdims=True)
    return np.column_stack([
        np.sqrt(var),
        np.mean(np.abs(dev), axis=1),
        skew,
        kurt,
        _histogram_entropy(a, n_bins),
        np.sqrt(np.mean(vel_dev**2, axis=1)),
        np.median(a, axis=1),
    ])


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    layout: Tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != len(self.layout):
            raise ValueError("layout length differs from value count")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "layout", tuple(self.layout))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.values, other.values)


def extract_trace_features(trace: AmplitudeTrace, mode: str = "concat", n_bins: int = 16) -> FeatureVector:
    """Seven statistics per stream.

    ``concat`` orders values stream-major (all seven features of stream 0,
    then stream 1, ...) following :meth:`AmplitudeTrace.stream_names`;
    ``mean`` averages each statistic over streams.
    """
    streams = trace.streams()
    if streams.shape[1] < 2:
        raise ValueError("feature extraction needs at least two frames")
    table = feature_table(streams, n_bins)
    if mode == "concat":
        layout = tuple(f"{name}:{feat}" for name in trace.stream_names() for feat in FEATURE_NAMES)
        return FeatureVector(table.reshape(-1), layout)
    if mode in ("mean", "mean-over-streams"):
        return FeatureVector(table.mean(axis=0), tuple(f"mean:{f}" for f in FEATURE_NAMES))
    raise ValueError(f"unknown aggregation mode {mode!r}")
