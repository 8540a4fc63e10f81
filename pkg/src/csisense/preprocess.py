"""Gap repair and Butterworth low-pass denoising of CSI amplitude streams."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core import Trace, TraceMeta


@dataclass(frozen=True)
class FilterSpec:
    cutoff_hz: float = 15.0
    sample_rate: float = 100.0
    order: int = 4
    zero_phase: bool = True

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if not 0 < self.cutoff_hz < self.sample_rate / 2:
            raise ValueError(
                f"cutoff {self.cutoff_hz} Hz must lie strictly between 0 and Nyquist ({self.sample_rate / 2} Hz)")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("order must be a positive integer")

    @property
    def normalized_cutoff(self) -> float:
        """Cutoff in radians per sample (2 pi fc / fs)."""
        return 2 * math.pi * self.cutoff_hz / self.sample_rate

    @property
    def padlen(self) -> int:
        return 3 * int(self.order)


def butter_lowpass(spec: FilterSpec):
    """Digital Butterworth low-pass coefficients ``(b, a)``.

    The analog prototype |H(jw)|^2 = 1 / (1 + (w / wc)^(2n)) is prewarped so
    the digital -3 dB point lands on ``cutoff_hz``, then mapped through the
    bilinear transform. DC gain is normalised to exactly one.
    """
    n, fs = int(spec.order), spec.sample_rate
    warped = 2 * fs * math.tan(math.pi * spec.cutoff_hz / fs)
    k = np.arange(1, n + 1)
    poles = warped * np.exp(1j * np.pi * (2 * k + n - 1) / (2 * n))
    z_poles = (2 * fs + poles) / (2 * fs - poles)
    a = np.real(np.poly(z_poles))
    b = np.real(np.poly(-np.ones(n)))
    b *= a.sum() / b.sum()
    return b, a


def lowpass(series, spec: FilterSpec = FilterSpec(), axis: int = -1) -> np.ndarray:
    """Low-pass filter along ``axis``; output has the input's shape.

    Single-pass mode starts from the steady state of the first sample, so a
    constant input passes unchanged. Zero-phase mode runs the filter forward
    and backward over a reflect-padded copy (3 * order samples per side).
    """
    x = np.asarray(series, dtype=float)
    if x.shape[axis] <= spec.padlen:
        raise ValueError(f"series length {x.shape[axis]} must exceed 3 * order = {spec.padlen}")
    b, a = butter_lowpass(spec)
    if spec.zero_phase:
        return signal.filtfilt(b, a, x, axis=axis, padtype="even", padlen=spec.padlen)
    x = np.moveaxis(x, axis, -1)
    zi = signal.lfilter_zi(b, a) * x[..., :1]
    y, _ = signal.lfilter(b, a, x, axis=-1, zi=zi)
    return np.moveaxis(y, -1, axis)


def regularize(trace: Trace, target_rate: float, tol: float = 1e-9) -> Trace:
    """Resample onto a uniform grid by per-component linear interpolation.

    Grid points that coincide (within ``tol`` seconds) with an original
    timestamp take that frame unchanged, timestamp included.
    """
    if len(trace) < 2:
        raise ValueError("regularize needs at least two frames")
    if not target_rate > 0:
        raise ValueError("target_rate must be positive")
    ts = trace.timestamps
    t0, t1 = ts[0], ts[-1]
    n = int(math.floor((t1 - t0) * target_rate + 1e-6)) + 1
    grid = t0 + np.arange(n) / target_rate

    right = np.clip(np.searchsorted(ts, grid, side="right"), 1, len(ts) - 1)
    left = right - 1
    w = (grid - ts[left]) / (ts[right] - ts[left])
    shape = (-1,) + (1,) * (trace.csi.ndim - 1)
    out = trace.csi[left] * (1 - w).reshape(shape) + trace.csi[right] * w.reshape(shape)

    nearest = np.clip(np.searchsorted(ts, grid), 0, len(ts) - 1)
    for cand in (nearest, np.maximum(nearest - 1, 0)):
        hit = np.abs(ts[cand] - grid) <= tol
        out[hit] = trace.csi[cand[hit]]
        grid[hit] = ts[cand[hit]]
    return Trace(grid, out, target_rate, trace.meta)


@dataclass(frozen=True, eq=False)
class AmplitudeTrace:
    """Uniformly sampled, filtered amplitudes of every subcarrier/antenna stream."""

    timestamps: np.ndarray
    amplitudes: np.ndarray  # (n_frames, n_subcarriers, n_rx, n_tx)
    sample_rate: float
    meta: TraceMeta

    @property
    def n_streams(self) -> int:
        return int(np.prod(self.amplitudes.shape[1:]))

    def streams(self) -> np.ndarray:
        """Stream-major view, shape (n_streams, n_frames), subcarrier-major stream order."""
        return self.amplitudes.reshape(len(self.timestamps), -1).T

    def stream_names(self) -> list:
        n_sc, n_rx, n_tx = self.amplitudes.shape[1:]
        return [f"sc{s:02d}.rx{r}.tx{t}" for s in range(n_sc) for r in range(n_rx) for t in range(n_tx)]


def preprocess_trace(trace: Trace, spec: FilterSpec = FilterSpec()) -> AmplitudeTrace:
    """Regularise at ``spec.sample_rate``, take amplitudes, low-pass each stream."""
    if not math.isclose(trace.nominal_rate, spec.sample_rate):
        raise ValueError(
            f"trace rate {trace.nominal_rate} Hz does not match filter sample rate {spec.sample_rate} Hz")
    reg = regularize(trace, spec.sample_rate)
    amp = np.abs(reg.csi)
    filtered = lowpass(amp, spec, axis=0)
    return AmplitudeTrace(reg.timestamps, filtered, spec.sample_rate, trace.meta)
