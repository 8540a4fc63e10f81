"""Channel-data types and the amplitude / phase / RSS indicators derived from them.

CSI matrices are stored as complex numpy arrays indexed ``[subcarrier][rx][tx]``.
A :class:`Trace` keeps its frames as one stacked array so that per-stream
operations stay vectorised; :attr:`Trace.frames` materialises
:class:`CsiFrame` views on demand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

DEFAULT_SUBCARRIERS = 30
DEFAULT_RATE_HZ = 100.0


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CsiFrame:
    """One timestamped CSI measurement."""

    timestamp: float
    matrix: np.ndarray
    rssi_a: Optional[int] = None
    rssi_b: Optional[int] = None
    rssi_c: Optional[int] = None
    agc: Optional[int] = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 3:
            raise ValueError(f"CSI matrix must be 3-D [subcarrier][rx][tx], got shape {m.shape}")
        if m.shape[0] < 1 or not (1 <= m.shape[1] <= 3) or not (1 <= m.shape[2] <= 3):
            raise ValueError(f"invalid CSI dimensions {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("CSI matrix contains non-finite entries")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "timestamp", float(self.timestamp))

    @property
    def n_subcarriers(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_rx(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_tx(self) -> int:
        return self.matrix.shape[2]

    def __eq__(self, other):
        if not isinstance(other, CsiFrame):
            return NotImplemented
        return (
            self.timestamp == other.timestamp
            and self.matrix.shape == other.matrix.shape
            and bool(np.all(self.matrix == other.matrix))
            and (self.rssi_a, self.rssi_b, self.rssi_c, self.agc)
            == (other.rssi_a, other.rssi_b, other.rssi_c, other.agc)
        )


@dataclass(frozen=True)
class TraceMeta:
    subject_id: str = ""
    label: str = ""
    session: str = ""
    attributes: Mapping[str, str] = field(default_factory=dict)


class Trace:
    """Ordered CSI frames plus subject / label / session metadata.

    ``csi`` has shape ``(n_frames, n_subcarriers, n_rx, n_tx)``. An empty
    trace still carries its frame dimensions.
    """

    __slots__ = ("timestamps", "csi", "nominal_rate", "meta")

    def __init__(
        self,
        timestamps,
        csi,
        nominal_rate: float = DEFAULT_RATE_HZ,
        meta: Optional[TraceMeta] = None,
        dims: Optional[Sequence[int]] = None,
    ):
        ts = np.asarray(timestamps, dtype=np.float64).reshape(-1)
        if ts.size == 0:
            shape = tuple(dims) if dims is not None else (DEFAULT_SUBCARRIERS, 1, 1)
            c = np.asarray(csi, dtype=np.complex128).reshape((0,) + shape)
        else:
            c = np.asarray(csi, dtype=np.complex128)
        if c.ndim != 4 or c.shape[0] != ts.size:
            raise ValueError(f"csi shape {c.shape} does not match {ts.size} timestamps")
        if c.shape[1] < 1 or not (1 <= c.shape[2] <= 3) or not (1 <= c.shape[3] <= 3):
            raise ValueError(f"invalid CSI dimensions {c.shape[1:]}")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError("frame timestamps must be strictly increasing")
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(c))):
            raise ValueError("trace contains non-finite values")
        if nominal_rate <= 0:
            raise ValueError("nominal_rate must be positive")
        self.timestamps = _frozen(ts)
        self.csi = _frozen(c)
        self.nominal_rate = float(nominal_rate)
        self.meta = meta if meta is not None else TraceMeta()

    @classmethod
    def from_frames(cls, frames: Sequence[CsiFrame], nominal_rate=DEFAULT_RATE_HZ, meta=None, dims=None):
        if not frames:
            return cls([], [], nominal_rate, meta, dims=dims)
        shapes = {f.matrix.shape for f in frames}
        if len(shapes) != 1:
            raise ValueError(f"frames have mixed dimensions: {sorted(shapes)}")
        return cls(
            [f.timestamp for f in frames],
            np.stack([f.matrix for f in frames]),
            nominal_rate,
            meta,
        )

    @property
    def dims(self) -> tuple:
        return self.csi.shape[1:]

    @property
    def frames(self) -> list:
        return [CsiFrame(t, m) for t, m in zip(self.timestamps, self.csi)]

    def __len__(self) -> int:
        return self.timestamps.size

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.csi.shape == other.csi.shape
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.csi, other.csi)
            and self.nominal_rate == other.nominal_rate
            and self.meta == other.meta
        )

    def allclose(self, other: "Trace", atol: float = 1e-6) -> bool:
        return (
            self.csi.shape == other.csi.shape
            and np.allclose(self.timestamps, other.timestamps, rtol=0, atol=atol)
            and np.allclose(self.csi, other.csi, rtol=0, atol=atol)
            and abs(self.nominal_rate - other.nominal_rate) <= atol
            and self.meta == other.meta
        )

    def __repr__(self):
        return (
            f"Trace(n_frames={len(self)}, dims={self.dims}, rate={self.nominal_rate:g}, "
            f"subject={self.meta.subject_id!r}, label={self.meta.label!r})"
        )


def _matrix_of(frame) -> np.ndarray:
    return frame.matrix if isinstance(frame, CsiFrame) else np.asarray(frame, dtype=np.complex128)


def amplitude(frame) -> np.ndarray:
    """Per-entry modulus of a frame (or any complex array)."""
    return np.abs(_matrix_of(frame))


def phase(frame) -> np.ndarray:
    """Principal-value phase in (-pi, pi]; a zero entry maps to 0."""
    m = _matrix_of(frame)
    out = np.angle(m)
    # np.angle gives -pi for (-1, -0.0); fold onto the closed upper end
    out = np.where(out <= -np.pi, np.pi, out)
    return np.where(m == 0, 0.0, out)


def rss_from_aggregate(h: complex, base: int = 2) -> float:
    """RSS = 10 * log_base(|h|^2).

    ``base=2`` reproduces the aggregate-channel formula as published;
    ``base=10`` gives the conventional decibel value.
    """
    if base not in (2, 10):
        raise ValueError("base must be 2 or 10")
    power = abs(complex(h)) ** 2
    if power <= 0:
        raise ValueError("RSS undefined for a zero-magnitude channel")
    return 10.0 * (math.log2(power) if base == 2 else math.log10(power))


def amplitude_series(trace: Trace, subcarrier: int, rx: int, tx: int) -> tuple:
    """Return ``(timestamps, amplitudes)`` of one subcarrier/antenna stream."""
    n_sc, n_rx, n_tx = trace.dims
    for name, idx, size in (("subcarrier", subcarrier, n_sc), ("rx", rx, n_rx), ("tx", tx, n_tx)):
        if not 0 <= idx < size:
            raise IndexError(f"{name} index {idx} out of range [0, {size})")
    return trace.timestamps.copy(), np.abs(trace.csi[:, subcarrier, rx, tx])
