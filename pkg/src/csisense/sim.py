"""Two-path channel simulator: a line-of-sight path plus one body reflection.

Each subcarrier k sees

    H_k = A * exp(-j 2 pi d_los / lam_k) + G * A * (d_los / d_ref) * exp(-j 2 pi d_ref / lam_k + j pi)

with ``d_ref = |Tx Q| + |Q Rx|`` for a reflector at Q. The extra pi is the
phase flip on reflection, so the reflected term adds constructively on odd
Fresnel boundaries and destructively on even ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import Trace, TraceMeta
from .fresnel import TransceiverGeometry, zone_boundary_distance

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SimConfig:
    geometry: TransceiverGeometry = field(default_factory=lambda: TransceiverGeometry.symmetric(1.2, 0.06))
    # None: derived from geometry.wavelength so simulated phases line up with the zone table
    center_frequency: Optional[float] = None
    n_subcarriers: int = 30
    subcarrier_spacing: float = 312.5e3
    los_amplitude: float = 20.0
    reflection_coefficient: float = 0.7
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if not self.subcarrier_spacing > 0:
            raise ValueError("subcarrier_spacing must be positive")
        if not 0.0 <= self.reflection_coefficient <= 1.0:
            raise ValueError("reflection_coefficient must lie in [0, 1]")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.center_frequency is not None and not self.center_frequency > 0:
            raise ValueError("center_frequency must be positive")

    @property
    def carrier(self) -> float:
        if self.center_frequency is None:
            return SPEED_OF_LIGHT / self.geometry.wavelength
        return self.center_frequency

    @property
    def subcarrier_frequencies(self) -> np.ndarray:
        k = np.arange(self.n_subcarriers) - (self.n_subcarriers - 1) / 2.0
        return self.carrier + k * self.subcarrier_spacing

    @property
    def wavelengths(self) -> np.ndarray:
        return SPEED_OF_LIGHT / self.subcarrier_frequencies


def _channel(config: SimConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Noise-free response for reflector positions, shape (n_positions, n_subcarriers)."""
    g = config.geometry
    d_los = g.separation
    to_tx = np.hypot(xs - g.tx[0], ys - g.tx[1])
    to_rx = np.hypot(xs - g.rx[0], ys - g.rx[1])
    if np.any((to_tx == 0) | (to_rx == 0)):
        raise ValueError("reflector coincides with a transceiver")
    d_ref = to_tx + to_rx
    k = 2.0 * np.pi / config.wavelengths[None, :]
    a = config.los_amplitude
    los = a * np.exp(-1j * k * d_los)
    ref = config.reflection_coefficient * a * (d_los / d_ref)[:, None] * np.exp(-1j * (k * d_ref[:, None] - np.pi))
    return los + ref


def _noise(rng: np.random.Generator, std: float, shape) -> np.ndarray:
    if std == 0:
        return np.zeros(shape, dtype=np.complex128)
    return rng.normal(0.0, std, shape) + 1j * rng.normal(0.0, std, shape)


def simulate_static(config: SimConfig, reflector) -> np.ndarray:
    """One CSI frame for a fixed reflector; returns shape (n_subcarriers, 1, 1)."""
    x, y = float(reflector[0]), float(reflector[1])
    h = _channel(config, np.array([x]), np.array([y]))[0]
    h = h + _noise(np.random.default_rng(config.seed), config.noise_std, h.shape)
    return h.reshape(-1, 1, 1)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        p = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        if t.size != p.shape[0]:
            raise ValueError("times and positions differ in length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", p)

    @classmethod
    def stationary(cls, point, duration: float) -> "Trajectory":
        return cls([0.0, duration], [point, point])


def simulate_trajectory(config: SimConfig, trajectory: Trajectory, sample_rate: float,
                        meta: Optional[TraceMeta] = None) -> Trace:
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    if trajectory.times.size == 0:
        raise ValueError("empty trajectory")
    t0, t1 = trajectory.times[0], trajectory.times[-1]
    n = int(math.floor((t1 - t0) * sample_rate + 1e-9)) + 1
    grid = t0 + np.arange(n) / sample_rate
    xs = np.interp(grid, trajectory.times, trajectory.positions[:, 0])
    ys = np.interp(grid, trajectory.times, trajectory.positions[:, 1])
    h = _channel(config, xs, ys)
    h = h + _noise(np.random.default_rng(config.seed), config.noise_std, h.shape)
    return Trace(grid - t0, h[:, :, None, None], sample_rate, meta)


# -- synthetic gesture corpus -------------------------------------------------

# (motion amplitude in m, oscillation frequency in Hz); the first two move more
ARCHETYPES = {
    "happy": (0.050, 1.2),
    "anger": (0.060, 2.2),
    "sad": (0.015, 0.5),
    "fear": (0.020, 1.7),
}
DEFAULT_CLASSES = ("happy", "sad", "anger", "fear")


@dataclass(frozen=True)
class GestureSpec:
    n_subjects: int = 14
    classes: Tuple[str, ...] = DEFAULT_CLASSES
    reps_per_class: int = 60
    subject_variation: float = 0.1
    rep_jitter: float = 0.05
    duration: float = 2.0
    sample_rate: float = 100.0
    base_zone: int = 8

    def __post_init__(self):
        if self.n_subjects < 1 or self.reps_per_class < 1 or len(self.classes) < 1:
            raise ValueError("subject, class and repetition counts must be >= 1")
        if self.subject_variation < 0 or self.rep_jitter < 0:
            raise ValueError("variation scales must be non-negative")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("class names must be unique")


def archetype(label: str, index: int) -> Tuple[float, float]:
    """Motion amplitude and frequency for a class; unknown names get a spread-out default."""
    if label in ARCHETYPES:
        return ARCHETYPES[label]
    return (0.015 + 0.012 * (index % 5), 0.5 + 0.45 * index)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def gesture_trajectory(geometry: TransceiverGeometry, base_distance: float, amplitude: float,
                       frequency: float, phase: float, duration: float, rate: float) -> Trajectory:
    """Reflector oscillating along the perpendicular bisector around ``base_distance``."""
    n = int(round(duration * rate))
    t = np.arange(n) / rate
    r = base_distance + amplitude * np.sin(2 * np.pi * frequency * t + phase)
    ox, oy = geometry.midpoint
    ux, uy = (np.subtract(geometry.bisector_point(1.0), geometry.midpoint))
    return Trajectory(t, np.column_stack([ox + ux * r, oy + uy * r]))


def subject_parameters(config: SimConfig, spec: GestureSpec, subject: int) -> dict:
    """Per-class ``(standing distance, motion amplitude, frequency)`` for one subject.

    Factors are log-normal with scale ``subject_variation``; the standing
    distance varies at a quarter of that scale.
    """
    g = config.geometry
    base = zone_boundary_distance(spec.base_zone, g.wavelength, g.separation)
    srng = _rng(config.seed, subject)
    sv = spec.subject_variation
    subject_base = base * math.exp(sv * 0.25 * srng.standard_normal())
    factors = np.exp(sv * srng.standard_normal((len(spec.classes), 2)))
    out = {}
    for c, label in enumerate(spec.classes):
        amp0, freq0 = archetype(label, c)
        out[label] = (subject_base, amp0 * factors[c, 0], freq0 * factors[c, 1])
    return out


def generate_gesture_dataset(config: SimConfig, spec: GestureSpec) -> list:
    """Synthetic labelled traces, ordered subject-major, then class, then repetition.

    Repetitions multiply the subject's amplitude and frequency by log-normal
    ``rep_jitter`` factors and start at a random phase. Every entry draws its
    own noise seed, so any single trace can be regenerated in isolation.
    """
    g = config.geometry
    traces = []
    for s in range(spec.n_subjects):
        params = subject_parameters(config, spec, s)
        attrs = {"gender": "M" if s % 2 == 0 else "F"}
        subject_id = f"s{s + 1:02d}"
        for c, label in enumerate(spec.classes):
            base, amp, freq = params[label]
            for r in range(spec.reps_per_class):
                rrng = _rng(config.seed, s, c, r)
                jitter = np.exp(spec.rep_jitter * rrng.standard_normal(2))
                traj = gesture_trajectory(g, base, amp * jitter[0], freq * jitter[1],
                                          rrng.uniform(0, 2 * np.pi), spec.duration, spec.sample_rate)
                entry_cfg = replace(config, seed=int(rrng.integers(2**63 - 1)))
                meta = TraceMeta(subject_id, label, f"{label}-{r + 1:03d}", dict(attrs))
                traces.append(simulate_trajectory(entry_cfg, traj, spec.sample_rate, meta))
    return traces
