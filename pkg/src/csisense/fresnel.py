"""Fresnel-zone geometry in the plane containing the transmitter, receiver and subject.

The n-th zone boundary is the ellipse on which the reflected path
Tx -> Q -> Rx is exactly ``n * wavelength / 2`` longer than the direct path.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np

WAVELENGTH_5GHZ = 0.06
# The commonly quoted 2.4 GHz figure; physically c / 2.4 GHz is ~0.125 m.
WAVELENGTH_2_4GHZ = 0.125


class FresnelRangeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TransceiverGeometry:
    tx: Tuple[float, float]
    rx: Tuple[float, float]
    wavelength: float

    def __post_init__(self):
        object.__setattr__(self, "tx", tuple(float(v) for v in self.tx))
        object.__setattr__(self, "rx", tuple(float(v) for v in self.rx))
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if self.tx == self.rx:
            raise ValueError("tx and rx must be distinct points")

    @classmethod
    def symmetric(cls, separation: float, wavelength: float = WAVELENGTH_5GHZ) -> "TransceiverGeometry":
        """Tx and Rx on the x axis, centred on the origin."""
        if not separation > 0:
            raise ValueError("separation must be positive")
        h = separation / 2.0
        return cls((-h, 0.0), (h, 0.0), wavelength)

    @property
    def separation(self) -> float:
        return math.dist(self.tx, self.rx)

    @property
    def midpoint(self) -> Tuple[float, float]:
        return ((self.tx[0] + self.rx[0]) / 2.0, (self.tx[1] + self.rx[1]) / 2.0)

    def bisector_point(self, distance: float) -> Tuple[float, float]:
        """Point on the perpendicular bisector at ``distance`` from the midpoint."""
        dx, dy = self.rx[0] - self.tx[0], self.rx[1] - self.tx[1]
        norm = math.hypot(dx, dy)
        ox, oy = self.midpoint
        return (ox - dy / norm * distance, oy + dx / norm * distance)


@dataclass(frozen=True)
class LookupRow:
    n: int
    distance: float


@dataclass(frozen=True)
class FresnelLookupTable:
    wavelength: float
    separation: float
    rows: Tuple[LookupRow, ...]

    def distances(self) -> np.ndarray:
        return np.array([r.distance for r in self.rows])

    def format(self) -> str:
        """Aligned two-column text table, distances in metres."""
        lines = [f"# wavelength={self.wavelength:g} m  separation={self.separation:g} m",
                 f"{'n':>4}  {'|QnO| (m)':>12}"]
        lines += [f"{r.n:>4d}  {r.distance:>12.6f}" for r in self.rows]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        return "n,distance_m\n" + "".join(f"{r.n},{r.distance:.9f}\n" for r in self.rows)


def path_difference(point, geom: TransceiverGeometry) -> float:
    """Excess length of the reflected path through ``point`` over the direct path."""
    d = math.dist(geom.tx, point) + math.dist(point, geom.rx) - geom.separation
    return max(d, 0.0)


def zone_index(point, geom: TransceiverGeometry) -> int:
    """Smallest n with path difference <= n * wavelength / 2 (boundaries close on the right)."""
    half = geom.wavelength / 2.0
    ratio = path_difference(point, geom) / half
    n = math.ceil(ratio)
    # a point sitting on a boundary up to rounding error belongs to that boundary
    if n >= 1 and math.isclose(ratio, n - 1, rel_tol=0, abs_tol=1e-9):
        n -= 1
    return n


def zone_boundary_distance(n: int, wavelength: float, separation: float) -> float:
    """Distance from the Tx-Rx midpoint to the n-th boundary along the perpendicular bisector."""
    if not wavelength > 0 or not separation > 0:
        raise ValueError("wavelength and separation must be positive")
    if n < 0:
        raise ValueError("zone index must be non-negative")
    if n == 0:
        return 0.0
    return math.sqrt(n * n * wavelength * wavelength / 16.0 + n * wavelength * separation / 4.0)


def build_lookup_table(wavelength: float, separation: float, n_max: int) -> FresnelLookupTable:
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    rows = tuple(LookupRow(n, zone_boundary_distance(n, wavelength, separation)) for n in range(n_max + 1))
    return FresnelLookupTable(float(wavelength), float(separation), rows)


def combined_phase_shift(n: int) -> float:
    """Propagation shift (pi for odd n, 0 for even) plus the pi lost on reflection."""
    if n < 1:
        raise ValueError("combined phase shift needs a reflecting zone, n >= 1")
    path_shift = math.pi if n % 2 else 0.0
    return path_shift + math.pi


@dataclass(frozen=True)
class OddZoneRecommendation:
    n_odd: int
    boundary_distance: float
    containing_zone: int
    clamped: bool = False


def recommend_odd_zone(target_distance: float, wavelength: float, separation: float,
                       n_max: int = 99) -> OddZoneRecommendation:
    """Pick the odd zone whose bisector boundary is closest to ``target_distance``.

    Ties go to the smaller zone. Targets beyond boundary ``n_max`` clamp to the
    largest odd zone in range and emit :class:`FresnelRangeWarning`.
    """
    if target_distance < 0:
        raise ValueError("target distance must be non-negative")
    if n_max < 1:
        raise ValueError("n_max must include at least zone 1")
    table = build_lookup_table(wavelength, separation, n_max)
    best = None
    for row in table.rows:
        if row.n % 2 == 0:
            continue
        gap = abs(row.distance - target_distance)
        if best is None or gap < best[0]:
            best = (gap, row)
    clamped = target_distance > table.rows[-1].distance
    if clamped:
        warnings.warn(
            f"target {target_distance:g} m lies beyond zone {n_max} "
            f"({table.rows[-1].distance:.4f} m); clamping", FresnelRangeWarning, stacklevel=2)
    geom = TransceiverGeometry.symmetric(separation, wavelength)
    containing = zone_index(geom.bisector_point(target_distance), geom)
    return OddZoneRecommendation(best[1].n, best[1].distance, containing, clamped)


def zone_indices(points: Iterable, geom: TransceiverGeometry) -> List[int]:
    return [zone_index(p, geom) for p in points]
