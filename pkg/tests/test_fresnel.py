import math
import warnings

import pytest
from hypothesis import given, strategies as st

from csisense.fresnel import (
    FresnelRangeWarning, TransceiverGeometry, build_lookup_table, combined_phase_shift, path_difference,
    recommend_odd_zone, zone_boundary_distance, zone_index,
)

GEOM = TransceiverGeometry.symmetric(1.2, 0.06)


def test_geometry_validation():
    with pytest.raises(ValueError):
        TransceiverGeometry((0, 0), (0, 0), 0.06)
    with pytest.raises(ValueError):
        TransceiverGeometry((0, 0), (1, 0), 0.0)
    assert GEOM.separation == pytest.approx(1.2)
    assert GEOM.midpoint == (0.0, 0.0)


def test_path_difference_examples():
    assert path_difference((0.3, 0.0), GEOM) == 0.0
    assert path_difference(GEOM.tx, GEOM) == 0.0
    q1 = GEOM.bisector_point(zone_boundary_distance(1, 0.06, 1.2))
    assert path_difference(q1, GEOM) == pytest.approx(0.03, abs=1e-9)


def test_zone_index_examples():
    assert zone_index((0.1, 0.0), GEOM) == 0
    assert zone_index(GEOM.bisector_point(zone_boundary_distance(1, 0.06, 1.2)), GEOM) == 1
    # path difference 1.4 * lambda / 2 on the bisector: solve 2*sqrt(0.36 + y^2) - 1.2 = 0.042
    y = math.sqrt(((1.2 + 0.042) / 2) ** 2 - 0.36)
    assert zone_index((0.0, y), GEOM) == 2


def test_boundary_distance_reference_values():
    assert zone_boundary_distance(8, 0.06, 1.20) == pytest.approx(0.398, abs=1e-3)
    assert zone_boundary_distance(0, 0.06, 1.2) == 0.0
    lam, l = 0.06, 1.2
    assert zone_boundary_distance(1, lam, l) == pytest.approx(math.sqrt(lam**2 / 16 + lam * l / 4))
    assert zone_boundary_distance(2, lam, l) == pytest.approx(math.sqrt(lam**2 / 4 + lam * l / 2))


@pytest.mark.parametrize("args", [(1, 0.0, 1.0), (1, 0.06, -1.0), (-1, 0.06, 1.0)])
def test_boundary_distance_argument_errors(args):
    with pytest.raises(ValueError):
        zone_boundary_distance(*args)


def test_lookup_table():
    table = build_lookup_table(0.06, 1.2, 8)
    assert table.rows[-1].n == 8
    assert table.rows[-1].distance == pytest.approx(0.398, abs=5e-4)
    single = build_lookup_table(0.06, 1.2, 0)
    assert [(r.n, r.distance) for r in single.rows] == [(0, 0.0)]
    assert table.format().splitlines()[-1].split() == ["8", "0.397995"]
    assert table.to_csv().splitlines()[0] == "n,distance_m"


lams = st.floats(0.005, 0.5)
seps = st.floats(0.1, 10.0)


@given(lams, seps, st.integers(1, 200))
def test_bisector_inversion(lam, l, n):
    g = TransceiverGeometry.symmetric(l, lam)
    q = g.bisector_point(zone_boundary_distance(n, lam, l))
    assert path_difference(q, g) == pytest.approx(n * lam / 2, abs=1e-9)


@given(lams, seps, st.integers(2, 60))
def test_table_monotone_and_packing(lam, l, n_max):
    d = build_lookup_table(lam, l, n_max).distances()
    steps = d[1:] - d[:-1]
    assert (steps > 0).all()
    # derivative of the closed form in n is positive and decreasing
    deriv = [(2 * n * lam**2 / 16 + lam * l / 4) / (2 * math.sqrt(n * n * lam**2 / 16 + n * lam * l / 4))
             for n in range(1, n_max + 1)]
    assert all(a > b for a, b in zip(deriv, deriv[1:]))
    assert all(a > b for a, b in zip(steps, steps[1:]))


@given(st.integers(1, 40), st.floats(0.01, 0.99), st.floats(-1.0, 1.0))
def test_zone_index_between_boundaries(n, frac, x):
    # points with path difference strictly inside ((n-1), n) * lambda/2
    target = (n - 1 + frac) * GEOM.wavelength / 2
    a = (GEOM.separation + target) / 2
    b = math.sqrt(a * a - 0.36)
    px = max(-0.999, min(0.999, x)) * a
    py = b * math.sqrt(1 - (px / a) ** 2)
    assert zone_index((px, py), GEOM) == n


def test_combined_phase_shift():
    assert combined_phase_shift(1) == 2 * math.pi
    assert combined_phase_shift(2) == math.pi
    assert combined_phase_shift(7) == 2 * math.pi
    with pytest.raises(ValueError):
        combined_phase_shift(0)


def test_recommend_odd_zone_matches_exhaustive_scan():
    lam, l, target = 0.06, 1.2, 0.40
    candidates = [(abs(zone_boundary_distance(n, lam, l) - target), n) for n in range(1, 100, 2)]
    best = min(candidates)[1]
    rec = recommend_odd_zone(target, lam, l)
    assert rec.n_odd == best == 9
    assert rec.containing_zone == 9
    assert rec.boundary_distance == pytest.approx(zone_boundary_distance(9, lam, l))


def test_recommend_zero_target():
    assert recommend_odd_zone(0.0, 0.06, 1.2).n_odd == 1


def test_recommend_tie_goes_to_smaller_zone():
    # wavelength 4, separation 24: boundaries 1 and 3 sit at exactly 5 and 9
    assert zone_boundary_distance(1, 4.0, 24.0) == 5.0
    assert zone_boundary_distance(3, 4.0, 24.0) == 9.0
    assert recommend_odd_zone(7.0, 4.0, 24.0).n_odd == 1


def test_recommend_clamps_with_warning():
    with pytest.warns(FresnelRangeWarning):
        rec = recommend_odd_zone(5.0, 0.06, 1.2, n_max=10)
    assert rec.n_odd == 9 and rec.clamped
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not recommend_odd_zone(0.2, 0.06, 1.2).clamped
