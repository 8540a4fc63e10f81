import numpy as np
import pytest

from csisense.fresnel import TransceiverGeometry, path_difference, zone_boundary_distance, zone_index
from csisense.sim import (
    GestureSpec, SimConfig, Trajectory, generate_gesture_dataset, simulate_static, simulate_trajectory,
    subject_parameters,
)

GEOM = TransceiverGeometry.symmetric(1.2, 0.06)


def cfg(**kw):
    return SimConfig(geometry=GEOM, **kw)


def boundary(n):
    return GEOM.bisector_point(zone_boundary_distance(n, GEOM.wavelength, GEOM.separation))


def test_carrier_follows_geometry_wavelength():
    c = cfg()
    assert c.carrier * GEOM.wavelength == pytest.approx(299_792_458.0)
    assert cfg(center_frequency=5.32e9).carrier == 5.32e9
    assert c.subcarrier_frequencies.mean() == pytest.approx(c.carrier)


def test_odd_boundary_constructive():
    c = cfg(reflection_coefficient=1.0)
    assert np.all(np.abs(simulate_static(c, boundary(1))) > c.los_amplitude)


def test_even_boundary_destructive():
    c = cfg(reflection_coefficient=1.0)
    assert np.all(np.abs(simulate_static(c, boundary(2))) < c.los_amplitude)


def test_no_reflection_is_line_of_sight():
    c = cfg(reflection_coefficient=0.0)
    assert np.allclose(np.abs(simulate_static(c, (0.1, 0.5))), c.los_amplitude, rtol=1e-15, atol=0)


def test_degenerate_reflector():
    with pytest.raises(ValueError):
        simulate_static(cfg(), GEOM.tx)


@pytest.mark.parametrize("gamma", [0.3, 0.7, 1.0])
def test_energy_bound(gamma):
    c = cfg(reflection_coefficient=gamma)
    rng = np.random.default_rng(0)
    for _ in range(200):
        q = rng.uniform(-2, 2, 2)
        h = np.abs(simulate_static(c, q)).ravel()
        d_ref = np.linalg.norm(q - GEOM.tx) + np.linalg.norm(q - GEOM.rx)
        bound = c.los_amplitude * (1 + gamma * GEOM.separation / d_ref)
        assert np.all(h <= bound * (1 + 1e-12))


def test_odd_even_alternation_on_bisector_sweep():
    c = cfg(n_subcarriers=1)
    ys = np.linspace(0.02, zone_boundary_distance(10.5, 0.06, 1.2), 20001)
    amp = np.array([abs(simulate_static(c, (0.0, y))[0, 0, 0]) for y in ys])
    pd = np.array([path_difference((0.0, y), GEOM) for y in ys])
    inner = np.arange(1, len(ys) - 1)
    maxima = pd[inner[(amp[inner] > amp[inner - 1]) & (amp[inner] > amp[inner + 1])]]
    minima = pd[inner[(amp[inner] < amp[inner - 1]) & (amp[inner] < amp[inner + 1])]]
    half, tol = 0.03, 0.06 / 8
    assert len(maxima) == 5 and len(minima) == 5
    for n, p in zip(range(1, 11, 2), maxima):
        assert abs(p - n * half) <= tol
    for n, p in zip(range(2, 11, 2), minima):
        assert abs(p - n * half) <= tol


def test_subcarrier_diversity():
    h = np.abs(simulate_static(cfg(), (0.0, 0.9))).ravel()
    assert np.ptp(h) > 0


def test_stationary_trajectory_constant():
    tr = simulate_trajectory(cfg(), Trajectory.stationary((0.0, 0.4), 1.0), 100.0)
    assert len(tr) == 101
    amp = np.abs(tr.csi)
    assert np.ptp(amp, axis=0).max() == 0.0


def test_zone_crossings_match_extrema():
    c = cfg(n_subcarriers=1)
    y0, y1 = 0.5 * zone_boundary_distance(1, 0.06, 1.2), 0.5 * sum(
        zone_boundary_distance(n, 0.06, 1.2) for n in (4, 5))
    traj = Trajectory([0.0, 4.0], [(0.0, y0), (0.0, y1)])
    tr = simulate_trajectory(c, traj, 500.0)
    amp = np.abs(tr.csi[:, 0, 0, 0])
    ys = np.interp(tr.timestamps, traj.times, traj.positions[:, 1])
    zones = [zone_index((0.0, y), GEOM) for y in ys]
    crossings = sum(a != b for a, b in zip(zones, zones[1:]))
    d = np.sign(np.diff(amp))
    extrema = int(np.sum(d[1:] != d[:-1]))
    assert crossings == 4
    assert extrema == crossings


def test_trajectory_determinism_and_errors():
    c = cfg(noise_std=0.3, seed=9)
    traj = Trajectory([0, 1, 2], [(0, 0.3), (0.1, 0.4), (0, 0.5)])
    assert simulate_trajectory(c, traj, 100) == simulate_trajectory(c, traj, 100)
    assert simulate_trajectory(c, traj, 100) != simulate_trajectory(cfg(noise_std=0.3, seed=10), traj, 100)
    with pytest.raises(ValueError):
        simulate_trajectory(c, traj, 0)
    with pytest.raises(ValueError):
        simulate_trajectory(c, Trajectory([], np.zeros((0, 2))), 100)


def test_config_validation():
    for bad in (dict(subcarrier_spacing=0), dict(reflection_coefficient=1.5), dict(noise_std=-1)):
        with pytest.raises(ValueError):
            cfg(**bad)


def test_full_sized_dataset():
    traces = generate_gesture_dataset(cfg(noise_std=0.5), GestureSpec(n_subjects=14, reps_per_class=60))
    assert len(traces) == 14 * 4 * 60 == 3360
    subjects = {t.meta.subject_id for t in traces}
    assert len(subjects) == 14
    genders = {t.meta.subject_id: t.meta.attributes["gender"] for t in traces}
    assert sorted(genders.values()).count("M") == 7
    # Happy archetype moves more than fear: larger amplitude fluctuation
    def mean_std(label):
        return np.mean([np.abs(t.csi[:, 15, 0, 0]).std() for t in traces if t.meta.label == label])
    assert mean_std("happy") > mean_std("fear")


def test_zero_subject_variation_shares_archetypes():
    spec = GestureSpec(n_subjects=5, reps_per_class=1, subject_variation=0.0)
    params = [subject_parameters(cfg(seed=2), spec, s) for s in range(5)]
    assert all(p == params[0] for p in params)
    varied = GestureSpec(n_subjects=5, reps_per_class=1, subject_variation=0.3)
    assert subject_parameters(cfg(), varied, 0) != subject_parameters(cfg(), varied, 1)


def test_dataset_determinism():
    spec = GestureSpec(n_subjects=2, reps_per_class=2)
    a = generate_gesture_dataset(cfg(noise_std=0.5, seed=4), spec)
    b = generate_gesture_dataset(cfg(noise_std=0.5, seed=4), spec)
    assert all(x == y for x, y in zip(a, b))
