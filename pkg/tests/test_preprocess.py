import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from csisense.core import Trace, TraceMeta
from csisense.fresnel import TransceiverGeometry
from csisense.preprocess import FilterSpec, butter_lowpass, lowpass, preprocess_trace, regularize
from csisense.sim import SimConfig, gesture_trajectory, simulate_trajectory


def tone(freq, n=2000, fs=100.0):
    return np.sin(2 * np.pi * freq * np.arange(n) / fs)


def steady_rms_ratio(x, y, skip=200):
    return np.sqrt(np.mean(y[skip:-skip] ** 2) / np.mean(x[skip:-skip] ** 2))


def test_default_spec_matches_stated_cutoff():
    spec = FilterSpec()
    assert spec.normalized_cutoff == pytest.approx(0.942, abs=5e-4)
    assert (spec.cutoff_hz, spec.sample_rate, spec.order, spec.zero_phase) == (15.0, 100.0, 4, True)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5, 8])
@pytest.mark.parametrize("cutoff", [2.0, 15.0, 40.0])
def test_design_matches_reference(order, cutoff):
    b, a = butter_lowpass(FilterSpec(cutoff, 100.0, order))
    rb, ra = signal.butter(order, cutoff, fs=100.0)
    assert np.allclose(b, rb, rtol=1e-9, atol=1e-12)
    assert np.allclose(a, ra, rtol=1e-9, atol=1e-12)


def test_design_magnitude_matches_prewarped_prototype():
    spec = FilterSpec()
    b, a = butter_lowpass(spec)
    w, h = signal.freqz(b, a, worN=np.linspace(0.01, 0.99 * np.pi, 200))
    ratio = np.tan(w / 2) / np.tan(spec.normalized_cutoff / 2)
    assert np.allclose(np.abs(h), 1 / np.sqrt(1 + ratio ** (2 * spec.order)), atol=1e-9)


@pytest.mark.parametrize("zero_phase", [True, False])
def test_constant_passes_unchanged(zero_phase):
    x = np.full(300, 7.25)
    assert np.allclose(lowpass(x, FilterSpec(zero_phase=zero_phase)), 7.25, atol=1e-6)


def test_30hz_single_pass_below_analytic_bound():
    x = tone(30.0)
    y = lowpass(x, FilterSpec(zero_phase=False))
    assert steady_rms_ratio(x, y) <= 1 / math.sqrt(1 + 2**8)


def test_30hz_zero_phase():
    x = tone(30.0)
    assert steady_rms_ratio(x, lowpass(x, FilterSpec())) <= 0.005


@pytest.mark.parametrize("zero_phase", [True, False])
def test_2hz_preserved(zero_phase):
    x = tone(2.0)
    assert steady_rms_ratio(x, lowpass(x, FilterSpec(zero_phase=zero_phase))) >= 0.95


def test_filter_argument_errors():
    with pytest.raises(ValueError):
        FilterSpec(cutoff_hz=50.0)
    with pytest.raises(ValueError):
        FilterSpec(order=0)
    with pytest.raises(ValueError):
        lowpass(np.zeros(12), FilterSpec())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5), st.booleans())
def test_linearity(seed, a, b, zero_phase):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 256))
    spec = FilterSpec(zero_phase=zero_phase)
    lhs = lowpass(a * x + b * y, spec)
    rhs = a * lowpass(x, spec) + b * lowpass(y, spec)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (abs(a) + abs(b) + 1))


def test_zero_phase_has_no_lag():
    rng = np.random.default_rng(1)
    x = np.convolve(rng.normal(size=1200), np.hanning(25), mode="same")  # band-limited
    y = lowpass(x, FilterSpec())
    xc = signal.correlate(y - y.mean(), x - x.mean(), mode="full")
    assert np.argmax(xc) - (len(x) - 1) == 0


def trace_from(ts, values, rate=1.0):
    values = np.asarray(values, dtype=complex)
    return Trace(ts, values.reshape(-1, 1, 1, 1), rate, TraceMeta("s", "x"))


def test_regularize_fills_gap():
    out = regularize(trace_from([0.0, 1.0, 3.0], [0, 1, 3]), 1.0)
    assert out.timestamps.tolist() == [0.0, 1.0, 2.0, 3.0]
    assert out.csi[:, 0, 0, 0].real.tolist() == [0.0, 1.0, 2.0, 3.0]


def test_regularize_idempotent_on_uniform():
    rng = np.random.default_rng(0)
    ts = np.arange(50) * 0.01
    tr = trace_from(ts, rng.normal(size=50) + 1j * rng.normal(size=50), 100.0)
    assert regularize(tr, 100.0) == tr
    assert regularize(regularize(tr, 100.0), 100.0) == tr


def test_regularize_recovers_linear_signal():
    rng = np.random.default_rng(2)
    full_t = np.arange(400) / 100.0
    truth = (3.0 - 2.0j) * full_t + (1.0 + 0.5j)
    keep = np.sort(np.concatenate([[0, 399], rng.choice(np.arange(1, 399), 300, replace=False)]))
    out = regularize(trace_from(full_t[keep], truth[keep], 100.0), 100.0)
    assert len(out) == 400
    assert np.max(np.abs(out.csi[:, 0, 0, 0] - truth)) <= 1e-12
    assert np.array_equal(out.csi[keep, 0, 0, 0], truth[keep])


def test_regularize_needs_two_frames():
    with pytest.raises(ValueError):
        regularize(trace_from([0.0], [1.0]), 1.0)


def constant_trace(n=200):
    csi = np.tile(np.arange(1, 31, dtype=complex).reshape(1, 30, 1, 1), (n, 1, 1, 1)) * (0.6 + 0.8j)
    return Trace(np.arange(n) / 100.0, csi, 100.0)


def test_preprocess_constant_trace():
    out = preprocess_trace(constant_trace())
    assert out.amplitudes.shape == (200, 30, 1, 1)
    assert np.allclose(out.amplitudes[:, :, 0, 0], np.arange(1, 31), atol=1e-9)


def test_preprocess_dropped_frames_uniform_grid():
    tr = constant_trace(400)
    rng = np.random.default_rng(3)
    keep = np.sort(np.concatenate([[0, 399], rng.choice(np.arange(1, 399), 378, replace=False)]))
    gappy = Trace(tr.timestamps[keep], tr.csi[keep], 100.0)
    out = preprocess_trace(gappy)
    assert len(out.timestamps) == 400
    assert np.allclose(np.diff(out.timestamps), 0.01)


def high_band_energy(x, fs=100.0, above=20.0):
    # Hann taper keeps end-to-start discontinuities from leaking into the high band
    taper = np.hanning(len(x))[:, None]
    spec = np.abs(np.fft.rfft((x - x.mean(axis=0)) * taper, axis=0)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1 / fs)
    return spec[freqs > above].sum(axis=0)


@pytest.mark.parametrize("amp, freq", [(0.05, 1.2), (0.015, 0.5), (0.06, 2.2), (0.02, 1.7)])
def test_preprocess_removes_high_band_noise(amp, freq):
    g = TransceiverGeometry.symmetric(1.2, 0.06)
    traj = gesture_trajectory(g, 0.4, amp, freq, 0.3, 4.0, 100.0)
    tr = simulate_trajectory(SimConfig(geometry=g, noise_std=1.0, seed=1), traj, 100.0)
    raw = np.abs(tr.csi[:, :, 0, 0])
    out = preprocess_trace(tr).amplitudes[:, :, 0, 0]
    reduction_db = 10 * np.log10(high_band_energy(out) / high_band_energy(raw))
    assert reduction_db.max() <= -20


def test_preprocess_rate_mismatch():
    with pytest.raises(ValueError):
        preprocess_trace(constant_trace(), FilterSpec(sample_rate=200.0))


def test_stream_layout():
    out = preprocess_trace(Trace(np.arange(50) / 100.0, np.ones((50, 2, 3, 2)), 100.0))
    assert out.n_streams == 12
    assert out.stream_names()[:3] == ["sc00.rx0.tx0", "sc00.rx0.tx1", "sc00.rx1.tx0"]
    assert out.streams().shape == (12, 50)
