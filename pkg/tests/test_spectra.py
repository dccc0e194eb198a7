import math

import numpy as np
import pytest

from vanderpol.ode import Params
from vanderpol.spectra import (
    ClassifyConfig,
    PeakList,
    RegimeLabel,
    Sampling,
    Spectrum,
    TooShort,
    classify,
    count_significant,
    detect_peaks,
    reference_spectrum,
    power_spectrum,
    sample_series,
    spectrum_sweep,
)


def tone(freqs, amps, n=4096, dt=1.0 / 64):
    t = np.arange(n) * dt
    return sum(a * np.sin(2 * np.pi * f * t) for f, a in zip(freqs, amps)), dt


def test_on_bin_sinusoid():
    n, dt = 4096, 1.0 / 64
    f0 = 100 / (n * dt)
    x, _ = tone([f0], [1.0], n, dt)
    spec = power_spectrum(x, dt)
    k = int(np.argmax(spec.mags))
    assert k == 100
    others = np.delete(spec.mags, k)
    assert np.all(others < 1e-10 * spec.mags[k])
    # unitary scaling: |X_k| / sqrt(n) = sqrt(n) / 2 for a unit sine
    assert spec.mags[k] == pytest.approx(math.sqrt(n) / 2, rel=1e-12)


def test_two_tones_ratio():
    n, dt = 4096, 1.0 / 64
    x, _ = tone([100 / (n * dt), 300 / (n * dt)], [1.0, 0.5], n, dt)
    peaks = detect_peaks(power_spectrum(x, dt), 0.5)
    assert len(peaks) == 2
    assert peaks[1].rel == pytest.approx(0.5, abs=1e-9)
    assert peaks[0].bin == 100 and peaks[1].bin == 300


def test_length_and_frequency_axis():
    x = np.random.default_rng(1).normal(size=1001)
    spec = power_spectrum(x, 0.1)
    assert len(spec.mags) == 500
    assert np.all(np.diff(spec.freqs) > 0)
    assert spec.freqs[3] == pytest.approx(3 / (1001 * 0.1))


def test_pow2_truncation():
    x = np.random.default_rng(2).normal(size=20001)
    spec = power_spectrum(x, 0.05, pow2=True)
    assert spec.n == 16384 and len(spec.mags) == 8192


def test_too_short():
    with pytest.raises(TooShort):
        power_spectrum(np.zeros(63), 1.0)


@pytest.mark.parametrize("n", [64, 999, 4096, 20001])
def test_parseval(n):
    x = np.random.default_rng(n).normal(size=n) + 0.3
    spec = power_spectrum(x, 1.0)
    assert spec.energy() == pytest.approx(float(np.sum(x * x)), rel=1e-9)


def test_constant_spectrum_has_no_peaks():
    spec = Spectrum(np.ones(100), 1.0, 200)
    assert len(detect_peaks(spec, 0.5)) == 0


def test_plateau_counts_once_at_leftmost_bin():
    m = np.array([0, 1, 3, 3, 3, 1, 0, 2, 2, 5, 0.0])
    peaks = detect_peaks(Spectrum(m, 1.0, 22), 1.0)
    assert sorted(p.bin for p in peaks) == [2, 9]


def test_peaks_sorted_and_thresholded():
    rng = np.random.default_rng(4)
    spec = Spectrum(rng.random(500), 1.0, 1000)
    peaks = detect_peaks(spec, 30)
    mags = [p.mag for p in peaks]
    assert mags == sorted(mags, reverse=True)
    assert peaks[0].rel == 1.0
    assert all(p.mag >= 0.3 * peaks[0].mag for p in peaks)
    assert all(0 < p.rel <= 1 for p in peaks)


def test_trailing_zero_bins_do_not_change_peaks():
    rng = np.random.default_rng(5)
    m = rng.random(300)
    a = detect_peaks(Spectrum(m, 1.0, 600), 5)
    b = detect_peaks(Spectrum(np.concatenate([m, np.zeros(50)]), 1.0, 600), 5)
    assert [(p.bin, p.mag) for p in a] == [(p.bin, p.mag) for p in b]


def test_scaling_invariance():
    x, dt = tone([3.1, 7.7, 11.0], [1.0, 0.4, 0.2])
    s1, s2 = power_spectrum(x, dt), power_spectrum(37.5 * x, dt)
    p1, p2 = detect_peaks(s1), detect_peaks(s2)
    assert np.allclose(p1.rels, p2.rels, rtol=1e-12)
    assert classify(s1) == classify(s2)


def test_refined_frequency_between_bins():
    n, dt = 4096, 1.0 / 64
    f0 = 100.3 / (n * dt)
    x, _ = tone([f0], [1.0], n, dt)
    p = detect_peaks(power_spectrum(x, dt))[0]
    assert p.bin == 100
    assert abs(p.freq - f0) < 0.5 / (n * dt)


def test_classify_synthetic_regimes():
    n, dt = 8192, 0.05
    w = 1 / (n * dt)
    t = np.arange(n) * dt
    periodic = sum(np.sin(2 * np.pi * k * 40 * w * t) / k for k in (1, 3, 5))
    quasi = np.sin(2 * np.pi * 40 * w * t) + 0.6 * np.sin(2 * np.pi * 40 * math.sqrt(2) * w * t)
    noise = np.random.default_rng(9).normal(size=n)
    assert classify(power_spectrum(periodic, dt)) is RegimeLabel.PERIODIC
    assert classify(power_spectrum(quasi, dt)) is RegimeLabel.QUASI_PERIODIC
    assert classify(power_spectrum(noise, dt)) is RegimeLabel.CHAOTIC


def test_classify_thresholds_configurable():
    x, dt = tone([3.0, 6.0], [1.0, 0.5])
    spec = power_spectrum(x, dt)
    assert classify(spec) is RegimeLabel.PERIODIC
    assert classify(spec, ClassifyConfig(chaotic_min=2)) is RegimeLabel.CHAOTIC


def test_peak_csv_round_trip(tmp_path):
    x, dt = tone([3.0, 6.0], [1.0, 0.5])
    peaks = detect_peaks(power_spectrum(x, dt))
    peaks.write_csv(tmp_path / "p.csv")
    back = PeakList.read_csv(tmp_path / "p.csv")
    assert np.array_equal(back.freqs, peaks.freqs)
    assert np.array_equal(back.rels, peaks.rels)


def test_spectrum_csv_header(tmp_path):
    x, dt = tone([3.0], [1.0])
    power_spectrum(x, dt).write_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "freq,mag,rel" and len(lines) == 1 + 2048


# ---- sampled series from the oscillator -----------------------------------------

SHORT = Sampling(total_periods=300, window_periods=100)


def test_sample_series_length_and_spacing():
    p = Params(5, 15, 7)
    x, dt = sample_series(p, SHORT)
    assert len(x) == 2001
    assert dt == pytest.approx(p.period / 20)
    assert len(sample_series(p)[0]) == 20001


def test_sweep_single_value_matches_standalone():
    p = Params(5, 25, 7)
    sw = spectrum_sweep("b", [25.0], Params(5, 1, 7), SHORT)
    x, dt = sample_series(p, SHORT)
    assert np.array_equal(sw.matrix[0], power_spectrum(x, dt).mags)
    assert sw.shape == (1, 1000)


def test_sweep_shape_and_locked_plateau(tmp_path):
    vals = np.linspace(24.0, 26.0, 3)
    sw = spectrum_sweep("b", vals, Params(5, 1, 7), SHORT)
    assert sw.shape == (3, 1000)
    # b = 24 .. 26 sits on one entrainment plateau: dominant frequency fixed
    assert np.ptp(sw.dominant()) == 0.0
    sw.write_csv(tmp_path / "m.csv", fmax=0.5)
    head = (tmp_path / "m.csv").read_text().splitlines()[0]
    assert head == "param,freq,mag"


def test_sweep_omega_axis_shares_grid():
    sw = spectrum_sweep("omega", [6.9, 7.0], Params(5, 25, 7), SHORT)
    assert sw.shape[0] == 2
    assert sw.freqs[1] == pytest.approx(1 / (2001 * Params(5, 25, 7).period / 20))


@pytest.mark.slow
def test_reference_quasi_periodic_spectrum():
    spec = reference_spectrum(Params(5, 15, 7))
    peaks = detect_peaks(spec, 0.5)
    assert peaks[0].freq == pytest.approx(0.0920, abs=0.0015)
    assert peaks[1].rel == pytest.approx(0.27, abs=0.02)
    assert len(detect_peaks(spec, 4)) == 9
    assert 25 <= count_significant(spec) <= 80
