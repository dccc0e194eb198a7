import wave

import numpy as np
import pytest

from vanderpol.ode import Params
from vanderpol.sonify import (
    AudioBuffer,
    InaudibleRange,
    quantize,
    read_wav,
    synthesize,
    wav_bytes,
    write_wav,
)
from vanderpol.spectra import detect_peaks, reference_spectrum, power_spectrum

# produced by the standard library's wave module for the buffer below at 8 kHz
GOLDEN = bytes.fromhex(
    "524946463400000057415645666d74201000000001000100401f0000803e000002001000"
    "64617461100000000000004000c0ff7f0180002000e00100"
)
GOLDEN_SAMPLES = [0.0, 0.5, -0.5, 1.0, -1.0, 0.25, -0.25, 1 / 32767]


def test_golden_file(tmp_path):
    path = tmp_path / "g.wav"
    write_wav(AudioBuffer(np.array(GOLDEN_SAMPLES), 8000), path)
    raw = path.read_bytes()
    assert len(raw) == 60
    assert raw == GOLDEN


def test_stdlib_reader_agrees(tmp_path):
    rng = np.random.default_rng(0)
    buf = AudioBuffer(rng.uniform(-1, 1, 1000), 22050)
    path = tmp_path / "r.wav"
    write_wav(buf, path)
    with wave.open(str(path)) as w:
        assert (w.getnchannels(), w.getsampwidth(), w.getframerate(), w.getnframes()) == (1, 2, 22050, 1000)
        frames = np.frombuffer(w.readframes(1000), dtype="<i2")
    assert np.array_equal(frames, quantize(buf.samples))


def test_single_sample_file_layout():
    raw = wav_bytes(AudioBuffer(np.array([0.0]), 44100))
    assert len(raw) == 46
    assert raw[0:4] == b"RIFF" and raw[8:12] == b"WAVE"
    assert raw[44:46] == b"\x00\x00"


def test_quantization_rule():
    assert quantize([1.0]).tolist() == [32767]
    assert quantize([-1.0]).tolist() == [-32767]
    assert quantize([0.0]).tolist() == [0]


def test_round_trip_within_one_lsb(tmp_path):
    buf = AudioBuffer(np.sin(np.linspace(0, 20, 5000)) * 0.999, 44100)
    write_wav(buf, tmp_path / "a.wav")
    back = read_wav(tmp_path / "a.wav")
    assert back.sample_rate == 44100
    assert np.max(np.abs(back.samples - buf.samples)) <= 1 / 32767


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        AudioBuffer(np.array([1.5]))


def test_single_partial():
    buf = synthesize([(1.0, 1.0)], k_scale=1000, duration=0.1, sample_rate=44100)
    i = np.arange(len(buf))
    expected = np.sin(2 * np.pi * 1000 * i / 44100)
    expected /= np.max(np.abs(expected))
    assert np.allclose(buf.samples, expected, rtol=0, atol=1e-12)
    assert np.max(np.abs(buf.samples)) == pytest.approx(1.0, abs=1e-15)


def test_silence():
    buf = synthesize([], duration=0.5, sample_rate=8000)
    assert len(buf) == 4000 and not np.any(buf.samples)


def test_inaudible_warning():
    with pytest.warns(InaudibleRange):
        synthesize([(1e-4, 1.0)], k_scale=1000, duration=0.01)


def test_deterministic_bytes():
    peaks = [(0.3, 1.0), (0.7, 0.4)]
    assert wav_bytes(synthesize(peaks, duration=0.2)) == wav_bytes(synthesize(peaks, duration=0.2))


def test_synthetic_round_trip_through_spectrum():
    peaks = [(0.25, 1.0), (0.5, 0.6), (0.9, 0.3)]
    rate, dur = 8000, 1.0
    buf = synthesize(peaks, k_scale=1000, duration=dur, sample_rate=rate)
    found = detect_peaks(power_spectrum(buf.samples, 1 / rate), 5)
    assert len(found) == 3
    bw = rate / len(buf)
    for (f, rel), p in zip(peaks, found):
        assert abs(p.freq - 1000 * f) <= bw
        assert p.rel == pytest.approx(rel, abs=0.05)


@pytest.mark.slow
def test_quasi_periodic_peaks_survive_sonification():
    peaks = detect_peaks(reference_spectrum(Params(5, 15, 7)), 4)
    assert len(peaks) == 9
    rate, dur = 44100, 4.0
    buf = synthesize(peaks, k_scale=1e3, duration=dur, sample_rate=rate)
    # partials fall between the 0.25 Hz bins of a 4 s buffer, so scalloping
    # can cost up to ~36% of a rel; the weakest input rel is 4.4%
    back = detect_peaks(power_spectrum(buf.samples, 1 / rate), 2)
    assert len(back) == 9
    bw = 1 / dur
    for p in peaks:
        assert np.min(np.abs(back.freqs - 1e3 * p.freq)) <= bw


@pytest.mark.slow
@pytest.mark.parametrize("params, periodic", [((5, 40, 7), True), ((3, 5, 1.788), False)])
def test_regime_character_survives_sonification(params, periodic):
    peaks = detect_peaks(reference_spectrum(Params(*params)), 0.5)
    rate = 44100
    buf = synthesize(peaks, k_scale=1e3, duration=4.0, sample_rate=rate)
    count = len(detect_peaks(power_spectrum(buf.samples, 1 / rate), 0.5))
    if periodic:
        assert count <= 15
    else:
        assert count >= 300
