"""Turn a list of spectral peaks into a tone and write it as 16-bit PCM WAV."""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

AUDIBLE = (16.0, 20000.0)


class InaudibleRange(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int = 44100

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise ValueError("audio must be mono")
        if not np.all(np.isfinite(s)) or (s.size and np.max(np.abs(s)) > 1.0):
            raise ValueError("samples must be finite and within [-1, 1]")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def synthesize(peaks, k_scale: float = 1e3, duration: float = 4.0, sample_rate: int = 44100) -> AudioBuffer:
    """Sum of rel * sin(2 pi k_scale f t) over the peaks, scaled to unit peak.

    ``peaks`` is any iterable of objects with ``freq`` and ``rel``
    attributes (a PeakList works) or of ``(freq, rel)`` pairs.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    pairs = [(p.freq, p.rel) if hasattr(p, "freq") else tuple(p) for p in peaks]
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    s = np.zeros(n)
    scaled = [k_scale * f for f, _ in pairs]
    if pairs and not any(AUDIBLE[0] <= f <= AUDIBLE[1] for f in scaled):
        warnings.warn(
            f"no scaled frequency in the audible band {AUDIBLE}; adjust k_scale",
            InaudibleRange,
            stacklevel=2,
        )
    for f, rel in zip(scaled, (r for _, r in pairs)):
        s += rel * np.sin(2.0 * np.pi * f * t)
    top = np.max(np.abs(s)) if n else 0.0
    if top > 0:
        s /= top
    return AudioBuffer(s, sample_rate)


def quantize(samples) -> np.ndarray:
    """round(s * 32767) clamped to int16; -32768 is never produced from [-1, 1]."""
    q = np.rint(np.asarray(samples, dtype=float) * 32767.0)
    return np.clip(q, -32768, 32767).astype("<i2")


def wav_bytes(buf: AudioBuffer) -> bytes:
    data = quantize(buf.samples).tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16, 1, 1, buf.sample_rate, 2 * buf.sample_rate, 2, 16,
        b"data", len(data),
    )
    return header + data


def write_wav(buf: AudioBuffer, path) -> None:
    with open(path, "wb") as fh:
        fh.write(wav_bytes(buf))


def read_wav(path) -> AudioBuffer:
    """Parse a file produced by :func:`write_wav` (PCM16 mono, 44-byte header)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    riff, _, wave, fmt, fmt_len, code, ch, rate, _, _, bits, data_id, n = struct.unpack_from(
        "<4sI4s4sIHHIIHH4sI", raw
    )
    if (riff, wave, fmt, data_id) != (b"RIFF", b"WAVE", b"fmt ", b"data") or fmt_len != 16:
        raise ValueError("not a canonical PCM WAV file")
    if (code, ch, bits) != (1, 1, 16):
        raise ValueError("only 16-bit mono PCM is supported")
    q = np.frombuffer(raw, dtype="<i2", count=n // 2, offset=44)
    return AudioBuffer(np.maximum(q / 32767.0, -1.0), rate)
