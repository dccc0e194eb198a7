"""Magnitude spectra of x(t), peak extraction and regime classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ode import Params, State, SystemForm, run

MIN_SAMPLES = 64


class TooShort(ValueError):
    pass


class RegimeLabel(enum.Enum):
    PERIODIC = "periodic"
    QUASI_PERIODIC = "quasi-periodic"
    CHAOTIC = "chaotic"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided DFT magnitudes scaled by 1/sqrt(n).

    ``mags[k]`` belongs to frequency k/(n*dt), k = 0 .. floor(n/2) - 1.
    ``top_mag`` is the magnitude of bin floor(n/2), kept only so that the
    energy identity can be checked.
    """

    mags: np.ndarray
    sample_dt: float
    n: int
    top_mag: float = 0.0

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(len(self.mags)) / (self.n * self.sample_dt)

    @property
    def bin_width(self) -> float:
        return 1.0 / (self.n * self.sample_dt)

    def energy(self) -> float:
        """Sum of squared samples, reconstructed from the one-sided magnitudes."""
        m = self.mags
        total = m[0] ** 2 + 2.0 * np.sum(m[1:] ** 2)
        total += self.top_mag**2 if self.n % 2 == 0 else 2.0 * self.top_mag**2
        return float(total)

    def write_csv(self, path) -> None:
        peak = float(self.mags.max()) or 1.0
        with open(path, "w") as fh:
            fh.write("freq,mag,rel\n")
            for f, m in zip(self.freqs, self.mags):
                fh.write(f"{float(f)!r},{float(m)!r},{float(m) / peak!r}\n")


def power_spectrum(series: Sequence[float], dt: float, pow2: bool = False) -> Spectrum:
    """|DFT(series)| / sqrt(n), one-sided, no window.

    With ``pow2`` the series is truncated to the largest power of two first.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if pow2 and len(x) >= MIN_SAMPLES:
        x = x[: 1 << (len(x).bit_length() - 1)]
    n = len(x)
    if n < MIN_SAMPLES:
        raise TooShort(f"need at least {MIN_SAMPLES} samples, got {n}")
    full = np.abs(np.fft.rfft(x)) / math.sqrt(n)
    half = n // 2
    return Spectrum(mags=full[:half], sample_dt=float(dt), n=n, top_mag=float(full[half]))


@dataclass(frozen=True)
class Peak:
    """``freq`` is refined by a three-point parabola; ``bin`` is the raw index."""

    freq: float
    bin: int
    mag: float
    rel: float


@dataclass(frozen=True)
class PeakList:
    peaks: tuple
    threshold_pct: float

    def __len__(self) -> int:
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def __getitem__(self, i):
        return self.peaks[i]

    @property
    def freqs(self) -> np.ndarray:
        return np.array([p.freq for p in self.peaks])

    @property
    def rels(self) -> np.ndarray:
        return np.array([p.rel for p in self.peaks])

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("freq,mag,rel\n")
            for p in self.peaks:
                fh.write(f"{p.freq!r},{p.mag!r},{p.rel!r}\n")

    @classmethod
    def read_csv(cls, path, threshold_pct: float = 0.0) -> "PeakList":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        peaks = tuple(Peak(float(f), -1, float(m), float(r)) for f, m, r in data)
        return cls(peaks, threshold_pct)


def _local_maxima(m: np.ndarray) -> list[int]:
    # bin 0 (DC) is never a peak; beyond the last bin counts as zero; a
    # plateau is a peak at its leftmost bin when both sides fall away
    n = len(m)
    out = []
    k = 1
    while k < n:
        if m[k] > m[k - 1]:
            j = k
            while j + 1 < n and m[j + 1] == m[k]:
                j += 1
            right = m[j + 1] if j + 1 < n else 0.0
            if m[k] > right:
                out.append(k)
            k = j + 1
        else:
            k += 1
    return out


def _refine(m: np.ndarray, k: int) -> float:
    if k + 1 >= len(m):
        return float(k)
    a, b, c = m[k - 1], m[k], m[k + 1]
    den = a - 2.0 * b + c
    return float(k) if den == 0 else float(k + 0.5 * (a - c) / den)


def detect_peaks(spec: Spectrum, minp_pct: float = 0.5) -> PeakList:
    """Local maxima at or above ``minp_pct`` percent of the largest one."""
    if not minp_pct > 0:
        raise ValueError("minp_pct must be positive")
    m = spec.mags
    idx = _local_maxima(m)
    if not idx:
        return PeakList((), minp_pct)
    top = max(m[k] for k in idx)
    cut = minp_pct / 100.0 * top
    chosen = sorted((k for k in idx if m[k] >= cut), key=lambda k: (-m[k], k))
    w = spec.bin_width
    peaks = tuple(Peak(_refine(m, k) * w, k, float(m[k]), float(m[k] / top)) for k in chosen)
    return PeakList(peaks, minp_pct)


def count_significant(spec: Spectrum, minp_pct: float = 0.5) -> int:
    return len(detect_peaks(spec, minp_pct))


@dataclass(frozen=True)
class ClassifyConfig:
    periodic_max: int = 15
    chaotic_min: int = 300
    background_max: float = 0.2
    minp_pct: float = 0.5


def background_fraction(spec: Spectrum, peaks: PeakList) -> float:
    """Share of (non-DC) spectral energy outside the peak bins and their neighbours."""
    e = spec.mags[1:] ** 2
    total = e.sum()
    if total == 0:
        return 0.0
    mask = np.ones(len(spec.mags), dtype=bool)
    mask[0] = False
    for p in peaks:
        mask[max(p.bin - 1, 0): p.bin + 2] = False
    return float((spec.mags[mask] ** 2).sum() / total)


def _is_harmonic_set(peaks: PeakList, width: float) -> bool:
    f = np.sort(peaks.freqs)
    if len(f) == 0:
        return False
    f0 = f[0]
    if f0 <= 0:
        return False
    n = np.rint(f / f0)
    # least-squares fundamental over the assigned harmonic numbers
    f0 = float(np.dot(n, f) / np.dot(n, n))
    return bool(np.all(np.abs(f - np.rint(f / f0) * f0) <= width))


def classify(spec: Spectrum, config: ClassifyConfig = ClassifyConfig()) -> RegimeLabel:
    peaks = detect_peaks(spec, config.minp_pct)
    count = len(peaks)
    if count >= config.chaotic_min or background_fraction(spec, peaks) >= config.background_max:
        return RegimeLabel.CHAOTIC
    if count <= config.periodic_max and _is_harmonic_set(peaks, spec.bin_width):
        return RegimeLabel.PERIODIC
    return RegimeLabel.QUASI_PERIODIC


@dataclass(frozen=True)
class Sampling:
    """Where and how densely x(t) is sampled, in forcing periods.

    The defaults keep the last 1000 of 10000 periods at 20 points per period,
    integrating with 50 RK4 steps between samples (step T/1000).
    """

    total_periods: float = 10000
    window_periods: float = 1000
    points_per_period: int = 20
    steps_per_point: int = 50

    def __post_init__(self):
        if not (0 < self.window_periods <= self.total_periods):
            raise ValueError("need 0 < window_periods <= total_periods")
        if self.points_per_period < 1 or self.steps_per_point < 1:
            raise ValueError("points_per_period and steps_per_point must be >= 1")


def sample_series(
    params: Params,
    sampling: Sampling = Sampling(),
    init: State = State(0.0, 0.0, 0.0),
    period: Optional[float] = None,
) -> tuple[np.ndarray, float]:
    """x on [t_max - window, t_max] and its sample spacing.

    ``period`` defaults to the forcing period (2 pi when unforced); pass a
    fixed value to give several parameter sets the same time grid.
    """
    if period is None:
        period = params.period if params.forced else 2.0 * math.pi
    dt_s = period / sampling.points_per_period
    h = dt_s / sampling.steps_per_point
    per = sampling.points_per_period * sampling.steps_per_point
    n_total = int(round(sampling.total_periods * per))
    n_skip = n_total - int(round(sampling.window_periods * per))
    _, _, rec = run(
        SystemForm.FORCED, params, init.x, init.y, t0=init.t, h=h,
        n_steps=n_total, stride=sampling.steps_per_point, record_from=n_skip,
    )
    return rec[:, 0].copy(), dt_s


def reference_spectrum(params: Params, sampling: Sampling = Sampling(), init: State = State(0.0, 0.0, 0.0)) -> Spectrum:
    x, dt = sample_series(params, sampling, init)
    return power_spectrum(x, dt)


@dataclass(frozen=True, eq=False)
class SpectrumSweep:
    axis: str
    values: np.ndarray
    freqs: np.ndarray
    matrix: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def dominant(self) -> np.ndarray:
        return self.freqs[1:][np.argmax(self.matrix[:, 1:], axis=1)]

    def write_csv(self, path, fmax: Optional[float] = None) -> None:
        cols = slice(None) if fmax is None else self.freqs <= fmax
        with open(path, "w") as fh:
            fh.write("param,freq,mag\n")
            for v, row in zip(self.values, self.matrix):
                for f, m in zip(self.freqs[cols], row[cols]):
                    fh.write(f"{float(v)!r},{float(f)!r},{float(m)!r}\n")


def _sweep_row(args):
    axis, value, fixed, sampling, init, period = args
    p = Params(**{**fixed.as_dict(), axis: float(value)})
    x, dt = sample_series(p, sampling, init, period)
    return power_spectrum(x, dt)


def spectrum_sweep(
    axis: str,
    values: Sequence[float],
    fixed: Params,
    sampling: Sampling = Sampling(),
    init: State = State(0.0, 0.0, 0.0),
    jobs: Optional[int] = None,
) -> SpectrumSweep:
    """One spectrum per parameter value on a common time grid.

    The grid comes from the forcing period of ``fixed``, so rows share one
    frequency axis even when ``axis`` is omega.
    """
    from .forced import resolve_jobs

    if axis not in ("a", "b", "omega"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty parameter grid")
    period = fixed.period if fixed.forced else 2.0 * math.pi
    tasks = [(axis, v, fixed, sampling, init, period) for v in values]
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(tasks) == 1:
        rows = [_sweep_row(t) for t in tasks]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    matrix = np.vstack([r.mags for r in rows])
    return SpectrumSweep(axis, values, rows[0].freqs, matrix)
