"""Stroboscopic sections, period detection, parameter scans and chaos indicators
for the periodically forced oscillator.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .ode import (
    FormLike,
    IntegrationError,
    Params,
    State,
    SystemForm,
    check_form,
    run,
    steps_per_period,
)

DEFAULT_TRANSIENT_PERIODS = 500
CLUSTER_TOL = 1e-3


class DegenerateSeparation(IntegrationError):
    """Companion trajectory collapsed onto the reference (or blew apart)."""


@dataclass(frozen=True, eq=False)
class PoincareSection:
    params: Params
    points: np.ndarray
    t_min: float
    t_max: float
    stride: float
    step: float

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def times(self) -> np.ndarray:
        return self.t_min + np.arange(len(self)) * self.stride


@dataclass(frozen=True)
class PeriodVerdict:
    """``m`` is the subharmonic order when locked, otherwise ``None``."""

    m: Optional[int]
    clusters: int
    tolerance: float

    @property
    def locked(self) -> bool:
        return self.m is not None

    @property
    def kind(self) -> str:
        return "locked" if self.locked else "drifting"

    def __str__(self) -> str:
        return f"Locked({self.m})" if self.locked else "Drifting"


def poincare(
    params: Params,
    init: State = State(0.0, 0.0, 0.0),
    t_transient: Optional[float] = None,
    n_points: int = 50,
    dt: Optional[float] = None,
) -> PoincareSection:
    """Sample (x, y) once per forcing period after a transient.

    The transient is rounded up to a whole number of periods and ``dt`` is
    snapped to T/round(T/dt), so every sample lands on an integration step.
    """
    if not params.forced:
        raise ValueError("stroboscopic period undefined for b = 0")
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    T = params.period
    if t_transient is None:
        t_transient = DEFAULT_TRANSIENT_PERIODS * T
    if t_transient < 0:
        raise ValueError("t_transient must be >= 0")
    spp, h = steps_per_period(T, T / 1000.0 if dt is None else dt)
    k_tr = math.ceil(t_transient / T - 1e-9)
    _, _, rec = run(
        SystemForm.FORCED, params, init.x, init.y,
        t0=init.t, h=h, n_steps=(k_tr + n_points - 1) * spp,
        stride=spp, record_from=k_tr * spp,
    )
    t_min = init.t + k_tr * spp * h
    return PoincareSection(
        params=params,
        points=rec,
        t_min=t_min,
        t_max=init.t + (k_tr + n_points - 1) * spp * h,
        stride=spp * h,
        step=h,
    )


def cluster_labels(points: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Greedy clustering: each point joins the first center within ``tol``."""
    centers: list[np.ndarray] = []
    labels = np.empty(len(points), dtype=int)
    for i, q in enumerate(points):
        for k, c in enumerate(centers):
            if math.hypot(q[0] - c[0], q[1] - c[1]) <= tol:
                labels[i] = k
                break
        else:
            centers.append(q)
            labels[i] = len(centers) - 1
    return labels, np.array(centers)


def detect_period(section, tol: float = CLUSTER_TOL) -> PeriodVerdict:
    """Locked(m) when the section visits m clusters in a strict cycle, m <= n/2."""
    points = section.points if isinstance(section, PoincareSection) else np.asarray(section, float)
    n = len(points)
    if n < 50:
        raise ValueError(f"period detection needs >= 50 section points, got {n}")
    labels, centers = cluster_labels(points, tol)
    m = len(centers)
    cyclic = m <= n // 2 and np.array_equal(labels, np.arange(n) % m)
    return PeriodVerdict(m=m if cyclic else None, clusters=m, tolerance=tol)


@dataclass(frozen=True, eq=False)
class BifurcationRow:
    value: float
    x: np.ndarray
    verdict: PeriodVerdict
    final: State


@dataclass(frozen=True, eq=False)
class BifurcationData:
    axis: str
    rows: list

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    def write_csv(self, points_path, period_path) -> None:
        with open(points_path, "w") as fh:
            fh.write("param,x\n")
            for row in self.rows:
                for xv in row.x:
                    fh.write(f"{row.value!r},{float(xv)!r}\n")
        with open(period_path, "w") as fh:
            fh.write("param,period\n")
            for row in self.rows:
                fh.write(f"{row.value!r},{row.verdict.m if row.verdict.locked else 0}\n")


def parameter_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """lo, lo+step, ... up to hi inclusive (to 1e-9 relative slack)."""
    if not step > 0:
        raise ValueError("step must be positive")
    if not lo <= hi:
        raise ValueError("need lo <= hi")
    n = int(math.floor((hi - lo) / step * (1 + 1e-12) + 1e-9)) + 1
    return lo + step * np.arange(n)


def _with_axis(fixed: Params, axis: str, value: float) -> Params:
    if axis == "b":
        return replace(fixed, b=float(value))
    if axis == "omega":
        return replace(fixed, omega=float(value))
    if axis == "a":
        return replace(fixed, a=float(value))
    raise ValueError(f"unknown scan axis {axis!r}")


def _scan_row(args):
    axis, value, fixed, init, n_samples, transient_periods, dt_frac, tol = args
    p = _with_axis(fixed, axis, value)
    T = p.period
    sec = poincare(p, init, transient_periods * T, n_samples, T * dt_frac)
    last = sec.points[-1]
    return BifurcationRow(
        value=float(value),
        x=sec.points[:, 0].copy(),
        verdict=detect_period(sec, tol),
        final=State(0.0, float(last[0]), float(last[1])),
    )


def resolve_jobs(jobs: Optional[int]) -> int:
    if jobs is None:
        jobs = int(os.environ.get("VDP_JOBS", "1") or 1)
    return max(1, int(jobs))


def bifurcation_scan(
    axis: str,
    values: Sequence[float],
    fixed: Params,
    init: State = State(0.0, 0.0, 0.0),
    n_samples: int = 50,
    transient_periods: int = DEFAULT_TRANSIENT_PERIODS,
    continuation: bool = False,
    jobs: Optional[int] = None,
    dt_frac: float = 1e-3,
    tol: float = CLUSTER_TOL,
) -> BifurcationData:
    """Poincare x-values and a period verdict for every parameter value.

    ``values`` may come from :func:`parameter_grid`. Rows are independent
    unless ``continuation`` is set, in which case each row starts from the
    last section point of the previous one. Output order follows ``values``.
    """
    values = [float(v) for v in values]
    if not values:
        raise ValueError("empty parameter grid")
    if continuation:
        rows, start = [], init
        for v in values:
            row = _scan_row((axis, v, fixed, start, n_samples, transient_periods, dt_frac, tol))
            rows.append(row)
            start = row.final
        return BifurcationData(axis, rows)
    tasks = [(axis, v, fixed, init, n_samples, transient_periods, dt_frac, tol) for v in values]
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(tasks) == 1:
        rows = [_scan_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_row, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return BifurcationData(axis, rows)


@dataclass(frozen=True)
class LyapunovEstimate:
    lam: float
    stderr: float
    n_renorm: int
    interval: float

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "stderr": self.stderr, "n_renorm": self.n_renorm, "interval": self.interval}


def lyapunov_max(
    params: Params,
    init: State = State(0.0, 0.5, 0.0),
    d0: float = 1e-8,
    renorm_interval: Optional[float] = None,
    n_renorm: int = 1000,
    transient: Optional[float] = None,
    dt: Optional[float] = None,
    form: FormLike = SystemForm.FORCED,
) -> LyapunovEstimate:
    """Largest Lyapunov exponent by two-trajectory renormalization (Benettin).

    A companion starts ``d0`` away along x. After each interval of length
    ``renorm_interval`` (default: one forcing period, or 2*pi when unforced)
    the log stretch g_i = ln(d_i/d0) is recorded and the companion is pulled
    back to distance d0 along the current separation.
    """
    if n_renorm < 100:
        raise ValueError("n_renorm must be >= 100")
    if not d0 > 0:
        raise ValueError("d0 must be positive")
    form = check_form(form, params)
    tau = renorm_interval or (params.period if params.forced else 2.0 * math.pi)
    base_dt = dt or (tau / 1000.0 if params.forced else 1e-3)
    spi, h = steps_per_period(tau, base_dt)
    if transient is None:
        transient = DEFAULT_TRANSIENT_PERIODS * tau if params.forced else 0.0
    n_tr = int(round(transient / h))
    skip = 1 << 62
    x, y, _ = run(form, params, init.x, init.y, t0=init.t, h=h, n_steps=n_tr, record_from=skip)
    i = n_tr
    xc, yc = x + d0, y
    g = np.empty(n_renorm)
    for k in range(n_renorm):
        x, y, _ = run(form, params, x, y, t0=init.t, h=h, n_steps=spi, i0=i, record_from=skip)
        xc, yc, _ = run(form, params, xc, yc, t0=init.t, h=h, n_steps=spi, i0=i, record_from=skip)
        i += spi
        dx, dy = xc - x, yc - y
        d = math.hypot(dx, dy)
        if not (d > 0 and math.isfinite(d)):
            raise DegenerateSeparation(f"separation {d!r} after interval {k}")
        g[k] = math.log(d / d0)
        xc, yc = x + dx * (d0 / d), y + dy * (d0 / d)
    tau_eff = spi * h
    return LyapunovEstimate(
        lam=float(g.mean() / tau_eff),
        stderr=float(g.std(ddof=1) / (tau_eff * math.sqrt(n_renorm))),
        n_renorm=n_renorm,
        interval=tau_eff,
    )


@dataclass(frozen=True, eq=False)
class Divergence:
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    log_separation: np.ndarray

    @property
    def separation(self) -> np.ndarray:
        return np.exp(self.log_separation)


def divergence_experiment(
    params: Params,
    init: State = State(0.0, 0.5, 0.0),
    delta: float = 1e-5,
    t_span: Optional[float] = None,
    dt: Optional[float] = None,
    stride: int = 10,
) -> Divergence:
    """Integrate (x0, y0) and (x0 + delta, y0 + delta) on the same grid.

    ``log_separation`` is ln of the Euclidean (x, y) distance; identical
    samples give -inf.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    T = params.period if params.forced else 2.0 * math.pi
    if t_span is None:
        t_span = 200 * T
    spp, h = steps_per_period(T, dt or T / 1000.0)
    n = int(round(t_span / h))
    _, _, a = run(SystemForm.FORCED, params, init.x, init.y, t0=init.t, h=h, n_steps=n, stride=stride)
    _, _, b = run(
        SystemForm.FORCED, params, init.x + delta, init.y + delta,
        t0=init.t, h=h, n_steps=n, stride=stride,
    )
    with np.errstate(divide="ignore"):
        logsep = np.log(np.hypot(b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]))
    t = init.t + np.arange(len(a)) * stride * h
    return Divergence(t=t, x1=a[:, 0].copy(), x2=b[:, 0].copy(), log_separation=logsep)


def levinson_template(d: float, rho: float, t1: float, t_grid) -> np.ndarray:
    """(3 - d) exp(-rho (t - t1)) - d cos t on ``t_grid``."""
    if not (0 <= d < 1):
        raise ValueError("d must lie in [0, 1)")
    if rho < 0:
        raise ValueError("rho must be >= 0")
    t = np.asarray(t_grid, dtype=float)
    return (3.0 - d) * np.exp(-rho * (t - t1)) - d * np.cos(t)
