"""Right-hand sides of the Van der Pol system and a fixed-step RK4 integrator.

Four equivalent or related forms of the oscillator are supported:

``FORCED``
    x' = y,  y' = -x - a (x^2 - 1) y + b cos(w t + theta)
``LIENARD``
    x' = y - a (x^3/3 - x),  y' = -x + b cos(w t + theta)
``RELAXATION``
    Lienard plane with y rescaled by 1/a:
    x' = a (y - (x^3/3 - x)),  y' = (-x + b cos(w t + theta)) / a
``TRANSFORMED``
    Slowly varying coordinates (z1, z2) with
    x = z1 sin wt + z2 cos wt,  y = w (z1 cos wt - z2 sin wt).

The hot loop is compiled with numba. Python callables may be passed in place
of a :class:`SystemForm`; they run through a plain Python loop with the same
arithmetic and are meant for small test systems.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numba
import numpy as np

BLOWUP = 1.0e6


class IntegrationError(RuntimeError):
    """Base class for integrator failures."""


class NonFiniteError(IntegrationError):
    """State became NaN/inf or left the |x|, |y| <= 1e6 box."""


class InvalidStepError(ValueError):
    """Step size or step count is not usable."""


class SystemForm(enum.Enum):
    FORCED = 0
    LIENARD = 1
    RELAXATION = 2
    TRANSFORMED = 3

    @classmethod
    def parse(cls, name: Union[str, "SystemForm"]) -> "SystemForm":
        if isinstance(name, cls):
            return name
        aliases = {
            "forced": cls.FORCED,
            "standard": cls.FORCED,
            "lienard": cls.LIENARD,
            "relaxation": cls.RELAXATION,
            "transformed": cls.TRANSFORMED,
        }
        try:
            return aliases[name.lower()]
        except KeyError:
            raise ValueError(f"unknown system form {name!r}") from None


@dataclass(frozen=True)
class Params:
    """Oscillator parameters shared by every system form."""

    a: float
    b: float = 0.0
    omega: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "omega", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"parameter {name} must be finite")
        if self.a < 0 or self.b < 0:
            raise ValueError("a and b must be non-negative")
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @property
    def forced(self) -> bool:
        return self.b > 0

    @property
    def period(self) -> float:
        """Forcing period 2*pi/omega."""
        return 2.0 * math.pi / self.omega

    @property
    def sigma(self) -> float:
        """Detuning (omega^2 - 1)/b."""
        if self.b == 0:
            raise ValueError("detuning sigma is undefined for b = 0")
        return (self.omega**2 - 1.0) / self.b

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "omega": self.omega, "theta": self.theta}


@dataclass(frozen=True)
class State:
    t: float
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled solution; sample ``i`` sits at ``t0 + i*dt``.

    ``step`` is the integration step; ``dt`` is the sample spacing
    (a whole multiple of ``step``).
    """

    dt: float
    t0: float
    samples: np.ndarray
    step: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != 2 or samples.shape[0] < 2:
            raise ValueError("trajectory needs at least two (x, y) samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.step == 0.0:
            object.__setattr__(self, "step", self.dt)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def x(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def final(self) -> State:
        x, y = self.samples[-1]
        return State(self.t0 + (len(self) - 1) * self.dt, float(x), float(y))

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


RHS = Callable[[float, float, float, Params], tuple]
FormLike = Union[SystemForm, str, RHS]


@numba.njit(cache=True)
def _rhs(form, a, b, w, th, t, x, y):
    if form == 0:
        return y, -x - a * (x * x - 1.0) * y + b * math.cos(w * t + th)
    if form == 1:
        return y - a * (x * x * x / 3.0 - x), -x + b * math.cos(w * t + th)
    if form == 2:
        return a * (y - (x * x * x / 3.0 - x)), (-x + b * math.cos(w * t + th)) / a
    # transformed: (x, y) here are (z1, z2)
    s = math.sin(w * t)
    c = math.cos(w * t)
    xx = x * s + y * c
    vv = w * (x * c - y * s)
    force = (w * w - 1.0) * xx + a * (1.0 - xx * xx) * vv + b * math.cos(w * t + th)
    return force * c / w, -force * s / w


@numba.njit(cache=True)
def _rk4_kernel(form, a, b, w, th, t0, h, x, y, i0, n_steps, stride, record_from, out):
    """Advance ``n_steps`` RK4 steps starting at global step index ``i0``.

    Time at global step ``k`` is ``t0 + k*h``. The state after local step
    ``j`` (1-based) is written to ``out`` when ``j >= record_from`` and
    ``(j - record_from) % stride == 0``. Returns (x, y, n_written, status);
    status 0 is success, 1 means the state left the finite box.
    """
    n_written = 0
    if record_from == 0:
        out[0, 0] = x
        out[0, 1] = y
        n_written = 1
    half = 0.5 * h
    for j in range(n_steps):
        t = t0 + (i0 + j) * h
        tm = t0 + ((i0 + j) + 0.5) * h
        tn = t0 + (i0 + j + 1) * h
        k1x, k1y = _rhs(form, a, b, w, th, t, x, y)
        k2x, k2y = _rhs(form, a, b, w, th, tm, x + half * k1x, y + half * k1y)
        k3x, k3y = _rhs(form, a, b, w, th, tm, x + half * k2x, y + half * k2y)
        k4x, k4y = _rhs(form, a, b, w, th, tn, x + h * k3x, y + h * k3y)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        if not (abs(x) <= 1.0e6 and abs(y) <= 1.0e6):
            return x, y, n_written, 1
        step = j + 1
        if step >= record_from and (step - record_from) % stride == 0:
            out[n_written, 0] = x
            out[n_written, 1] = y
            n_written += 1
    return x, y, n_written, 0


def _python_kernel(f, p, t0, h, x, y, i0, n_steps, stride, record_from, out):
    n_written = 0
    if record_from == 0:
        out[0] = x, y
        n_written = 1
    half = 0.5 * h
    for j in range(n_steps):
        t = t0 + (i0 + j) * h
        tm = t0 + ((i0 + j) + 0.5) * h
        tn = t0 + (i0 + j + 1) * h
        k1x, k1y = f(t, x, y, p)
        k2x, k2y = f(tm, x + half * k1x, y + half * k1y, p)
        k3x, k3y = f(tm, x + half * k2x, y + half * k2y, p)
        k4x, k4y = f(tn, x + h * k3x, y + h * k3y, p)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        if not (abs(x) <= BLOWUP and abs(y) <= BLOWUP):
            return x, y, n_written, 1
        step = j + 1
        if step >= record_from and (step - record_from) % stride == 0:
            out[n_written] = x, y
            n_written += 1
    return x, y, n_written, 0


def check_form(form: FormLike, p: Params):
    """Normalize ``form`` and enforce the per-form parameter constraints."""
    if callable(form) and not isinstance(form, SystemForm):
        return form
    form = SystemForm.parse(form)
    if form is SystemForm.RELAXATION and p.a <= 0:
        raise ValueError("relaxation-scaled form requires a > 0")
    if form is SystemForm.TRANSFORMED and p.b <= 0:
        raise ValueError("transformed form requires b > 0 (sigma = (omega^2-1)/b)")
    return form


def rhs(form: FormLike, s: State, p: Params) -> tuple[float, float]:
    """Evaluate the selected vector field at state ``s``."""
    form = check_form(form, p)
    if isinstance(form, SystemForm):
        dx, dy = _rhs(form.value, p.a, p.b, p.omega, p.theta, s.t, s.x, s.y)
    else:
        dx, dy = form(s.t, s.x, s.y, p)
    if not (math.isfinite(dx) and math.isfinite(dy)):
        raise NonFiniteError(f"non-finite derivative at {s}")
    return float(dx), float(dy)


def run(
    form: FormLike,
    p: Params,
    x: float,
    y: float,
    *,
    t0: float,
    h: float,
    n_steps: int,
    i0: int = 0,
    stride: int = 1,
    record_from: int = 0,
):
    """Low-level driver shared by every numerical routine in the package.

    Returns ``(x_end, y_end, recorded)`` where ``recorded`` holds the states
    after local steps ``record_from, record_from + stride, ...`` (step 0 being
    the initial state). Global time is ``t0 + (i0 + j)*h``.
    """
    if not (h > 0 and math.isfinite(h)):
        raise InvalidStepError(f"step must be positive and finite, got {h!r}")
    if n_steps < 0 or stride < 1 or record_from < 0:
        raise InvalidStepError("n_steps >= 0, stride >= 1, record_from >= 0 required")
    if not (math.isfinite(x) and math.isfinite(y)):
        raise NonFiniteError("initial state is not finite")
    form = check_form(form, p)
    n_rec = 0 if record_from > n_steps else (n_steps - record_from) // stride + 1
    out = np.empty((n_rec, 2), dtype=np.float64)
    if isinstance(form, SystemForm):
        xe, ye, n_written, status = _rk4_kernel(
            form.value, p.a, p.b, p.omega, p.theta, float(t0), float(h),
            float(x), float(y), int(i0), int(n_steps), int(stride), int(record_from), out,
        )
    else:
        xe, ye, n_written, status = _python_kernel(
            form, p, float(t0), float(h), float(x), float(y),
            int(i0), int(n_steps), int(stride), int(record_from), out,
        )
    if status != 0:
        raise NonFiniteError(
            f"state left the finite box |x|,|y| <= {BLOWUP:g} (x={xe!r}, y={ye!r}); "
            "step size too large or parameters out of range"
        )
    return float(xe), float(ye), out[:n_written]


def integrate(
    form: FormLike,
    p: Params,
    init: State,
    dt: float,
    n_steps: int,
    stride: int = 1,
) -> Trajectory:
    """Classical RK4 with fixed step ``dt`` for ``n_steps`` steps.

    Every ``stride``-th state is kept (the initial state always is), so the
    returned trajectory has ``n_steps // stride + 1`` samples.
    """
    if not (dt > 0):
        raise InvalidStepError(f"dt must be positive, got {dt!r}")
    if n_steps < 1:
        raise InvalidStepError("n_steps must be >= 1")
    _, _, rec = run(form, p, init.x, init.y, t0=init.t, h=dt, n_steps=n_steps, stride=stride)
    if len(rec) < 2:
        raise InvalidStepError("stride larger than n_steps leaves a single sample")
    return Trajectory(dt=dt * stride, t0=init.t, samples=rec, step=dt)


def steps_per_period(period: float, dt: float) -> tuple[int, float]:
    """Snap ``dt`` so a whole number of steps spans ``period``."""
    if not (dt > 0):
        raise InvalidStepError(f"dt must be positive, got {dt!r}")
    n = max(1, int(round(period / dt)))
    return n, period / n


def default_dt(p: Params) -> float:
    """T/1000 for forced runs, 1e-3 otherwise."""
    return p.period / 1000.0 if p.forced else 1.0e-3


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y"])
        for t, (x, y) in zip(traj.t, traj.samples):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(t, xy)`` arrays from a ``t,x,y`` CSV."""
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:3]
