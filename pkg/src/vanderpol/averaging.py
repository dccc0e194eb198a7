"""Averaged dynamics of the weakly nonlinear oscillator and forced-response algebra.

First-order averaging of x'' + x = a (1 - x^2) x' gives the slow flow

    r' = (a r / 2) (1 - r^2 / 4),    psi' = 0,

with the stable amplitude r = 2. Second-order averaging adds the frequency
correction 1 - a^2/16. For the forced system the k = 0 determining
equations, the resonance amplitude cubic and the locking predicate live here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class ConvergenceFailure(RuntimeError):
    pass


class NotEquilibrium(ValueError):
    pass


class SingularJacobian(RuntimeError):
    """A root was found but its Jacobian determinant is (numerically) zero."""

    def __init__(self, point: "DeterminingPoint", det: float):
        super().__init__(f"|det J| = {abs(det):.3e} < 1e-8 at (a1, a2) = ({point.a1}, {point.a2})")
        self.point = point
        self.det = det


class Stability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class Order(enum.Enum):
    FIRST = 1
    SECOND = 2


@dataclass(frozen=True)
class AveragedState:
    r: float
    psi: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError("averaged amplitude must be finite and >= 0")


def f1_average(r: float) -> float:
    """Closed form of the sine-weighted average of (1 - x^2) x' on a circle."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return r**3 / 8.0 - r / 2.0


def averaged_rhs(r: float, a: float) -> float:
    """dr/dt of the first-order averaged amplitude equation."""
    return 0.5 * a * r * (1.0 - 0.25 * r * r)


def averaged_amplitude(r0: float, a: float, t: float) -> float:
    """Closed-form solution of the averaged amplitude equation.

    r(t) = 2 e^{at/2} / sqrt(e^{at} + 4/r0^2 - 1)
    """
    if r0 < 0:
        raise ValueError("r0 must be >= 0")
    if r0 == 0:
        return 0.0
    # divide through by e^{at} to stay finite for large a*t
    decay = math.exp(-a * t)
    return 2.0 / math.sqrt(1.0 + (4.0 / (r0 * r0) - 1.0) * decay)


def equilibrium_stability(r_eq: float, a: float = 1.0) -> Stability:
    """Linear stability of an equilibrium of the averaged amplitude equation."""
    if a <= 0:
        raise ValueError("a must be positive")
    if abs(averaged_rhs(r_eq, a)) > 1e-12 or r_eq < 0:
        raise NotEquilibrium(f"r = {r_eq} is not an equilibrium of the averaged flow")
    slope = 0.5 * a * (1.0 - 0.75 * r_eq * r_eq)
    return Stability.STABLE if slope < 0 else Stability.UNSTABLE


def averaged_solution(order, r0: float, psi0: float, a: float, t):
    """Approximate x(t) from first- or second-order averaging.

    Works on scalar or array ``t``.
    """
    order = Order(order) if not isinstance(order, Order) else order
    if r0 <= 0 or a <= 0:
        raise ValueError("r0 and a must be positive")
    t = np.asarray(t, dtype=float)
    amp = r0 * np.exp(0.5 * a * t) / np.sqrt(1.0 + 0.25 * r0 * r0 * np.expm1(a * t))
    freq = 1.0 if order is Order.FIRST else 1.0 - a * a / 16.0
    out = amp * np.cos(freq * t + psi0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LienardReport:
    gamma: float
    f_even: bool
    g_odd: bool
    g_positive: bool
    unique_positive_root: bool
    sign_pattern: bool

    @property
    def conditions(self) -> list[bool]:
        return [self.f_even, self.g_odd, self.g_positive, self.unique_positive_root, self.sign_pattern]

    @property
    def holds(self) -> bool:
        return all(self.conditions)


def bisect(fn, lo: float, hi: float, tol: float = 0.0, max_iter: int = 200) -> float:
    """Bisection on a sign-changing bracket; runs to machine precision when tol = 0."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("bracket does not change sign")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= tol:
            return mid
        fm = fn(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise ConvergenceFailure("bisection did not converge")


def lienard_check(a: float = 1.0, x_max: float = 10.0, n_grid: int = 4001) -> LienardReport:
    """Check the Lienard conditions for f(x) = a(x^2 - 1), g(x) = x on a grid."""
    if a <= 0:
        raise ValueError("a must be positive")
    x = np.linspace(0.0, x_max, n_grid)[1:]

    def f(u):
        return a * (u * u - 1.0)

    def g(u):
        return u

    def F(u):
        return a * (u**3 / 3.0 - u)

    gamma = bisect(F, 1.0, 3.0)
    Fx = F(x)
    crossings = np.count_nonzero(np.diff(np.sign(Fx)) != 0)
    inside = x[x < gamma]
    outside = x[x > gamma]
    return LienardReport(
        gamma=gamma,
        f_even=bool(np.array_equal(f(x), f(-x))),
        g_odd=bool(np.array_equal(g(-x), -g(x))),
        g_positive=bool(np.all(g(x) > 0)),
        unique_positive_root=bool(crossings == 1),
        sign_pattern=bool(
            np.all(F(inside) < 0) and np.all(F(outside) > 0) and np.all(np.diff(F(outside)) >= 0)
        ),
    )


def amplitude_response(a: float, b: float, omega: float, max_iter: int = 100) -> float:
    """Unique positive root of r^3 - 4r - 4b/(a omega^2) = 0.

    Newton from the upper end of the bracket [0, 2 + 4c]; a step leaving the
    bracket falls back to bisection.
    """
    if a <= 0 or b <= 0 or omega <= 0:
        raise ValueError("a, b, omega must be positive")
    c = b / (a * omega * omega)

    def p(r):
        return r**3 - 4.0 * r - 4.0 * c

    lo, hi = 2.0, 2.0 + 4.0 * c
    r = hi
    best, best_res = r, abs(p(r))
    for _ in range(max_iter):
        val = p(r)
        if val > 0:
            hi = r
        else:
            lo = r
        d = 3.0 * r * r - 4.0
        nxt = r - val / d if d > 0 else 0.5 * (lo + hi)
        if not (lo <= nxt <= hi):
            nxt = 0.5 * (lo + hi)
        if abs(p(nxt)) < best_res:
            best, best_res = nxt, abs(p(nxt))
        if abs(nxt - r) <= 4e-16 * nxt or hi - lo <= 4e-16 * hi or best_res == 0.0:
            break
        r = nxt
    else:
        raise ConvergenceFailure("cubic root iteration budget exhausted")
    scale = max(1.0, best**3, 4.0 * c)
    if best_res > 1e-12 * scale:
        raise ConvergenceFailure(f"cubic residual {best_res:.3e} too large")
    return best


def locking_predicate(a: float, b: float, omega: float) -> bool:
    """b^2 / (4 (omega^2 - 1)^2) >= 1; zero detuning counts as locked."""
    if a <= 0 or b <= 0 or omega <= 0:
        raise ValueError("a, b, omega must be positive")
    detune = omega * omega - 1.0
    if detune == 0:
        return True
    return b * b / (4.0 * detune * detune) >= 1.0


@dataclass(frozen=True)
class DeterminingPoint:
    a1: float
    a2: float
    sigma: float = 0.0

    @classmethod
    def from_polar(cls, r: float, phi: float, sigma: float = 0.0) -> "DeterminingPoint":
        return cls(r * math.cos(phi), r * math.sin(phi), sigma)

    @property
    def r(self) -> float:
        return math.hypot(self.a1, self.a2)

    @property
    def phi(self) -> float:
        return math.atan2(self.a2, self.a1)


def _coefficients(a: float, b: float, omega: float) -> tuple[float, float]:
    if a == 0 or omega <= 0 or b == 0:
        raise ValueError("need a != 0, b != 0 and omega > 0")
    sigma = (omega * omega - 1.0) / b
    return sigma / omega**2, b / (a * omega**2)


def determining_equations(a1: float, a2: float, s: float, c: float, theta: float):
    """Left-hand sides with s = sigma/omega^2 and c = b/(a omega^2)."""
    k = 1.0 - (a1 * a1 + a2 * a2) / 4.0
    g1 = s * a2 + k * a1 + c * math.cos(theta)
    g2 = -s * a1 + k * a2 + c * math.sin(theta)
    return g1, g2


def determining_jacobian(a1: float, a2: float, s: float) -> np.ndarray:
    k = 1.0 - (a1 * a1 + a2 * a2) / 4.0
    return np.array(
        [
            [k - 0.5 * a1 * a1, s - 0.5 * a1 * a2],
            [-s - 0.5 * a1 * a2, k - 0.5 * a2 * a2],
        ]
    )


def determining_residual(pt: DeterminingPoint, a: float, b: float, omega: float, theta: float = 0.0):
    s, c = _coefficients(a, b, omega)
    return determining_equations(pt.a1, pt.a2, s, c, theta)


def newton_determining(s, c, theta, guess, tol=1e-10, max_iter=100):
    """Damped Newton on the coefficient form of the determining equations.

    Returns (a1, a2, det J). Raises ConvergenceFailure when the residual
    norm cannot be brought below ``tol``.
    """
    z = np.array(guess, dtype=float)
    res = np.array(determining_equations(z[0], z[1], s, c, theta))
    norm = np.linalg.norm(res)
    for _ in range(max_iter):
        if norm <= tol:
            break
        J = determining_jacobian(z[0], z[1], s)
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError:
            step = -J.T @ res
        lam = 1.0
        while lam > 1e-6:
            trial = z + lam * step
            tres = np.array(determining_equations(trial[0], trial[1], s, c, theta))
            if np.linalg.norm(tres) < norm:
                break
            lam *= 0.5
        else:
            raise ConvergenceFailure("Newton line search stalled")
        z, res = trial, tres
        norm = np.linalg.norm(res)
    if norm > tol:
        raise ConvergenceFailure(f"residual {norm:.3e} after {max_iter} iterations")
    # polish: a couple of full steps tighten the last digits
    for _ in range(2):
        J = determining_jacobian(z[0], z[1], s)
        if abs(np.linalg.det(J)) < 1e-14:
            break
        trial = z + np.linalg.solve(J, -res)
        tres = np.array(determining_equations(trial[0], trial[1], s, c, theta))
        if np.linalg.norm(tres) < norm:
            z, res, norm = trial, tres, np.linalg.norm(tres)
    det = float(np.linalg.det(determining_jacobian(z[0], z[1], s)))
    return float(z[0]), float(z[1]), det


def _polar_roots(s: float, c: float, theta: float) -> list[tuple[float, float]]:
    """All roots via u = r^2: u (s^2 + K^2) = c^2, then the phase from
    sin(theta - phi) = s r / c and cos(theta - phi) = -K r / c."""
    out = []
    for u in np.roots([1.0 / 16.0, -0.5, 1.0 + s * s, -c * c]):
        if abs(u.imag) > 1e-9 or u.real <= 0:
            continue
        r = math.sqrt(u.real)
        phi = theta - math.atan2(s * r, -(1.0 - u.real / 4.0) * r)
        out.append((r * math.cos(phi), r * math.sin(phi)))
    return out


def solve_determining(a: float, b: float, omega: float, theta: float = 0.0, initial_guess=(2.0, 0.0)):
    """Solve the k = 0 determining equations and certify the root.

    Returns ``(DeterminingPoint, jacobian_det)``; raises SingularJacobian when
    the implicit-function certificate |det J| >= 1e-8 fails.
    """
    s, c = _coefficients(a, b, omega)
    try:
        a1, a2, det = newton_determining(s, c, theta, initial_guess)
    except ConvergenceFailure:
        # Newton stalled in a local minimum of |g|; restart from the exact
        # roots recovered from the phase-eliminated cubic, nearest first
        seeds = sorted(_polar_roots(s, c, theta), key=lambda z: math.dist(z, initial_guess))
        for seed in seeds:
            try:
                a1, a2, det = newton_determining(s, c, theta, seed)
                break
            except ConvergenceFailure:
                continue
        else:
            raise
    pt = DeterminingPoint(a1, a2, (omega * omega - 1.0) / b)
    if abs(det) < 1e-8:
        raise SingularJacobian(pt, det)
    return pt, det


def response_curve(a: float, b: float, sigmas) -> list[tuple[float, float]]:
    """All positive amplitudes solving the determining equations at each detuning.

    Eliminating the phase gives u (s^2 + (1 - u/4)^2) = c^2 with u = r^2,
    s = sigma/omega^2, c = b/(a omega^2), omega^2 = 1 + b sigma. Rows with
    omega^2 <= 0 are skipped.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    rows = []
    for sigma in sigmas:
        w2 = 1.0 + b * sigma
        if w2 <= 0:
            continue
        s, c = sigma / w2, b / (a * w2)
        # u^3/16 - u^2/2 + (1 + s^2) u - c^2 = 0
        roots = np.roots([1.0 / 16.0, -0.5, 1.0 + s * s, -c * c])
        for u in sorted(roots[np.abs(roots.imag) < 1e-9].real):
            if u > 0:
                rows.append((float(sigma), math.sqrt(u)))
    return rows


def write_response_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write("sigma,r\n")
        for sigma, r in rows:
            fh.write(f"{sigma!r},{r!r}\n")
