import math

import numpy as np
import pytest

from vanderpol.ode import (
    InvalidStepError,
    NonFiniteError,
    Params,
    State,
    SystemForm,
    integrate,
    read_trajectory_csv,
    rhs,
    run,
    steps_per_period,
    write_trajectory_csv,
)


def test_rhs_forced_at_origin():
    assert rhs(SystemForm.FORCED, State(0, 0, 0), Params(5, 15, 7)) == (0.0, 15.0)


def test_rhs_forced_damping_vanishes_on_unit_circle():
    assert rhs(SystemForm.FORCED, State(0, 1, 2), Params(5, 0)) == (2.0, -1.0)


def test_rhs_lienard():
    dx, dy = rhs(SystemForm.LIENARD, State(0, 2, 0), Params(1, 0))
    assert dx == pytest.approx(-2 / 3, abs=1e-15)
    assert dy == -2.0


def test_rhs_relaxation_scaling():
    p = Params(4.0, 0.0)
    dx, dy = rhs(SystemForm.RELAXATION, State(0, 2, 1), p)
    assert dx == pytest.approx(4.0 * (1 - (8 / 3 - 2)))
    assert dy == pytest.approx(-2 / 4.0)


def test_form_constraints():
    with pytest.raises(ValueError):
        rhs(SystemForm.RELAXATION, State(0, 1, 1), Params(0.0, 0.0))
    with pytest.raises(ValueError):
        rhs(SystemForm.TRANSFORMED, State(0, 1, 1), Params(1.0, 0.0, 2.0))


def test_form_parse_aliases():
    assert SystemForm.parse("standard") is SystemForm.FORCED
    assert SystemForm.parse("lienard") is SystemForm.LIENARD
    with pytest.raises(ValueError):
        SystemForm.parse("bogus")


@pytest.mark.parametrize("kw", [dict(a=-1), dict(a=1, b=-1), dict(a=1, omega=0), dict(a=math.nan)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        Params(**kw)


def test_harmonic_one_period():
    dt = 1e-3
    tr = integrate(SystemForm.FORCED, Params(0, 0), State(0, 1, 0), dt, round(2 * math.pi / dt))
    t_end = tr.t[-1]
    # closed form cos t, -sin t at the actual end time
    assert tr.final.x == pytest.approx(math.cos(t_end), abs=1e-9)
    assert tr.final.y == pytest.approx(-math.sin(t_end), abs=1e-9)
    assert abs(tr.final.x - 1) < 1e-6


def test_energy_conservation_harmonic():
    tr = integrate(SystemForm.FORCED, Params(0, 0), State(0, 1, 0), 1e-3, 100_000)
    e = tr.x**2 + tr.y**2
    assert np.max(np.abs(e - 1.0)) <= 1e-6


def test_rk4_order_on_harmonic():
    errs = []
    dts = [1e-2, 5e-3, 2.5e-3]
    for dt in dts:
        n = round(2 * math.pi / dt)
        tr = integrate(SystemForm.FORCED, Params(0, 0), State(0, 1, 0), dt, n)
        t = n * dt
        errs.append(math.hypot(tr.final.x - math.cos(t), tr.final.y + math.sin(t)))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.2)


def test_self_convergence_factor_sixteen():
    p = Params(1.0, 0.0)
    init = State(0, 0.5, 0.0)
    ref = integrate(SystemForm.FORCED, p, init, 1e-5, 1_000_000).final
    ends = [integrate(SystemForm.FORCED, p, init, dt, round(10 / dt)).final for dt in (1e-2, 5e-3)]
    e1, e2 = (math.hypot(s.x - ref.x, s.y - ref.y) for s in ends)
    assert e1 / e2 == pytest.approx(16.0, rel=0.25)


def test_limit_cycle_amplitude_weak_damping():
    tr = integrate(SystemForm.FORCED, Params(0.1, 0.0), State(0, 0.5, 0.0), 1e-3, 300_000)
    tail = tr.x[int(0.9 * len(tr.x)):]
    assert np.max(np.abs(tail)) == pytest.approx(2.0, abs=0.04)


def test_determinism():
    p = Params(5, 15, 7)
    a = integrate(SystemForm.FORCED, p, State(0, 0.1, 0.2), 1e-3, 20_000)
    b = integrate(SystemForm.FORCED, p, State(0, 0.1, 0.2), 1e-3, 20_000)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_autonomy_start_time_irrelevant():
    p = Params(2.0, 0.0)
    a = integrate(SystemForm.FORCED, p, State(0.0, 1.0, 0.5), 1e-3, 5000)
    b = integrate(SystemForm.FORCED, p, State(17.0, 1.0, 0.5), 1e-3, 5000)
    assert np.array_equal(a.samples, b.samples)
    assert b.t[0] == 17.0


def test_forcing_time_advances_inside_substeps():
    # resonant linear oscillator from rest: x = t sin(t)/2
    p = Params(0.0, 1.0, 1.0)
    h = 1e-2
    tr = integrate(SystemForm.FORCED, p, State(0, 0, 0), h, 1)
    assert tr.final.x == pytest.approx(h * math.sin(h) / 2, abs=1e-12)
    assert tr.final.y == pytest.approx((math.sin(h) + h * math.cos(h)) / 2, abs=1e-12)
    # freezing the forcing at t = 0 inside the step would be off by O(h^2)
    assert abs(tr.final.y - math.sin(h)) > 1e-7


def test_transformed_matches_forced_under_change_of_variables():
    a, b, w, th = 1.5, 2.0, 1.7, 0.3
    p = Params(a, b, w, th)
    x0, y0 = 0.7, -0.4
    # invert x = z1 sin wt + z2 cos wt, y = w (z1 cos wt - z2 sin wt) at t = 0
    z1, z2 = y0 / w, x0
    dt, n = 1e-3, 5000
    f = integrate(SystemForm.FORCED, p, State(0, x0, y0), dt, n)
    z = integrate(SystemForm.TRANSFORMED, p, State(0, z1, z2), dt, n)
    t = z.t
    xs = z.x * np.sin(w * t) + z.y * np.cos(w * t)
    ys = w * (z.x * np.cos(w * t) - z.y * np.sin(w * t))
    assert np.max(np.abs(xs - f.x)) < 1e-8
    assert np.max(np.abs(ys - f.y)) < 1e-8


def test_lienard_equivalent_to_standard():
    # Lienard variable y_L = x' + a(x^3/3 - x)
    a = 1.3
    p = Params(a, 0.0)
    x0, v0 = 1.0, 0.2
    yl0 = v0 + a * (x0**3 / 3 - x0)
    s = integrate(SystemForm.FORCED, p, State(0, x0, v0), 1e-3, 4000)
    lz = integrate(SystemForm.LIENARD, p, State(0, x0, yl0), 1e-3, 4000)
    assert np.max(np.abs(s.x - lz.x)) < 1e-8


def test_invalid_step():
    with pytest.raises(InvalidStepError):
        integrate(SystemForm.FORCED, Params(1), State(0, 1, 0), 0.0, 10)
    with pytest.raises(InvalidStepError):
        integrate(SystemForm.FORCED, Params(1), State(0, 1, 0), -1e-3, 10)


def test_blow_up_raises_non_finite():
    with pytest.raises(NonFiniteError):
        integrate(SystemForm.FORCED, Params(5.0, 0.0), State(0, 1.0, 0.0), 1.0, 100)


def test_callable_form_matches_kernel():
    def vdp(t, x, y, p):
        return y, -x - p.a * (x * x - 1) * y + p.b * math.cos(p.omega * t + p.theta)

    p = Params(2.0, 3.0, 1.5)
    a = integrate(SystemForm.FORCED, p, State(0, 0.3, 0.1), 1e-3, 500)
    b = integrate(vdp, p, State(0, 0.3, 0.1), 1e-3, 500)
    assert np.allclose(a.samples, b.samples, rtol=0, atol=1e-13)


def test_stride_and_record_from():
    p = Params(1.0, 1.0, 2.0)
    full = integrate(SystemForm.FORCED, p, State(0, 0.5, 0), 1e-3, 1000)
    strided = integrate(SystemForm.FORCED, p, State(0, 0.5, 0), 1e-3, 1000, stride=10)
    assert np.array_equal(full.samples[::10], strided.samples)
    _, _, tail = run(SystemForm.FORCED, p, 0.5, 0.0, t0=0.0, h=1e-3, n_steps=1000, stride=10, record_from=300)
    assert np.array_equal(tail, full.samples[300::10])


def test_steps_per_period_snaps_to_grid():
    n, h = steps_per_period(2 * math.pi / 7, 1e-3)
    assert n == round(2 * math.pi / 7 / 1e-3)
    assert n * h == pytest.approx(2 * math.pi / 7, rel=1e-15)


def test_trajectory_is_read_only():
    tr = integrate(SystemForm.FORCED, Params(1), State(0, 1, 0), 1e-2, 10)
    with pytest.raises(ValueError):
        tr.samples[0, 0] = 3.0


def test_csv_round_trip(tmp_path):
    tr = integrate(SystemForm.FORCED, Params(5, 15, 7), State(0, 0.1, 0.0), 1e-3, 300)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(tr, path)
    assert path.read_text().splitlines()[0] == "t,x,y"
    t, xy = read_trajectory_csv(path)
    assert np.array_equal(t, tr.t)
    assert np.array_equal(xy, tr.samples)
