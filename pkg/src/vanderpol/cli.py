"""Command-line front end: ``vdp <subcommand> [options]``.

Every run writes its outputs plus ``manifest.json`` into ``--out``; the
manifest holds the fully resolved arguments, so ``vdp replay`` regenerates
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .averaging import ConvergenceFailure, response_curve, write_response_csv
from .forced import (
    DegenerateSeparation,
    bifurcation_scan,
    detect_period,
    divergence_experiment,
    lyapunov_max,
    parameter_grid,
    poincare,
)
from .ode import (
    IntegrationError,
    InvalidStepError,
    Params,
    State,
    SystemForm,
    default_dt,
    integrate,
)
from .sonify import InaudibleRange, synthesize, write_wav
from .spectra import (
    PeakList,
    Sampling,
    classify,
    detect_peaks,
    power_spectrum,
    sample_series,
    spectrum_sweep,
)
from . import symdyn

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---- shared option groups ---------------------------------------------------------

def _add_params(p, require_a=True, default_b=None):
    g = p.add_argument_group("system parameters")
    g.add_argument("-a", type=float, required=require_a, default=None if require_a else 1.0,
                   help="damping a")
    g.add_argument("-b", type=float, default=default_b if default_b is not None else 0.0,
                   help="forcing amplitude b")
    g.add_argument("-w", "--omega", type=float, default=1.0, help="forcing frequency")
    g.add_argument("--theta", type=float, default=0.0, help="forcing phase")
    g.add_argument("--x0", type=float, default=0.0)
    g.add_argument("--y0", type=float, default=0.0)
    g.add_argument("--dt", type=float, default=None,
                   help="RK4 step (default T/1000 forced, 1e-3 autonomous)")


def _add_common(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", default=None, help="key=value file overriding defaults")


def _params(ns) -> Params:
    try:
        return Params(ns.a, ns.b, ns.omega, ns.theta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _init(ns) -> State:
    return State(0.0, ns.x0, ns.y0)


def _dt(ns, p: Params) -> float:
    dt = default_dt(p) if ns.dt is None else ns.dt
    if not dt > 0:
        raise InvalidStepError(f"dt must be positive, got {dt!r}")
    return dt


def _period_or_2pi(p: Params) -> float:
    return p.period if p.forced else 2.0 * math.pi


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---- subcommands ---------------------------------------------------------------

def cmd_simulate(ns, out: Path) -> dict:
    p = _params(ns)
    dt = _dt(ns, p)
    n = int(round(ns.t_max / dt))
    tr = integrate(SystemForm.parse(ns.form), p, _init(ns), dt, n, stride=ns.stride)
    tr.to_csv(out / "trajectory.csv")
    return {"outputs": ["trajectory.csv"], "sampling": {"dt": dt, "n_steps": n, "stride": ns.stride}}


def cmd_poincare(ns, out: Path) -> dict:
    p = _params(ns)
    if not p.forced:
        raise UsageError("stroboscopic period undefined for b = 0")
    T = p.period
    sec = poincare(p, _init(ns), ns.transient * T, ns.points, _dt(ns, p))
    with open(out / "section.csv", "w") as fh:
        fh.write("t,x,y\n")
        for t, (x, y) in zip(sec.times, sec.points):
            fh.write(f"{float(t)!r},{float(x)!r},{float(y)!r}\n")
    outputs = ["section.csv"]
    verdict = None
    if len(sec) >= 50:
        v = detect_period(sec, ns.tol)
        verdict = {"verdict": str(v), "kind": v.kind, "m": v.m, "clusters": v.clusters, "tolerance": v.tolerance}
        _write_json(out / "verdict.json", verdict)
        outputs.append("verdict.json")
        print(v)
    return {"outputs": outputs, "sampling": {"step": sec.step, "transient_periods": ns.transient, "points": ns.points}}


def cmd_bifurcate(ns, out: Path) -> dict:
    axis = {"b": "b", "omega": "omega", "w": "omega"}[ns.axis]
    fixed = Params(ns.a, ns.b if ns.b > 0 else 1.0, ns.omega, ns.theta)
    values = parameter_grid(ns.lo, ns.hi, ns.step)
    data = bifurcation_scan(
        axis, values, fixed, _init(ns), n_samples=ns.samples, transient_periods=ns.transient,
        continuation=ns.continuation, jobs=ns.jobs,
    )
    data.write_csv(out / "bifurcation.csv", out / "period.csv")
    return {"outputs": ["bifurcation.csv", "period.csv"],
            "sampling": {"transient_periods": ns.transient, "samples": ns.samples, "n_values": len(values)}}


def cmd_lyapunov(ns, out: Path) -> dict:
    p = _params(ns)
    tau = _period_or_2pi(p)
    est = lyapunov_max(
        p, State(0.0, ns.x0, ns.y0), d0=ns.d0, n_renorm=ns.n_renorm,
        transient=ns.transient * tau if p.forced else 0.0, dt=ns.dt,
    )
    doc = {**est.as_dict(), "params": p.as_dict()}
    _write_json(out / "lyapunov.json", doc)
    print(f"lambda = {est.lam:.6g} +/- {est.stderr:.2g}")
    return {"outputs": ["lyapunov.json"], "sampling": {"n_renorm": ns.n_renorm, "transient_periods": ns.transient}}


def cmd_diverge(ns, out: Path) -> dict:
    p = _params(ns)
    T = _period_or_2pi(p)
    div = divergence_experiment(p, _init(ns), ns.delta, ns.periods * T, ns.dt, ns.stride)
    with open(out / "divergence.csv", "w") as fh:
        fh.write("t,x1,x2,log_sep\n")
        for row in zip(div.t, div.x1, div.x2, div.log_separation):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return {"outputs": ["divergence.csv"], "sampling": {"periods": ns.periods, "stride": ns.stride}}


def _sampling(ns) -> Sampling:
    return Sampling(ns.total_periods, ns.window_periods, ns.ppp, ns.steps_per_point)


def cmd_spectrum(ns, out: Path) -> dict:
    sampling = _sampling(ns)
    if ns.sweep:
        lo, hi, n = ns.sweep
        n = int(n)
        values = [lo + (hi - lo) * i / (n - 1) for i in range(n)] if n > 1 else [lo]
        fixed = Params(ns.a, ns.b if ns.b > 0 else 1.0, ns.omega, ns.theta)
        sw = spectrum_sweep(ns.axis, values, fixed, sampling, _init(ns), jobs=ns.jobs)
        sw.write_csv(out / "sweep.csv", fmax=ns.fmax)
        return {"outputs": ["sweep.csv"], "sampling": sampling.__dict__}
    p = _params(ns)
    x, dt = sample_series(p, sampling, _init(ns))
    spec = power_spectrum(x, dt, pow2=ns.pow2)
    peaks = detect_peaks(spec, ns.minp)
    label = classify(spec)
    spec.write_csv(out / "spectrum.csv")
    peaks.write_csv(out / "peaks.csv")
    _write_json(out / "regime.json", {"regime": label.value, "count": len(peaks), "minp": ns.minp})
    print(f"{label.value}: {len(peaks)} peaks above {ns.minp}%")
    return {"outputs": ["spectrum.csv", "peaks.csv", "regime.json"], "sampling": sampling.__dict__}


def cmd_sonify(ns, out: Path) -> dict:
    outputs = []
    if ns.peaks:
        peaks = PeakList.read_csv(ns.peaks)
    else:
        if ns.a is None:
            raise UsageError("give --peaks FILE or system parameters (-a, -b, -w)")
        p = _params(ns)
        x, dt = sample_series(p, _sampling(ns), _init(ns))
        peaks = detect_peaks(power_spectrum(x, dt), ns.minp)
        peaks.write_csv(out / "peaks.csv")
        outputs.append("peaks.csv")
    with warnings.catch_warnings():
        warnings.simplefilter("always", InaudibleRange)
        buf = synthesize(peaks, ns.k_scale, ns.duration, ns.rate)
    write_wav(buf, out / "sound.wav")
    outputs.append("sound.wav")
    return {"outputs": outputs, "sampling": {"k_scale": ns.k_scale, "duration": ns.duration, "rate": ns.rate}}


def cmd_symdyn(ns, out: Path) -> dict:
    act = ns.action
    if act == "enumerate":
        seqs = symdyn.enumerate_fixed(ns.m)
        doc = {"m": ns.m, "count": len(seqs), "sequences": [symdyn.format_sequence(d) for d in seqs]}
    elif act == "metric":
        d, e = symdyn.parse(ns.d), symdyn.parse(ns.e)
        value, bound = symdyn.metric(d, e, ns.window)
        doc = {"value": value, "error_bound": bound, "window": ns.window}
    elif act == "dense":
        d = symdyn.dense_orbit(ns.depth)
        doc = {"depth": ns.depth, "length": len(d.bits), "sequence": symdyn.format_sequence(d)}
    elif act == "witness":
        d = symdyn.parse(ns.d)
        e, n = symdyn.sensitivity_witness(d, ns.window)
        dw = symdyn.as_window(d, e.start, e.stop - 1)
        doc = {
            "e": symdyn.format_sequence(e), "n": n,
            "initial_distance": symdyn.metric(dw, e, ns.window)[0],
            "final_distance": symdyn.metric(symdyn.shift(dw, n), symdyn.shift(e, n), ns.window)[0],
        }
    elif act == "encode":
        spacings = [float(s) * math.pi for s in ns.spacings.split(",")]
        d = symdyn.encode_spacings(spacings, ns.n, ns.tol)
        doc = {"n": ns.n, "sequence": symdyn.format_sequence(d)}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown action {act}")
    _write_json(out / "symdyn.json", doc)
    print(json.dumps(doc)[:400])
    return {"outputs": ["symdyn.json"], "sampling": None}


def cmd_response(ns, out: Path) -> dict:
    n = int(ns.n)
    sigmas = [ns.lo + (ns.hi - ns.lo) * i / (n - 1) for i in range(n)]
    rows = response_curve(ns.a, ns.b, sigmas)
    write_response_csv(rows, out / "response.csv")
    return {"outputs": ["response.csv"], "sampling": {"n": n}}


# ---- figure presets --------------------------------------------------------------
# caption parameters verbatim; "chosen" marks values the captions leave open

FIGURES = {
    "fig2.2": (["simulate", "-a", "0.1", "--x0", "0.5", "--t-max", "300"], ""),
    "fig2.3": (["simulate", "-a", "0.1", "--x0", "3", "--t-max", "100"], "initial values chosen"),
    "fig2.4": (["simulate", "--form", "relaxation", "-a", "8", "--x0", "0.5", "--t-max", "100"], ""),
    "fig3.4": (["response", "-a", "1", "-b", "1", "--lo", "-3", "--hi", "3", "--n", "601"], "a, b chosen"),
    "fig4.1a": (["simulate", "-a", "0.2", "--x0", "0.5", "--t-max", "200"], ""),
    "fig4.1b": (["simulate", "-a", "1.4", "--x0", "0.5", "--t-max", "100"], ""),
    "fig4.1c": (["simulate", "-a", "6", "--x0", "0.5", "--t-max", "100"], ""),
    "fig4.1d": (["simulate", "-a", "0.4", "--x0", "0.5", "--t-max", "200"], ""),
    "fig4.2": (["poincare", "-a", "5", "-b", "15", "-w", "7", "--points", "500"], ""),
    "fig4.3": (["poincare", "-a", "5", "-b", "25", "-w", "7", "--points", "500"], ""),
    "fig4.4": (["poincare", "-a", "5", "-b", "50", "-w", "7", "--points", "500"], ""),
    "fig4.5": (["poincare", "-a", "5", "-b", "55", "-w", "7", "--points", "500"], ""),
    "fig4.6a": (["bifurcate", "-a", "5", "-w", "3", "--axis", "b", "--lo", "0.01", "--hi", "53", "--step", "0.1"], ""),
    "fig4.6b": (["bifurcate", "-a", "5", "-w", "7", "--axis", "b", "--lo", "0.01", "--hi", "80", "--step", "0.1"], ""),
    "fig4.7": (["bifurcate", "-a", "5", "-w", "7", "--axis", "b", "--lo", "0.01", "--hi", "80", "--step", "0.1"], ""),
    "fig4.8a": (["bifurcate", "-a", "3", "-b", "5", "--axis", "omega", "--lo", "1", "--hi", "7", "--step", "0.001"], ""),
    "fig4.8b": (["bifurcate", "-a", "3", "-b", "5", "--axis", "omega", "--lo", "7", "--hi", "17", "--step", "0.01"],
                "step chosen"),
    "fig4.9": (["bifurcate", "-a", "5", "-b", "5", "--axis", "omega", "--lo", "1", "--hi", "7", "--step", "0.001"],
               "range chosen"),
    "fig4.10": (["bifurcate", "-a", "5", "-b", "25", "--axis", "omega", "--lo", "1", "--hi", "7", "--step", "0.001"],
                "range chosen"),
    "fig4.11": (["bifurcate", "-a", "5", "-b", "5", "--axis", "omega", "--lo", "2", "--hi", "6", "--step", "0.001"],
                "step chosen"),
    "fig4.14": (["poincare", "-a", "3", "-b", "5", "-w", "1.788", "--points", "5000"], ""),
    "fig4.15": (["poincare", "-a", "5", "-b", "5", "-w", "3.37015", "--points", "5000"], ""),
    "fig4.16": (["poincare", "-a", "5", "-b", "25", "-w", "4.455", "--points", "5000"], ""),
    "fig4.17": (["diverge", "-a", "3", "-b", "5", "-w", "1.788", "--x0", "0.5"], ""),
    "fig4.18": (["diverge", "-a", "5", "-b", "25", "-w", "4.455", "--x0", "0.5"], ""),
    "fig4.19": (["spectrum", "-a", "5", "-b", "40", "-w", "7"], ""),
    "fig4.20": (["spectrum", "-a", "5", "-b", "15", "-w", "7"], ""),
    "fig4.21": (["spectrum", "-a", "3", "-b", "5", "-w", "1.788"], ""),
    "fig4.21a": (["spectrum", "-a", "5", "-w", "7", "--sweep", "22", "29", "20", "--fmax", "1.2"], ""),
    "fig4.21b": (["spectrum", "-a", "5", "-w", "7", "--sweep", "27", "30", "20", "--fmax", "1.2"], ""),
    "fig4.22": (["sonify", "-a", "5", "-b", "40", "-w", "7"], ""),
    "fig4.23": (["sonify", "-a", "5", "-b", "15", "-w", "7"], ""),
    "fig4.24": (["sonify", "-a", "3", "-b", "5", "-w", "1.788"], ""),
}


def cmd_figure(ns, out: Path) -> dict:
    if ns.list or not ns.name:
        for name, (argv, note) in FIGURES.items():
            print(f"{name:9s} vdp {' '.join(argv)}" + (f"   [{note}]" if note else ""))
        return {"outputs": [], "sampling": None, "skip_manifest": True}
    if ns.name not in FIGURES:
        raise UsageError(f"unknown figure {ns.name!r}; try 'vdp figure --list'")
    argv, note = FIGURES[ns.name]
    extra = ["--out", str(out)]
    if ns.jobs is not None and argv[0] in ("bifurcate", "spectrum"):
        extra += ["--jobs", str(ns.jobs)]
    code = main(argv + extra, _notes=[f"figure preset {ns.name}"] + ([note] if note else []))
    if code != EXIT_OK:
        raise _Exit(code)
    return {"outputs": [], "sampling": None, "skip_manifest": True}


class _Exit(Exception):
    def __init__(self, code):
        super().__init__(code)
        self.code = code


def cmd_replay(ns, out: Path) -> dict:
    try:
        doc = json.loads(Path(ns.manifest).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"not a manifest: {exc}") from None
    sub = doc["subcommand"]
    target = Path(ns.out) if ns.out_given else Path(ns.manifest).parent
    args = argparse.Namespace(**doc["args"])
    code = _dispatch(sub, args, target, notes=doc.get("notes", []))
    if code != EXIT_OK:
        raise _Exit(code)
    return {"outputs": [], "sampling": None, "skip_manifest": True}


COMMANDS = {
    "simulate": cmd_simulate,
    "poincare": cmd_poincare,
    "bifurcate": cmd_bifurcate,
    "lyapunov": cmd_lyapunov,
    "diverge": cmd_diverge,
    "spectrum": cmd_spectrum,
    "sonify": cmd_sonify,
    "symdyn": cmd_symdyn,
    "response": cmd_response,
    "figure": cmd_figure,
    "replay": cmd_replay,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdp", description="Van der Pol oscillator laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="integrate one trajectory to CSV")
    _add_params(p)
    p.add_argument("--form", default="forced", help="forced | lienard | relaxation | transformed")
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--stride", type=int, default=1, help="keep every n-th step")
    _add_common(p)

    p = sub.add_parser("poincare", help="stroboscopic section and period verdict")
    _add_params(p)
    p.add_argument("--transient", type=float, default=500, help="transient in forcing periods")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-3)
    _add_common(p)

    p = sub.add_parser("bifurcate", help="bifurcation scan over b or omega")
    _add_params(p)
    p.add_argument("--axis", choices=["b", "omega", "w"], required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--transient", type=int, default=500, help="transient in forcing periods")
    p.add_argument("--continuation", action="store_true")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (env VDP_JOBS)")
    _add_common(p)

    p = sub.add_parser("lyapunov", help="largest Lyapunov exponent")
    _add_params(p)
    p.set_defaults(x0=0.5)
    p.add_argument("--d0", type=float, default=1e-8)
    p.add_argument("--n-renorm", type=int, default=1000)
    p.add_argument("--transient", type=float, default=500, help="transient in forcing periods")
    _add_common(p)

    p = sub.add_parser("diverge", help="two nearby initial conditions")
    _add_params(p)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--periods", type=float, default=200)
    p.add_argument("--stride", type=int, default=10)
    _add_common(p)

    def add_sampling(q):
        q.add_argument("--total-periods", type=float, default=10000)
        q.add_argument("--window-periods", type=float, default=1000)
        q.add_argument("--ppp", type=int, default=20, help="samples per forcing period")
        q.add_argument("--steps-per-point", type=int, default=50)
        q.add_argument("--minp", type=float, default=0.5, help="peak threshold in percent")

    p = sub.add_parser("spectrum", help="Fourier spectrum, peaks and regime")
    _add_params(p)
    add_sampling(p)
    p.add_argument("--pow2", action="store_true", help="truncate to a power of two")
    p.add_argument("--sweep", type=float, nargs=3, metavar=("LO", "HI", "N"), default=None)
    p.add_argument("--axis", choices=["b", "omega"], default="b")
    p.add_argument("--fmax", type=float, default=None)
    p.add_argument("--jobs", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("sonify", help="render spectral peaks to WAV")
    _add_params(p, require_a=False)
    p.set_defaults(a=None)
    add_sampling(p)
    p.add_argument("--peaks", default=None, help="peaks CSV (freq,mag,rel)")
    p.add_argument("--k-scale", type=float, default=1e3)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--rate", type=int, default=44100)
    _add_common(p)

    p = sub.add_parser("symdyn", help="shift-space experiments")
    p.add_argument("action", choices=["enumerate", "metric", "dense", "witness", "encode"])
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--d", default="...0.0...")
    p.add_argument("--e", default="...1.1...")
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--spacings", default="5,7", help="comma-separated multiples of pi")
    p.add_argument("--tol", type=float, default=0.1)
    _add_common(p)

    p = sub.add_parser("response", help="amplitude response curve r(sigma)")
    p.add_argument("-a", type=float, required=True)
    p.add_argument("-b", type=float, required=True)
    p.add_argument("--lo", type=float, default=-3.0)
    p.add_argument("--hi", type=float, default=3.0)
    p.add_argument("--n", type=int, default=601)
    _add_common(p)

    p = sub.add_parser("figure", help="regenerate the data behind a figure")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    p.add_argument("--jobs", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    return parser


def read_config(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser, argv, ns):
    """Re-parse with config values as defaults so explicit flags still win."""
    sp = _subparser(parser, ns.subcommand)
    conf = read_config(ns.config)
    by_dest = {a.dest: a for a in sp._actions}
    defaults = {}
    for k, v in conf.items():
        if k not in by_dest:
            raise UsageError(f"unknown config key {k!r}")
        act = by_dest[k]
        if act.type is not None:
            v = act.type(v)
        elif isinstance(act, argparse._StoreTrueAction):
            v = v.lower() in ("1", "true", "yes", "on")
        defaults[k] = v
        act.required = False
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _manifest(sub, ns, result, notes):
    args = {k: v for k, v in vars(ns).items() if k not in ("out", "config", "subcommand")}
    params = None
    if getattr(ns, "a", None) is not None and hasattr(ns, "omega"):
        params = {"a": ns.a, "b": ns.b, "omega": ns.omega, "theta": ns.theta}
    return {
        "tool": "vanderpol",
        "version": __version__,
        "subcommand": sub,
        "args": args,
        "params": params,
        "sampling": result.get("sampling"),
        "outputs": result.get("outputs", []),
        "notes": list(notes),
        "determinism": "fixed-step RK4, no random numbers; re-running these args reproduces the outputs",
    }


def _dispatch(sub, ns, out: Path, notes=()) -> int:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"vdp: error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        result = COMMANDS[sub](ns, out)
    except _Exit as exc:
        return exc.code
    except (UsageError, InvalidStepError) as exc:
        print(f"vdp {sub}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, ConvergenceFailure, DegenerateSeparation, FloatingPointError) as exc:
        print(f"vdp {sub}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"vdp {sub}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"vdp {sub}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not result.get("skip_manifest"):
        notes = list(notes)
        if sub in ("poincare", "bifurcate", "lyapunov"):
            note = f"transient of {ns.transient:g} forcing periods"
            if note not in notes:
                notes.append(note)
        try:
            _write_json(out / "manifest.json", _manifest(sub, ns, result, notes))
        except OSError as exc:
            print(f"vdp {sub}: I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def main(argv=None, _notes=()) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(ns, "config", None):
            ns = _apply_config(build_parser(), argv, ns)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"vdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"vdp: error: {exc}", file=sys.stderr)
        return EXIT_IO
    if ns.subcommand == "replay":
        ns.out_given = ns.out is not None
        out = Path(ns.out) if ns.out else Path(ns.manifest).parent
        if not Path(ns.manifest).is_file():
            print(f"vdp replay: error: no such manifest {ns.manifest}", file=sys.stderr)
            return EXIT_IO
        return _dispatch("replay", ns, out)
    if hasattr(ns, "jobs") and ns.jobs is None and os.environ.get("VDP_JOBS"):
        try:
            ns.jobs = int(os.environ["VDP_JOBS"])
        except ValueError:
            print("vdp: error: VDP_JOBS must be an integer", file=sys.stderr)
            return EXIT_USAGE
    return _dispatch(ns.subcommand, ns, Path(ns.out), _notes)


if __name__ == "__main__":
    sys.exit(main())
