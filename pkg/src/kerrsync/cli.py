"""Command-line front end.

Every subcommand writes CSV data and a JSON metadata file into ``--out``.
On success a one-line JSON summary goes to stdout and the exit code is 0;
on failure a JSON error record goes to stderr and the exit code is nonzero
(2 for bad input, 1 for solver failures).
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .errors import ConfigurationError, ConvergenceError, KerrSyncError
from .hilbert import Anharmonicity, ModelParams
from .liouvillian import build_rotating
from .observables import (
    fock_probabilities,
    power_spectrum,
    spectrum_argmax,
    sync_measure,
    wigner,
)
from .semiclassical import (
    GridSpec,
    build_fp_operator,
    classical_sync_measure,
    default_grid,
    solve_fp_steady,
)
from .steadystate import check_density_matrix, steady_state
from .sweep import (
    FREQUENCY_CONVENTION,
    OBSERVABLES,
    RECIPES,
    Axis,
    SweepSpec,
    _write_csv,
    emit,
    recipe,
    run_sweep,
    write_wigner,
)

PARAM_FLAGS = {
    "gamma1": float, "gamma2": float, "kerr": float, "drive": float, "detuning": float,
    "omega_m": float, "kappa_nbar": float,
}
MODEL_DEFAULTS = {"gamma1": 1.0, "gamma2": 1.0, "kerr": 0.0, "drive": 0.0, "detuning": 0.0,
                  "omega_m": None, "kappa_nbar": 0.0}
CONFIG_SECTION = "kerrsync"


class UsageError(ConfigurationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(parser):
    g = parser.add_argument_group("model")
    for name, typ in PARAM_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    g.add_argument("--duffing", action="store_const", const=True, default=None,
                   help="lab-frame Duffing model (needs --omega-m)")
    g.add_argument("--truncation", type=int, default=None, help="initial Fock dimension")
    parser.add_argument("--out", default=None, help="output directory (default: out)")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--config", default=None, help="flat key = value file")
    parser.add_argument("--png", action="store_const", const=True, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kerrsync", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kerrsync {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("steady", help="steady state, |S| and Fock populations")
    _common(p)

    p = sub.add_parser("sweep", help="one- or two-axis parameter sweep")
    _common(p)
    p.add_argument("--axis", action="append", default=None, metavar="NAME:START:STOP:STEP",
                   help="swept parameter; give once or twice")
    p.add_argument("--observables", default=None, help=f"comma list from {','.join(OBSERVABLES)}")
    p.add_argument("--solver", default=None, choices=("rotating", "lab_propagator",
                                                      "fokker_planck"))

    p = sub.add_parser("wigner", help="Wigner function of the steady state")
    _common(p)
    p.add_argument("--extent", type=float, default=None)
    p.add_argument("--points", type=int, default=None)

    p = sub.add_parser("spectrum", help="fluctuation spectrum of the steady state")
    _common(p)
    p.add_argument("--omega-min", dest="omega_min", type=float, default=None)
    p.add_argument("--omega-max", dest="omega_max", type=float, default=None)
    p.add_argument("--omega-step", dest="omega_step", type=float, default=None)

    p = sub.add_parser("classical", help="Fokker-Planck steady state and classical |S|")
    _common(p)
    p.add_argument("--h", dest="fp_h", type=float, default=None, help="grid spacing")
    p.add_argument("--diffusion", dest="fp_diffusion", default=None,
                   choices=("auto", "amplitude", "frozen"))

    p = sub.add_parser("recipe", help="run a named figure recipe (fig2, fig3a-f, fig4a, fig4b, figS1a, figS1b)")
    p.add_argument("name", choices=[r.lower() for r in RECIPES] + list(RECIPES))
    p.add_argument("--resolution", type=int, default=None)
    _common(p)
    return parser


def read_config(path) -> dict:
    """Flat ``key = value`` file; an optional ``[kerrsync]`` header is allowed."""
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = f"[{CONFIG_SECTION}]\n" + text
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(text)
    if not cp.has_section(CONFIG_SECTION):
        raise UsageError(f"config file needs a [{CONFIG_SECTION}] section or no header")
    return {k.replace("-", "_"): v for k, v in cp.items(CONFIG_SECTION)}


def _as_bool(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {value!r}")


def _merge(args) -> dict:
    """Config-file values overridden by explicit command-line flags."""
    settings = read_config(args.config) if args.config else {}
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command"):
            settings[key] = value
    return settings


def _params(settings) -> ModelParams:
    kw = {}
    for name, default in MODEL_DEFAULTS.items():
        raw = settings.get(name, default)
        try:
            kw[name] = None if raw is None else float(raw)
        except ValueError:
            raise UsageError(f"{name} must be a number, got {raw!r}") from None
    duffing = _as_bool(settings.get("duffing", False))
    kw["anharmonicity"] = Anharmonicity.DUFFING if duffing else Anharmonicity.KERR
    return ModelParams(**kw)


def _int(settings, key, default=None):
    raw = settings.get(key, default)
    return None if raw is None else int(raw)


def _float(settings, key, default):
    raw = settings.get(key, default)
    return None if raw is None else float(raw)


def _parse_axis(text) -> Axis:
    parts = str(text).split(":")
    if len(parts) != 4:
        raise UsageError(f"axis must be NAME:START:STOP:STEP, got {text!r}")
    name = parts[0].strip().replace("-", "_")
    try:
        start, stop, step = (float(x) for x in parts[1:])
    except ValueError:
        raise UsageError(f"axis bounds must be numbers, got {text!r}") from None
    if step == 0 or (stop - start) / step < 0:
        raise UsageError(f"axis step {step} does not reach {stop} from {start}")
    return Axis.from_range(name, start, stop, step)


def _metadata(command, settings, params, extra=None):
    meta = {
        "command": command,
        "config": {k: v for k, v in settings.items() if k != "func"},
        "params": params.as_dict(),
        "version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "timestamp_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "conventions": {
            "frequency_axis": FREQUENCY_CONVENTION,
            "units": "all rates and frequencies in units of gamma1",
            "wigner_normalization": "integral of W over d^2 alpha equals 1",
        },
    }
    meta.update(extra or {})
    return meta


def _write_meta(out, meta):
    path = Path(out) / "metadata.json"
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def _solve(params, settings):
    rho, info = steady_state(params, _int(settings, "truncation"), return_info=True)
    checks = check_density_matrix(rho)
    if not checks["ok"]:
        raise ConvergenceError("steady state fails the density-matrix checks", checks)
    return rho, info


def cmd_steady(settings, out):
    params = _params(settings)
    t0 = time.perf_counter()
    rho, info = _solve(params, settings)
    s = sync_measure(rho)
    mean_n = float(np.dot(np.arange(rho.shape[0]), np.diagonal(rho).real))
    _write_csv(out / "data.csv",
               ["sync_abs", "sync_phase", "mean_n", "residual", "tail", "dim"],
               [[s.magnitude, s.phase, mean_n, info.get("relative_residual", info.get("residual")),
                 info["tail"], str(info["dim"])]])
    _write_csv(out / "fock.csv", ["n", "probability"],
               [[str(n), p] for n, p in enumerate(fock_probabilities(rho))])
    meta = _metadata("steady", settings, params, {"wall_time_s": time.perf_counter() - t0,
                                                  "attempted_dims": info["attempts"]})
    return [out / "data.csv", out / "fock.csv", _write_meta(out, meta)]


def cmd_wigner(settings, out):
    params = _params(settings)
    t0 = time.perf_counter()
    rho, info = _solve(params, settings)
    extent = _float(settings, "extent", None)
    if extent is None:
        extent = math.sqrt(rho.shape[0]) + 1.5
    points = _int(settings, "points", 161)
    xs = np.linspace(-extent, extent, points)
    w = wigner(rho, xs)
    paths = write_wigner(out, w.x, w.y, w.values, png=_as_bool(settings.get("png", False)))
    meta = _metadata("wigner", settings, params, {
        "wall_time_s": time.perf_counter() - t0, "dim": info["dim"],
        "wigner_min": w.minimum, "wigner_norm": w.norm})
    return paths + [_write_meta(out, meta)]


def cmd_spectrum(settings, out):
    params = _params(settings)
    if params.anharmonicity is Anharmonicity.DUFFING:
        raise UsageError("spectra need the time-independent Kerr model")
    t0 = time.perf_counter()
    rho, info = _solve(params, settings)
    lo = _float(settings, "omega_min", params.detuning - 10.0)
    hi = _float(settings, "omega_max", params.detuning + 10.0)
    step = _float(settings, "omega_step", 0.1)
    if step <= 0 or hi <= lo:
        raise UsageError("need omega_max > omega_min and omega_step > 0")
    omega_rel = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
    spec = power_spectrum(build_rotating(params, info["dim"]), rho,
                          omega_rel - params.detuning, detuning=params.detuning)
    _write_csv(out / "spectrum.csv", ["omega_rot", "omega_rel", "power"],
               list(zip(spec.omega_rot, spec.omega_rel, spec.values)))
    meta = _metadata("spectrum", settings, params, {
        "wall_time_s": time.perf_counter() - t0, "dim": info["dim"],
        "peak_omega_rel": spectrum_argmax(spec.omega_rel, spec.values),
        "fluctuation_number": spec.fluctuation_number,
        "spectral_integral": spec.integral()})
    return [out / "spectrum.csv", _write_meta(out, meta)]


def cmd_classical(settings, out):
    params = _params(settings)
    t0 = time.perf_counter()
    grid = default_grid(params, h=_float(settings, "fp_h", None))
    fp = solve_fp_steady(build_fp_operator(params, GridSpec(grid.half_width, grid.h),
                                           diffusion=settings.get("fp_diffusion", "auto")))
    s = classical_sync_measure(fp)
    _write_csv(out / "data.csv", ["classical_abs", "classical_phase", "residual",
                                  "boundary_mass", "h"],
               [[s.magnitude, s.phase, fp.residual, fp.boundary_mass, fp.h]])
    paths = write_wigner(out, fp.axis, fp.axis, fp.values, stem="density",
                         png=_as_bool(settings.get("png", False)))
    meta = _metadata("classical", settings, params, {
        "wall_time_s": time.perf_counter() - t0, "diffusion_mode": fp.diffusion_mode,
        "grid_points": len(fp.axis)})
    return [out / "data.csv"] + paths + [_write_meta(out, meta)]


def cmd_sweep(settings, out):
    params = _params(settings)
    axes = settings.get("axis")
    if axes is None:
        axes = [settings[k] for k in ("axis1", "axis2") if settings.get(k)]
    if isinstance(axes, str):
        axes = [axes]
    if not axes or len(axes) > 2:
        raise UsageError("give one or two --axis NAME:START:STOP:STEP")
    parsed = [_parse_axis(a) for a in axes]
    obs = settings.get("observables", "sync")
    obs = tuple(o.strip() for o in obs.split(",") if o.strip()) if isinstance(obs, str) else obs
    default_solver = "lab_propagator" if params.anharmonicity is Anharmonicity.DUFFING \
        else "rotating"
    options = {}
    for key in ("omega_min", "omega_max", "omega_step", "wigner_extent", "n_phi", "fp_h"):
        if key in settings:
            options[key] = float(settings[key]) if key != "n_phi" else int(settings[key])
    if "wigner_points" in settings:
        options["wigner_points"] = int(settings["wigner_points"])
    if "fp_diffusion" in settings:
        options["fp_diffusion"] = settings["fp_diffusion"]
    spec = SweepSpec(base=params, axis1=parsed[0], axis2=parsed[1] if len(parsed) > 1 else None,
                     observables=obs, solver=settings.get("solver", default_solver),
                     dim=_int(settings, "truncation"), options=options)
    result = run_sweep(spec, workers=_int(settings, "workers", 1))
    return emit(result, out, png=_as_bool(settings.get("png", False)))


def cmd_recipe(settings, out):
    specs = recipe(settings["name"], resolution=_int(settings, "resolution", 1))
    paths = []
    for spec in specs:
        result = run_sweep(spec, workers=_int(settings, "workers", 1))
        paths += emit(result, out / spec.name, png=_as_bool(settings.get("png", False)))
    return paths


COMMANDS = {
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "wigner": cmd_wigner,
    "spectrum": cmd_spectrum,
    "classical": cmd_classical,
    "recipe": cmd_recipe,
}


def _error_record(exc, command):
    record = {"status": "error", "command": command, "error": type(exc).__name__,
              "message": str(exc)}
    diagnostics = getattr(exc, "diagnostics", None)
    if diagnostics:
        record["diagnostics"] = diagnostics
    return record


def main(argv=None) -> int:
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        settings = _merge(args)
        out = Path(settings.get("out", "out"))
        out.mkdir(parents=True, exist_ok=True)
        paths = COMMANDS[command](settings, out)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except (UsageError, ConfigurationError, configparser.Error, FileNotFoundError,
            ValueError) as exc:
        print(json.dumps(_error_record(exc, command), default=str), file=sys.stderr)
        return 2
    except (KerrSyncError, ArithmeticError, np.linalg.LinAlgError, OSError) as exc:
        print(json.dumps(_error_record(exc, command), default=str), file=sys.stderr)
        return 1
    print(json.dumps({"status": "ok", "command": command,
                      "outputs": [str(p) for p in paths]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
