"""Parameter sweeps, named figure recipes and result serialization."""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import json
import math
import platform
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .errors import ConfigurationError, KerrSyncError, SweepError
from .hilbert import Anharmonicity, ModelParams
from .liouvillian import build_rotating
from .observables import (
    fock_probabilities,
    phase_distribution,
    power_spectrum,
    spectrum_argmax,
    sync_measure,
    wigner,
)
from .perturbation import sync_measure_perturbative
from .semiclassical import (
    build_fp_operator,
    classical_sync_measure,
    default_grid,
    solve_fp_steady,
)
from .steadystate import steady_state

__all__ = [
    "OBSERVABLES",
    "SOLVERS",
    "Axis",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "run_sweep",
    "run_point",
    "emit",
    "recipe",
    "RECIPES",
    "FREQUENCY_CONVENTION",
]

OBSERVABLES = ("sync", "perturbative_sync", "classical_sync", "fock", "phase_dist",
               "wigner", "spectrum", "entrainment")
SOLVERS = ("rotating", "lab_propagator", "fokker_planck")
PARAM_FIELDS = ("gamma1", "gamma2", "kerr", "detuning", "drive", "omega_m", "kappa_nbar")
FREQUENCY_CONVENTION = ("omega_rel = detuning + omega_rot; omega_rot is measured in the "
                        "frame of the drive, omega_rel from the bare oscillator frequency")
QUANTUM_OBSERVABLES = {"sync", "fock", "phase_dist", "wigner", "spectrum", "entrainment"}
FLOAT_FORMAT = ".17g"

DEFAULT_OPTIONS = {
    "omega_min": -10.0,        # omega_rel window for spectra, units of gamma1
    "omega_max": 10.0,
    "omega_step": 0.1,
    "wigner_extent": 5.0,
    "wigner_points": 101,
    "n_phi": 128,
    "fp_h": None,
    "fp_diffusion": "auto",
    "substeps": 100,
}


@dataclasses.dataclass(frozen=True)
class Axis:
    """A swept parameter and its strictly monotone grid."""

    name: str
    values: tuple

    def __post_init__(self):
        if self.name not in PARAM_FIELDS:
            raise ConfigurationError(
                f"axis {self.name!r} is not a model parameter; choose from {PARAM_FIELDS}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigurationError(f"axis {self.name!r} is empty")
        diffs = np.diff(values)
        if diffs.size and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigurationError(f"axis {self.name!r} must be strictly monotone")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_range(cls, name, start, stop, step):
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(name, tuple(start + step * np.arange(n)))


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    """What to sweep, what to measure and which steady-state solver to use.

    ``solver`` selects how quantum states are obtained: ``rotating`` for
    the time-independent Kerr model, ``lab_propagator`` for the Duffing
    model. ``fokker_planck`` runs only the classical model. The classical
    and perturbative measures can be requested with any solver.
    """

    base: ModelParams
    axis1: Axis
    axis2: Axis | None = None
    observables: tuple = ("sync",)
    solver: str = "rotating"
    dim: int | None = None
    options: dict = dataclasses.field(default_factory=dict)
    name: str = "sweep"

    def __post_init__(self):
        obs = tuple(self.observables)
        unknown = set(obs) - set(OBSERVABLES)
        if unknown:
            raise ConfigurationError(f"unknown observables {sorted(unknown)}")
        if not obs:
            raise ConfigurationError("no observables requested")
        object.__setattr__(self, "observables", obs)
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.solver == "fokker_planck" and set(obs) & QUANTUM_OBSERVABLES:
            raise ConfigurationError("the fokker_planck solver only provides classical_sync "
                                     "and perturbative_sync")
        if self.solver == "lab_propagator":
            if self.base.anharmonicity is not Anharmonicity.DUFFING:
                raise ConfigurationError("lab_propagator requires the Duffing model")
            if {"spectrum", "entrainment"} & set(obs):
                raise ConfigurationError("spectra need the time-independent rotating frame")
        if self.solver == "rotating" and self.base.anharmonicity is Anharmonicity.DUFFING:
            raise ConfigurationError("the Duffing model needs solver=lab_propagator")
        if self.axis2 is not None and self.axis2.name == self.axis1.name:
            raise ConfigurationError("the two axes must sweep different parameters")
        opts = dict(DEFAULT_OPTIONS)
        unknown = set(self.options) - set(opts)
        if unknown:
            raise ConfigurationError(f"unknown options {sorted(unknown)}")
        opts.update(self.options)
        if "entrainment" in obs and opts["omega_step"] > self.base.gamma1 / 10 * (1 + 1e-9):
            raise ConfigurationError("entrainment needs omega_step <= gamma1/10")
        object.__setattr__(self, "options", opts)

    @property
    def shape(self):
        return (len(self.axis1.values),) + ((len(self.axis2.values),) if self.axis2 else ())

    def points(self):
        """Parameter sets in row-major order, axis1 outermost."""
        a2 = self.axis2.values if self.axis2 else (None,)
        out = []
        for v1 in self.axis1.values:
            for v2 in a2:
                changes = {self.axis1.name: v1}
                if self.axis2 is not None:
                    changes[self.axis2.name] = v2
                out.append(changes)
        return out

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "base": self.base.as_dict(),
            "axis1": {"name": self.axis1.name, "values": list(self.axis1.values)},
            "axis2": (None if self.axis2 is None else
                      {"name": self.axis2.name, "values": list(self.axis2.values)}),
            "observables": list(self.observables),
            "solver": self.solver,
            "dim": self.dim,
            "options": self.options,
        }


@dataclasses.dataclass
class SweepRow:
    """Result of one grid point.

    ``scalars`` holds the tabular observables, ``arrays`` the vector and
    grid valued ones. ``error`` is ``None`` on success and otherwise the
    exception class name; the message is kept in ``message``.
    """

    index: int
    params: dict
    scalars: dict
    arrays: dict
    residual: float
    dim: int | None
    wall_time: float
    error: str | None = None
    message: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclasses.dataclass
class SweepResult:
    spec: SweepSpec
    rows: list
    metadata: dict

    @property
    def failures(self):
        return [r for r in self.rows if not r.ok]

    def column(self, key):
        """Scalar observable over the grid, shaped like the sweep (NaN on failures)."""
        vals = np.array([r.scalars.get(key, np.nan) if r.ok else np.nan for r in self.rows],
                        dtype=float)
        return vals.reshape(self.spec.shape)


def _omega_grid(opts):
    step = opts["omega_step"]
    n = int(round((opts["omega_max"] - opts["omega_min"]) / step)) + 1
    return opts["omega_min"] + step * np.arange(n)


def run_point(spec: SweepSpec, index: int) -> SweepRow:
    """Evaluate every requested observable at one grid point.

    Solver failures are caught and recorded in the row.
    """
    changes = spec.points()[index]
    start = time.perf_counter()
    params_dict = {k: float(v) for k, v in changes.items()}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            scalars, arrays, residual, dim = _evaluate(spec, spec.base.replace(**changes))
    except (KerrSyncError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return SweepRow(index=index, params=params_dict, scalars={}, arrays={},
                        residual=math.nan, dim=None, wall_time=time.perf_counter() - start,
                        error=type(exc).__name__, message=str(exc))
    return SweepRow(index=index, params=params_dict, scalars=scalars, arrays=arrays,
                    residual=residual, dim=dim, wall_time=time.perf_counter() - start)


def _evaluate(spec, params):
    obs = set(spec.observables)
    opts = spec.options
    scalars, arrays = {}, {}
    residual, dim = math.nan, None

    if obs & QUANTUM_OBSERVABLES:
        solver_kw = {"substeps": opts["substeps"]}
        rho, info = steady_state(params, spec.dim, return_info=True, **solver_kw)
        dim = info["dim"]
        residual = info.get("relative_residual", info.get("residual"))
        if "sync" in obs:
            s = sync_measure(rho)
            scalars["sync_abs"], scalars["sync_phase"] = s.magnitude, s.phase
        if "fock" in obs:
            arrays["fock"] = fock_probabilities(rho)
        if "phase_dist" in obs:
            pd = phase_distribution(rho, opts["n_phi"])
            arrays["phase_dist"] = (pd.phi, pd.values)
        if "wigner" in obs:
            xs = np.linspace(-opts["wigner_extent"], opts["wigner_extent"], opts["wigner_points"])
            w = wigner(rho, xs, warn=False)
            arrays["wigner"] = (w.x, w.y, w.values)
            scalars["wigner_min"] = w.minimum
        if obs & {"spectrum", "entrainment"}:
            omega_rel = _omega_grid(opts)
            spec_ = power_spectrum(build_rotating(params, dim), rho,
                                   omega_rel - params.detuning, detuning=params.detuning)
            if "spectrum" in obs:
                arrays["spectrum"] = (spec_.omega_rot, spec_.omega_rel, spec_.values)
                scalars["fluctuation_number"] = spec_.fluctuation_number
            peak = spectrum_argmax(spec_.omega_rel, spec_.values)
            scalars["spectrum_peak_rel"] = peak
            if "entrainment" in obs:
                scalars["entrained"] = float(
                    abs(peak - params.detuning) <= 2 * opts["omega_step"] * (1 + 1e-9))

    if "perturbative_sync" in obs:
        s = sync_measure_perturbative(params, spec.dim)
        scalars["perturbative_abs"], scalars["perturbative_phase"] = abs(s), math.atan2(s.imag, s.real)

    if "classical_sync" in obs:
        grid = default_grid(params, h=opts["fp_h"])
        fp = solve_fp_steady(build_fp_operator(params, grid, diffusion=opts["fp_diffusion"]))
        s = classical_sync_measure(fp)
        scalars["classical_abs"], scalars["classical_phase"] = s.magnitude, s.phase
        scalars["classical_residual"] = fp.residual
        if math.isnan(residual):
            residual = fp.residual
    return scalars, arrays, residual, dim


def _run_indices(spec, indices, workers):
    if workers <= 1 or len(indices) <= 1:
        return [run_point(spec, i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_point, [spec] * len(indices), indices,
                             chunksize=max(1, len(indices) // (4 * workers))))


def run_sweep(spec: SweepSpec, *, workers: int = 1) -> SweepResult:
    """Evaluate the sweep, optionally on a process pool.

    Rows come back in grid order whatever the worker count, and each point
    runs the same single-threaded pipeline, so the data do not depend on
    ``workers``.

    Raises
    ------
    SweepError
        If every point failed; the message quotes the first three.
    """
    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    indices = list(range(len(spec.points())))
    rows = _run_indices(spec, indices, int(workers))
    wall = time.perf_counter() - t0
    failures = [r for r in rows if not r.ok]
    if rows and len(failures) == len(rows):
        detail = "; ".join(f"point {r.index} {r.params}: {r.error}: {r.message}"
                           for r in failures[:3])
        raise SweepError(f"all {len(rows)} sweep points failed: {detail}")
    metadata = {
        "config": spec.as_dict(),
        "conventions": {
            "frequency_axis": FREQUENCY_CONVENTION,
            "units": "all rates and frequencies in units of gamma1",
            "wigner_normalization": "integral of W over d^2 alpha equals 1",
            "vectorization": "column stacking",
            "duffing_detuning": "Delta = omega_d - (omega_m + K)",
        },
        "version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_utc": started.isoformat(),
        "finished_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "wall_time_s": wall,
        "workers": int(workers),
        "points": len(rows),
        "failed_points": len(failures),
        "point_wall_times_s": [r.wall_time for r in rows],
        "failures": [{"index": r.index, "params": r.params, "error": r.error,
                      "message": r.message} for r in failures],
    }
    return SweepResult(spec=spec, rows=rows, metadata=metadata)


# --------------------------------------------------------------------- output


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, FLOAT_FORMAT)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def emit(result: SweepResult, out_dir, *, png: bool = False) -> list:
    """Write ``data.csv``, per-observable array files and ``metadata.json``.

    Data files contain only deterministic values at 17 significant digits;
    timings and timestamps go to the metadata file. Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = result.spec
    axes = [spec.axis1.name] + ([spec.axis2.name] if spec.axis2 else [])
    scalar_keys = sorted({k for r in result.rows for k in r.scalars})
    written = []

    header = ["index"] + axes + scalar_keys + ["residual", "dim", "status"]
    table = []
    for r in result.rows:
        table.append([str(r.index)] + [r.params[a] for a in axes]
                     + [r.scalars.get(k, math.nan) for k in scalar_keys]
                     + [r.residual, "" if r.dim is None else str(r.dim), r.error or "ok"])
    _write_csv(out / "data.csv", header, table)
    written.append(out / "data.csv")

    ok_rows = [r for r in result.rows if r.ok]
    if "fock" in spec.observables:
        rows = [[str(r.index)] + [r.params[a] for a in axes] + [str(n), p]
                for r in ok_rows for n, p in enumerate(r.arrays["fock"])]
        _write_csv(out / "fock.csv", ["index"] + axes + ["n", "probability"], rows)
        written.append(out / "fock.csv")
    if "phase_dist" in spec.observables:
        rows = [[str(r.index)] + [r.params[a] for a in axes] + [phi, v]
                for r in ok_rows for phi, v in zip(*r.arrays["phase_dist"])]
        _write_csv(out / "phase_dist.csv", ["index"] + axes + ["phi", "density"], rows)
        written.append(out / "phase_dist.csv")
    if "spectrum" in spec.observables:
        rows = [[str(r.index)] + [r.params[a] for a in axes] + [w0, w1, v]
                for r in ok_rows for w0, w1, v in zip(*r.arrays["spectrum"])]
        _write_csv(out / "spectrum.csv",
                   ["index"] + axes + ["omega_rot", "omega_rel", "power"], rows)
        written.append(out / "spectrum.csv")
    if "wigner" in spec.observables:
        for r in ok_rows:
            written += write_wigner(out, *r.arrays["wigner"], stem=f"wigner_{r.index:04d}",
                                    png=png)

    if png:
        written += _plot_sweep(result, out, scalar_keys)

    meta_path = out / "metadata.json"
    with open(meta_path, "w") as fh:
        json.dump(result.metadata, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    written.append(meta_path)
    return written


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_wigner(out_dir, x, y, values, *, stem="wigner", png=False) -> list:
    """Matrix CSV (rows follow ``y``) plus an axes CSV, and optionally a PNG."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}.csv", out / f"{stem}_axes.csv"]
    _write_csv(paths[0], [f"x{i}" for i in range(len(x))], [list(row) for row in values])
    n = max(len(x), len(y))
    _write_csv(paths[1], ["i", "x", "y"],
               [[str(i), x[i] if i < len(x) else math.nan, y[i] if i < len(y) else math.nan]
                for i in range(n)])
    if png:
        paths.append(_plot_map(x, y, values, out / f"{stem}.png", "Re alpha", "Im alpha",
                               "W", diverging=True))
    return paths


def _plot_map(x, y, values, path, xlabel, ylabel, label, *, diverging=False):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import TwoSlopeNorm

    fig, ax = plt.subplots(figsize=(5, 4))
    kw = {"shading": "auto"}
    if diverging:
        vmax = float(np.nanmax(np.abs(values))) or 1.0
        kw.update(cmap="RdBu_r", norm=TwoSlopeNorm(vmin=-vmax, vcenter=0.0, vmax=vmax))
    else:
        kw["cmap"] = "viridis"
    mesh = ax.pcolormesh(x, y, values, **kw)
    fig.colorbar(mesh, ax=ax, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def _plot_sweep(result, out, scalar_keys):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    spec = result.spec
    keys = [k for k in ("sync_abs", "perturbative_abs", "classical_abs", "spectrum_peak_rel")
            if k in scalar_keys]
    if not keys:
        return []
    x = np.array(spec.axis1.values)
    if spec.axis2 is None:
        fig, ax = plt.subplots(figsize=(6, 4))
        for k in keys:
            ax.plot(x, result.column(k), label=k)
        ax.set_xlabel(spec.axis1.name)
        ax.legend()
        fig.tight_layout()
        path = out / "sweep.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        return [path]
    y = np.array(spec.axis2.values)
    return [_plot_map(x, y, result.column(k).T, out / f"{k}.png", spec.axis1.name,
                      spec.axis2.name, k) for k in keys]


# -------------------------------------------------------------------- recipes

FIG2 = ModelParams(gamma1=1.0, gamma2=7.0, drive=2.25, kerr=50.0)
FIG3 = ModelParams(gamma1=1.0, gamma2=5.0, drive=2.25, kerr=50.0)
FIG4 = ModelParams(gamma1=1.0, gamma2=0.8, drive=4.5, kerr=25.0)


def _delta_axis(kerr, step_fraction, lo=0.0, hi=5.0):
    return Axis.from_range("detuning", lo * kerr, hi * kerr, kerr * step_fraction)


def _fig3(kind, resolution):
    base = FIG3
    delta = _delta_axis(base.kerr, 1 / (10 * resolution))
    quantum = kind in "ace"
    obs = ("sync",) if quantum else ("classical_sync",)
    solver = "rotating" if quantum else "fokker_planck"
    n = 10 * resolution + 1
    second = {
        "ab": Axis("gamma2", tuple(np.linspace(0.5, 10.0, n))),
        "cd": Axis("drive", tuple(np.linspace(0.0, 5.0, n))),
        "ef": Axis("kerr", tuple(np.linspace(0.0, 50.0, n))),
    }
    pair = next(k for k in second if kind in k)
    if pair == "ef":
        # the detuning axis spans the largest anharmonicity
        delta = _delta_axis(base.kerr, 1 / (10 * resolution), lo=-1.0)
    return SweepSpec(base=base, axis1=delta, axis2=second[pair], observables=obs,
                     solver=solver, name=f"fig3{kind}")


def recipe(name: str, *, resolution: int = 1) -> list:
    """Named sweeps behind the figure recipes.

    ``resolution`` scales the grid density of the 2D maps (1 = coarse,
    the detuning step of the 1D curves is fixed by the figure).
    """
    name = name.lower()
    if name == "fig2":
        return [SweepSpec(base=FIG2, axis1=_delta_axis(50.0, 1 / 50),
                          observables=("sync", "perturbative_sync", "classical_sync"),
                          name="fig2")]
    if name in {f"fig3{c}" for c in "abcdef"}:
        return [_fig3(name[-1], resolution)]
    if name == "fig4a":
        return [SweepSpec(base=FIG4, axis1=_delta_axis(FIG4.kerr, 1 / 10),
                          observables=("sync", "entrainment"),
                          options={"omega_min": -10.0, "omega_max": 6 * FIG4.kerr,
                                   "omega_step": 0.1},
                          name="fig4a")]
    if name == "fig4b":
        delta = Axis("detuning", (5 * FIG4.kerr,))
        opts = {"wigner_extent": 4.0, "wigner_points": 161}
        return [SweepSpec(base=FIG4, axis1=delta, observables=("wigner", "fock", "sync"),
                          options=opts, name="fig4b_driven"),
                SweepSpec(base=FIG4.replace(drive=0.0), axis1=delta,
                          observables=("wigner", "fock"), options=opts, name="fig4b_undriven")]
    if name == "figs1a":
        return [SweepSpec(base=FIG2, axis1=_delta_axis(50.0, 1 / 50),
                          axis2=Axis("kappa_nbar", (0.1, 0.5, 1.0, 5.0)),
                          observables=("sync",), name="figS1a")]
    if name == "figs1b":
        base = FIG2.replace(anharmonicity=Anharmonicity.DUFFING, omega_m=1000 * FIG2.kerr)
        return [SweepSpec(base=base, axis1=_delta_axis(50.0, 1 / 10),
                          axis2=Axis("omega_m", tuple(k * FIG2.kerr for k in (50, 100, 500, 1000))),
                          observables=("sync",), solver="lab_propagator", name="figS1b")]
    raise ConfigurationError(f"unknown recipe {name!r}; choose from {RECIPES}")


RECIPES = ("fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig3e", "fig3f", "fig4a", "fig4b",
           "figS1a", "figS1b")
