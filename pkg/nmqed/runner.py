"""
Turn validated configurations into runs, execute them and write their
tables and the run manifest.
"""
from __future__ import annotations
import copy
import time
import logging
import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any
import numpy as np
from . import cavity, two_atom
from .analysis import FitResult, decay_rate_curve, fit_exponential
from .cavity import CavityParams, InitialState, InitialStateKind
from .errors import ConfigError
from .output import Table, ensure_directory, write_manifest, write_table
from .spectral import asymptotic_rate, spectral_rate
from .two_atom import BRIGHT_STATE, DARK_STATE, TwoAtomParams
from .utils import default_output_dir, package_versions, timestamp


__all__ = [
    "MAX_SAMPLES",
    "RunOptions",
    "FieldGridSpec",
    "RunConfig",
    "RunResult",
    "Report",
    "apply_options",
    "build_runs",
    "execute",
    "run",
]

logger = logging.getLogger(__name__)

MAX_SAMPLES = 10_000_000

TWO_ATOM = "two_atom"
CAVITY_ARRAY = "cavity_array"

MODEL_OUTPUTS = {
    TWO_ATOM: ("population", "gamma_curve", "field_map", "field_trace",
               "fits", "rates"),
    CAVITY_ARRAY: ("population", "gamma_curve", "photon_map", "fits",
                   "rates"),
}
TWO_ATOM_STATES = {"dark": DARK_STATE, "bright": BRIGHT_STATE}
DEFAULT_INIT = {TWO_ATOM: "dark", CAVITY_ARRAY: "single_atom"}
DEFAULT_LATE_WINDOW = {TWO_ATOM: (5.0, 8.0), CAVITY_ARRAY: (2.0, 3.0)}
DEFAULT_EARLY_WINDOW = (0.0, 0.8)
INTEGER_PARAMETERS = ("N", "x_A", "delta_x", "N_A", "N_B")
RATES_COLUMNS = {
    TWO_ATOM: ("beta", "T", "gamma_fit", "gamma_spectral", "gamma_eq5"),
    CAVITY_ARRAY: ("g_A", "delta_x", "N_A", "init", "gamma_early",
                   "gamma_late", "gamma0"),
}
MERGED_SECTIONS = (TWO_ATOM, CAVITY_ARRAY, "wave_packet", "field_grid")


@dataclass(frozen=True)
class RunOptions:
    """
    Command line overrides, applied to every run of a configuration.
    ``fit_window`` is in units of the retardation or round trip time.
    """
    out: Path | None = None
    fmt: str | None = None
    jobs: int = 1
    dt: float | None = None
    t_max: float | None = None
    fit_window: tuple[float, float] | None = None


@dataclass(frozen=True)
class FieldGridSpec:
    """Resolution of the space-time maps."""
    x_points: int = 801
    x_span: tuple[float, float] = (-2.0, 3.0)
    t_rows: int = 600


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a single run needs. Fit windows are absolute times.
    """
    label: str
    model: str
    params: TwoAtomParams | CavityParams
    init: str
    t_max: float
    dt: float
    outputs: tuple[str, ...]
    fit_window: tuple[float, float]
    early_window: tuple[float, float]
    time_unit: float
    sample_every: int = 1
    smooth_window: int = 5
    n_branches: int = 5
    field_grid: FieldGridSpec = field(default_factory=FieldGridSpec)
    wave_packet: InitialState | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.model not in MODEL_OUTPUTS:
            raise ConfigError(f"Unknown model '{self.model}'.")
        unsupported = set(self.outputs) - set(MODEL_OUTPUTS[self.model])
        if unsupported:
            raise ConfigError(
                f"Run '{self.label}': outputs {sorted(unsupported)} are not "
                f"available for the {self.model} model."
            )
        states = TWO_ATOM_STATES if self.model == TWO_ATOM \
            else [kind.value for kind in InitialStateKind]
        if self.init not in states:
            raise ConfigError(
                f"Run '{self.label}': initial state '{self.init}' is not "
                f"available for the {self.model} model."
            )
        if self.t_max / self.dt > MAX_SAMPLES:
            raise ConfigError(
                f"Run '{self.label}': resource guard, t_max/dt = "
                f"{self.t_max / self.dt:.6g} exceeds {MAX_SAMPLES} samples."
            )

    @property
    def initial_state(self) -> InitialState:
        """The lattice initial state of the run."""
        if self.wave_packet is not None:
            return dataclasses.replace(self.wave_packet, kind=self.init)
        return InitialState(kind=self.init)

    def record(self) -> dict[str, Any]:
        """Description of the run for the manifest."""
        params = self.params
        if isinstance(params, TwoAtomParams):
            derived = {"gamma1d": params.gamma1d, "gamma": params.gamma}
        else:
            derived = {
                "N": params.N,
                "x_A": params.x_A,
                "x_B": params.x_B,
                "round_trip_time": cavity.round_trip_time(params),
                "mirror_coupling": params.mirror_coupling,
            }
        record = {
            "label": self.label,
            "model": self.model,
            "parameters": dataclasses.asdict(params),
            "derived": derived,
            "init": self.init,
            "t_max": self.t_max,
            "dt": self.dt,
            "outputs": list(self.outputs),
            "early_window": list(self.early_window),
            "fit_window": list(self.fit_window),
            "sample_every": self.sample_every,
            "smooth_window": self.smooth_window,
        }
        if self.wave_packet is not None and self.model == CAVITY_ARRAY:
            record["wave_packet"] = dataclasses.asdict(self.initial_state)
            record["wave_packet"]["kind"] = self.init
        return record


@dataclass(frozen=True)
class RunResult:
    """Tables and summary values produced by one run."""
    run: RunConfig
    tables: tuple[Table, ...]
    summary: dict[str, Any]


@dataclass(frozen=True)
class Report:
    """What a configuration produced on disk."""
    out_dir: Path
    files: tuple[Path, ...]
    manifest: Path


def apply_options(
    config: dict[str, Any],
    options: RunOptions
) -> dict[str, Any]:
    """
    Fold command line overrides into a copy of ``config``: the resulting
    configuration describes the runs actually executed.
    """
    config = copy.deepcopy(config)
    runs = config.get("runs", [])
    if options.fmt is not None:
        config["format"] = options.fmt
    if options.dt is not None:
        config["dt"] = options.dt
        for item in runs:
            item.pop("dt", None)
    if options.t_max is not None:
        config["t_max"] = options.t_max
        config.pop("t_max_T", None)
        for item in runs:
            item.pop("t_max", None)
            item.pop("t_max_T", None)
    if options.fit_window is not None:
        config["fit_window"] = list(options.fit_window)
        for item in runs:
            item.pop("fit_window", None)
    return config


def _merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(base)
    if "t_max" in override or "t_max_T" in override:
        merged.pop("t_max", None)
        merged.pop("t_max_T", None)
    for key, value in override.items():
        if key in MERGED_SECTIONS and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _sweep_overrides(config: dict[str, Any]) -> list[dict[str, Any]]:
    sweep = config["sweep"]
    parameter = sweep["parameter"]
    model = config["model"]
    section = TWO_ATOM if model == TWO_ATOM else CAVITY_ARRAY
    allowed = {f.name for f in dataclasses.fields(TwoAtomParams)} \
        if model == TWO_ATOM else \
        {f.name for f in dataclasses.fields(CavityParams)} | {"delta_x"}
    if parameter not in allowed:
        raise ConfigError(
            f"Sweep parameter '{parameter}' does not belong to the "
            f"{model} model."
        )
    overrides = []
    for value in sweep["values"]:
        if parameter in INTEGER_PARAMETERS:
            if float(value) != int(value):
                raise ConfigError(
                    f"Sweep parameter '{parameter}' takes integers, "
                    f"got {value}."
                )
            value = int(value)
        overrides.append({
            "label": f"{parameter}{value:g}",
            section: {parameter: value},
        })
    return overrides


def _window(
    window: list[float] | None,
    default: tuple[float, float],
    unit: float
) -> tuple[float, float]:
    start, end = window if window is not None else default
    return start * unit, end * unit


def _two_atom_run(merged: dict[str, Any], label: str) -> RunConfig:
    params = TwoAtomParams(**merged[TWO_ATOM])
    unit = params.T if params.T > 0 else 1.0 / params.gamma
    t_max = _duration(merged, unit, label)
    return _run_config(merged, label, params, t_max, unit, 1e-3)


def _cavity_run(merged: dict[str, Any], label: str) -> RunConfig:
    block = dict(merged[CAVITY_ARRAY])
    delta_x = block.pop("delta_x", 10)
    J = block.pop("J", 1.0)
    unit = delta_x / J
    t_max = _duration(merged, unit, label)
    n_sites = block.pop("N", None)
    x_A = block.pop("x_A", None)
    if n_sites is None:
        if x_A is not None:
            raise ConfigError(
                f"Run '{label}': x_A requires N to be given as well."
            )
        params = CavityParams.for_duration(t_max, delta_x, J, **block)
    else:
        if x_A is None:
            x_A = (n_sites - delta_x) // 2 + 1
        params = CavityParams(
            N=n_sites, x_A=x_A, x_B=x_A + delta_x, J=J, t_max=t_max,
            **block
        )
    return _run_config(merged, label, params, t_max, unit, 0.01 / J)


def _duration(merged: dict[str, Any], unit: float, label: str) -> float:
    if "t_max" in merged:
        return float(merged["t_max"])
    if "t_max_T" in merged:
        return float(merged["t_max_T"]) * unit
    raise ConfigError(f"Run '{label}': either t_max or t_max_T is required.")


def _run_config(
    merged: dict[str, Any],
    label: str,
    params: TwoAtomParams | CavityParams,
    t_max: float,
    unit: float,
    default_dt: float
) -> RunConfig:
    model = merged["model"]
    grid = merged.get("field_grid", {})
    packet = merged.get("wave_packet")
    return RunConfig(
        label=label,
        model=model,
        params=params,
        init=merged.get("init", DEFAULT_INIT[model]),
        t_max=t_max,
        dt=float(merged.get("dt", default_dt)),
        outputs=tuple(merged["outputs"]),
        fit_window=_window(
            merged.get("fit_window"), DEFAULT_LATE_WINDOW[model], unit
        ),
        early_window=_window(
            merged.get("early_window"), DEFAULT_EARLY_WINDOW, unit
        ),
        time_unit=unit,
        sample_every=int(merged.get("sample_every", 1)),
        smooth_window=int(merged.get("smooth_window", 5)),
        n_branches=int(merged.get("n_branches", 5)),
        field_grid=FieldGridSpec(
            x_points=grid.get("x_points", 801),
            x_span=tuple(grid.get("x_span", (-2.0, 3.0))),
            t_rows=grid.get("t_rows", 600),
        ),
        wave_packet=InitialState(
            kind=InitialStateKind.PHOTON_WAVE_PACKET, **packet
        ) if packet is not None and model == CAVITY_ARRAY else None,
        fmt=merged.get("format", "csv"),
    )


def build_runs(config: dict[str, Any]) -> list[RunConfig]:
    """
    Expand a completed configuration into its runs: one per ``runs`` item,
    one per ``sweep`` value, or a single run.

    :raises ConfigError: On incomplete or inconsistent runs.
    :raises ValueError: On invalid physical parameters.
    """
    base = {k: v for k, v in config.items() if k not in ("runs", "sweep")}
    if "sweep" in config:
        overrides = _sweep_overrides(config)
        if "rates" not in base["outputs"]:
            base["outputs"] = [*base["outputs"], "rates"]
    else:
        overrides = config.get("runs") or [{}]
    single = len(overrides) == 1
    runs = []
    for index, override in enumerate(overrides):
        label = override.get("label") or \
            (config.get("name", "run") if single else f"run{index}")
        merged = _merge(base, override)
        if merged["model"] == TWO_ATOM:
            runs.append(_two_atom_run(merged, label))
        else:
            runs.append(_cavity_run(merged, label))
    labels = [r.label for r in runs]
    duplicated = sorted({lb for lb in labels if labels.count(lb) > 1})
    if duplicated:
        raise ConfigError(f"Duplicated run labels: {', '.join(duplicated)}.")
    return runs


def _breakpoints(run: RunConfig) -> np.ndarray:
    if run.model != TWO_ATOM or run.params.T <= 0:
        return np.empty(0)
    count = int(np.floor(run.t_max / run.params.T))
    return run.params.T * np.arange(1, count + 1)


def _gamma_curve(
    P: np.ndarray,
    times: np.ndarray,
    window: int,
    breakpoints: np.ndarray
) -> np.ndarray:
    if np.all(P > 0):
        return decay_rate_curve(P, times, window, breakpoints)
    return np.full(P.shape, np.nan)


def _long_form(
    name: str,
    t: np.ndarray,
    x: np.ndarray,
    values: np.ndarray,
    value_name: str
) -> Table:
    return Table(
        name,
        ("t", "x", value_name),
        (np.repeat(t, x.size), np.tile(x, t.size), values.ravel()),
    )


def _fits_table(fits: dict[str, FitResult]) -> Table:
    names = list(fits)
    return Table(
        "fits",
        ("window", "window_start", "window_end", "gamma_fit", "r_squared",
         "n_points"),
        (
            names,
            [fits[n].window[0] for n in names],
            [fits[n].window[1] for n in names],
            [fits[n].gamma_fit for n in names],
            [fits[n].r_squared for n in names],
            [fits[n].n_points for n in names],
        ),
    )


def _population_tables(
    run: RunConfig,
    times: np.ndarray,
    P: np.ndarray,
    gamma0: float
) -> list[Table]:
    tables = []
    if not {"population", "gamma_curve"} & set(run.outputs):
        return tables
    gamma_inst = _gamma_curve(P, times, run.smooth_window, _breakpoints(run))
    if "population" in run.outputs:
        tables.append(Table(
            "population",
            ("t", "P", "gamma_inst", "P_ref"),
            (times, P, gamma_inst, np.exp(-gamma0 * times)),
        ))
    if "gamma_curve" in run.outputs:
        tables.append(Table("gamma_curve", ("t", "gamma_inst"),
                            (times, gamma_inst)))
    return tables


def _fits(
    run: RunConfig,
    times: np.ndarray,
    P: np.ndarray
) -> dict[str, FitResult]:
    if not {"fits", "rates"} & set(run.outputs):
        return {}
    return {
        "early": fit_exponential(P, times, run.early_window),
        "late": fit_exponential(P, times, run.fit_window),
    }


def _execute_two_atom(run: RunConfig) -> RunResult:
    params = run.params
    traj = two_atom.evolve(
        params, run.t_max, run.dt, TWO_ATOM_STATES[run.init]
    )
    times, P = traj.times, traj.P
    tables = _population_tables(run, times, P, params.gamma0)
    if {"field_map", "field_trace"} & set(run.outputs):
        t_grid = two_atom.default_t_grid(traj, run.field_grid.t_rows)
    if "field_map" in run.outputs:
        x_grid = two_atom.default_x_grid(
            params, run.field_grid.x_points, run.field_grid.x_span
        )
        grid = two_atom.field_intensity_map(
            params, traj, x_grid, t_grid
        ).normalized()
        tables.append(
            _long_form("field_map", grid.t, grid.x, grid.intensity,
                       "intensity")
        )
    if "field_trace" in run.outputs:
        t_trace, trace = two_atom.field_trace(params, traj, t_grid)
        tables.append(Table("field_trace", ("t", "intensity"),
                            (t_trace, trace)))
    fits = _fits(run, times, P)
    if "fits" in run.outputs:
        tables.append(_fits_table(fits))
    summary = {}
    if "rates" in run.outputs:
        summary = {
            "beta": params.beta,
            "T": params.T,
            "gamma_fit": fits["late"].gamma_fit,
            "gamma_spectral": spectral_rate(params, run.n_branches)
            if params.zero_phase else None,
            "gamma_eq5": asymptotic_rate(params),
        }
    return RunResult(run, tuple(tables), summary)


def _execute_cavity(run: RunConfig) -> RunResult:
    params = run.params
    traj = cavity.evolve(
        params, run.initial_state, run.t_max, run.dt, run.sample_every
    )
    times, P = traj.times, traj.population
    tables = _population_tables(run, times, P, params.gamma0)
    if "photon_map" in run.outputs:
        stride = max(1, -(-times.size // run.field_grid.t_rows))
        tables.append(_long_form(
            "photon_map",
            times[::stride],
            np.arange(1, params.N + 1),
            traj.photon_distribution[::stride],
            "probability",
        ))
    fits = _fits(run, times, P)
    if "fits" in run.outputs:
        tables.append(_fits_table(fits))
    summary = {}
    if "rates" in run.outputs:
        summary = {
            "g_A": params.g_A,
            "delta_x": params.delta_x,
            "N_A": params.N_A,
            "init": run.init,
            "gamma_early": fits["early"].gamma_fit,
            "gamma_late": fits["late"].gamma_fit,
            "gamma0": params.gamma0,
        }
    return RunResult(run, tuple(tables), summary)


def execute(run: RunConfig) -> RunResult:
    """
    Compute the tables of a run.

    :param run: The run.
    :return: The tables and summary values.
    """
    logger.info("Run '%s' (%s) started", run.label, run.model)
    if run.model == TWO_ATOM:
        result = _execute_two_atom(run)
    else:
        result = _execute_cavity(run)
    logger.info("Run '%s' finished", run.label)
    return result


def _execute_and_write(run: RunConfig, out_dir: Path) -> tuple[RunResult,
                                                                list[Path]]:
    result = execute(run)
    files = [
        write_table(table, out_dir, run.label, run.fmt)
        for table in result.tables
    ]
    return result, files


def _rates_table(
    results: list[RunResult],
    model: str,
    parameter: str | None
) -> Table:
    columns = RATES_COLUMNS[model]
    data = [[r.summary.get(c) for r in results] for c in columns]
    if parameter and parameter not in columns:
        section = TWO_ATOM if model == TWO_ATOM else CAVITY_ARRAY
        values = [
            r.run.params.delta_x if parameter == "delta_x"
            else getattr(r.run.params, parameter)
            for r in results
        ]
        columns = (parameter,) + columns
        data = [values] + data
        logger.debug("Swept %s.%s added to the rates table", section,
                     parameter)
    return Table("rates", columns, tuple(data))


def run(
    config: dict[str, Any],
    options: RunOptions = RunOptions(),
    source: str = "<config>"
) -> Report:
    """
    Execute every run of a completed configuration, write their tables,
    the rates summary and finally ``manifest.json``.

    Runs are independent and execute on up to ``options.jobs`` threads;
    each one writes its own files.

    :param config: A validated configuration with defaults.
    :param options: Command line overrides.
    :param source: Where the configuration comes from.
    :return: The output directory and the written files.
    """
    started = timestamp()
    clock = time.perf_counter()
    config = apply_options(config, options)
    runs = build_runs(config)
    if options.out is not None:
        out_dir = Path(options.out)
    elif "output_dir" in config:
        out_dir = Path(config["output_dir"])
    else:
        out_dir = default_output_dir(config.get("name", "run"))
    ensure_directory(out_dir)

    jobs = max(1, options.jobs)
    if jobs == 1:
        outcomes = [_execute_and_write(r, out_dir) for r in runs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_execute_and_write, r, out_dir) for r in runs
            ]
            outcomes = [f.result() for f in futures]

    files = [path for _, paths in outcomes for path in paths]
    summarized = [result for result, _ in outcomes if result.summary]
    if summarized:
        parameter = config.get("sweep", {}).get("parameter")
        table = _rates_table(
            summarized,
            config["model"],
            parameter
        )
        files.append(
            write_table(table, out_dir, "", config.get("format", "csv"))
        )

    manifest = {
        "name": config.get("name", "run"),
        "source": source,
        "config": config,
        "runs": [
            {**result.run.record(),
             "files": [p.name for p in paths],
             "summary": result.summary}
            for result, paths in outcomes
        ],
        "versions": package_versions(),
        "started": started,
        "wall_time_s": time.perf_counter() - clock,
    }
    manifest_path = write_manifest(out_dir, manifest)
    logger.info("Wrote %d files to %s", len(files) + 1, out_dir)
    return Report(out_dir, tuple(files), manifest_path)
