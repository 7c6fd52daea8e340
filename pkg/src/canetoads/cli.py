"""Command-line front end: configuration, orchestration, and artifact I/O.

Five subcommands drive the package:

* ``simulate``    -- integrate the density equation and write snapshot CSVs
  (``snapshot_0000.csv`` ...), ``fronts.csv``, and ``summary.json``; nonlocal
  runs also get per-snapshot trait-integral profiles (``rho_0000.csv`` ...).
* ``steady``      -- solve the disc/annulus frame states for each requested
  drift and write the solution snapshots, ``normals.csv`` (angle, slope_plus,
  slope_minus), and ``report.json`` (residual, iterations, plateau radius).
* ``subsolution`` -- solve the ring seeds, march the moving bump along the
  two-leg trajectory, and write the frame fields and assembled bump per
  snapshot, ``ordering.csv`` (time, margin), and -- when a density run is
  supplied for comparison -- ``domination.csv`` (time, max excess).
* ``analyze``     -- fit the front series of an existing run directory and
  write ``fit.json``.
* ``bench``       -- time the stepping kernels on the configured grid and
  write ``bench.json`` (min over repeats, per-phase cost, cells/second, and a
  checksum of the final state for determinism comparisons).

Configuration is flat ``key = value`` text with ``[section]`` headers; the
sections are ``model``, ``grid``, ``reaction``, ``evolve``, ``steady``,
``subsolution``, ``analyze``, and ``bench``.  Every key has a documented
default (``--help`` on each subcommand lists them), ``--key value`` flags
override file values, and the effective post-default configuration is echoed
into the output directory as ``effective-<subcommand>.cfg`` and embedded in
the JSON summaries, so a run can be reproduced exactly from its artifacts.
The trait wall ``theta_min`` lives in ``[model]`` and doubles as the lower
grid edge; ``[grid]`` holds the remaining extents.

Exit codes: 0 success, 2 configuration error (every detected problem is
listed on stderr before exiting), 3 numerical failure, 4 truncation abort.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .evolve import (
    EvolveConfig,
    INITIAL_KINDS,
    InstabilityError,
    SCHEMES,
    TRUNCATION_POLICIES,
    _Stepper,
    initial_field,
    run,
)
from .fronts import (
    FrontSeries,
    fit_exponent,
    front_theta,
    front_x,
    read_fronts,
    write_fronts,
)
from .grid import (
    GridSpec,
    TruncationError,
    integrate_theta,
    read_snapshot,
    write_snapshot,
)
from .model import (
    CubicBistable,
    KPPMonostable,
    ModelParams,
    ModifiedBistable,
    NonlocalBistableRate,
)
from .operators import cfl_dt
from .steady import (
    SteadyConvergenceError,
    SteadyProblem,
    boundary_normal_derivative,
    halfplane_slopes,
    solve_phi_minus,
    solve_phi_plus,
)
from .trajectory import (
    Trajectory,
    march_subsolution,
    solve_seeds,
    spreading_constant,
    verify_domination,
    verify_ordering,
)

__all__ = ["ConfigError", "main"]

REACTION_KINDS = ("cubic", "modified", "kpp", "nonlocal")


class ConfigError(Exception):
    """Carries every configuration problem found, for one exhaustive listing."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


# --------------------------------------------------------------------------
# key table: converters, canonical renderers, defaults
# --------------------------------------------------------------------------


def _float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise ValueError(f"expected a number, got {s!r}") from None


def _int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise ValueError(f"expected an integer, got {s!r}") from None


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _optional(conv):
    def convert(s: str):
        if s.strip().lower() in ("", "auto", "none"):
            return None
        return conv(s)

    return convert


def _path_or_none(s: str):
    s = s.strip()
    return s or None


def _choice(*options):
    def convert(s: str) -> str:
        s = s.strip()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return s

    return convert


def _drift_pairs(s: str):
    out = []
    for part in s.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(",")
        if len(bits) != 2:
            raise ValueError(f"drift {part!r} must be 'c_y,c_eta'")
        out.append((_float(bits[0]), _float(bits[1])))
    if not out:
        raise ValueError("expected at least one 'c_y,c_eta' pair")
    return out


def _time_list(s: str):
    if s.strip().lower() in ("", "auto"):
        return None
    vals = [_float(b) for b in s.split(",") if b.strip()]
    if not vals:
        raise ValueError("expected comma-separated times or 'auto'")
    return vals


def _render_bool(v) -> str:
    return "true" if v else "false"


def _render_optional(v) -> str:
    return "auto" if v is None else repr(v)


def _render_path(v) -> str:
    return "" if v is None else str(v)


def _render_drifts(v) -> str:
    return "; ".join(f"{repr(a)},{repr(b)}" for a, b in v)


def _render_times(v) -> str:
    return "auto" if v is None else ",".join(repr(t) for t in v)


class _Key:
    def __init__(self, conv, render, default, help_text, flag=None):
        self.conv = conv
        self.render = render
        self.default = default
        self.help = help_text
        self.flag = flag


def _fkey(default, help_text, flag=None):
    return _Key(_float, repr, default, help_text, flag)


def _ikey(default, help_text, flag=None):
    return _Key(_int, str, default, help_text, flag)


_SPEC: dict[str, dict[str, _Key]] = {
    "model": {
        "alpha": _fkey(0.25, "bistable threshold in (0, 1/2)"),
        "theta_min": _fkey(1.0, "trait wall; also the lower grid edge"),
        "lam": _fkey(1.0, "initial block reaches theta = (1 + lam) * theta_min"),
        "r": _fkey(1.0, "upper root of the modified bistable reaction"),
        "traj_speed": _fkey(0.0, "trait climb rate c of the bump trajectory"),
        "bump_radius": _fkey(0.0, "frame radius of the moving bump (0 disables)"),
        "horizon": _fkey(0.0, "trajectory duration T (0 disables)"),
        "level": _fkey(0.3, "front-tracking level m in (alpha, 1)"),
    },
    "grid": {
        "x_min": _fkey(-40.0, "left space edge (< 0 for the occupied block)"),
        "x_max": _fkey(320.0, "right space edge"),
        "nx": _ikey(721, "space nodes"),
        "theta_max": _fkey(41.0, "top trait edge"),
        "ntheta": _ikey(81, "trait nodes"),
    },
    "reaction": {
        "kind": _Key(
            _choice(*REACTION_KINDS),
            str,
            "cubic",
            "reaction term: " + ", ".join(REACTION_KINDS),
            flag="reaction",
        ),
    },
    "evolve": {
        "scheme": _Key(_choice(*SCHEMES), str, "explicit-euler", "time scheme"),
        "dt": _Key(
            _optional(_float), _render_optional, None, "time step; 'auto' picks one"
        ),
        "t_end": _fkey(120.0, "final time"),
        "snapshot_every": _fkey(30.0, "snapshot cadence (default times 0,30,...,120)"),
        "initial": _Key(_choice(*INITIAL_KINDS), str, "indicator", "starting state"),
        "smooth_width": _fkey(0.0, "ramp width for initial=indicator-smoothed"),
        "initial_file": _Key(
            _path_or_none, _render_path, None, "snapshot CSV for initial=file"
        ),
        "initial_scale": _fkey(1.0, "multiplier on the starting state"),
        "truncation_policy": _Key(
            _choice(*TRUNCATION_POLICIES),
            str,
            "warn",
            "edge-mass handling; 'abort' exits with code 4",
        ),
        "fit_window": _fkey(0.5, "trailing fraction of times used by the fit"),
        "track_fronts": _Key(_bool, _render_bool, True, "record front positions"),
        "store_snapshots": _Key(_bool, _render_bool, True, "write snapshot files"),
        "workers": _ikey(1, "threads for the explicit scheme"),
    },
    "steady": {
        "radius": _fkey(20.0, "ring radius Lambda", flag="lambda-cap"),
        "h": _fkey(0.25, "frame cell size", flag="frame-h"),
        "tol": _fkey(1e-8, "residual tolerance"),
        "drifts": _Key(
            _drift_pairs,
            _render_drifts,
            [(0.0, 0.0)],
            "semicolon-separated 'c_y,c_eta' drift pairs",
        ),
        "margin": _fkey(2.0, "box padding beyond the outer ring"),
        "max_iters": _ikey(10**6, "pseudo-time iteration cap"),
        "n_angles": _ikey(64, "boundary angles sampled for normals"),
    },
    "subsolution": {
        "frame_h": _fkey(0.25, "frame cell size for seeds and marching"),
        "r_two": _Key(
            _optional(_float),
            _render_optional,
            None,
            "second-leg plateau; 'auto' uses (1 + max(level, 2 alpha))/2",
        ),
        "snapshot_times": _Key(
            _time_list,
            _render_times,
            None,
            "comma-separated times; 'auto' uses 0,T/4,T/2,3T/4,T",
        ),
        "dt": _Key(
            _optional(_float),
            _render_optional,
            None,
            "frame march step; 'auto' uses the stability limit",
        ),
        "density_run": _Key(
            _path_or_none,
            _render_path,
            None,
            "simulate output directory to check domination against",
        ),
    },
    "analyze": {
        "run": _Key(_path_or_none, _render_path, None, "run directory to analyze"),
        "m": _Key(
            _optional(_float),
            _render_optional,
            None,
            "front level; 'auto' reuses the run's fronts.csv",
        ),
        "window": _fkey(0.5, "trailing fraction of times used by the fit"),
        "min_position": _fkey(0.0, "drop samples with front_x at or below this"),
    },
    "bench": {
        "steps": _ikey(40, "steps per timing repeat"),
        "repeats": _ikey(3, "timing repeats (minimum is reported)"),
    },
}


# --------------------------------------------------------------------------
# configuration resolution: defaults <- file <- flags
# --------------------------------------------------------------------------


def _read_config_file(path: str) -> tuple[dict, list[str]]:
    """Parse a key = value file; returns raw strings plus any problems."""
    errors: list[str] = []
    raw: dict[str, dict[str, str]] = {}
    file_path = Path(path)
    if not file_path.is_file():
        return raw, [f"config file {path} not found"]
    parser = configparser.RawConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(file_path.read_text(encoding="utf-8"), source=path)
    except configparser.Error as exc:
        return raw, [f"config file {path}: {exc}"]
    for section in parser.sections():
        if section not in _SPEC:
            errors.append(
                f"config file {path}: unknown section [{section}] "
                f"(expected one of {', '.join(_SPEC)})"
            )
            continue
        for key, value in parser.items(section):
            if key not in _SPEC[section]:
                errors.append(f"config file {path}: unknown key [{section}] {key}")
                continue
            raw.setdefault(section, {})[key] = value
    return raw, errors


def _resolve_config(ns: argparse.Namespace) -> tuple[dict, dict, list[str]]:
    """Merge defaults, config file, and flags into typed values + canonical text.

    Conversion failures are collected (with the default standing in, so the
    later construction stage can still report its own problems) and handed to
    the subcommand, which lists everything before exiting.
    """
    errors: list[str] = []
    raw: dict[str, dict[str, str]] = {}
    if getattr(ns, "config", None):
        raw, errors = _read_config_file(ns.config)
    for section, keys in _SPEC.items():
        for key in keys:
            override = getattr(ns, f"{section}.{key}", None)
            if override is not None:
                raw.setdefault(section, {})[key] = override

    values: dict[str, dict] = {}
    strings: dict[str, dict[str, str]] = {}
    for section, keys in _SPEC.items():
        values[section] = {}
        strings[section] = {}
        for key, kspec in keys.items():
            text = raw.get(section, {}).get(key)
            value = kspec.default
            if text is not None:
                try:
                    value = kspec.conv(text)
                except ValueError as exc:
                    errors.append(f"[{section}] {key}: {exc}")
            values[section][key] = value
            strings[section][key] = kspec.render(value)
    return values, strings, errors


def _build(errors: list[str], label: str, factory):
    try:
        return factory()
    except ValueError as exc:
        errors.append(f"[{label}] {exc}")
        return None


def _model_params(cv: dict, errors: list[str]) -> ModelParams | None:
    return _build(errors, "model", lambda: ModelParams(**cv["model"]))


def _grid_spec(cv: dict, errors: list[str]) -> GridSpec | None:
    g = cv["grid"]
    return _build(
        errors,
        "grid",
        lambda: GridSpec(
            g["x_min"], g["x_max"], g["nx"],
            cv["model"]["theta_min"], g["theta_max"], g["ntheta"],
        ),
    )


def _evolve_config(cv: dict, errors: list[str]) -> EvolveConfig | None:
    return _build(errors, "evolve", lambda: EvolveConfig(**cv["evolve"]))


def _reaction(cv: dict, errors: list[str]):
    kind = cv["reaction"]["kind"]
    alpha = cv["model"]["alpha"]
    factories = {
        "cubic": lambda: CubicBistable(alpha),
        "modified": lambda: ModifiedBistable(alpha, cv["model"]["r"]),
        "kpp": lambda: KPPMonostable(),
        "nonlocal": lambda: NonlocalBistableRate(alpha),
    }
    return _build(errors, "reaction", factories[kind])


def _flush(errors: list[str]) -> None:
    if errors:
        raise ConfigError(errors)


# --------------------------------------------------------------------------
# artifact writers
# --------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
        encoding="ascii",
    )


def _write_rows(path: Path, header: str, rows) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{float(v):.17g}" for v in row) + "\n")


def _write_effective(outdir: Path, command: str, strings: dict) -> None:
    lines = [f"# effective configuration for `canetoads {command}`"]
    lines.append("# defaults, overlaid with the config file, overlaid with flags")
    for section, keys in strings.items():
        lines.append("")
        lines.append(f"[{section}]")
        for key, text in keys.items():
            lines.append(f"{key} = {text}")
    (outdir / f"effective-{command}.cfg").write_text(
        "\n".join(lines) + "\n", encoding="ascii"
    )


def _outdir(ns: argparse.Namespace, default: str) -> Path:
    out = Path(ns.out) if getattr(ns, "out", None) else Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_stats(report) -> dict:
    return {
        "residual": report.residual,
        "iterations": report.iterations,
        "converged": report.converged,
        "collapsed": report.collapsed,
        "plateau_radius": report.plateau_radius,
    }


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _cmd_simulate(ns, cv, cs, pending) -> int:
    errors = list(pending)
    params = _model_params(cv, errors)
    spec = _grid_spec(cv, errors)
    config = _evolve_config(cv, errors)
    reaction = _reaction(cv, errors)
    _flush(errors)

    outdir = _outdir(ns, "simulate-out")
    _write_effective(outdir, "simulate", cs)
    result = run(spec, config, params, reaction)

    entries = []
    for i, snap in enumerate(result.snapshots):
        name = f"snapshot_{i:04d}.csv"
        write_snapshot(snap, outdir / name)
        entry = {"index": i, "time": snap.time, "file": name}
        if isinstance(reaction, NonlocalBistableRate):
            rho_name = f"rho_{i:04d}.csv"
            _write_rows(
                outdir / rho_name, "x,rho", zip(spec.x_coords(), integrate_theta(snap))
            )
            entry["rho_file"] = rho_name
        entries.append(entry)
    if result.fronts is not None:
        write_fronts(result.fronts, outdir / "fronts.csv")

    summary = {
        "command": "simulate",
        "config": cs,
        "reaction": cv["reaction"]["kind"],
        "snapshots": entries,
        "run": result.summary,
    }
    _write_json(outdir / "summary.json", summary)
    warnings = result.summary.get("truncation_warnings", [])
    if warnings:
        print(f"simulate: {len(warnings)} truncation warning(s)", file=sys.stderr)
    print(f"simulate: {len(entries)} snapshot(s) -> {outdir}")
    return 0


def _cmd_steady(ns, cv, cs, pending) -> int:
    errors = list(pending)
    s = cv["steady"]
    reaction = _build(
        errors, "model", lambda: ModifiedBistable(cv["model"]["alpha"], cv["model"]["r"])
    )
    problems: list[tuple[SteadyProblem, SteadyProblem]] = []
    if reaction is not None:
        for drift in s["drifts"]:
            pair = []
            for kind in ("disc", "annulus"):
                problem = _build(
                    errors,
                    "steady",
                    lambda k=kind, d=drift: SteadyProblem(
                        k,
                        s["radius"],
                        reaction,
                        d,
                        h=s["h"],
                        margin=s["margin"],
                        tol=s["tol"],
                        max_iters=s["max_iters"],
                        n_angles=s["n_angles"],
                    ),
                )
                pair.append(problem)
            problems.append(tuple(pair))
    _flush(errors)

    outdir = _outdir(ns, "steady-out")
    _write_effective(outdir, "steady", cs)
    angles = np.linspace(0.0, 2.0 * np.pi, s["n_angles"], endpoint=False)
    hp_plus, hp_minus = halfplane_slopes(reaction.alpha, reaction.r)

    drift_reports = []
    for i, (disc, annulus) in enumerate(problems):
        plus = solve_phi_plus(disc)
        minus = solve_phi_minus(annulus)
        suffix = "" if i == 0 else f"_{i:04d}"
        files = {
            "phi_plus": f"phi_plus{suffix}.csv",
            "phi_minus": f"phi_minus{suffix}.csv",
            "normals": f"normals{suffix}.csv",
        }
        write_snapshot(plus.solution, outdir / files["phi_plus"])
        write_snapshot(minus.solution, outdir / files["phi_minus"])
        _write_rows(
            outdir / files["normals"],
            "angle,slope_plus,slope_minus",
            (
                (
                    a,
                    boundary_normal_derivative(plus, a),
                    boundary_normal_derivative(minus, a),
                )
                for a in angles
            ),
        )
        drift_reports.append(
            {
                "drift": list(disc.drift),
                "plus": _report_stats(plus),
                "minus": _report_stats(minus),
                "files": files,
            }
        )

    report = {
        "command": "steady",
        "config": cs,
        "radius": s["radius"],
        "alpha": reaction.alpha,
        "r": reaction.r,
        "halfplane_slopes": {"plus": hp_plus, "minus": hp_minus},
        "drifts": drift_reports,
    }
    _write_json(outdir / "report.json", report)
    print(f"steady: radius {s['radius']}, {len(drift_reports)} drift(s) -> {outdir}")
    return 0


def _load_density_snapshots(run_dir: Path) -> list[Path]:
    files = sorted(run_dir.glob("snapshot_*.csv"))
    if not files:
        raise ConfigError(
            [f"[subsolution] density_run: no snapshot_*.csv files in {run_dir}"]
        )
    return files


def _cmd_subsolution(ns, cv, cs, pending) -> int:
    errors = list(pending)
    params = _model_params(cv, errors)
    spec = _grid_spec(cv, errors)
    if params is not None:
        if not params.bump_radius > 0.0:
            errors.append("[model] bump_radius: the bump construction needs a positive radius")
        if not params.horizon > 0.0:
            errors.append("[model] horizon: the bump construction needs a positive duration")
    _flush(errors)

    sub = cv["subsolution"]
    times = sub["snapshot_times"]
    if times is None:
        T = params.horizon
        times = [0.0, 0.25 * T, 0.5 * T, 0.75 * T, T]

    outdir = _outdir(ns, "subsolution-out")
    _write_effective(outdir, "subsolution", cs)

    seeds = solve_seeds(params, h=sub["frame_h"], r_two=sub["r_two"])
    states = march_subsolution(params, seeds, spec, times, dt=sub["dt"])

    margins = [verify_ordering(state) for state in states]
    _write_rows(
        outdir / "ordering.csv",
        "time,margin",
        ((state.time, margin) for state, margin in zip(states, margins)),
    )

    state_entries = []
    for i, state in enumerate(states):
        files = {
            "w": f"w_{i:04d}.csv",
            "v_plus": f"vplus_{i:04d}.csv",
            "v_minus": f"vminus_{i:04d}.csv",
        }
        write_snapshot(state.w, outdir / files["w"])
        write_snapshot(state.v_plus, outdir / files["v_plus"])
        write_snapshot(state.v_minus, outdir / files["v_minus"])
        state_entries.append(
            {
                "index": i,
                "time": state.time,
                "leg": state.leg,
                "radius": state.radius,
                "plateau": state.plateau,
                "center_x": state.center_x,
                "center_theta": state.center_theta,
                "margin": margins[i],
                "files": files,
            }
        )

    domination = None
    if sub["density_run"] is not None:
        tol = 1e-9 * max(1.0, params.horizon)
        unmatched = dict(enumerate(states))
        excess_rows: dict[int, tuple[float, float]] = {}
        for path in _load_density_snapshots(Path(sub["density_run"])):
            density = read_snapshot(path)
            hits = [
                i for i, st in unmatched.items() if abs(st.time - density.time) <= tol
            ]
            for i in hits:
                state = unmatched.pop(i)
                excess = verify_domination(params, [state], [density])
                excess_rows[i] = (state.time, excess)
        if unmatched:
            raise ConfigError(
                [
                    f"[subsolution] density_run: no density snapshot at t={st.time}"
                    for st in unmatched.values()
                ]
            )
        rows = [excess_rows[i] for i in sorted(excess_rows)]
        _write_rows(outdir / "domination.csv", "time,max_excess", rows)
        domination = {
            "max_excess": max(e for _, e in rows),
            "rows": [{"time": t, "max_excess": e} for t, e in rows],
        }

    traj = Trajectory.from_params(params)
    summary = {
        "command": "subsolution",
        "config": cs,
        "trajectory": {
            "x_hold": traj.x_hold,
            "theta_start": traj.theta_start,
            "theta_mid": traj.theta_mid,
            "run_rate": traj.run_rate,
            "spreading_constant": (
                spreading_constant(params.traj_speed)
                if params.traj_speed > 0.0
                else None
            ),
        },
        "seeds": {
            "plus_one": _report_stats(seeds.plus_one),
            "minus_one": _report_stats(seeds.minus_one),
            "plus_two": _report_stats(seeds.plus_two),
            "minus_two": _report_stats(seeds.minus_two),
        },
        "states": state_entries,
        "min_margin": min(margins),
        "domination": domination,
    }
    _write_json(outdir / "summary.json", summary)
    line = f"subsolution: {len(states)} state(s), min margin {min(margins):.6g}"
    if domination is not None:
        line += f", max excess {domination['max_excess']:.6g}"
    print(line + f" -> {outdir}")
    return 0


def _cmd_analyze(ns, cv, cs, pending) -> int:
    errors = list(pending)
    a = cv["analyze"]
    run_dir = None
    if a["run"] is None:
        errors.append("[analyze] run: give the run directory (--run DIR)")
    else:
        run_dir = Path(a["run"])
        if not run_dir.is_dir():
            errors.append(f"[analyze] run: {run_dir} is not a directory")
    _flush(errors)

    run_level = None
    summary_path = run_dir / "summary.json"
    if summary_path.is_file():
        try:
            run_level = json.loads(summary_path.read_text(encoding="ascii"))["run"]["level"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(
                [f"[analyze] run: cannot read the level from {summary_path} ({exc})"]
            ) from None

    m = a["m"]
    reuse_fronts = m is None or (run_level is not None and abs(m - run_level) <= 1e-12)
    if reuse_fronts:
        fronts_path = run_dir / "fronts.csv"
        if not fronts_path.is_file():
            raise ConfigError([f"[analyze] run: no fronts.csv in {run_dir}"])
        level = run_level if run_level is not None else (m if m is not None else float("nan"))
        series = read_fronts(fronts_path, level=level)
        source = "fronts.csv"
    else:
        files = sorted(run_dir.glob("snapshot_*.csv"))
        if not files:
            raise ConfigError(
                [
                    f"[analyze] m={m} differs from the run level; "
                    f"recomputing fronts needs snapshot_*.csv files in {run_dir}"
                ]
            )
        fields = [read_snapshot(path) for path in files]
        series = FrontSeries(
            np.array([f.time for f in fields]),
            np.array([front_x(f, m) for f in fields]),
            np.array([front_theta(f, m) for f in fields]),
            level=m,
        )
        source = "snapshots"

    fit = fit_exponent(series, window=a["window"], min_position=a["min_position"])
    outdir = _outdir(ns, str(run_dir))
    _write_effective(outdir, "analyze", cs)
    payload = {
        "command": "analyze",
        "config": cs,
        "run": str(run_dir),
        "source": source,
        "level": series.level,
        "window": a["window"],
        "min_position": a["min_position"],
        "p": fit.p,
        "A": fit.A,
        "residual": fit.residual,
        "t_lo": fit.t_lo,
        "t_hi": fit.t_hi,
        "n_samples": fit.n_samples,
        "gamma_hat": series.gamma_hat,
    }
    _write_json(outdir / "fit.json", payload)
    print(
        f"analyze: p={fit.p:.4f} A={fit.A:.4g} residual={fit.residual:.3g} "
        f"({source}, {fit.n_samples} samples) -> {outdir / 'fit.json'}"
    )
    return 0


def _bench_phases(stepper: _Stepper, values: np.ndarray, dt: float, steps: int) -> dict:
    """Per-phase seconds/step, measured on the production kernels."""
    phases: dict[str, float] = {}
    if stepper.scheme == "explicit-euler":
        start = time.perf_counter()
        for _ in range(steps):
            stepper._diffusion(values)
        phases["diffusion"] = (time.perf_counter() - start) / steps
        if stepper.reaction is not None:
            start = time.perf_counter()
            for _ in range(steps):
                stepper.reaction_term(values)
            phases["reaction"] = (time.perf_counter() - start) / steps
    else:
        ab_x, ab_t = stepper._bands_for(dt)
        flat = values.reshape(-1)
        start = time.perf_counter()
        for _ in range(steps):
            solve_banded((1, 1), ab_x, flat)
        phases["x_lines"] = (time.perf_counter() - start) / steps
        start = time.perf_counter()
        for _ in range(steps):
            solve_banded((1, 1), ab_t, values)
        phases["theta_lines"] = (time.perf_counter() - start) / steps
        if stepper.reaction is not None:
            scratch = values.copy()
            total = 0.0
            for _ in range(steps):
                start = time.perf_counter()
                stepper._half_reaction(scratch, 0.5 * dt)
                total += time.perf_counter() - start
                scratch[:] = values
            phases["reaction"] = 2.0 * total / steps
    return phases


def _cmd_bench(ns, cv, cs, pending) -> int:
    errors = list(pending)
    params = _model_params(cv, errors)
    spec = _grid_spec(cv, errors)
    config = _evolve_config(cv, errors)
    reaction = _reaction(cv, errors)
    b = cv["bench"]
    if b["steps"] < 1:
        errors.append(f"[bench] steps: must be >= 1, got {b['steps']}")
    if b["repeats"] < 1:
        errors.append(f"[bench] repeats: must be >= 1, got {b['repeats']}")
    _flush(errors)

    if config.scheme == "explicit-euler":
        limit = cfl_dt(spec, reaction=reaction)
        dt = config.dt if config.dt is not None else limit
        if dt > limit * (1.0 + 1e-12):
            raise ConfigError(
                [f"[evolve] dt: {dt} violates the explicit stability limit {limit}"]
            )
    else:
        dt = config.dt if config.dt is not None else 0.1

    initial = initial_field(spec, params, config)
    stepper = _Stepper(spec, reaction, config.scheme, config.workers)
    try:
        values = initial.values.copy()
        for _ in range(b["steps"]):
            stepper.step(values, dt)
        checksum = hashlib.sha256(values.tobytes()).hexdigest()

        repeat_seconds = []
        for _ in range(b["repeats"]):
            values = initial.values.copy()
            start = time.perf_counter()
            for _ in range(b["steps"]):
                stepper.step(values, dt)
            repeat_seconds.append(time.perf_counter() - start)
        phases = _bench_phases(stepper, initial.values.copy(), dt, b["steps"])
    finally:
        stepper.close()

    cells = spec.nx * spec.ntheta
    seconds_per_step = min(repeat_seconds) / b["steps"]
    payload = {
        "command": "bench",
        "config": cs,
        "scheme": config.scheme,
        "workers": config.workers,
        "nx": spec.nx,
        "ntheta": spec.ntheta,
        "cells": cells,
        "dt": dt,
        "steps": b["steps"],
        "repeats": b["repeats"],
        "repeat_seconds": repeat_seconds,
        "seconds_per_step": seconds_per_step,
        "cells_per_second": cells / seconds_per_step,
        "phases": phases,
        "checksum": checksum,
    }
    outdir = _outdir(ns, "bench-out")
    _write_effective(outdir, "bench", cs)
    _write_json(outdir / "bench.json", payload)
    print(
        f"bench: {config.scheme} on {cells} cells, "
        f"{seconds_per_step * 1e3:.3f} ms/step (min of {b['repeats']}), "
        f"{cells / seconds_per_step:.3g} cells/s, checksum {checksum[:12]}"
    )
    return 0


# --------------------------------------------------------------------------
# parser and entry point
# --------------------------------------------------------------------------


_COMMANDS = {
    "simulate": (
        ("model", "grid", "reaction", "evolve"),
        "simulate-out",
        _cmd_simulate,
        "integrate the density equation and write snapshots, fronts, summary",
    ),
    "steady": (
        ("model", "steady"),
        "steady-out",
        _cmd_steady,
        "solve the disc/annulus frame states and write normals and a report",
    ),
    "subsolution": (
        ("model", "grid", "subsolution"),
        "subsolution-out",
        _cmd_subsolution,
        "march the moving bump and write ordering/domination checks",
    ),
    "analyze": (
        ("analyze",),
        None,
        _cmd_analyze,
        "fit the front series of an existing run and write fit.json",
    ),
    "bench": (
        ("model", "grid", "reaction", "evolve", "bench"),
        "bench-out",
        _cmd_bench,
        "time the stepping kernels and write bench.json",
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="canetoads",
        description="Front acceleration simulator and verification toolkit.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (sections, default_out, func, help_text) in _COMMANDS.items():
        sub = subparsers.add_parser(
            name,
            help=help_text,
            description=f"{help_text}. Flags override config-file keys; every "
            "key's default is shown below.",
        )
        sub.add_argument(
            "--config", metavar="FILE",
            help="key = value configuration file with [section] headers",
        )
        sub.add_argument(
            "--out", metavar="DIR",
            help=f"output directory (default: {default_out or 'the run directory'})",
        )
        for section in sections:
            for key, kspec in _SPEC[section].items():
                flag = kspec.flag or key.replace("_", "-")
                sub.add_argument(
                    f"--{flag}",
                    dest=f"{section}.{key}",
                    metavar="V",
                    help=f"[{section}] {kspec.help} (default: {kspec.render(kspec.default)})",
                )
        sub.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        values, strings, pending = _resolve_config(ns)
        return ns.func(ns, values, strings, pending)
    except ConfigError as exc:
        for message in exc.messages:
            print(f"config error: {message}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TruncationError as exc:
        print(f"truncation abort: {exc}", file=sys.stderr)
        return 4
    except (InstabilityError, SteadyConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
