"""Time integration of the local and nonlocal phase-plane Cauchy problems.

Two schemes share the spatial operators:

* explicit-euler: forward Euler at (or below) the CFL step.  The stencil is
  applied in row slabs that may run on a thread pool; output rows are
  disjoint and each is computed by the same expression, so results are
  bitwise identical for any worker count.
* imex: Strang-split reaction/diffusion.  Reaction half-steps use Heun's
  method (the split is only second order if each piece is), diffusion is
  backward Euler per direction: one stacked banded solve over all x-lines
  (block tridiagonal, seams zeroed) and one multi-rhs tridiagonal solve over
  theta-lines.  Unconditionally stable in dt, so the step is set by accuracy.

Both schemes keep constants exactly fixed under the diffusion part (mirror
ghosts make every stencil row sum to zero, and the implicit matrices have
unit row sums), which is what makes the homogeneous-data ODE reductions in
the tests exact reductions and keeps mass drift at roundoff.

States in [0,1] stay there for the local reactions; a post-step check
enforces that within 1e-10 and treats anything worse as an instability.
The nonlocal variant has no a priori upper bound, so only the lower bound
and finiteness are enforced there.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .fronts import FrontSeries, fit_exponent, front_theta, front_x
from .grid import Field, GridSpec, TruncationError, read_snapshot, truncation_diagnostic
from .model import (
    ModelParams,
    NonlocalBistableRate,
    Reaction,
    eval_reaction,
    nonlocal_rate,
)
from .operators import cfl_dt, diffusion_rhs_slab

__all__ = [
    "EvolveConfig",
    "RunResult",
    "InstabilityError",
    "initial_field",
    "step_explicit",
    "step_imex",
    "run",
]

RANGE_SLACK = 1e-10

SCHEMES = ("explicit-euler", "imex")
INITIAL_KINDS = ("indicator", "indicator-smoothed", "file")
TRUNCATION_POLICIES = ("abort", "warn")


class InstabilityError(RuntimeError):
    """The state left its invariant range or went non-finite."""


@dataclass
class EvolveConfig:
    """Run controls; the physics lives in ModelParams and the reaction."""

    t_end: float
    snapshot_every: float
    scheme: str = "explicit-euler"
    dt: float | None = None
    initial: str = "indicator"
    smooth_width: float = 0.0
    initial_file: str | None = None
    initial_scale: float = 1.0
    truncation_policy: str = "abort"
    fit_window: float = 0.5
    track_fronts: bool = True
    store_snapshots: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.initial not in INITIAL_KINDS:
            raise ValueError(f"initial must be one of {INITIAL_KINDS}, got {self.initial!r}")
        if self.truncation_policy not in TRUNCATION_POLICIES:
            raise ValueError(
                f"truncation_policy must be one of {TRUNCATION_POLICIES}, "
                f"got {self.truncation_policy!r}"
            )
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if not self.snapshot_every > 0.0:
            raise ValueError(f"snapshot_every must be positive, got {self.snapshot_every}")
        if self.dt is not None:
            if not self.dt > 0.0:
                raise ValueError(f"dt must be positive, got {self.dt}")
            if self.snapshot_every < self.dt:
                raise ValueError("snapshot_every must be at least dt")
        if self.initial == "indicator-smoothed" and not self.smooth_width > 0.0:
            raise ValueError("indicator-smoothed needs smooth_width > 0")
        if self.initial == "file" and not self.initial_file:
            raise ValueError("initial 'file' needs initial_file")
        if not self.initial_scale > 0.0:
            raise ValueError(f"initial_scale must be positive, got {self.initial_scale}")
        if not 0.0 < self.fit_window <= 1.0:
            raise ValueError(f"fit_window must lie in (0,1], got {self.fit_window}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class RunResult:
    snapshots: list
    fronts: FrontSeries | None
    summary: dict


def initial_field(spec: GridSpec, params: ModelParams, config: EvolveConfig) -> Field:
    """Build the starting state: indicator block, smoothed block, or a file."""
    if config.initial == "file":
        loaded = read_snapshot(config.initial_file)
        if loaded.spec != spec:
            raise ValueError(
                f"initial file grid {loaded.spec} does not match the run grid {spec}"
            )
        return Field(spec, loaded.values * config.initial_scale, 0.0)

    theta_edge = (1.0 + params.lam) * params.theta_min
    if theta_edge > spec.theta_max:
        raise ValueError(
            f"initial trait band reaches theta={theta_edge}, beyond theta_max={spec.theta_max}"
        )
    if spec.x_min >= 0.0:
        raise ValueError("indicator data needs x_min < 0 so the occupied block is on the grid")

    x = spec.x_coords()[None, :]
    th = spec.theta_coords()[:, None]
    if config.initial == "indicator":
        tiny_x = 1e-12 * (spec.x_max - spec.x_min)
        tiny_t = 1e-12 * (spec.theta_max - spec.theta_min)
        ux = np.where(x < -tiny_x, 1.0, np.where(x > tiny_x, 0.0, 0.5))
        ut = np.where(
            th < theta_edge - tiny_t, 1.0, np.where(th > theta_edge + tiny_t, 0.0, 0.5)
        )
    else:
        w = config.smooth_width
        ux = np.clip(0.5 - x / w, 0.0, 1.0)
        ut = np.clip(0.5 - (th - theta_edge) / w, 0.0, 1.0)
    return Field(spec, config.initial_scale * (ux * ut), 0.0)


def _check_state(values: np.ndarray, reaction: Reaction | None, t: float) -> None:
    mn = float(values.min())
    mx = float(values.max())
    if not (np.isfinite(mn) and np.isfinite(mx)):
        raise InstabilityError(f"non-finite state at t={t}")
    if reaction is None:
        return
    if mn < -RANGE_SLACK:
        raise InstabilityError(f"state fell below 0 at t={t}: min={mn}")
    if not isinstance(reaction, NonlocalBistableRate) and mx > 1.0 + RANGE_SLACK:
        raise InstabilityError(f"state exceeded 1 at t={t}: max={mx}")


class _Stepper:
    """Owns scratch storage, banded factors per dt, and the slab pool."""

    def __init__(self, spec: GridSpec, reaction: Reaction | None, scheme: str, workers: int):
        self.spec = spec
        self.reaction = reaction
        self.scheme = scheme
        self.theta = spec.theta_coords()
        self.scratch = np.empty(spec.shape)
        self._bands: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        self._pool = None
        self._slabs: list[tuple[int, int]] = [(0, spec.ntheta)]
        if scheme == "explicit-euler" and workers > 1:
            nslab = min(workers, spec.ntheta)
            edges = np.linspace(0, spec.ntheta, nslab + 1).astype(int)
            self._slabs = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
            self._pool = ThreadPoolExecutor(max_workers=nslab)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def reaction_term(self, values: np.ndarray) -> np.ndarray | None:
        if self.reaction is None:
            return None
        if isinstance(self.reaction, NonlocalBistableRate):
            rho = np.trapezoid(values, dx=self.spec.dtheta, axis=0)
            return values * nonlocal_rate(self.reaction.alpha, rho)[None, :]
        return eval_reaction(self.reaction, values)

    def step(self, values: np.ndarray, dt: float) -> None:
        if self.scheme == "explicit-euler":
            self._step_explicit(values, dt)
        else:
            self._step_imex(values, dt)

    def _diffusion(self, values: np.ndarray) -> np.ndarray:
        spec = self.spec
        if self._pool is None:
            diffusion_rhs_slab(
                values, self.theta, spec.dx, spec.dtheta, 0, spec.ntheta, self.scratch
            )
        else:
            futures = [
                self._pool.submit(
                    diffusion_rhs_slab,
                    values,
                    self.theta,
                    spec.dx,
                    spec.dtheta,
                    lo,
                    hi,
                    self.scratch,
                )
                for lo, hi in self._slabs
            ]
            for fut in futures:
                fut.result()
        return self.scratch

    def _step_explicit(self, values: np.ndarray, dt: float) -> None:
        diff = self._diffusion(values)
        f = self.reaction_term(values)
        if f is None:
            values += dt * diff
        else:
            values += dt * (diff + f)

    def _half_reaction(self, values: np.ndarray, h: float) -> None:
        if self.reaction is None:
            return
        k1 = self.reaction_term(values)
        k2 = self.reaction_term(values + h * k1)
        values += (0.5 * h) * (k1 + k2)

    def _step_imex(self, values: np.ndarray, dt: float) -> None:
        ab_x, ab_t = self._bands_for(dt)
        self._half_reaction(values, 0.5 * dt)
        values[:] = solve_banded((1, 1), ab_x, values.reshape(-1)).reshape(self.spec.shape)
        values[:] = solve_banded((1, 1), ab_t, values)
        self._half_reaction(values, 0.5 * dt)

    def _bands_for(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        cached = self._bands.get(dt)
        if cached is not None:
            return cached
        spec = self.spec
        nx, ntheta = spec.nx, spec.ntheta

        # all x-lines stacked into one block-tridiagonal system; the Neumann
        # closure doubles the first off-diagonal, seams between blocks are cut
        a = (dt / spec.dx ** 2) * self.theta
        main = np.repeat(1.0 + 2.0 * a, nx)
        upper = np.repeat(-a, nx)
        lower = np.repeat(-a, nx)
        uview = upper.reshape(ntheta, nx)
        lview = lower.reshape(ntheta, nx)
        uview[:, 0] = 0.0
        uview[:, 1] = -2.0 * a
        lview[:, -1] = 0.0
        lview[:, -2] = -2.0 * a
        ab_x = np.vstack([upper, main, lower])

        b = dt / spec.dtheta ** 2
        mt = np.full(ntheta, 1.0 + 2.0 * b)
        ut = np.full(ntheta, -b)
        lt = np.full(ntheta, -b)
        ut[0] = 0.0
        ut[1] = -2.0 * b
        lt[-1] = 0.0
        lt[-2] = -2.0 * b
        ab_t = np.vstack([ut, mt, lt])

        self._bands[dt] = (ab_x, ab_t)
        return ab_x, ab_t


def step_explicit(
    state: Field, dt: float, reaction: Reaction | None = None, workers: int = 1
) -> Field:
    """One forward Euler step; dt must respect the CFL bound."""
    limit = cfl_dt(state.spec, reaction=reaction)
    if dt > limit * (1.0 + 1e-12):
        raise ValueError(f"dt={dt} violates the CFL bound {limit}")
    stepper = _Stepper(state.spec, reaction, "explicit-euler", workers)
    try:
        values = state.values.copy()
        stepper.step(values, dt)
    finally:
        stepper.close()
    _check_state(values, reaction, state.time + dt)
    return Field(state.spec, values, state.time + dt)


def step_imex(state: Field, dt: float, reaction: Reaction | None = None) -> Field:
    """One Strang-split step: half reaction, x-lines, theta-lines, half reaction."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    stepper = _Stepper(state.spec, reaction, "imex", 1)
    values = state.values.copy()
    stepper.step(values, dt)
    _check_state(values, reaction, state.time + dt)
    return Field(state.spec, values, state.time + dt)


def _resolve_dt(spec: GridSpec, config: EvolveConfig, reaction: Reaction | None) -> float:
    if config.scheme == "explicit-euler":
        limit = cfl_dt(spec, reaction=reaction)
        if config.dt is None:
            return min(limit, config.snapshot_every)
        if config.dt > limit * (1.0 + 1e-12):
            raise ValueError(f"dt={config.dt} violates the CFL bound {limit}")
        return config.dt
    if config.dt is None:
        raise ValueError("the imex scheme needs an explicit dt")
    return config.dt


def run(
    spec: GridSpec,
    config: EvolveConfig,
    params: ModelParams,
    reaction: Reaction | None,
) -> RunResult:
    """Integrate to t_end, snapshotting and measuring fronts on the way.

    Returns every requested snapshot, the front series at params.level, and
    a summary with the power-law fit (when enough of the front is resolved),
    gamma_hat, truncation warnings, and wall-clock timings.
    """
    t_setup = time.perf_counter()
    state = initial_field(spec, params, config)
    dt = _resolve_dt(spec, config, reaction)
    level = params.level

    snap_times = [0.0]
    n_legs = int(np.floor(config.t_end / config.snapshot_every + 1e-9))
    snap_times += [k * config.snapshot_every for k in range(1, n_legs + 1)]
    if config.t_end - n_legs * config.snapshot_every > 1e-9 * max(config.t_end, 1.0):
        snap_times.append(config.t_end)

    snapshots: list[Field] = []
    fx: list[float] = []
    ft: list[float] = []
    warnings: list[str] = []
    seen_warnings: set[str] = set()
    n_steps = 0
    stepping = 0.0

    stepper = _Stepper(spec, reaction, config.scheme, config.workers)
    values = state.values
    try:
        t_loop = time.perf_counter()
        setup_time = t_loop - t_setup
        for i_snap, t_snap in enumerate(snap_times):
            if i_snap > 0:
                span = t_snap - snap_times[i_snap - 1]
                n_full = int(np.floor(span / dt + 1e-9))
                rem = span - n_full * dt
                for _ in range(n_full):
                    stepper.step(values, dt)
                    n_steps += 1
                if rem > 1e-9 * dt:
                    stepper.step(values, rem)
                    n_steps += 1
                _check_state(values, reaction, t_snap)

            snap = Field(spec, values.copy(), t_snap)
            if config.store_snapshots or i_snap == len(snap_times) - 1:
                snapshots.append(snap)
            if config.track_fronts:
                fx.append(front_x(snap, level))
                ft.append(front_theta(snap, level))
            msg = truncation_diagnostic(snap, level)
            if msg is not None:
                if config.truncation_policy == "abort":
                    raise TruncationError(msg)
                body = msg.split(": ", 1)[-1]
                if body not in seen_warnings:
                    seen_warnings.add(body)
                    warnings.append(msg)
        stepping = time.perf_counter() - t_loop
    finally:
        stepper.close()

    t_analysis = time.perf_counter()
    series = None
    fit = None
    if config.track_fronts:
        series = FrontSeries(np.asarray(snap_times), np.asarray(fx), np.asarray(ft), level)
        try:
            fit = fit_exponent(series, config.fit_window, min_position=10.0 * spec.dx)
        except ValueError:
            fit = None
    analysis = time.perf_counter() - t_analysis

    summary = {
        "scheme": config.scheme,
        "dt": dt,
        "n_steps": n_steps,
        "t_end": config.t_end,
        "snapshot_every": config.snapshot_every,
        "level": level,
        "workers": config.workers,
        "snapshot_times": list(snap_times),
        "gamma_hat": series.gamma_hat if series is not None else float("nan"),
        "fit": None
        if fit is None
        else {
            "p": fit.p,
            "A": fit.A,
            "residual": fit.residual,
            "t_lo": fit.t_lo,
            "t_hi": fit.t_hi,
            "n_samples": fit.n_samples,
        },
        "truncation_warnings": warnings,
        "state_range": {"min": float(values.min()), "max": float(values.max())},
        "timings": {
            "setup": setup_time,
            "stepping": stepping,
            "analysis": analysis,
            "total": time.perf_counter() - t_setup,
        },
    }
    return RunResult(snapshots, series, summary)
