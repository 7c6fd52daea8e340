"""Two-leg reference trajectory and the travelling-bump comparison state.

The bump construction rides a piecewise path through (space, trait): on the
first leg the centre holds its space position and climbs the trait axis at
speed c; on the second it holds the halfway trait and runs outward in space
at a constant rate.  In the frame centred on the path, with space compressed
by sqrt(trait), the ring-pinned steady profiles phi+- of the steady module
become initial data for a slowly forced parabolic pair (v+, v-); this module
marches that pair with an explicit scheme, reassembles the bump

    w = (alpha + v+) inside the ring, (alpha - v-) on the surrounding
    annulus, 0 outside,

on the physical grid at requested times, and checks the two inequalities
that make w a valid lower comparison state: the normal-derivative ordering
|dn v+| >= |dn v-| on the gluing ring, and domination w <= u by the
simulated density.  At the halfway time the march restarts from fresh
steady profiles at half the ring radius and a lower plateau, so two states
are emitted there: the end of the first leg and the start of the second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import Field, GridSpec, TruncationError, sample
from .model import ModelParams, ModifiedBistable, lipschitz_bound, stage_two_plateau
from .operators import FrameCoeffs, rhs_frame
from .steady import (
    SteadyProblem,
    SteadyReport,
    ring_normal_slope,
    solve_phi_minus,
    solve_phi_plus,
)

__all__ = [
    "Trajectory",
    "SubsolutionSeeds",
    "SubsolutionState",
    "eval_trajectory",
    "spreading_constant",
    "solve_seeds",
    "march_subsolution",
    "verify_ordering",
    "verify_domination",
]

# Numerical slack allowed on the pointwise range of assembled states: the
# explicit reaction substep can overshoot the invariant interval by an
# O(dt^2) hair before the restoring sign pulls it back.
_RANGE_SLACK = 1e-8


@dataclass(frozen=True)
class Trajectory:
    """Piecewise centre path: trait climb at speed c, then space run.

    On [0, T/2] the centre holds x = -lam*theta_min/4 and climbs the trait
    axis linearly from (1 + 3*lam/4)*theta_min; on [T/2, T] it holds the
    halfway trait theta_mid and moves in x at the constant rate
    c*T/sqrt(theta_mid).  Both coordinates are nondecreasing, and both legs
    agree at T/2 by construction.
    """

    speed: float
    lam: float
    theta_min: float
    horizon: float

    def __post_init__(self) -> None:
        if self.speed < 0.0:
            raise ValueError(f"speed must be nonnegative, got {self.speed}")
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.theta_min > 0.0:
            raise ValueError(f"theta_min must be positive, got {self.theta_min}")
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    @property
    def x_hold(self) -> float:
        """Space position held throughout the first leg."""
        return -0.25 * self.lam * self.theta_min

    @property
    def theta_start(self) -> float:
        """Trait centre at t = 0, three quarters up the occupied band."""
        return (1.0 + 0.75 * self.lam) * self.theta_min

    @property
    def theta_mid(self) -> float:
        """Trait centre reached at T/2 and held for the whole second leg."""
        return 0.5 * self.speed * self.horizon + self.theta_start

    @property
    def run_rate(self) -> float:
        """Constant x-velocity c*T/sqrt(theta_mid) of the second leg."""
        return self.speed * self.horizon / math.sqrt(self.theta_mid)

    @classmethod
    def from_params(cls, params: ModelParams) -> "Trajectory":
        return cls(params.traj_speed, params.lam, params.theta_min, params.horizon)


def eval_trajectory(traj: Trajectory, t: float) -> tuple[float, float, float, float]:
    """Centre position and velocity (X, Theta, Xdot, Thetadot) at time t.

    Closed form on both legs.  At the handover instant t = T/2 the returned
    velocity is the second leg's one-sided value: Thetadot drops from c to 0
    and Xdot jumps from 0 to the run rate, while the position is continuous.
    """
    T = traj.horizon
    if not 0.0 <= t <= T:
        raise ValueError(f"t={t} lies outside the trajectory window [0, {T}]")
    if t < 0.5 * T:
        return (traj.x_hold, traj.speed * t + traj.theta_start, 0.0, traj.speed)
    x = traj.x_hold + traj.speed * (t - 0.5 * T) * T / math.sqrt(traj.theta_mid)
    return (x, traj.theta_mid, traj.run_rate, 0.0)


def spreading_constant(c: float) -> float:
    """Predicted limit of X(T)/T^(3/2) for the two-leg path: sqrt(c/2)."""
    if not c > 0.0:
        raise ValueError(f"need a positive trait-climb speed, got {c}")
    return math.sqrt(0.5 * c)


@dataclass(frozen=True)
class SubsolutionSeeds:
    """Converged steady profiles seeding the two marching legs.

    Each leg gets a disc report (the + state inside the gluing ring) and an
    annulus report (the - state outside it): ring radius Lambda with the
    primary plateau on the first leg, Lambda/2 with the restart plateau on
    the second.  All four must share one grid spacing so their node sets
    align with the marching frame grid.
    """

    plus_one: SteadyReport
    minus_one: SteadyReport
    plus_two: SteadyReport
    minus_two: SteadyReport


def solve_seeds(
    params: ModelParams,
    h: float = 0.25,
    r_two: float | None = None,
    **steady_kwargs,
) -> SubsolutionSeeds:
    """Solve the four ring-pinned profiles seeding march_subsolution.

    Each leg's profiles are solved with that leg's constant frame drift:
    (0, c) while the centre climbs the trait axis, (c*T/theta_mid, 0) while
    it runs in space.  The restart plateau defaults to the midpoint rule of
    stage_two_plateau; extra keyword arguments go to SteadyProblem.
    """
    if not params.bump_radius > 0.0:
        raise ValueError("params.bump_radius must be positive to build seeds")
    traj = Trajectory.from_params(params)
    r1 = params.r
    r2 = stage_two_plateau(params.alpha, params.level) if r_two is None else r_two
    drift1 = (0.0, params.traj_speed)
    drift2 = (params.traj_speed * params.horizon / traj.theta_mid, 0.0)

    def pair(radius: float, r: float, drift: tuple) -> tuple[SteadyReport, SteadyReport]:
        reaction = ModifiedBistable(params.alpha, r)
        plus = solve_phi_plus(
            SteadyProblem(
                kind="disc", radius=radius, reaction=reaction, drift=drift, h=h, **steady_kwargs
            )
        )
        minus = solve_phi_minus(
            SteadyProblem(
                kind="annulus", radius=radius, reaction=reaction, drift=drift, h=h, **steady_kwargs
            )
        )
        return plus, minus

    plus_one, minus_one = pair(params.bump_radius, r1, drift1)
    plus_two, minus_two = pair(0.5 * params.bump_radius, r2, drift2)
    return SubsolutionSeeds(plus_one, minus_one, plus_two, minus_two)


@dataclass(frozen=True)
class SubsolutionState:
    """Travelling-bump comparison state at one instant.

    v_plus and v_minus live on the leg's frame grid (origin-centred, axes
    y = (x - X)/sqrt(Theta) and eta = theta - Theta); w is their assembly on
    the physical grid, zero outside the bump, alpha + v+ inside the gluing
    ring of the stored radius, alpha - v- on the annulus around it.
    """

    time: float
    leg: int
    radius: float
    plateau: float
    center_x: float
    center_theta: float
    v_plus: Field
    v_minus: Field
    w: Field

    def __post_init__(self) -> None:
        if self.leg not in (1, 2):
            raise ValueError(f"leg must be 1 or 2, got {self.leg}")
        if not self.radius > 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        lo = float(self.w.values.min())
        hi = float(self.w.values.max())
        if lo < -_RANGE_SLACK or hi > self.plateau + _RANGE_SLACK:
            raise ValueError(
                f"assembled bump leaves [0, {self.plateau}]: range [{lo}, {hi}]"
            )


def _embed(src: Field, dst_spec: GridSpec, fill: float) -> np.ndarray:
    """Copy a centred steady grid into a larger centred frame grid.

    Both grids carry nodes at integer multiples of one spacing around the
    shared origin, so the transfer is an exact index shift; anything the
    source does not cover takes the Dirichlet value `fill`.
    """
    if (
        abs(src.spec.dx - dst_spec.dx) > 1e-12 * dst_spec.dx
        or abs(src.spec.dtheta - dst_spec.dtheta) > 1e-12 * dst_spec.dtheta
    ):
        raise ValueError("seed grid spacing differs from the marching frame grid")
    ox = (src.spec.x_min - dst_spec.x_min) / dst_spec.dx
    oe = (src.spec.theta_min - dst_spec.theta_min) / dst_spec.dtheta
    ix, ie = round(ox), round(oe)
    if abs(ox - ix) > 1e-9 or abs(oe - ie) > 1e-9:
        raise ValueError("seed grid nodes do not align with the marching frame grid")
    if ix < 0 or ie < 0 or ix + src.spec.nx > dst_spec.nx or ie + src.spec.ntheta > dst_spec.ntheta:
        raise ValueError("seed grid extends beyond the marching frame grid")
    out = np.full(dst_spec.shape, fill, dtype=float)
    out[ie : ie + src.spec.ntheta, ix : ix + src.spec.nx] = src.values
    return out


def _interior_masks(spec: GridSpec, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Strictly-inside-region masks for the + (disc) and - (annulus) fields."""
    ys = spec.x_coords()[None, :]
    etas = spec.theta_coords()[:, None]
    s = np.hypot(ys, etas)
    return s < radius, (s > radius) & (s < 2.0 * radius)


def _leg_coeffs(traj: Trajectory, leg: int) -> FrameCoeffs:
    """Frame drift/diffusion coefficients of one leg.

    The frame change x -> y = (x - X)/sqrt(Theta), theta -> eta = theta -
    Theta turns the physical operator into (1 + eta/Theta) d_yy + d_etaeta
    plus the drifts c1 = Xdot/sqrt(Theta) + y*Thetadot/(2 Theta) in y and
    c2 = Thetadot in eta.
    """
    if leg == 1:
        c = traj.speed
        th0 = traj.theta_start

        def c1(y, t):
            return np.asarray(y, dtype=float) * (0.5 * c / (th0 + c * t))

        def d(eta, t):
            return 1.0 + np.asarray(eta, dtype=float) / (th0 + c * t)

        return FrameCoeffs(c1=c1, c2=c, d=d)

    thm = traj.theta_mid
    rate = traj.speed * traj.horizon / thm

    def c1_run(y, t):
        return np.full_like(np.asarray(y, dtype=float), rate)

    def d_run(eta, t):
        return 1.0 + np.asarray(eta, dtype=float) / thm

    return FrameCoeffs(c1=c1_run, c2=0.0, d=d_run)


def _stable_dt(traj: Trajectory, leg: int, spec: GridSpec, reaction: ModifiedBistable) -> float:
    """Explicit-step bound 0.9 / (diffusion + drift + reaction rates)."""
    if leg == 1:
        th_lo = traj.theta_start
        c1_max = max(abs(spec.x_min), abs(spec.x_max)) * 0.5 * traj.speed / th_lo
        c2 = traj.speed
    else:
        th_lo = traj.theta_mid
        c1_max = traj.speed * traj.horizon / traj.theta_mid
        c2 = 0.0
    d_max = 1.0 + max(abs(spec.theta_min), abs(spec.theta_max)) / th_lo
    rate = (
        2.0 * d_max / spec.dx**2
        + 2.0 / spec.dtheta**2
        + c1_max / spec.dx
        + abs(c2) / spec.dtheta
        + lipschitz_bound(reaction)
    )
    return 0.9 / rate


def _assemble(
    physical: GridSpec,
    traj: Trajectory,
    t: float,
    leg: int,
    radius: float,
    plateau: float,
    alpha: float,
    v_plus: Field,
    v_minus: Field,
) -> SubsolutionState:
    """Pull the frame fields back onto the physical grid as the bump w."""
    X, Th, _, _ = eval_trajectory(traj, t)
    sqrt_th = math.sqrt(Th)
    y = (physical.x_coords()[None, :] - X) / sqrt_th
    eta = physical.theta_coords()[:, None] - Th
    s = np.hypot(y, eta)
    yy = np.broadcast_to(y, s.shape)
    ee = np.broadcast_to(eta, s.shape)

    w = np.zeros(physical.shape, dtype=float)
    in_disc = s <= radius
    in_ann = (s > radius) & (s <= 2.0 * radius)
    if in_disc.any():
        w[in_disc] = alpha + sample(v_plus, yy[in_disc], ee[in_disc])
    if in_ann.any():
        w[in_ann] = alpha - sample(v_minus, yy[in_ann], ee[in_ann])

    return SubsolutionState(
        time=t,
        leg=leg,
        radius=radius,
        plateau=plateau,
        center_x=X,
        center_theta=Th,
        v_plus=v_plus.copy(),
        v_minus=v_minus.copy(),
        w=Field(physical, w, t),
    )


def _check_support(physical: GridSpec, traj: Trajectory, radius: float) -> None:
    """Fail fast when the bump's sweep leaves the physical grid."""
    reach = 2.0 * radius * math.sqrt(traj.theta_mid)
    x_end = eval_trajectory(traj, traj.horizon)[0]
    x_lo = traj.x_hold - reach
    x_hi = max(traj.x_hold + reach, x_end + 0.5 * reach)
    th_lo = traj.theta_start - 2.0 * radius
    th_hi = traj.theta_mid + 2.0 * radius
    if (
        x_lo < physical.x_min
        or x_hi > physical.x_max
        or th_lo < physical.theta_min
        or th_hi > physical.theta_max
    ):
        raise TruncationError(
            f"bump support sweeps [{x_lo:.6g}, {x_hi:.6g}] x [{th_lo:.6g}, {th_hi:.6g}], "
            f"leaving the physical grid "
            f"[{physical.x_min}, {physical.x_max}] x [{physical.theta_min}, {physical.theta_max}]"
        )


def _validate_seed_pair(
    plus: SteadyReport, minus: SteadyReport, radius: float, alpha: float, leg: int
) -> None:
    for report, kind in ((plus, "disc"), (minus, "annulus")):
        if report.problem.kind != kind:
            raise ValueError(f"leg-{leg} {kind} seed has kind {report.problem.kind!r}")
        if abs(report.problem.radius - radius) > 1e-12 * max(1.0, radius):
            raise ValueError(
                f"leg-{leg} seed radius {report.problem.radius} does not match {radius}"
            )
        if abs(report.problem.reaction.alpha - alpha) > 1e-12:
            raise ValueError(f"leg-{leg} seed alpha differs from the model alpha")
        if not report.converged:
            raise ValueError(f"leg-{leg} {kind} seed is not converged")
    if abs(plus.problem.reaction.r - minus.problem.reaction.r) > 1e-12:
        raise ValueError(f"leg-{leg} seeds disagree on the plateau height")
    if plus.collapsed:
        raise ValueError(
            f"leg-{leg} plus seed collapsed; the ring radius {radius} is too small "
            "to hold a nontrivial profile"
        )


def march_subsolution(
    params: ModelParams,
    seeds: SubsolutionSeeds,
    physical: GridSpec,
    snapshot_times: Sequence[float],
    dt: float | None = None,
) -> list[SubsolutionState]:
    """March the frame pair (v+, v-) along the path and assemble the bump.

    The first leg integrates the seeds phi+-(1) over [0, T/2] on the frame
    grid of the leg-1 annulus seed; at T/2 the march restarts from phi+-(2)
    at half the ring radius and continues to T.  States are assembled at
    every requested snapshot time; a snapshot at exactly T/2 yields two
    states, the end of the first leg and the restarted start of the second.
    Integration stops at the last requested time, with an explicit Euler
    step bounded by the stability limit of the frame operator.
    """
    if not params.bump_radius > 0.0:
        raise ValueError("params.bump_radius must be positive")
    if not params.horizon > 0.0:
        raise ValueError("params.horizon must be positive")
    traj = Trajectory.from_params(params)
    radius = params.bump_radius
    T = traj.horizon
    half = 0.5 * T
    tol = 1e-9 * max(1.0, T)

    times = [float(t) for t in snapshot_times]
    if not times:
        raise ValueError("need at least one snapshot time")
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("snapshot times must be strictly increasing")
    if times[0] < -tol or times[-1] > T + tol:
        raise ValueError(f"snapshot times must lie in [0, {T}]")

    frame1 = seeds.minus_one.solution.spec
    frame2 = seeds.minus_two.solution.spec
    if traj.theta_start + frame1.theta_min <= 0.0:
        raise ValueError(
            f"frame diffusion factor hits zero: trait centre {traj.theta_start} "
            f"does not clear the frame box reach {-frame1.theta_min}; increase lam"
        )
    _check_support(physical, traj, radius)

    _validate_seed_pair(seeds.plus_one, seeds.minus_one, radius, params.alpha, leg=1)
    _validate_seed_pair(seeds.plus_two, seeds.minus_two, 0.5 * radius, params.alpha, leg=2)
    r1 = seeds.plus_one.problem.reaction.r
    r2 = seeds.plus_two.problem.reaction.r
    if abs(r1 - params.r) > 1e-12:
        raise ValueError(f"leg-1 plateau {r1} does not match params.r={params.r}")
    if not max(params.level, 2.0 * params.alpha) < r2 < 1.0 + 1e-12:
        raise ValueError(
            f"restart plateau {r2} must lie in (max(level, 2*alpha), 1)"
        )

    legs = (
        (1, radius, r1, seeds.plus_one, seeds.minus_one, frame1, 0.0,
         [t for t in times if t <= half + tol]),
        (2, 0.5 * radius, r2, seeds.plus_two, seeds.minus_two, frame2, half,
         [t for t in times if t >= half - tol]),
    )

    states: list[SubsolutionState] = []
    for leg, lam, r_leg, plus, minus, frame, t_start, emit in legs:
        if not emit:
            continue
        reaction = ModifiedBistable(params.alpha, r_leg)
        coeffs = _leg_coeffs(traj, leg)
        dt_max = _stable_dt(traj, leg, frame, reaction)
        if dt is not None:
            if not dt > 0.0:
                raise ValueError(f"dt must be positive, got {dt}")
            if dt > dt_max:
                raise ValueError(
                    f"dt={dt} exceeds the leg-{leg} explicit stability limit {dt_max:.6g}"
                )
        dt_leg = dt_max if dt is None else dt

        vp = Field(frame, _embed(plus.solution, frame, 0.0))
        vm = Field(frame, _embed(minus.solution, frame, params.alpha))
        int_p, int_m = _interior_masks(frame, lam)

        t = t_start
        for t_emit in emit:
            span = t_emit - t
            n_full = int(math.floor(span / dt_leg + 1e-12))
            rem = span - n_full * dt_leg
            steps = [dt_leg] * n_full + ([rem] if rem > 1e-9 * dt_leg else [])
            for step in steps:
                dvp = rhs_frame(vp, coeffs, reaction, "+", int_p, t)
                dvm = rhs_frame(vm, coeffs, reaction, "-", int_m, t)
                vp.values += step * dvp.values
                vm.values += step * dvm.values
                t += step
            t = t_emit
            vp.time = vm.time = t
            states.append(
                _assemble(physical, traj, t, leg, lam, r_leg, params.alpha, vp, vm)
            )
    return states


def verify_ordering(state: SubsolutionState, n_angles: int = 64) -> float:
    """Normal-derivative gap on the gluing ring: min |dn v+| - |dn v-|.

    Sampled at n_angles equally spaced boundary angles with the one-sided
    extremal-gradient estimator on each side of the ring; a positive margin
    certifies that the two pieces of the bump glue into a valid comparison
    state at this instant.
    """
    angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    margin = math.inf
    for angle in angles:
        slope_plus = ring_normal_slope(state.v_plus, state.radius, angle, "inner")
        slope_minus = ring_normal_slope(state.v_minus, state.radius, angle, "outer")
        margin = min(margin, abs(slope_plus) - abs(slope_minus))
    return float(margin)


def verify_domination(
    params: ModelParams,
    w_states: Sequence[SubsolutionState],
    u_snapshots: Sequence[Field],
) -> float:
    """Pointwise excess max(w - u) over all matched snapshots.

    Every bump state must find a density snapshot at its time on the same
    grid; a nonpositive return (or one below the comparison tolerance)
    certifies numerical domination.  Also verifies the exact initial
    inclusion of the bump's t = 0 support in the occupied block
    (-inf, 0] x [theta_min, (1 + lam)*theta_min] in closed form.
    """
    if not w_states:
        raise ValueError("need at least one bump state")
    if not u_snapshots:
        raise ValueError("need at least one density snapshot")

    traj = Trajectory.from_params(params)
    radius = params.bump_radius
    theta0 = traj.theta_start
    if traj.x_hold + 2.0 * radius * math.sqrt(theta0) > 0.0:
        raise ValueError(
            "initial bump support crosses x = 0 and leaves the occupied block"
        )
    if theta0 + 2.0 * radius > (1.0 + params.lam) * params.theta_min:
        raise ValueError("initial bump support exceeds the top of the occupied block")
    if theta0 - 2.0 * radius < params.theta_min:
        raise ValueError("initial bump support dips below the trait wall")

    tol = 1e-9 * max(1.0, params.horizon)
    excess = -math.inf
    for state in w_states:
        match = next((u for u in u_snapshots if abs(u.time - state.time) <= tol), None)
        if match is None:
            raise ValueError(
                f"mismatched snapshot schedules: no density snapshot at t={state.time}"
            )
        if match.spec != state.w.spec:
            raise ValueError("bump and density snapshots live on different grids")
        excess = max(excess, float((state.w.values - match.values).max()))
    return excess
