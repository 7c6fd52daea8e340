"""Tests for the two-leg trajectory, frame marching, and verification gates.

Frozen oracle values and their derivations:

* Endpoint example: speed 1, horizon 2, lam 4, theta_min 1 give
  theta_mid = 1*1 + (1 + 3)*1 = 5 and
  X(T) = -1 + 1*(2 - 1)*2/sqrt(5) = 2/sqrt(5) - 1 = -0.10557280900008414.
* Spreading constant sqrt(c/2): 0.5 at c = 0.5, 1.0 at c = 2.
* Half-plane slope gap, from the shooting oracles frozen in the steady
  tests: 0.2964635306407856 - 0.0675077156084152 = 0.2289558150323704.
  Ring margins approach it from below as the ring radius grows (probed:
  0.17862 at radius 16, 0.18824 at radius 40 with h = 0.25).
* Frozen-coefficient persistence: with zero climb speed the frame drifts
  vanish and the only forcing is the (1 + eta/Theta) diffusion factor, of
  size box/Theta ~ 4.5e-7 at lam = 1e8; the marched fields must stay within
  solver-tolerance scale (measured ~5e-9 drift per unit time at lam = 1e8,
  ~5e-7 at lam = 1e6).
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from canetoads.grid import Field, GridSpec, TruncationError
from canetoads.model import ModelParams, ModifiedBistable, stage_two_plateau
from canetoads.steady import SteadyProblem, ring_normal_slope, solve_phi_minus, solve_phi_plus
from canetoads.trajectory import (
    SubsolutionState,
    Trajectory,
    _embed,
    eval_trajectory,
    march_subsolution,
    solve_seeds,
    spreading_constant,
    verify_domination,
    verify_ordering,
)

FROZEN_X_END = -0.10557280900008414
HALF_PLANE_GAP = 0.2289558150323704


# ---------------------------------------------------------------------------
# closed-form trajectory oracles


def test_endpoint_frozen_value():
    traj = Trajectory(speed=1.0, lam=4.0, theta_min=1.0, horizon=2.0)
    x, theta, xdot, thetadot = eval_trajectory(traj, 2.0)
    assert x == pytest.approx(FROZEN_X_END, abs=1e-15)
    assert x == pytest.approx(2.0 / math.sqrt(5.0) - 1.0, abs=0.0)
    assert theta == 5.0
    assert xdot == pytest.approx(2.0 / math.sqrt(5.0), abs=1e-15)
    assert thetadot == 0.0


def test_start_point():
    for lam, theta_min, c in ((4.0, 1.0, 1.0), (40.0, 2.0, 0.05)):
        traj = Trajectory(speed=c, lam=lam, theta_min=theta_min, horizon=10.0)
        x, theta, xdot, thetadot = eval_trajectory(traj, 0.0)
        assert x == -lam * theta_min / 4.0
        assert theta == (1.0 + 0.75 * lam) * theta_min
        assert xdot == 0.0
        assert thetadot == c


def test_handover_continuity_and_velocity_jump():
    traj = Trajectory(speed=0.3, lam=8.0, theta_min=1.5, horizon=6.0)
    half = 3.0
    x_mid, theta_mid, xdot, thetadot = eval_trajectory(traj, half)
    assert x_mid == traj.x_hold
    assert theta_mid == traj.speed * half + traj.theta_start
    assert theta_mid == traj.theta_mid
    assert xdot == traj.run_rate and thetadot == 0.0
    x_pre, theta_pre, xdot_pre, thetadot_pre = eval_trajectory(traj, half * (1.0 - 1e-13))
    assert x_pre == traj.x_hold
    assert theta_pre == pytest.approx(theta_mid, rel=1e-12)
    assert xdot_pre == 0.0 and thetadot_pre == traj.speed


def test_eval_domain_errors():
    traj = Trajectory(speed=1.0, lam=4.0, theta_min=1.0, horizon=2.0)
    for bad in (-0.1, 2.1):
        with pytest.raises(ValueError, match="outside the trajectory window"):
            eval_trajectory(traj, bad)


def test_trajectory_validation():
    with pytest.raises(ValueError, match="speed"):
        Trajectory(speed=-1.0, lam=4.0, theta_min=1.0, horizon=2.0)
    with pytest.raises(ValueError, match="lam"):
        Trajectory(speed=1.0, lam=0.0, theta_min=1.0, horizon=2.0)
    with pytest.raises(ValueError, match="theta_min"):
        Trajectory(speed=1.0, lam=4.0, theta_min=-1.0, horizon=2.0)
    with pytest.raises(ValueError, match="horizon"):
        Trajectory(speed=1.0, lam=4.0, theta_min=1.0, horizon=0.0)


def test_path_monotone():
    traj = Trajectory(speed=0.7, lam=12.0, theta_min=1.0, horizon=9.0)
    ts = np.linspace(0.0, 9.0, 301)
    xs = [eval_trajectory(traj, t)[0] for t in ts]
    thetas = [eval_trajectory(traj, t)[1] for t in ts]
    assert all(b >= a for a, b in zip(xs, xs[1:]))
    assert all(b >= a for a, b in zip(thetas, thetas[1:]))


def test_spreading_constant_values():
    assert spreading_constant(0.5) == 0.5
    assert spreading_constant(2.0) == 1.0
    gammas = [spreading_constant(c) for c in (1.0, 0.1, 0.01, 0.001)]
    assert all(b < a for a, b in zip(gammas, gammas[1:]))
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError, match="positive"):
            spreading_constant(bad)


def test_endpoint_ratio_approaches_spreading_constant():
    for c in (0.5, 2.0):
        gamma = spreading_constant(c)
        gaps = []
        for horizon in (1e2, 1e3, 1e4):
            traj = Trajectory(speed=c, lam=1.0, theta_min=1.0, horizon=horizon)
            ratio = eval_trajectory(traj, horizon)[0] / horizon**1.5
            gaps.append(abs(ratio - gamma))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[-1] <= 0.1 * gamma


def test_stage_two_plateau_default():
    assert stage_two_plateau(0.25, 0.3) == 0.75
    assert stage_two_plateau(0.2, 0.6) == pytest.approx(0.8)
    assert stage_two_plateau(0.4, 0.3) == pytest.approx(0.9)
    with pytest.raises(ValueError, match="level"):
        stage_two_plateau(0.25, 1.0)
    with pytest.raises(ValueError, match="level"):
        stage_two_plateau(0.25, 0.0)


# ---------------------------------------------------------------------------
# marching fixtures: a frozen-coefficient run (c = 0, huge lam) and a small
# moving run with the climb speed turned on


@pytest.fixture(scope="module")
def params_frozen():
    return ModelParams(
        alpha=0.25,
        theta_min=1.0,
        lam=1.0e8,
        r=1.0,
        traj_speed=0.0,
        bump_radius=16.0,
        horizon=2.0,
        level=0.3,
    )


@pytest.fixture(scope="module")
def seeds_frozen(params_frozen):
    return solve_seeds(params_frozen)


@pytest.fixture(scope="module")
def phys_frozen(params_frozen):
    traj = Trajectory.from_params(params_frozen)
    return GridSpec(
        x_min=traj.x_hold - 280000.0,
        x_max=traj.x_hold + 280000.0,
        nx=561,
        theta_min=traj.theta_start - 40.0,
        theta_max=traj.theta_start + 40.0,
        ntheta=81,
    )


@pytest.fixture(scope="module")
def states_frozen(params_frozen, seeds_frozen, phys_frozen):
    return march_subsolution(params_frozen, seeds_frozen, phys_frozen, [0.0, 1.0, 2.0])


@pytest.fixture(scope="module")
def params_run():
    return ModelParams(
        alpha=0.25,
        theta_min=1.0,
        lam=12800.0,
        r=1.0,
        traj_speed=0.05,
        bump_radius=16.0,
        horizon=20.0,
        level=0.3,
    )


@pytest.fixture(scope="module")
def run_states(params_run):
    seeds = solve_seeds(params_run)
    phys = GridSpec(-6400.0, 0.0, 801, 9561.0, 9641.0, 81)
    return march_subsolution(params_run, seeds, phys, [0.0, 5.0, 10.0, 15.0, 20.0])


def _ones_like(states, spec):
    times = sorted({s.time for s in states})
    return [Field(spec, np.ones(spec.shape), t) for t in times]


# ---------------------------------------------------------------------------
# marching behaviour


def test_march_emits_requested_times_with_restart_duplicate(states_frozen):
    assert [(s.time, s.leg) for s in states_frozen] == [
        (0.0, 1),
        (1.0, 1),
        (1.0, 2),
        (2.0, 2),
    ]
    assert states_frozen[0].radius == 16.0 and states_frozen[2].radius == 8.0
    assert states_frozen[0].plateau == 1.0 and states_frozen[2].plateau == 0.75
    for state in states_frozen:
        assert state.w.time == state.time


def test_frozen_coefficients_keep_seeds(states_frozen, seeds_frozen):
    end_one = states_frozen[1]
    base_plus = _embed(seeds_frozen.plus_one.solution, end_one.v_plus.spec, 0.0)
    base_minus = _embed(seeds_frozen.minus_one.solution, end_one.v_minus.spec, 0.25)
    assert np.abs(end_one.v_plus.values - base_plus).max() <= 1e-6
    assert np.abs(end_one.v_minus.values - base_minus).max() <= 1e-6
    end_two = states_frozen[3]
    base_plus2 = _embed(seeds_frozen.plus_two.solution, end_two.v_plus.spec, 0.0)
    base_minus2 = _embed(seeds_frozen.minus_two.solution, end_two.v_minus.spec, 0.25)
    assert np.abs(end_two.v_plus.values - base_plus2).max() <= 1e-6
    assert np.abs(end_two.v_minus.values - base_minus2).max() <= 1e-6


def test_assembled_bump_support_and_range(states_frozen, phys_frozen):
    for state in states_frozen:
        y = (phys_frozen.x_coords()[None, :] - state.center_x) / math.sqrt(
            state.center_theta
        )
        eta = phys_frozen.theta_coords()[:, None] - state.center_theta
        s = np.hypot(y, eta)
        outside = s > 2.0 * state.radius
        assert np.abs(state.w.values[outside]).max() == 0.0
        assert state.w.values.min() >= 0.0
        assert state.w.values.max() <= state.plateau + 1e-9


def test_assembled_bump_lipschitz_across_rings(states_frozen, phys_frozen):
    state = states_frozen[0]
    y = (phys_frozen.x_coords()[None, :] - state.center_x) / math.sqrt(state.center_theta)
    eta = phys_frozen.theta_coords()[:, None] - state.center_theta
    s = np.hypot(y, eta)
    near_glue = np.abs(s - state.radius) <= 1.0
    assert near_glue.any()
    gap = np.abs(state.w.values[near_glue] - 0.25)
    assert (gap <= 0.31 * np.abs(s[near_glue] - state.radius) + 0.08).all()
    near_outer = np.abs(s - 2.0 * state.radius) <= 1.0
    assert near_outer.any()
    assert (
        np.abs(state.w.values[near_outer])
        <= 0.15 * np.abs(s[near_outer] - 2.0 * state.radius) + 0.05
    ).all()


def test_march_centers_follow_trajectory(params_run, run_states):
    traj = Trajectory.from_params(params_run)
    assert [(s.time, s.leg) for s in run_states] == [
        (0.0, 1),
        (5.0, 1),
        (10.0, 1),
        (10.0, 2),
        (15.0, 2),
        (20.0, 2),
    ]
    for state in run_states:
        x, theta, _, _ = eval_trajectory(traj, state.time)
        assert state.center_x == x
        assert state.center_theta == theta


def test_moving_march_keeps_ordering_margin(run_states):
    for state in run_states:
        margin = verify_ordering(state)
        assert margin > 0.01, f"t={state.time} leg={state.leg} margin={margin}"


def test_moving_march_bump_range(run_states):
    for state in run_states:
        assert state.w.values.min() >= 0.0
        assert state.w.values.max() <= state.plateau + 1e-9


# ---------------------------------------------------------------------------
# ordering gate


def test_ordering_positive_and_consistent_with_seed_normals(states_frozen, seeds_frozen):
    margin = verify_ordering(states_frozen[0])
    plus = np.abs(seeds_frozen.plus_one.normals[:, 1])
    minus = np.abs(seeds_frozen.minus_one.normals[:, 1])
    assert margin == pytest.approx(float((plus - minus).min()), abs=1e-9)
    assert margin > 0.1
    assert verify_ordering(states_frozen[2]) > 0.02


def _bare_state(v_plus, v_minus, radius):
    dummy_spec = GridSpec(-1.0, 1.0, 3, 1.0, 2.0, 3)
    return SubsolutionState(
        time=0.0,
        leg=1,
        radius=radius,
        plateau=1.0,
        center_x=0.0,
        center_theta=100.0,
        v_plus=v_plus,
        v_minus=v_minus,
        w=Field(dummy_spec, np.zeros((3, 3))),
    )


@pytest.fixture(scope="module")
def reports_40():
    reaction = ModifiedBistable(0.25, 1.0)
    plus = solve_phi_plus(SteadyProblem(kind="disc", radius=40.0, reaction=reaction, h=0.25))
    minus = solve_phi_minus(
        SteadyProblem(kind="annulus", radius=40.0, reaction=reaction, h=0.25)
    )
    return plus, minus


def test_ordering_margin_positive_at_radius_40(reports_40):
    plus, minus = reports_40
    margin = verify_ordering(_bare_state(plus.solution, minus.solution, 40.0))
    assert margin > 0.1


def test_margin_approaches_halfplane_gap(states_frozen, reports_40):
    margin_16 = verify_ordering(states_frozen[0])
    plus, minus = reports_40
    margin_40 = verify_ordering(_bare_state(plus.solution, minus.solution, 40.0))
    assert margin_16 < margin_40 < HALF_PLANE_GAP
    assert abs(margin_40 - HALF_PLANE_GAP) < abs(margin_16 - HALF_PLANE_GAP)


def test_ordering_zero_margin_for_mirrored_cones():
    radius, h = 8.0, 0.25
    half = int(np.ceil((2.0 * radius + 2.0) / h))
    n = 2 * half + 1
    spec = GridSpec(-half * h, half * h, n, -half * h, half * h, n)
    s = np.hypot(spec.x_coords()[None, :], spec.theta_coords()[:, None])
    slope = 0.05
    v_plus = Field(spec, slope * np.maximum(radius - s, 0.0))
    v_minus = Field(spec, slope * np.clip(s - radius, 0.0, radius))
    state = _bare_state(v_plus, v_minus, radius)
    for angle in (0.0, np.pi / 2.0, np.pi, 1.5 * np.pi):
        inner = ring_normal_slope(v_plus, radius, angle, "inner")
        outer = ring_normal_slope(v_minus, radius, angle, "outer")
        assert abs(abs(inner) - abs(outer)) <= 1e-12
    assert abs(verify_ordering(state)) <= 5e-4


def test_ordering_rotation_invariant(reports_40):
    plus, minus = reports_40
    margin = verify_ordering(_bare_state(plus.solution, minus.solution, 40.0))
    rotated = _bare_state(
        Field(plus.solution.spec, np.rot90(plus.solution.values).copy()),
        Field(minus.solution.spec, np.rot90(minus.solution.values).copy()),
        40.0,
    )
    assert verify_ordering(rotated) == pytest.approx(margin, abs=1e-12)


def test_ordering_stencil_guard():
    spec = GridSpec(-3.0, 3.0, 13, -3.0, 3.0, 13)
    v = Field(spec, np.zeros((13, 13)))
    with pytest.raises(ValueError, match="leaves the region"):
        verify_ordering(_bare_state(v, v, 2.0))


# ---------------------------------------------------------------------------
# domination gate


def test_domination_against_ones(params_frozen, states_frozen, phys_frozen):
    ones = _ones_like(states_frozen, phys_frozen)
    excess = verify_domination(params_frozen, states_frozen, ones)
    expected = max(s.w.values.max() for s in states_frozen) - 1.0
    assert excess == pytest.approx(expected, abs=1e-15)
    assert excess <= 0.0


def test_domination_against_indicator_start(params_frozen, states_frozen, phys_frozen):
    # exact indicator of the occupied block, evaluated on the comparison
    # window; the window sits strictly inside the block, so it is all ones
    # and the t = 0 bump must fit under it by pure geometry
    edge = (1.0 + params_frozen.lam) * params_frozen.theta_min
    x = phys_frozen.x_coords()[None, :]
    theta = phys_frozen.theta_coords()[:, None]
    u0 = np.where((x < 0.0) & (theta < edge), 1.0, 0.0) * np.ones(phys_frozen.shape)
    assert u0.min() == 1.0
    state0 = states_frozen[0]
    assert float((state0.w.values - u0).max()) <= 0.0


def test_domination_schedule_and_grid_mismatch(params_frozen, states_frozen, phys_frozen):
    ones = _ones_like(states_frozen, phys_frozen)
    with pytest.raises(ValueError, match="mismatched snapshot schedules"):
        verify_domination(params_frozen, states_frozen, ones[:-1])
    other = GridSpec(-1.0, 1.0, 5, 1.0, 2.0, 5)
    wrong = [Field(other, np.ones((5, 5)), f.time) for f in ones]
    with pytest.raises(ValueError, match="different grids"):
        verify_domination(params_frozen, states_frozen, wrong)
    with pytest.raises(ValueError, match="at least one"):
        verify_domination(params_frozen, [], ones)
    with pytest.raises(ValueError, match="at least one"):
        verify_domination(params_frozen, states_frozen, [])


def test_domination_rejects_bump_outside_block(states_frozen, phys_frozen):
    params_bad = ModelParams(
        alpha=0.25,
        theta_min=1.0,
        lam=2000.0,
        r=1.0,
        traj_speed=0.0,
        bump_radius=40.0,
        horizon=2.0,
        level=0.3,
    )
    ones = _ones_like(states_frozen, phys_frozen)
    with pytest.raises(ValueError, match="crosses x = 0"):
        verify_domination(params_bad, states_frozen, ones)


# ---------------------------------------------------------------------------
# march validation


def test_march_rejects_bad_snapshot_times(params_frozen, seeds_frozen, phys_frozen):
    with pytest.raises(ValueError, match="at least one snapshot"):
        march_subsolution(params_frozen, seeds_frozen, phys_frozen, [])
    with pytest.raises(ValueError, match="strictly increasing"):
        march_subsolution(params_frozen, seeds_frozen, phys_frozen, [1.0, 0.5])
    with pytest.raises(ValueError, match="lie in"):
        march_subsolution(params_frozen, seeds_frozen, phys_frozen, [-0.5])
    with pytest.raises(ValueError, match="lie in"):
        march_subsolution(params_frozen, seeds_frozen, phys_frozen, [2.5])


def test_march_rejects_unstable_dt(params_frozen, seeds_frozen, phys_frozen):
    with pytest.raises(ValueError, match="stability"):
        march_subsolution(params_frozen, seeds_frozen, phys_frozen, [0.0, 1.0], dt=1.0)


def test_march_rejects_mismatched_radius(params_frozen, seeds_frozen, phys_frozen):
    params_bad = replace(params_frozen, bump_radius=8.0)
    with pytest.raises(ValueError, match="does not match"):
        march_subsolution(params_bad, seeds_frozen, phys_frozen, [0.0])


def test_march_rejects_small_physical_grid(params_frozen, seeds_frozen):
    traj = Trajectory.from_params(params_frozen)
    small = GridSpec(
        x_min=traj.x_hold - 1000.0,
        x_max=traj.x_hold + 1000.0,
        nx=11,
        theta_min=traj.theta_start - 40.0,
        theta_max=traj.theta_start + 40.0,
        ntheta=11,
    )
    with pytest.raises(TruncationError, match="leaving the physical grid"):
        march_subsolution(params_frozen, seeds_frozen, small, [0.0])


def test_march_rejects_vanishing_diffusion_factor():
    params_tiny = ModelParams(
        alpha=0.25,
        theta_min=1.0,
        lam=2.0,
        r=1.0,
        traj_speed=0.0,
        bump_radius=0.25,
        horizon=2.0,
        level=0.3,
    )
    seeds = solve_seeds(params_tiny, h=0.05)
    phys = GridSpec(-10.0, 10.0, 21, 0.5, 6.0, 23)
    with pytest.raises(ValueError, match="diffusion factor hits zero"):
        march_subsolution(params_tiny, seeds, phys, [0.0])


def test_march_rejects_collapsed_seeds():
    params_small = ModelParams(
        alpha=0.25,
        theta_min=1.0,
        lam=32.0,
        r=1.0,
        traj_speed=0.0,
        bump_radius=4.0,
        horizon=2.0,
        level=0.3,
    )
    seeds = solve_seeds(params_small)
    phys = GridSpec(-100.0, 100.0, 41, 1.0, 60.0, 60)
    with pytest.raises(ValueError, match="collapsed"):
        march_subsolution(params_small, seeds, phys, [0.0])


def test_solve_seeds_structure():
    params = ModelParams(
        alpha=0.25,
        theta_min=1.0,
        lam=64.0,
        r=1.0,
        traj_speed=0.02,
        bump_radius=8.0,
        horizon=4.0,
        level=0.3,
    )
    seeds = solve_seeds(params)
    assert seeds.plus_one.problem.kind == "disc"
    assert seeds.minus_one.problem.kind == "annulus"
    assert seeds.plus_one.problem.radius == 8.0
    assert seeds.plus_two.problem.radius == 4.0
    assert seeds.plus_one.problem.reaction.r == 1.0
    assert seeds.plus_two.problem.reaction.r == 0.75
    assert seeds.plus_one.problem.drift == (0.0, 0.02)
    theta_mid = Trajectory.from_params(params).theta_mid
    assert seeds.plus_two.problem.drift == (
        pytest.approx(0.02 * 4.0 / theta_mid),
        0.0,
    )
