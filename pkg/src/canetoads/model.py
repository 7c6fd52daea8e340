"""Reaction laws and run parameters for the trait-structured front model.

The governing equation on the (x, theta) strip is

    u_t = theta * u_xx + u_thetatheta + f(u),

with a Neumann wall at theta = theta_min.  Four reaction variants are
supported:

* ``CubicBistable``:   f(u) = u (u - alpha) (1 - u), the reference bistable
  law with stable roots 0 and 1 and threshold alpha in (0, 1/2).
* ``ModifiedBistable``: the surgery of the cubic used by the moving-bump
  construction; it agrees with the cubic below alpha and is rescaled above
  so its upper stable root moves from 1 down to r, while staying <= the
  cubic on [0, 1].
* ``KPPMonostable``:   f(u) = u (1 - u), the monostable comparison law that
  dominates every bistable variant on [0, 1].
* ``NonlocalBistableRate``: per-capita rate (rho - alpha)(1 - rho) applied
  as n * rate(rho) where rho is the trait integral of n; the evolve module
  owns the coupling, this module only evaluates the rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "CubicBistable",
    "ModifiedBistable",
    "KPPMonostable",
    "NonlocalBistableRate",
    "Reaction",
    "ModelParams",
    "eval_reaction",
    "nonlocal_rate",
    "reaction_mass",
    "stage_two_plateau",
    "mass_below_threshold",
    "mass_above_threshold",
    "lipschitz_bound",
]


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")


@dataclass(frozen=True)
class CubicBistable:
    """f(u) = u (u - alpha) (1 - u)."""

    alpha: float

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class ModifiedBistable:
    """Cubic below alpha, rescaled cubic with upper root r above alpha.

    f_r(u) = u (u - alpha) (1 - u)          for u <= alpha,
           = c_r u (u - alpha) (r - u)      for u >= alpha,

    with c_r = (1 - alpha) / (r - alpha); c_r is finite because r > alpha
    (enforced through r > 2*alpha) and makes f_r <= cubic on [0, 1].
    """

    alpha: float
    r: float

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        if not 2.0 * self.alpha < self.r <= 1.0:
            raise ValueError(
                f"r must lie in (2*alpha, 1], got r={self.r} with alpha={self.alpha}"
            )

    @property
    def c_r(self) -> float:
        return (1.0 - self.alpha) / (self.r - self.alpha)


@dataclass(frozen=True)
class KPPMonostable:
    """f(u) = u (1 - u)."""


@dataclass(frozen=True)
class NonlocalBistableRate:
    """Per-capita rate (rho - alpha)(1 - rho) in the trait-integral rho."""

    alpha: float

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)


Reaction = Union[CubicBistable, ModifiedBistable, KPPMonostable, NonlocalBistableRate]


@dataclass(frozen=True)
class ModelParams:
    """Run-level parameters shared by the simulator and the bump construction.

    theta_min is the trait floor, lam the initial occupied trait width in
    units of theta_min (block [theta_min, (1+lam) theta_min]), traj_speed the
    trait-climb speed c of the reference trajectory, bump_radius the frame
    radius of the moving bump, horizon the trajectory end time T, and level
    the tracked contour height m.
    """

    alpha: float
    theta_min: float = 1.0
    lam: float = 1.0
    r: float = 1.0
    traj_speed: float = 0.0
    bump_radius: float = 0.0
    horizon: float = 0.0
    level: float = 0.3

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        if self.theta_min <= 0.0:
            raise ValueError("theta_min must be positive")
        if self.lam <= 0.0:
            raise ValueError("lam must be positive")
        if not self.alpha < self.level < 1.0:
            raise ValueError("level must lie in (alpha, 1)")
        if self.bump_radius < 0.0 or self.traj_speed < 0.0 or self.horizon < 0.0:
            raise ValueError("traj_speed, bump_radius and horizon must be >= 0")
        if self.bump_radius > self.lam * self.theta_min / 8.0:
            raise ValueError(
                "bump_radius exceeds lam*theta_min/8; the bump cannot fit the "
                "initial block"
            )


def eval_reaction(reaction: Reaction, u: np.ndarray | float) -> np.ndarray | float:
    """Pointwise reaction term f(u) for the local variants."""
    u = np.asarray(u, dtype=float)
    if isinstance(reaction, CubicBistable):
        return u * (u - reaction.alpha) * (1.0 - u)
    if isinstance(reaction, ModifiedBistable):
        a, r = reaction.alpha, reaction.r
        low = u * (u - a) * (1.0 - u)
        high = reaction.c_r * u * (u - a) * (r - u)
        return np.where(u <= a, low, high)
    if isinstance(reaction, KPPMonostable):
        return u * (1.0 - u)
    raise ValueError(
        "nonlocal variant has no pointwise f(u); evolve couples it "
        "through nonlocal_rate"
    )


def nonlocal_rate(alpha: float, rho: np.ndarray | float) -> np.ndarray | float:
    """Per-capita growth rate (rho - alpha)(1 - rho)."""
    rho = np.asarray(rho, dtype=float)
    return (rho - alpha) * (1.0 - rho)


def _antideriv_cubic(u: float, alpha: float) -> float:
    # antiderivative of u(u-alpha)(1-u) = -u^3 + (1+alpha)u^2 - alpha u
    return -(u**4) / 4.0 + (1.0 + alpha) * u**3 / 3.0 - alpha * u**2 / 2.0


def _antideriv_upper(u: float, alpha: float, r: float) -> float:
    # antiderivative of u(u-alpha)(r-u) = -u^3 + (r+alpha)u^2 - alpha r u
    return -(u**4) / 4.0 + (r + alpha) * u**3 / 3.0 - alpha * r * u**2 / 2.0


def mass_below_threshold(alpha: float, r: float) -> float:
    """Closed-form integral of f_r over [0, alpha] (negative)."""
    _check_alpha(alpha)
    return _antideriv_cubic(alpha, alpha) - _antideriv_cubic(0.0, alpha)


def mass_above_threshold(alpha: float, r: float) -> float:
    """Closed-form integral of f_r over [alpha, r] (positive)."""
    reaction = ModifiedBistable(alpha, r)
    return reaction.c_r * (
        _antideriv_upper(r, alpha, r) - _antideriv_upper(alpha, alpha, r)
    )


def reaction_mass(alpha: float, r: float) -> float:
    """Signed integral of the modified law f_r over [0, r].

    Positive mass is what pushes the bump boundary outward; for the plain
    cubic (r = 1) it equals (1 - 2*alpha)/12 and vanishes at alpha = 1/2.
    """
    return mass_below_threshold(alpha, r) + mass_above_threshold(alpha, r)


def stage_two_plateau(alpha: float, level: float) -> float:
    """Default plateau height for the second leg of the bump construction.

    The restart must sit strictly between the tracked contour height (or
    twice the unstable root, whichever binds) and the carrying capacity;
    the midpoint (1 + max(level, 2*alpha))/2 of that admissible interval is
    the default.
    """
    _check_alpha(alpha)
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return 0.5 * (1.0 + max(level, 2.0 * alpha))


def _max_abs_quadratic(b: float, c: float, lo: float, hi: float) -> float:
    """max of |{-3 u^2 + 2 b u - c}| over [lo, hi] (endpoints and vertex)."""
    candidates = [lo, hi]
    vertex = b / 3.0
    if lo < vertex < hi:
        candidates.append(vertex)
    return max(abs(-3.0 * u**2 + 2.0 * b * u - c) for u in candidates)


def lipschitz_bound(reaction: Reaction, rho_max: float = 1.0) -> float:
    """Explicit bound on |f'| over the invariant range of the variant.

    For the nonlocal variant this bounds the per-capita rate magnitude over
    rho in [0, rho_max]; the rate, not its derivative, is what multiplies n.
    """
    if isinstance(reaction, CubicBistable):
        return _max_abs_quadratic(1.0 + reaction.alpha, reaction.alpha, 0.0, 1.0)
    if isinstance(reaction, ModifiedBistable):
        a, r = reaction.alpha, reaction.r
        low = _max_abs_quadratic(1.0 + a, a, 0.0, a)
        high = reaction.c_r * _max_abs_quadratic(r + a, a * r, a, 1.0)
        return max(low, high)
    if isinstance(reaction, KPPMonostable):
        return 1.0
    if isinstance(reaction, NonlocalBistableRate):
        a = reaction.alpha
        candidates = [0.0, rho_max]
        vertex = (1.0 + a) / 2.0
        if 0.0 < vertex < rho_max:
            candidates.append(vertex)
        return max(abs((p - a) * (1.0 - p)) for p in candidates)
    raise TypeError(f"unknown reaction variant {reaction!r}")
