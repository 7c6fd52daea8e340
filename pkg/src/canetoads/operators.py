"""Discrete spatial operators for the phase-plane Cauchy and frame problems.

`rhs_local` is the right-hand side of u_t = theta*u_xx + u_thetatheta + f(u)
on the truncated box: centered second differences, the node's own theta in
the x-diffusion coefficient, and mirror ghosts on all four edges.  The
trait wall theta = theta_min is the modeled reflecting boundary; the other
three edges are truncation artifacts where homogeneous Neumann is the
neutral choice (the box-edge abort rule in grid.py bounds their influence).

Mirror ghosts pair with trapezoid-weighted grid sums: the weighted sum of
the diffusion stencil telescopes to zero exactly, so mass is conserved to
roundoff when f = 0, and cos(k(theta - theta_min)) stays an exact discrete
eigenmode of the theta direction.

`rhs_frame` is the moving-frame operator d(eta,t)*v_yy + v_etaeta +
c1(y,t)*v_y + c2*v_eta plus the shifted reaction, evaluated on
interior-labeled nodes only; boundary rings carry imprinted Dirichlet data
and are left untouched.  Drifts are discretized centrally: they are O(c)
small in the regimes of interest and central keeps second order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Field, GridSpec
from .model import (
    NonlocalBistableRate,
    Reaction,
    eval_reaction,
    lipschitz_bound,
    nonlocal_rate,
)

__all__ = [
    "FrameCoeffs",
    "diffusion_rhs",
    "diffusion_rhs_slab",
    "rhs_local",
    "rhs_frame",
    "cfl_dt",
]


@dataclass(frozen=True)
class FrameCoeffs:
    """Moving-frame coefficients: y-drift c1(y,t), eta-drift c2, x-diffusion d(eta,t).

    d must stay positive on the frame regions, which holds when the frame
    center trait exceeds the region extent; the trajectory constructor checks
    that before building coefficients, and rhs_frame re-checks at evaluation.
    """

    c1: Callable[[np.ndarray, float], np.ndarray]
    c2: float
    d: Callable[[np.ndarray, float], np.ndarray]


def diffusion_rhs_slab(
    values: np.ndarray,
    theta: np.ndarray,
    dx: float,
    dtheta: float,
    lo: int,
    hi: int,
    out: np.ndarray,
) -> None:
    """Write theta*u_xx + u_thetatheta into out[lo:hi] for rows lo..hi-1.

    Reads are confined to rows lo-1..hi (mirrored at the walls), so disjoint
    slabs of rows can be filled concurrently from the same input array with
    bitwise identical results regardless of the decomposition.
    """
    n = values.shape[0]
    jj = np.arange(lo, hi)
    above = values[np.where(jj + 1 <= n - 1, jj + 1, n - 2)]
    below = values[np.where(jj - 1 >= 0, jj - 1, 1)]
    center = values[lo:hi]

    u_tt = (above - 2.0 * center + below) / dtheta ** 2
    u_xx = np.empty_like(center)
    u_xx[:, 1:-1] = center[:, 2:] - 2.0 * center[:, 1:-1] + center[:, :-2]
    u_xx[:, 0] = 2.0 * (center[:, 1] - center[:, 0])
    u_xx[:, -1] = 2.0 * (center[:, -2] - center[:, -1])
    u_xx /= dx ** 2
    out[lo:hi] = theta[lo:hi, None] * u_xx + u_tt


def diffusion_rhs(
    values: np.ndarray, theta: np.ndarray, dx: float, dtheta: float, out: np.ndarray | None = None
) -> np.ndarray:
    """Full-grid theta*u_xx + u_thetatheta with mirror ghosts on every edge."""
    if out is None:
        out = np.empty_like(values)
    diffusion_rhs_slab(values, theta, dx, dtheta, 0, values.shape[0], out)
    return out


def rhs_local(field: Field, reaction: Reaction | None, rho: np.ndarray | None = None) -> Field:
    """Time derivative of the phase-plane problem at the field's nodes.

    rho is the x-profile of the trait integral and must be supplied exactly
    when the reaction is the nonlocal rate variant; the local variants take
    no density argument.
    """
    spec = field.spec
    nonlocal_kind = isinstance(reaction, NonlocalBistableRate)
    if nonlocal_kind:
        if rho is None:
            raise ValueError("nonlocal reaction needs the density profile rho")
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (spec.nx,):
            raise ValueError(f"rho must have length nx={spec.nx}, got shape {rho.shape}")
    elif rho is not None:
        raise ValueError("rho is only meaningful for the nonlocal reaction")

    rhs = diffusion_rhs(field.values, spec.theta_coords(), spec.dx, spec.dtheta)
    if nonlocal_kind:
        rhs += field.values * nonlocal_rate(reaction.alpha, rho)[None, :]
    elif reaction is not None:
        rhs += eval_reaction(reaction, field.values)
    return Field(spec, rhs, field.time)


def rhs_frame(
    vfield: Field,
    coeffs: FrameCoeffs,
    reaction: Reaction | None,
    sign: str,
    interior: np.ndarray,
    t: float = 0.0,
) -> Field:
    """Frame operator on interior-labeled nodes; zero on boundary and outside.

    sign "+" adds f(alpha + v), sign "-" adds -f(alpha - v), matching the
    two comparison states slid around the unstable root.  Boundary rings are
    assumed to carry their Dirichlet data already; their rhs entries are
    zeroed so time steppers leave them pinned.
    """
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    spec = vfield.spec
    if interior.shape != spec.shape:
        raise ValueError("interior mask shape does not match the grid")

    eta = spec.theta_coords()
    dvals = np.broadcast_to(np.asarray(coeffs.d(eta, t), dtype=float), (spec.ntheta,))
    if np.any(dvals[interior.any(axis=1)] <= 0.0):
        raise ValueError("frame diffusion factor d <= 0 on an active row")
    y = spec.x_coords()
    c1vals = np.broadcast_to(np.asarray(coeffs.c1(y, t), dtype=float), (spec.nx,))

    v = vfield.values
    dy2, de2 = spec.dx ** 2, spec.dtheta ** 2
    rhs = np.zeros_like(v)
    c = v[1:-1, 1:-1]
    v_yy = (v[1:-1, 2:] - 2.0 * c + v[1:-1, :-2]) / dy2
    v_ee = (v[2:, 1:-1] - 2.0 * c + v[:-2, 1:-1]) / de2
    v_y = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * spec.dx)
    v_e = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * spec.dtheta)
    rhs[1:-1, 1:-1] = (
        dvals[1:-1, None] * v_yy + v_ee + c1vals[None, 1:-1] * v_y + coeffs.c2 * v_e
    )
    if reaction is not None:
        a = reaction.alpha
        if sign == "+":
            rhs[1:-1, 1:-1] += eval_reaction(reaction, a + c)
        else:
            rhs[1:-1, 1:-1] -= eval_reaction(reaction, a - c)
    rhs[~interior] = 0.0
    return Field(spec, rhs, vfield.time)


def cfl_dt(
    spec: GridSpec,
    theta_max: float | None = None,
    reaction: Reaction | None = None,
    rho_max: float = 1.0,
    safety: float = 0.9,
) -> float:
    """Largest stable explicit Euler step: safety/(2*theta_max/dx^2 + 2/dtheta^2 + L_f)."""
    if theta_max is None:
        theta_max = spec.theta_max
    lip = lipschitz_bound(reaction, rho_max) if reaction is not None else 0.0
    return safety / (2.0 * theta_max / spec.dx ** 2 + 2.0 / spec.dtheta ** 2 + lip)
