"""Uniform grids on the truncated (space x trait) phase plane.

The trait half-line [theta_min, inf) is truncated to [theta_min, theta_max]
per run; :func:`check_truncation` flags runs whose tracked level set drifts
into the last few cells before an artificial edge, so spreading measurements
are never silently corrupted by the box.  Fields store one value per node,
row-major with theta as the slow index.

The moving ellipse and annulus used by the comparison machinery are level
sets of the anisotropic quadratic form

    q(x, theta) = (x - X)^2 / Theta + (theta - Theta)^2,

where (X, Theta) is the moving center.  The set {q <= Lambda^2} has trait
half-width Lambda but space half-width Lambda*sqrt(Theta); classification
snaps nodes within half a cell diagonal (measured in the same scaled metric)
onto the Dirichlet rings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "Region",
    "TruncationError",
    "LABEL_OUTSIDE",
    "LABEL_INTERIOR_E",
    "LABEL_BOUNDARY_E",
    "LABEL_ANNULUS_A",
    "LABEL_BOUNDARY_A",
    "LABEL_NAMES",
    "integrate_theta",
    "sample",
    "quadratic_form",
    "classify",
    "classify_frame",
    "snap_tolerance",
    "write_snapshot",
    "read_snapshot",
    "truncation_diagnostic",
    "check_truncation",
]

LABEL_OUTSIDE = 0
LABEL_INTERIOR_E = 1
LABEL_BOUNDARY_E = 2
LABEL_ANNULUS_A = 3
LABEL_BOUNDARY_A = 4

LABEL_NAMES = {
    LABEL_OUTSIDE: "outside",
    LABEL_INTERIOR_E: "interior-E",
    LABEL_BOUNDARY_E: "boundary-E",
    LABEL_ANNULUS_A: "annulus-A",
    LABEL_BOUNDARY_A: "boundary-A",
}


class TruncationError(RuntimeError):
    """A tracked level set reached the artificial edge of the grid box."""


@dataclass(frozen=True)
class GridSpec:
    """Node-centered uniform grid on [x_min, x_max] x [theta_min, theta_max].

    Both endpoints are nodes, so dx = (x_max - x_min)/(nx - 1) and likewise
    in theta.  theta_min is the reflecting trait wall; theta_max truncates
    the unbounded trait direction.
    """

    x_min: float
    x_max: float
    nx: int
    theta_min: float
    theta_max: float
    ntheta: int

    def __post_init__(self) -> None:
        if self.nx < 3 or self.ntheta < 3:
            raise ValueError(f"need nx, ntheta >= 3, got {self.nx}, {self.ntheta}")
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max must exceed x_min, got [{self.x_min}, {self.x_max}]")
        if not self.theta_max > self.theta_min:
            raise ValueError(
                f"theta_max must exceed theta_min, got [{self.theta_min}, {self.theta_max}]"
            )

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dtheta(self) -> float:
        return (self.theta_max - self.theta_min) / (self.ntheta - 1)

    @property
    def shape(self) -> tuple[int, int]:
        # (slow, fast) = (theta, x)
        return (self.ntheta, self.nx)

    def x_coords(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def theta_coords(self) -> np.ndarray:
        return np.linspace(self.theta_min, self.theta_max, self.ntheta)


@dataclass
class Field:
    """One value per node at a fixed time, shape (ntheta, nx)."""

    spec: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.spec.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.spec.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def copy(self) -> "Field":
        return Field(self.spec, self.values.copy(), self.time)


@dataclass(frozen=True)
class Region:
    """Moving ellipse {q <= radius^2} or annulus {radius^2 <= q <= 4 radius^2}."""

    kind: str
    center_x: float
    center_theta: float
    radius: float

    def __post_init__(self) -> None:
        if self.kind not in ("ellipse", "annulus"):
            raise ValueError(f"kind must be 'ellipse' or 'annulus', got {self.kind!r}")
        if not self.radius > 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not self.center_theta > 0.0:
            raise ValueError(f"center_theta must be positive, got {self.center_theta}")


def quadratic_form(region: Region, x, theta):
    """Scaled squared distance (x - X)^2/Theta + (theta - Theta)^2 to the center."""
    dx = np.asarray(x, dtype=float) - region.center_x
    dth = np.asarray(theta, dtype=float) - region.center_theta
    return dx * dx / region.center_theta + dth * dth


def integrate_theta(field: Field) -> np.ndarray:
    """Trapezoid integral along theta per x-column; returns a length-nx profile."""
    return np.trapezoid(field.values, dx=field.spec.dtheta, axis=0)


def sample(field: Field, x, theta):
    """Bilinear interpolation of `field` at (x, theta); exact on bilinear data.

    Queries must lie inside the grid rectangle (a hair of slack absorbs
    roundoff on the edges); anything farther out signals a caller bug, since
    regions are supposed to be clipped before sampling.
    """
    spec = field.spec
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    slack_x = 1e-9 * (spec.x_max - spec.x_min)
    slack_t = 1e-9 * (spec.theta_max - spec.theta_min)
    if np.any(x < spec.x_min - slack_x) or np.any(x > spec.x_max + slack_x):
        raise ValueError("sample point outside grid in x")
    if np.any(theta < spec.theta_min - slack_t) or np.any(theta > spec.theta_max + slack_t):
        raise ValueError("sample point outside grid in theta")

    xi = np.clip((x - spec.x_min) / spec.dx, 0.0, spec.nx - 1.0)
    tj = np.clip((theta - spec.theta_min) / spec.dtheta, 0.0, spec.ntheta - 1.0)
    i0 = np.minimum(xi.astype(int), spec.nx - 2)
    j0 = np.minimum(tj.astype(int), spec.ntheta - 2)
    fx = xi - i0
    ft = tj - j0
    v = field.values
    out = (1.0 - ft) * ((1.0 - fx) * v[j0, i0] + fx * v[j0, i0 + 1]) + ft * (
        (1.0 - fx) * v[j0 + 1, i0] + fx * v[j0 + 1, i0 + 1]
    )
    return float(out) if out.ndim == 0 else out


def snap_tolerance(spec: GridSpec, center_theta: float) -> float:
    """Half cell diagonal in the scaled metric used by the quadratic form."""
    return 0.5 * np.sqrt(spec.dx ** 2 / center_theta + spec.dtheta ** 2)


def classify(spec: GridSpec, region_inner: Region, region_outer: Region) -> np.ndarray:
    """Label every node against the moving ellipse/annulus pair.

    region_inner is the ellipse {q <= Li^2}, region_outer the annulus
    {Lo^2 <= q <= 4 Lo^2} around the same center.  Nodes within half a cell
    diagonal (scaled metric) of a ring are snapped onto it as Dirichlet
    boundary nodes.  Returns an int array of shape (ntheta, nx) with values
    in LABEL_NAMES; the five labels partition the nodes.
    """
    if region_inner.kind != "ellipse" or region_outer.kind != "annulus":
        raise ValueError("classify expects (ellipse, annulus) regions")
    scale = 1.0 + abs(region_inner.center_x) + region_inner.center_theta
    if (
        abs(region_inner.center_x - region_outer.center_x) > 1e-9 * scale
        or abs(region_inner.center_theta - region_outer.center_theta) > 1e-9 * scale
    ):
        raise ValueError("regions must share a center")

    cx, cth = region_outer.center_x, region_outer.center_theta
    half_x = 2.0 * region_outer.radius * np.sqrt(cth)
    half_t = 2.0 * region_outer.radius
    if (
        cx + half_x < spec.x_min
        or cx - half_x > spec.x_max
        or cth + half_t < spec.theta_min
        or cth - half_t > spec.theta_max
    ):
        raise ValueError("region lies entirely outside the grid; enlarge the box")

    xs = spec.x_coords()[None, :]
    ths = spec.theta_coords()[:, None]
    s = np.sqrt(quadratic_form(region_inner, xs, ths))
    tol = snap_tolerance(spec, cth)
    ri = region_inner.radius
    ro = region_outer.radius

    labels = np.full(spec.shape, LABEL_OUTSIDE, dtype=int)
    labels[np.abs(s - 2.0 * ro) <= tol] = LABEL_BOUNDARY_A
    labels[(s > ri) & (s < 2.0 * ro - tol)] = LABEL_ANNULUS_A
    labels[np.abs(s - ri) <= tol] = LABEL_BOUNDARY_E
    labels[s < ri - tol] = LABEL_INTERIOR_E
    return labels


def classify_frame(spec: GridSpec, radius: float) -> np.ndarray:
    """Label frame nodes against origin-centered rings of radius and 2*radius.

    In frame coordinates (y, eta) the sqrt(Theta) scaling is already absorbed
    into y, so the ellipse/annulus become plain circles around the origin and
    the snap tolerance is half the raw cell diagonal.  The grid axes are read
    as y (fast) and eta (slow); eta may be negative.
    """
    if not radius > 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    ys = spec.x_coords()[None, :]
    etas = spec.theta_coords()[:, None]
    s = np.sqrt(ys * ys + etas * etas)
    if s.min() > 2.0 * radius:
        raise ValueError("frame rings lie entirely outside the grid; enlarge the box")
    tol = 0.5 * np.hypot(spec.dx, spec.dtheta)

    labels = np.full(spec.shape, LABEL_OUTSIDE, dtype=int)
    labels[np.abs(s - 2.0 * radius) <= tol] = LABEL_BOUNDARY_A
    labels[(s > radius) & (s < 2.0 * radius - tol)] = LABEL_ANNULUS_A
    labels[np.abs(s - radius) <= tol] = LABEL_BOUNDARY_E
    labels[s < radius - tol] = LABEL_INTERIOR_E
    return labels


def write_snapshot(field: Field, path) -> None:
    """Write `# nx ntheta x_min x_max theta_min theta_max time` then the rows.

    Data rows are theta-slow: row j holds the nx values at theta_j, comma
    separated, with enough digits to round-trip float64 exactly.
    """
    spec = field.spec
    header = "# {} {} {!r} {!r} {!r} {!r} {!r}\n".format(
        spec.nx,
        spec.ntheta,
        float(spec.x_min),
        float(spec.x_max),
        float(spec.theta_min),
        float(spec.theta_max),
        float(field.time),
    )
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header)
        np.savetxt(fh, field.values, delimiter=",", fmt="%.17g")


def read_snapshot(path) -> Field:
    """Read a snapshot written by :func:`write_snapshot`."""
    with open(path, "r", encoding="ascii") as fh:
        first = fh.readline().strip()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing snapshot header row")
        tokens = first.lstrip("#").split()
        if len(tokens) != 7:
            raise ValueError(f"{path}: header must hold 7 values, got {len(tokens)}")
        nx, ntheta = int(tokens[0]), int(tokens[1])
        x_min, x_max, theta_min, theta_max, time = map(float, tokens[2:])
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    spec = GridSpec(x_min, x_max, nx, theta_min, theta_max, ntheta)
    if values.shape != spec.shape:
        raise ValueError(f"{path}: data shape {values.shape} does not match header {spec.shape}")
    return Field(spec, values, time)


def truncation_diagnostic(field: Field, level: float, cells: int = 5) -> str | None:
    """Message if {u >= level} enters the last `cells` cells before an edge.

    Only the open edges matter: x_max (rightward invasion) and theta_max
    (upward trait invasion).  Returns None when the box is still adequate.
    """
    spec = field.spec
    hot = field.values >= level
    msgs = []
    if hot[:, max(0, spec.nx - 1 - cells) :].any():
        msgs.append(
            f"level-{level} set within {cells} cells of x_max={spec.x_max}"
        )
    if hot[max(0, spec.ntheta - 1 - cells) :, :].any():
        msgs.append(
            f"level-{level} set within {cells} cells of theta_max={spec.theta_max}"
        )
    if not msgs:
        return None
    return f"t={field.time}: " + "; ".join(msgs) + "; enlarge the box and rerun"


def check_truncation(field: Field, level: float, cells: int = 5) -> None:
    """Raise TruncationError when :func:`truncation_diagnostic` fires."""
    msg = truncation_diagnostic(field, level, cells)
    if msg is not None:
        raise TruncationError(msg)
