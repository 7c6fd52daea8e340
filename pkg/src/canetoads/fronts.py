"""Level-set front extraction and spreading-exponent estimation.

The headline observable is the rightmost point of the m-level set,
front_x(t) = max over trait rows of the largest down-crossing of m, which
accelerates like t^(3/2) in the bistable phase-plane runs.  The matching
trait-direction front is measured at the back (x <= 0), where invasion is
expected to stay linear in time.  Crossings are located by linear
interpolation between nodes; the rightmost crossing is used so that
non-monotone wiggles behind the front cannot drag the measurement backward.
A row still at or above the level at the last node reports the box edge
itself (the truncation guard flags that situation separately).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .grid import Field

__all__ = [
    "FrontSeries",
    "FitResult",
    "front_x",
    "front_theta",
    "fit_power_law",
    "fit_exponent",
    "write_fronts",
    "read_fronts",
]


@dataclass(frozen=True)
class FitResult:
    """Power-law fit front ~ A * t^p over [t_lo, t_hi] with RMS log residual."""

    p: float
    A: float
    residual: float
    t_lo: float
    t_hi: float
    n_samples: int


@dataclass
class FrontSeries:
    """Front positions per snapshot time, plus the fit once computed."""

    times: np.ndarray
    front_x: np.ndarray
    front_theta: np.ndarray
    level: float = float("nan")
    fit: FitResult | None = dataclass_field(default=None)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.front_x = np.asarray(self.front_x, dtype=float)
        self.front_theta = np.asarray(self.front_theta, dtype=float)
        if not (self.times.shape == self.front_x.shape == self.front_theta.shape):
            raise ValueError("times and front arrays must have matching lengths")
        if self.times.size == 0:
            raise ValueError("empty front series")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")

    @property
    def gamma_hat(self) -> float:
        """front_x(T)/T^(3/2), the empirical spreading prefactor."""
        t_final = self.times[-1]
        x_final = self.front_x[-1]
        if t_final <= 0.0 or not np.isfinite(x_final) or x_final <= 0.0:
            return float("nan")
        return float(x_final / t_final ** 1.5)


def _rightmost_level_position(vals: np.ndarray, coords: np.ndarray, m: float) -> float:
    """Max over rows of the rightmost m down-crossing along coords; -inf if none."""
    ge = vals >= m
    pos = np.full(vals.shape[0], -np.inf)
    down = ge[:, :-1] & ~ge[:, 1:]
    rows = np.nonzero(down.any(axis=1))[0]
    if rows.size:
        i = vals.shape[1] - 2 - np.argmax(down[rows, ::-1], axis=1)
        v0 = vals[rows, i]
        v1 = vals[rows, i + 1]
        pos[rows] = coords[i] + (coords[i + 1] - coords[i]) * (v0 - m) / (v0 - v1)
    # a row that never drops back below m extends to the box edge
    pos[ge[:, -1]] = coords[-1]
    return float(pos.max()) if pos.size else -np.inf


def front_x(field: Field, m: float) -> float:
    """Rightmost x where some trait row crosses down through level m."""
    if not 0.0 < m < 1.0:
        raise ValueError(f"level m must lie in (0,1), got {m}")
    return _rightmost_level_position(field.values, field.spec.x_coords(), m)


def front_theta(field: Field, m: float) -> float:
    """Highest theta where some back column (x <= 0) crosses down through m."""
    if not 0.0 < m < 1.0:
        raise ValueError(f"level m must lie in (0,1), got {m}")
    back = field.spec.x_coords() <= 0.0
    if not back.any():
        return -np.inf
    vals = field.values[:, back].T
    return _rightmost_level_position(vals, field.spec.theta_coords(), m)


def fit_power_law(
    times: np.ndarray,
    positions: np.ndarray,
    window: float = 0.5,
    min_position: float = 0.0,
) -> FitResult:
    """Least squares of log position on log time over the latest time window.

    `window` is the kept fraction of the time span, measured from the end;
    samples with non-positive time or with position at or below
    max(min_position, 0) are dropped (callers pass min_position = 10*dx to
    exclude the under-resolved early transient).  Needs at least 8 surviving
    samples.
    """
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if times.shape != positions.shape:
        raise ValueError("times and positions must have matching lengths")
    if not 0.0 < window <= 1.0:
        raise ValueError(f"window must lie in (0,1], got {window}")

    t_cut = times[-1] - window * (times[-1] - times[0])
    keep = (
        (times >= t_cut)
        & (times > 0.0)
        & np.isfinite(positions)
        & (positions > max(min_position, 0.0))
    )
    n = int(keep.sum())
    if n < 8:
        raise ValueError(f"need at least 8 positive samples in the fit window, got {n}")

    lt = np.log(times[keep])
    lx = np.log(positions[keep])
    design = np.column_stack([lt, np.ones_like(lt)])
    (slope, intercept), *_ = np.linalg.lstsq(design, lx, rcond=None)
    rms = float(np.sqrt(np.mean((lx - design @ [slope, intercept]) ** 2)))
    return FitResult(
        p=float(slope),
        A=float(np.exp(intercept)),
        residual=rms,
        t_lo=float(times[keep].min()),
        t_hi=float(times[keep].max()),
        n_samples=n,
    )


def fit_exponent(series: FrontSeries, window: float = 0.5, min_position: float = 0.0) -> FitResult:
    """Fit front_x ~ A * t^p on the series and record the result on it."""
    fit = fit_power_law(series.times, series.front_x, window, min_position)
    series.fit = fit
    return fit


def write_fronts(series: FrontSeries, path) -> None:
    """Write time,front_x,front_theta rows with a plain header line."""
    data = np.column_stack([series.times, series.front_x, series.front_theta])
    with open(path, "w", encoding="ascii") as fh:
        fh.write("time,front_x,front_theta\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def read_fronts(path, level: float = float("nan")) -> FrontSeries:
    """Read a fronts.csv written by :func:`write_fronts`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header.split(",")[:3] != ["time", "front_x", "front_theta"]:
            raise ValueError(f"{path}: unexpected fronts header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns, got {data.shape[1]}")
    return FrontSeries(data[:, 0], data[:, 1], data[:, 2], level=level)
