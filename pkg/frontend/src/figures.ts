/**
 * The four figure kinds rendered from a run directory:
 *
 * - phase-heatmap-sequence: every stored density snapshot as an (x, theta)
 *   heatmap panel, side by side in time order, on the fixed [0, 1] color
 *   scale, with a shared colorbar.
 * - front-curve: front_x against time with a fitted a*t^1.5 guide curve.
 * - trajectory-overlay: the two-leg bump path in the (x, theta) plane over
 *   the initially occupied block, from a subsolution run summary.
 * - normals-profile: |dn phi+| and |dn phi-| against boundary angle.
 *
 * Rendering is read-only on the run directory; axis ranges always come
 * from the input file headers.
 */

import { join } from "node:path";

import { densityColor } from "./colormap.js";
import {
  InputError,
  SnapshotGrid,
  listSnapshots,
  readColumnCsv,
  readJsonLoose,
  readSnapshot,
} from "./formats.js";
import {
  BLACK,
  BLUE,
  Chart,
  GREEN,
  GREY,
  LIGHT_GREY,
  ORANGE,
  Raster,
  RED,
  Rgb,
  dataRange,
  formatNumber,
} from "./raster.js";

export type FigureKind =
  | "phase-heatmap-sequence"
  | "front-curve"
  | "trajectory-overlay"
  | "normals-profile";

export const FIGURE_KINDS: FigureKind[] = [
  "phase-heatmap-sequence",
  "front-curve",
  "trajectory-overlay",
  "normals-profile",
];

const PANEL_W = 260;
const PANEL_H = 200;
const MARGIN_L = 64;
const MARGIN_R = 20;
const MARGIN_T = 40;
const MARGIN_B = 48;
const GAP = 14;
const BAR_W = 16;

export function render(runDir: string, figure: FigureKind, outPath: string): void {
  switch (figure) {
    case "phase-heatmap-sequence":
      renderHeatmapSequence(runDir, outPath);
      break;
    case "front-curve":
      renderFrontCurve(runDir, outPath);
      break;
    case "trajectory-overlay":
      renderTrajectoryOverlay(runDir, outPath);
      break;
    case "normals-profile":
      renderNormalsProfile(runDir, outPath);
      break;
  }
}

// ---------------------------------------------------------------------------
// phase-heatmap-sequence

export function renderHeatmapSequence(runDir: string, outPath: string): void {
  const paths = listSnapshots(runDir);
  if (paths.length === 0) {
    throw new InputError(runDir, "no snapshot_*.csv files in the run directory");
  }
  const grids = paths.map(readSnapshot);

  const n = grids.length;
  const width = MARGIN_L + n * PANEL_W + (n - 1) * GAP + 2 * GAP + BAR_W + MARGIN_R + 34;
  const height = MARGIN_T + PANEL_H + MARGIN_B;
  const raster = new Raster(width, height);

  grids.forEach((grid, k) => {
    const left = MARGIN_L + k * (PANEL_W + GAP);
    drawHeatmapPanel(raster, grid, left, MARGIN_T, k === 0);
  });
  drawColorbar(raster, MARGIN_L + n * PANEL_W + (n - 1) * GAP + 2 * GAP, MARGIN_T);
  raster.text(MARGIN_L, 8, "density u(x, theta) over time", BLACK);
  raster.save(outPath);
}

function drawHeatmapPanel(
  raster: Raster,
  grid: SnapshotGrid,
  left: number,
  top: number,
  withThetaTicks: boolean,
): void {
  const dx = (grid.xMax - grid.xMin) / (grid.nx - 1);
  const dt = (grid.thetaMax - grid.thetaMin) / (grid.ntheta - 1);
  for (let py = 0; py < PANEL_H; py += 1) {
    const theta = grid.thetaMax - (py / (PANEL_H - 1)) * (grid.thetaMax - grid.thetaMin);
    const j = Math.min(grid.ntheta - 1, Math.max(0, Math.round((theta - grid.thetaMin) / dt)));
    const row = grid.values[j];
    for (let px = 0; px < PANEL_W; px += 1) {
      const x = grid.xMin + (px / (PANEL_W - 1)) * (grid.xMax - grid.xMin);
      const i = Math.min(grid.nx - 1, Math.max(0, Math.round((x - grid.xMin) / dx)));
      raster.set(left + px, top + py, densityColor(row[i]));
    }
  }
  raster.strokeRect(left, top, PANEL_W, PANEL_H, BLACK);
  const caption = `t = ${formatNumber(grid.time)}`;
  raster.text(left + PANEL_W / 2 - raster.textWidth(caption) / 2, top - 14, caption, BLACK);

  // x range labels under the panel, theta range labels beside the first one
  const xLo = formatNumber(grid.xMin);
  const xHi = formatNumber(grid.xMax);
  raster.text(left, top + PANEL_H + 6, xLo, BLACK);
  raster.text(left + PANEL_W - raster.textWidth(xHi), top + PANEL_H + 6, xHi, BLACK);
  raster.text(left + PANEL_W / 2 - raster.textWidth("x") / 2, top + PANEL_H + 20, "x", BLACK);
  if (withThetaTicks) {
    const tLo = formatNumber(grid.thetaMin);
    const tHi = formatNumber(grid.thetaMax);
    raster.text(left - 6 - raster.textWidth(tHi), top, tHi, BLACK);
    raster.text(left - 6 - raster.textWidth(tLo), top + PANEL_H - 8, tLo, BLACK);
    raster.text(left - 6 - raster.textWidth("theta"), top + PANEL_H / 2 - 4, "theta", BLACK);
  }
}

function drawColorbar(raster: Raster, left: number, top: number): void {
  for (let py = 0; py < PANEL_H; py += 1) {
    const v = 1 - py / (PANEL_H - 1);
    for (let px = 0; px < BAR_W; px += 1) {
      raster.set(left + px, top + py, densityColor(v));
    }
  }
  raster.strokeRect(left, top, BAR_W, PANEL_H, BLACK);
  raster.text(left + BAR_W + 4, top, "1", BLACK);
  raster.text(left + BAR_W + 4, top + PANEL_H - 8, "0", BLACK);
  raster.text(left + BAR_W + 4, top + PANEL_H / 2 - 4, "u", BLACK);
}

// ---------------------------------------------------------------------------
// front-curve

/**
 * Least-squares amplitude of x ~ a * t^1.5 over the positive, finite
 * samples: a = sum(x * t^1.5) / sum(t^3).  For data lying exactly on a
 * power curve the recovered amplitude is exact.
 */
export function fitGuideAmplitude(times: ArrayLike<number>, xs: ArrayLike<number>): number {
  let num = 0;
  let den = 0;
  for (let i = 0; i < times.length; i += 1) {
    const t = times[i];
    const x = xs[i];
    if (t > 0 && Number.isFinite(x) && x > 0) {
      const w = Math.pow(t, 1.5);
      num += x * w;
      den += w * w;
    }
  }
  if (den === 0) {
    throw new Error("no positive front samples to fit");
  }
  return num / den;
}

export function renderFrontCurve(runDir: string, outPath: string): void {
  const file = join(runDir, "fronts.csv");
  const table = readColumnCsv(file, ["time", "front_x"]);
  const times = table.columns.time;
  const xs = table.columns.front_x;
  const amplitude = fitGuideAmplitude(times, xs);

  const width = 560;
  const height = 400;
  const raster = new Raster(width, height);
  const chart = new Chart(
    raster,
    { left: 70, top: 40, width: width - 100, height: height - 110 },
    dataRange(times, 0.02),
    dataRange(xs, 0.05),
  );
  chart.drawAxes("time", "front x", "space front and t^1.5 guide");

  const guide = Float64Array.from(times, (t) => (t > 0 ? amplitude * Math.pow(t, 1.5) : 0));
  chart.plotLine(times, guide, RED, 3);
  chart.plotLine(times, xs, BLUE);

  raster.text(78, 48, "front x(t)", BLUE);
  raster.text(78, 60, `guide a t^1.5, a = ${formatNumber(amplitude)}`, RED);
  raster.save(outPath);
}

// ---------------------------------------------------------------------------
// trajectory-overlay

interface TrajectorySummary {
  xHold: number;
  thetaStart: number;
  thetaMid: number;
  runRate: number;
  horizon: number;
  lam: number;
  thetaMin: number;
}

function trajectoryFromSummary(runDir: string): TrajectorySummary {
  const file = join(runDir, "summary.json");
  const summary = readJsonLoose(file) as Record<string, unknown>;
  const traj = summary?.trajectory as Record<string, unknown> | undefined;
  const config = summary?.config as Record<string, Record<string, string>> | undefined;
  if (!traj || !config?.model) {
    throw new InputError(file, "not a subsolution run summary (no trajectory block)");
  }
  const num = (value: unknown, name: string): number => {
    const v = typeof value === "string" ? Number(value) : (value as number);
    if (typeof v !== "number" || !Number.isFinite(v)) {
      throw new InputError(file, `missing or non-finite field ${name}`);
    }
    return v;
  };
  return {
    xHold: num(traj.x_hold, "trajectory.x_hold"),
    thetaStart: num(traj.theta_start, "trajectory.theta_start"),
    thetaMid: num(traj.theta_mid, "trajectory.theta_mid"),
    runRate: num(traj.run_rate, "trajectory.run_rate"),
    horizon: num(config.model.horizon, "config.model.horizon"),
    lam: num(config.model.lam, "config.model.lam"),
    thetaMin: num(config.model.theta_min, "config.model.theta_min"),
  };
}

export function renderTrajectoryOverlay(runDir: string, outPath: string): void {
  const traj = trajectoryFromSummary(runDir);
  const xEnd = traj.xHold + traj.runRate * (traj.horizon / 2);
  const thetaTop = (1 + traj.lam) * traj.thetaMin;

  const xSpan = Math.max(xEnd, 0) - traj.xHold;
  const xLo = traj.xHold - 0.08 * xSpan;
  const xHi = Math.max(xEnd, 0) + 0.08 * xSpan;
  const yHi = 1.06 * Math.max(thetaTop, traj.thetaMid);

  const width = 560;
  const height = 420;
  const raster = new Raster(width, height);
  const chart = new Chart(
    raster,
    { left: 76, top: 40, width: width - 106, height: height - 116 },
    [xLo, xHi],
    [0, yHi],
  );

  // initially occupied block (-inf, 0] x [theta_min, (1+lam) theta_min],
  // clipped to the plot window
  const bx0 = Math.round(chart.px(xLo));
  const bx1 = Math.round(chart.px(Math.min(0, xHi)));
  const by0 = Math.round(chart.py(thetaTop));
  const by1 = Math.round(chart.py(traj.thetaMin));
  raster.fillRect(bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1, LIGHT_GREY);

  chart.drawAxes("x", "theta", "bump trajectory over the occupied block");

  // leg 1: hold x, climb the trait axis; leg 2: run in space
  chart.plotLine(
    [traj.xHold, traj.xHold, xEnd],
    [traj.thetaStart, traj.thetaMid, traj.thetaMid],
    BLUE,
  );
  const mark = (x: number, y: number, color: Rgb): void => {
    raster.fillRect(Math.round(chart.px(x)) - 2, Math.round(chart.py(y)) - 2, 5, 5, color);
  };
  mark(traj.xHold, traj.thetaStart, GREEN);
  mark(xEnd, traj.thetaMid, RED);

  raster.text(80, 48, "path (x(t), theta(t))", BLUE);
  raster.text(80, 60, "occupied block at t = 0", GREY);
  raster.save(outPath);
}

// ---------------------------------------------------------------------------
// normals-profile

export function renderNormalsProfile(runDir: string, outPath: string): void {
  const file = join(runDir, "normals.csv");
  const table = readColumnCsv(file, ["angle", "slope_plus", "slope_minus"]);
  const angles = table.columns.angle;
  const plus = Float64Array.from(table.columns.slope_plus, Math.abs);
  const minus = Float64Array.from(table.columns.slope_minus, Math.abs);

  const both = Float64Array.from([...plus, ...minus]);
  const width = 560;
  const height = 400;
  const raster = new Raster(width, height);
  const chart = new Chart(
    raster,
    { left: 70, top: 40, width: width - 100, height: height - 110 },
    dataRange(angles, 0.02),
    [0, dataRange(both, 0.08)[1]],
  );
  chart.drawAxes("angle", "slope", "wall slopes on the gluing ring");
  chart.plotLine(angles, plus, BLUE);
  chart.plotLine(angles, minus, ORANGE);
  raster.text(78, 48, "|dn phi+|", BLUE);
  raster.text(78, 60, "|dn phi-|", ORANGE);
  raster.save(outPath);
}
