/**
 * Minimal RGBA raster with line, rectangle, and bitmap-text primitives,
 * saved as PNG.  Enough for offline scientific figures; no font files or
 * native canvas needed.
 */

import { writeFileSync } from "node:fs";
import { PNG } from "pngjs";

export type Rgb = readonly [number, number, number];

export const BLACK: Rgb = [0, 0, 0];
export const WHITE: Rgb = [255, 255, 255];
export const GREY: Rgb = [150, 150, 150];
export const LIGHT_GREY: Rgb = [225, 225, 225];
export const BLUE: Rgb = [31, 119, 180];
export const ORANGE: Rgb = [255, 127, 14];
export const GREEN: Rgb = [44, 160, 44];
export const RED: Rgb = [214, 39, 40];

// 5x7 glyphs; each string row is 5 cells, 'X' = on.  Lowercase letters,
// digits, and the punctuation used by the figure labels.
const GLYPHS: Record<string, string[]> = {
  "0": [".XXX.", "X...X", "X..XX", "X.X.X", "XX..X", "X...X", ".XXX."],
  "1": ["..X..", ".XX..", "..X..", "..X..", "..X..", "..X..", ".XXX."],
  "2": [".XXX.", "X...X", "....X", "...X.", "..X..", ".X...", "XXXXX"],
  "3": ["XXXXX", "....X", "...X.", "..XX.", "....X", "X...X", ".XXX."],
  "4": ["...X.", "..XX.", ".X.X.", "X..X.", "XXXXX", "...X.", "...X."],
  "5": ["XXXXX", "X....", "XXXX.", "....X", "....X", "X...X", ".XXX."],
  "6": ["..XX.", ".X...", "X....", "XXXX.", "X...X", "X...X", ".XXX."],
  "7": ["XXXXX", "....X", "...X.", "..X..", ".X...", ".X...", ".X..."],
  "8": [".XXX.", "X...X", "X...X", ".XXX.", "X...X", "X...X", ".XXX."],
  "9": [".XXX.", "X...X", "X...X", ".XXXX", "....X", "...X.", ".XX.."],
  a: [".....", ".....", ".XXX.", "....X", ".XXXX", "X...X", ".XXXX"],
  b: ["X....", "X....", "X.XX.", "XX..X", "X...X", "X...X", "XXXX."],
  c: [".....", ".....", ".XXX.", "X....", "X....", "X...X", ".XXX."],
  d: ["....X", "....X", ".XX.X", "X..XX", "X...X", "X...X", ".XXXX"],
  e: [".....", ".....", ".XXX.", "X...X", "XXXXX", "X....", ".XXX."],
  f: ["..XX.", ".X..X", ".X...", "XXX..", ".X...", ".X...", ".X..."],
  g: [".....", ".XXXX", "X...X", "X...X", ".XXXX", "....X", ".XXX."],
  h: ["X....", "X....", "X.XX.", "XX..X", "X...X", "X...X", "X...X"],
  i: ["..X..", ".....", ".XX..", "..X..", "..X..", "..X..", ".XXX."],
  j: ["...X.", ".....", "..XX.", "...X.", "...X.", "X..X.", ".XX.."],
  k: ["X....", "X....", "X..X.", "X.X..", "XX...", "X.X..", "X..X."],
  l: [".XX..", "..X..", "..X..", "..X..", "..X..", "..X..", ".XXX."],
  m: [".....", ".....", "XX.X.", "X.X.X", "X.X.X", "X.X.X", "X.X.X"],
  n: [".....", ".....", "X.XX.", "XX..X", "X...X", "X...X", "X...X"],
  o: [".....", ".....", ".XXX.", "X...X", "X...X", "X...X", ".XXX."],
  p: [".....", ".....", "XXXX.", "X...X", "XXXX.", "X....", "X...."],
  q: [".....", ".....", ".XXXX", "X...X", ".XXXX", "....X", "....X"],
  r: [".....", ".....", "X.XX.", "XX...", "X....", "X....", "X...."],
  s: [".....", ".....", ".XXXX", "X....", ".XXX.", "....X", "XXXX."],
  t: [".X...", ".X...", "XXXX.", ".X...", ".X...", ".X..X", "..XX."],
  u: [".....", ".....", "X...X", "X...X", "X...X", "X..XX", ".XX.X"],
  v: [".....", ".....", "X...X", "X...X", "X...X", ".X.X.", "..X.."],
  w: [".....", ".....", "X...X", "X.X.X", "X.X.X", "X.X.X", ".X.X."],
  x: [".....", ".....", "X...X", ".X.X.", "..X..", ".X.X.", "X...X"],
  y: [".....", "X...X", "X...X", ".XXXX", "....X", "X...X", ".XXX."],
  z: [".....", ".....", "XXXXX", "...X.", "..X..", ".X...", "XXXXX"],
  ".": [".....", ".....", ".....", ".....", ".....", ".XX..", ".XX.."],
  ",": [".....", ".....", ".....", ".....", "..XX.", "..X..", ".X..."],
  "-": [".....", ".....", ".....", "XXXXX", ".....", ".....", "....."],
  "+": [".....", "..X..", "..X..", "XXXXX", "..X..", "..X..", "....."],
  "=": [".....", ".....", "XXXXX", ".....", "XXXXX", ".....", "....."],
  ":": [".....", ".XX..", ".XX..", ".....", ".XX..", ".XX..", "....."],
  "(": ["...X.", "..X..", ".X...", ".X...", ".X...", "..X..", "...X."],
  ")": [".X...", "..X..", "...X.", "...X.", "...X.", "..X..", ".X..."],
  "/": ["....X", "...X.", "...X.", "..X..", ".X...", ".X...", "X...."],
  "^": ["..X..", ".X.X.", "X...X", ".....", ".....", ".....", "....."],
  "|": ["..X..", "..X..", "..X..", "..X..", "..X..", "..X..", "..X.."],
  " ": [".....", ".....", ".....", ".....", ".....", ".....", "....."],
};

export const GLYPH_W = 6; // 5 cells + 1 gap
export const GLYPH_H = 9; // 7 cells + 2 leading

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, background: Rgb = WHITE) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4);
    for (let i = 0; i < width * height; i += 1) {
      this.data[4 * i] = background[0];
      this.data[4 * i + 1] = background[1];
      this.data[4 * i + 2] = background[2];
      this.data[4 * i + 3] = 255;
    }
  }

  set(x: number, y: number, color: Rgb): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) {
      return;
    }
    const i = 4 * (y * this.width + x);
    this.data[i] = color[0];
    this.data[i + 1] = color[1];
    this.data[i + 2] = color[2];
    this.data[i + 3] = 255;
  }

  get(x: number, y: number): Rgb {
    const i = 4 * (y * this.width + x);
    return [this.data[i], this.data[i + 1], this.data[i + 2]];
  }

  fillRect(x0: number, y0: number, w: number, h: number, color: Rgb): void {
    for (let y = y0; y < y0 + h; y += 1) {
      for (let x = x0; x < x0 + w; x += 1) {
        this.set(x, y, color);
      }
    }
  }

  strokeRect(x0: number, y0: number, w: number, h: number, color: Rgb): void {
    this.line(x0, y0, x0 + w - 1, y0, color);
    this.line(x0, y0 + h - 1, x0 + w - 1, y0 + h - 1, color);
    this.line(x0, y0, x0, y0 + h - 1, color);
    this.line(x0 + w - 1, y0, x0 + w - 1, y0 + h - 1, color);
  }

  /** Bresenham segment between rounded endpoints; `dash` skips cells. */
  line(ax: number, ay: number, bx: number, by: number, color: Rgb, dash = 0): void {
    let x0 = Math.round(ax);
    let y0 = Math.round(ay);
    const x1 = Math.round(bx);
    const y1 = Math.round(by);
    const dx = Math.abs(x1 - x0);
    const dy = -Math.abs(y1 - y0);
    const sx = x0 < x1 ? 1 : -1;
    const sy = y0 < y1 ? 1 : -1;
    let err = dx + dy;
    let step = 0;
    for (;;) {
      if (dash === 0 || step % (2 * dash) < dash) {
        this.set(x0, y0, color);
      }
      step += 1;
      if (x0 === x1 && y0 === y1) {
        break;
      }
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  polyline(xs: number[], ys: number[], color: Rgb, dash = 0): void {
    for (let i = 1; i < xs.length; i += 1) {
      const ok =
        Number.isFinite(xs[i - 1]) &&
        Number.isFinite(ys[i - 1]) &&
        Number.isFinite(xs[i]) &&
        Number.isFinite(ys[i]);
      if (ok) {
        this.line(xs[i - 1], ys[i - 1], xs[i], ys[i], color, dash);
      }
    }
  }

  /** Draw lowercase bitmap text; unknown characters render as blanks. */
  text(x: number, y: number, str: string, color: Rgb, scale = 1): void {
    let cx = Math.round(x);
    const cy = Math.round(y);
    for (const raw of str.toLowerCase()) {
      const glyph = GLYPHS[raw] ?? GLYPHS[" "];
      for (let r = 0; r < 7; r += 1) {
        for (let c = 0; c < 5; c += 1) {
          if (glyph[r][c] === "X") {
            for (let dy = 0; dy < scale; dy += 1) {
              for (let dx = 0; dx < scale; dx += 1) {
                this.set(cx + c * scale + dx, cy + r * scale + dy, color);
              }
            }
          }
        }
      }
      cx += GLYPH_W * scale;
    }
  }

  textWidth(str: string, scale = 1): number {
    return str.length * GLYPH_W * scale;
  }

  save(path: string): void {
    const png = new PNG({ width: this.width, height: this.height });
    png.data = Buffer.from(this.data);
    writeFileSync(path, PNG.sync.write(png));
  }
}

/** Round-number tick positions covering [lo, hi], at most `count + 1`. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(Number.isFinite(lo) && Number.isFinite(hi)) || hi <= lo) {
    return [lo];
  }
  const rawStep = (hi - lo) / count;
  const mag = 10 ** Math.floor(Math.log10(rawStep));
  let step = mag;
  for (const mult of [1, 2, 2.5, 5, 10]) {
    if (mult * mag >= rawStep) {
      step = mult * mag;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * step ? 0 : v);
  }
  return ticks;
}

/** Compact label for a tick or annotation value. */
export function formatNumber(value: number): string {
  if (!Number.isFinite(value)) {
    return String(value);
  }
  if (value === 0) {
    return "0";
  }
  const abs = Math.abs(value);
  if (abs >= 1e5 || abs < 1e-3) {
    return value.toExponential(2).replace("e+", "e");
  }
  const fixed = value.toPrecision(6);
  return fixed.includes(".") ? fixed.replace(/\.?0+$/, "") : fixed;
}

/**
 * A data-to-pixel frame with axes, ticks, and labels drawn on a raster.
 * The y axis points up (data maxima at the top of the plot box).
 */
export class Chart {
  readonly raster: Raster;
  readonly left: number;
  readonly top: number;
  readonly plotW: number;
  readonly plotH: number;
  readonly xLo: number;
  readonly xHi: number;
  readonly yLo: number;
  readonly yHi: number;

  constructor(
    raster: Raster,
    box: { left: number; top: number; width: number; height: number },
    xRange: [number, number],
    yRange: [number, number],
  ) {
    this.raster = raster;
    this.left = box.left;
    this.top = box.top;
    this.plotW = box.width;
    this.plotH = box.height;
    [this.xLo, this.xHi] = xRange;
    [this.yLo, this.yHi] = yRange;
    if (!(this.xHi > this.xLo) || !(this.yHi > this.yLo)) {
      throw new Error("chart ranges must be nonempty");
    }
  }

  px(x: number): number {
    return this.left + ((x - this.xLo) / (this.xHi - this.xLo)) * (this.plotW - 1);
  }

  py(y: number): number {
    return this.top + (1 - (y - this.yLo) / (this.yHi - this.yLo)) * (this.plotH - 1);
  }

  drawAxes(xLabel: string, yLabel: string, title = ""): void {
    const r = this.raster;
    r.strokeRect(this.left, this.top, this.plotW, this.plotH, BLACK);
    for (const tick of niceTicks(this.xLo, this.xHi)) {
      const x = Math.round(this.px(tick));
      r.line(x, this.top + this.plotH, x, this.top + this.plotH + 4, BLACK);
      r.line(x, this.top, x, this.top + this.plotH - 1, LIGHT_GREY, 2);
      const label = formatNumber(tick);
      r.text(x - r.textWidth(label) / 2, this.top + this.plotH + 7, label, BLACK);
    }
    for (const tick of niceTicks(this.yLo, this.yHi)) {
      const y = Math.round(this.py(tick));
      r.line(this.left - 4, y, this.left, y, BLACK);
      r.line(this.left + 1, y, this.left + this.plotW - 2, y, LIGHT_GREY, 2);
      const label = formatNumber(tick);
      r.text(this.left - 6 - r.textWidth(label), y - 3, label, BLACK);
    }
    r.text(
      this.left + this.plotW / 2 - r.textWidth(xLabel) / 2,
      this.top + this.plotH + 20,
      xLabel,
      BLACK,
    );
    r.text(this.left, this.top - 14, yLabel, BLACK);
    if (title) {
      r.text(
        this.left + this.plotW / 2 - r.textWidth(title) / 2,
        this.top - 14,
        title,
        BLACK,
      );
    }
  }

  plotLine(xs: ArrayLike<number>, ys: ArrayLike<number>, color: Rgb, dash = 0): void {
    const pxs: number[] = [];
    const pys: number[] = [];
    for (let i = 0; i < xs.length; i += 1) {
      pxs.push(this.px(xs[i]));
      pys.push(this.py(ys[i]));
    }
    this.raster.polyline(pxs, pys, color, dash);
  }
}

/** Finite data range [lo, hi], padded, for axis construction. */
export function dataRange(values: ArrayLike<number>, padFraction = 0.05): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < values.length; i += 1) {
    const v = values[i];
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!(hi >= lo)) {
    throw new Error("no finite values to range");
  }
  const pad = (hi - lo || Math.max(Math.abs(hi), 1)) * padFraction;
  return [lo - pad, hi + pad];
}
