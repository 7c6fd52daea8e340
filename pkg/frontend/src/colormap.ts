/**
 * Viridis-style colormap on the fixed density scale [0, 1], so heatmap
 * panels are comparable across snapshot times and across runs.
 */

import type { Rgb } from "./raster.js";

const ANCHORS: Rgb[] = [
  [68, 1, 84],
  [71, 44, 122],
  [59, 81, 139],
  [44, 113, 142],
  [33, 144, 141],
  [39, 173, 129],
  [92, 200, 99],
  [170, 220, 50],
  [253, 231, 37],
];

/** Map a density in [0, 1] (values outside are clamped) to a color. */
export function densityColor(value: number): Rgb {
  if (!Number.isFinite(value)) {
    return [255, 0, 255];
  }
  const v = Math.min(1, Math.max(0, value));
  const pos = v * (ANCHORS.length - 1);
  const i = Math.min(ANCHORS.length - 2, Math.floor(pos));
  const f = pos - i;
  const a = ANCHORS[i];
  const b = ANCHORS[i + 1];
  return [
    Math.round(a[0] + f * (b[0] - a[0])),
    Math.round(a[1] + f * (b[1] - a[1])),
    Math.round(a[2] + f * (b[2] - a[2])),
  ];
}
