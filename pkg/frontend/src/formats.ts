/**
 * Parsers for the simulator's documented output formats.
 *
 * Snapshot grids: one `# nx ntheta x_min x_max theta_min theta_max time`
 * header line, then ntheta comma-separated rows of nx values (row j holds
 * the values along x at the j-th trait node, bottom row = trait wall).
 *
 * Column tables (fronts.csv, normals.csv, ordering.csv, domination.csv):
 * a plain header line naming the columns, then numeric rows.  Level-set
 * columns may contain `inf`/`-inf`/`nan` tokens for undefined positions.
 *
 * JSON reports (summary.json, fit.json, report.json): standard JSON except
 * that numeric fields may hold the bare tokens NaN/Infinity/-Infinity,
 * which `JSON.parse` rejects; `parseJsonLoose` maps them to null without
 * touching string values.
 */

import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

/** A malformed or missing input, tagged with the offending file. */
export class InputError extends Error {
  readonly file: string;

  constructor(file: string, message: string) {
    super(`${file}: ${message}`);
    this.name = "InputError";
    this.file = file;
  }
}

export interface SnapshotGrid {
  nx: number;
  ntheta: number;
  xMin: number;
  xMax: number;
  thetaMin: number;
  thetaMax: number;
  time: number;
  /** ntheta rows of nx values, trait wall first. */
  values: Float64Array[];
}

export interface ColumnTable {
  names: string[];
  columns: Record<string, Float64Array>;
  rows: number;
}

/** Parse one numeric token, accepting the writer's inf/nan spellings. */
export function parseNumber(token: string, file: string): number {
  const t = token.trim();
  switch (t.toLowerCase()) {
    case "nan":
      return NaN;
    case "inf":
    case "infinity":
      return Infinity;
    case "-inf":
    case "-infinity":
      return -Infinity;
  }
  if (t === "") {
    throw new InputError(file, "empty numeric field");
  }
  const value = Number(t);
  if (Number.isNaN(value)) {
    throw new InputError(file, `not a number: ${JSON.stringify(token)}`);
  }
  return value;
}

export function parseSnapshot(text: string, file: string): SnapshotGrid {
  const lines = text.split("\n").filter((line) => line.trim() !== "");
  if (lines.length === 0 || !lines[0].startsWith("#")) {
    throw new InputError(file, "missing snapshot header row");
  }
  const head = lines[0].slice(1).trim().split(/\s+/);
  if (head.length !== 7) {
    throw new InputError(file, `header must hold 7 values, got ${head.length}`);
  }
  const [nx, ntheta] = [parseInt(head[0], 10), parseInt(head[1], 10)];
  const [xMin, xMax, thetaMin, thetaMax, time] = head
    .slice(2)
    .map((tok) => parseNumber(tok, file));
  if (!Number.isInteger(nx) || !Number.isInteger(ntheta) || nx < 2 || ntheta < 2) {
    throw new InputError(file, `bad grid shape ${head[0]} x ${head[1]}`);
  }
  if (lines.length - 1 !== ntheta) {
    throw new InputError(file, `expected ${ntheta} data rows, got ${lines.length - 1}`);
  }
  const values: Float64Array[] = [];
  for (let j = 0; j < ntheta; j += 1) {
    const tokens = lines[j + 1].split(",");
    if (tokens.length !== nx) {
      throw new InputError(file, `row ${j}: expected ${nx} values, got ${tokens.length}`);
    }
    values.push(Float64Array.from(tokens, (tok) => parseNumber(tok, file)));
  }
  return { nx, ntheta, xMin, xMax, thetaMin, thetaMax, time, values };
}

export function parseColumnCsv(
  text: string,
  file: string,
  expected?: string[],
): ColumnTable {
  const lines = text.split("\n").filter((line) => line.trim() !== "");
  if (lines.length === 0) {
    throw new InputError(file, "empty table");
  }
  const names = lines[0].split(",").map((name) => name.trim());
  if (expected) {
    for (const name of expected) {
      if (!names.includes(name)) {
        throw new InputError(file, `missing column ${JSON.stringify(name)}`);
      }
    }
  }
  const rows = lines.length - 1;
  const columns: Record<string, Float64Array> = {};
  for (const name of names) {
    columns[name] = new Float64Array(rows);
  }
  for (let i = 0; i < rows; i += 1) {
    const tokens = lines[i + 1].split(",");
    if (tokens.length !== names.length) {
      throw new InputError(
        file,
        `row ${i}: expected ${names.length} fields, got ${tokens.length}`,
      );
    }
    tokens.forEach((tok, k) => {
      columns[names[k]][i] = parseNumber(tok, file);
    });
  }
  return { names, columns, rows };
}

/**
 * JSON.parse after mapping bare NaN/Infinity/-Infinity tokens (as emitted
 * for non-finite floats) to null.  Tokens inside string literals are left
 * alone; the scan tracks quoting and escapes.
 */
export function parseJsonLoose(text: string, file: string): unknown {
  let out = "";
  let i = 0;
  let inString = false;
  while (i < text.length) {
    const ch = text[i];
    if (inString) {
      out += ch;
      if (ch === "\\") {
        out += text[i + 1] ?? "";
        i += 2;
        continue;
      }
      if (ch === '"') {
        inString = false;
      }
      i += 1;
      continue;
    }
    if (ch === '"') {
      inString = true;
      out += ch;
      i += 1;
      continue;
    }
    if (text.startsWith("NaN", i)) {
      out += "null";
      i += 3;
      continue;
    }
    if (text.startsWith("-Infinity", i)) {
      out += "null";
      i += 9;
      continue;
    }
    if (text.startsWith("Infinity", i)) {
      out += "null";
      i += 8;
      continue;
    }
    out += ch;
    i += 1;
  }
  try {
    return JSON.parse(out);
  } catch (exc) {
    throw new InputError(file, `invalid JSON: ${(exc as Error).message}`);
  }
}

export function readText(file: string): string {
  try {
    return readFileSync(file, "ascii");
  } catch (exc) {
    throw new InputError(file, `cannot read: ${(exc as NodeJS.ErrnoException).code}`);
  }
}

export function readSnapshot(file: string): SnapshotGrid {
  return parseSnapshot(readText(file), file);
}

export function readColumnCsv(file: string, expected?: string[]): ColumnTable {
  return parseColumnCsv(readText(file), file, expected);
}

export function readJsonLoose(file: string): unknown {
  return parseJsonLoose(readText(file), file);
}

/** Sorted density snapshot paths of a run directory (rho files excluded). */
export function listSnapshots(runDir: string): string[] {
  let entries: string[];
  try {
    entries = readdirSync(runDir);
  } catch (exc) {
    throw new InputError(
      runDir,
      `cannot list run directory: ${(exc as NodeJS.ErrnoException).code}`,
    );
  }
  return entries
    .filter((name) => /^snapshot_\d+\.csv$/.test(name))
    .sort()
    .map((name) => join(runDir, name));
}
