#!/usr/bin/env node
/**
 * Batch figure rendering from a simulation run directory.
 *
 *   canetoads-plots --run DIR --figure KIND --out PATH
 *
 * KIND is one of phase-heatmap-sequence, front-curve, trajectory-overlay,
 * normals-profile.  The run directory is only read; the PNG is written to
 * PATH.  Exit codes: 0 success, 1 missing or corrupt input (reported per
 * file), 2 usage error.
 */

import { pathToFileURL } from "node:url";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { FIGURE_KINDS, FigureKind, render } from "./figures.js";
import { InputError } from "./formats.js";

export function main(argv: string[]): number {
  const parser = yargs(argv)
    .usage("$0 --run DIR --figure KIND --out PATH")
    .option("run", {
      type: "string",
      demandOption: true,
      describe: "run directory produced by the simulator CLI",
    })
    .option("figure", {
      type: "string",
      choices: FIGURE_KINDS,
      demandOption: true,
      describe: "figure kind to render",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "output PNG path",
    })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new UsageError(msg ?? "invalid arguments");
    });

  let args: { run: string; figure: string; out: string };
  try {
    args = parser.parseSync() as unknown as typeof args;
  } catch (exc) {
    console.error(`usage error: ${(exc as Error).message}`);
    return 2;
  }

  try {
    render(args.run, args.figure as FigureKind, args.out);
  } catch (exc) {
    if (exc instanceof InputError) {
      console.error(`input error: ${exc.message}`);
      return 1;
    }
    console.error(`error: ${(exc as Error).message}`);
    return 1;
  }
  console.log(`wrote ${args.out}`);
  return 0;
}

class UsageError extends Error {}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  process.exit(main(hideBin(process.argv)));
}
