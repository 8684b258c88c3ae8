#!/usr/bin/env node
/**
 * make-figures --in DIR --out DIR [--fig ID]
 *
 * Renders figure SVGs from an experiment output directory (the harness's
 * aggregate.csv, run_000.csv, and layout.txt). Without --fig, every figure
 * whose inputs are present in DIR is rendered; with --fig, that figure's
 * inputs are required and any problem is a hard error.
 */

import { FIGURE_IDS, FigureId, renderFigure } from "./figures.js";

interface Args {
  inDir: string;
  outDir: string;
  fig: FigureId | null;
}

function parseArgs(argv: string[]): Args {
  let inDir = "";
  let outDir = "";
  let fig: FigureId | null = null;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--in") inDir = argv[++i] ?? "";
    else if (a === "--out") outDir = argv[++i] ?? "";
    else if (a === "--fig") {
      const v = argv[++i] ?? "";
      if (!(FIGURE_IDS as readonly string[]).includes(v)) {
        throw new Error(`unknown figure id "${v}"; choose from ${FIGURE_IDS.join(", ")}`);
      }
      fig = v as FigureId;
    } else if (a === "--help" || a === "-h") {
      console.log("usage: make-figures --in DIR --out DIR [--fig ID]");
      process.exit(0);
    } else {
      throw new Error(`unknown argument "${a}"`);
    }
  }
  if (!inDir || !outDir) {
    throw new Error("both --in and --out are required");
  }
  return { inDir, outDir, fig };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  const targets = args.fig ? [args.fig] : [...FIGURE_IDS];
  const rendered: string[] = [];
  const skipped: string[] = [];
  for (const figId of targets) {
    try {
      rendered.push(renderFigure(figId, args.inDir, args.outDir));
    } catch (err) {
      if (args.fig) {
        console.error(`error rendering ${figId}: ${(err as Error).message}`);
        return 1;
      }
      skipped.push(`${figId} (${(err as Error).message})`);
    }
  }
  for (const path of rendered) console.log(`wrote ${path}`);
  if (skipped.length) {
    console.log(`skipped: ${skipped.join("; ")}`);
  }
  if (rendered.length === 0) {
    console.error("error: no figures could be rendered from the given inputs");
    return 1;
  }
  return 0;
}

if (process.argv[1] && /cli\.(js|ts)$/.test(process.argv[1])) {
  process.exit(main(process.argv.slice(2)));
}
