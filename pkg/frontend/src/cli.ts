#!/usr/bin/env node
/**
 * trace-plots: render simulator CSV output as SVG figures.
 *
 * Usage:
 *   trace-plots trace   --in trace.csv   --out fig.svg [--vars B,T] [--no-markers] [--title T]
 *   trace-plots summary --in summary.csv --out fig.svg [--vars P,B] [--title T]
 *   trace-plots sweep   --in sweep.csv   --out fig.svg [--title T]
 */

import { plotSummary, plotSweep, plotTrace, PlotSpec } from "./plot.js";

function usage(): never {
  console.error(
    "usage: trace-plots <trace|summary|sweep> --in CSV --out SVG " +
      "[--vars A,B] [--no-markers] [--title TITLE]",
  );
  process.exit(2);
}

function parseArgs(argv: string[]): { kind: string; spec: PlotSpec } {
  const [kind, ...rest] = argv;
  if (!["trace", "summary", "sweep"].includes(kind)) usage();
  let input = "";
  let output = "";
  let variables: string[] | undefined;
  let markers = true;
  let title: string | undefined;
  for (let i = 0; i < rest.length; i++) {
    switch (rest[i]) {
      case "--in":
        input = rest[++i];
        break;
      case "--out":
        output = rest[++i];
        break;
      case "--vars":
        variables = rest[++i].split(",").filter((s) => s.length > 0);
        break;
      case "--no-markers":
        markers = false;
        break;
      case "--title":
        title = rest[++i];
        break;
      default:
        usage();
    }
  }
  if (input === "" || output === "") usage();
  return { kind, spec: { input, output, variables, markers, title } };
}

export function main(argv: string[]): number {
  try {
    const { kind, spec } = parseArgs(argv);
    if (kind === "trace") plotTrace(spec);
    else if (kind === "summary") plotSummary(spec);
    else plotSweep(spec);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const invoked = process.argv[1] ?? "";
if (invoked.endsWith("cli.js") || invoked.endsWith("trace-plots")) {
  process.exit(main(process.argv.slice(2)));
}
