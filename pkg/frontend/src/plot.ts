/**
 * The three figure builders: single trajectories with event markers,
 * replication means with sd bands, and sweep cost curves with the
 * minimum highlighted.
 */

import { writeFileSync } from "fs";
import { availableColumns, readSummary, readSweep, readTrace } from "./csv.js";
import { Chart, STYLE, extent } from "./svg.js";

export interface PlotSpec {
  input: string;
  output: string;
  /** variables to draw; defaults to every variable in the file */
  variables?: string[];
  /** vertical jump-event markers (trace plots only) */
  markers?: boolean;
  title?: string;
}

function pickVariables(requested: string[] | undefined, present: string[],
                       input: string): string[] {
  if (requested === undefined || requested.length === 0) return present;
  for (const v of requested) {
    if (!present.includes(v)) {
      throw new Error(
        `no column ${v} in ${input}; available: ${present.join(", ")}`,
      );
    }
  }
  return requested;
}

export function plotTrace(spec: PlotSpec): void {
  const data = readTrace(spec.input);
  const vars = pickVariables(spec.variables, data.variables, spec.input);
  const chart = new Chart(
    extent([data.t]),
    extent(vars.map((v) => data.values.get(v)!)),
    spec.title ?? "Trajectory",
    "time",
    "value",
  );
  if (spec.markers !== false) {
    for (const j of data.jumps) chart.verticalMarker(j.t, j.event);
  }
  vars.forEach((v, i) => {
    chart.line(data.t, data.values.get(v)!,
               STYLE.palette[i % STYLE.palette.length], v);
  });
  writeFileSync(spec.output, chart.render());
}

export function plotSummary(spec: PlotSpec): void {
  const data = readSummary(spec.input);
  const vars = pickVariables(spec.variables, data.variables, spec.input);
  const bands = vars.map((v) => {
    const m = data.mean.get(v)!;
    const s = data.sd.get(v)!;
    return {
      v,
      lo: m.map((x, i) => x - s[i]),
      hi: m.map((x, i) => x + s[i]),
    };
  });
  const chart = new Chart(
    extent([data.t]),
    extent(bands.flatMap((b) => [b.lo, b.hi])),
    spec.title ?? "Replication mean",
    "time",
    "mean value",
  );
  bands.forEach((b, i) => {
    const color = STYLE.palette[i % STYLE.palette.length];
    chart.band(data.t, b.lo, b.hi, color);
    chart.line(data.t, data.mean.get(b.v)!, color, b.v);
  });
  writeFileSync(spec.output, chart.render());
}

export function plotSweep(spec: PlotSpec): void {
  const data = readSweep(spec.input);
  const lo = data.meanCost.map((m, i) => m - data.stdError[i]);
  const hi = data.meanCost.map((m, i) => m + data.stdError[i]);
  const chart = new Chart(
    extent([data.values]),
    extent([lo, hi]),
    spec.title ?? `Mean cost vs ${data.param}`,
    data.param,
    "mean cost",
  );
  chart.line(data.values, data.meanCost, STYLE.palette[0]);
  data.values.forEach((x, i) => {
    chart.errorBar(x, data.meanCost[i], data.stdError[i], STYLE.palette[0]);
    chart.point(x, data.meanCost[i], STYLE.palette[0]);
  });
  let best = 0;
  data.meanCost.forEach((m, i) => {
    if (m < data.meanCost[best]) best = i;
  });
  chart.minimumMarker(
    data.values[best],
    data.meanCost[best],
    `min at ${data.param} = ${data.values[best]}`,
  );
  writeFileSync(spec.output, chart.render());
}

export { availableColumns };
