export { plotTrace, plotSummary, plotSweep, PlotSpec } from "./plot.js";
export { readTrace, readSummary, readSweep, availableColumns } from "./csv.js";
export { Chart, STYLE } from "./svg.js";
