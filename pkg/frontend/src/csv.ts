/**
 * Readers for the three CSV layouts the simulator CLI emits.
 *
 * Trace:   t,mode,<variables...>,event   (sample rows have an empty event,
 *          jump rows carry the event name)
 * Summary: t,<v>_mean,<v>_sd per variable
 * Sweep:   <param>,mean_cost,std_error,replications
 */

import { readFileSync } from "fs";
import Papa from "papaparse";

export interface TraceData {
  variables: string[];
  /** sample rows: time, per-variable values */
  t: number[];
  values: Map<string, number[]>;
  /** jump rows: time and event label */
  jumps: { t: number; event: string }[];
}

export interface SummaryData {
  variables: string[];
  t: number[];
  mean: Map<string, number[]>;
  sd: Map<string, number[]>;
}

export interface SweepData {
  param: string;
  values: number[];
  meanCost: number[];
  stdError: number[];
}

function parse(path: string): { header: string[]; rows: string[][] } {
  const text = readFileSync(path, "utf-8");
  const out = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (out.errors.length > 0) {
    throw new Error(`${path}: ${out.errors[0].message}`);
  }
  const [header, ...rows] = out.data;
  return { header, rows };
}

export function availableColumns(path: string): string[] {
  return parse(path).header;
}

export function readTrace(path: string): TraceData {
  const { header, rows } = parse(path);
  if (header[0] !== "t" || header[1] !== "mode" || header.at(-1) !== "event") {
    throw new Error(
      `${path}: not a trace CSV (header ${header.join(",")})`,
    );
  }
  const variables = header.slice(2, -1);
  const t: number[] = [];
  const values = new Map<string, number[]>(variables.map((v) => [v, []]));
  const jumps: { t: number; event: string }[] = [];
  for (const row of rows) {
    const event = row[header.length - 1];
    if (event !== "") {
      jumps.push({ t: Number(row[0]), event });
      continue;
    }
    t.push(Number(row[0]));
    variables.forEach((v, i) => values.get(v)!.push(Number(row[2 + i])));
  }
  return { variables, t, values, jumps };
}

export function readSummary(path: string): SummaryData {
  const { header, rows } = parse(path);
  const variables: string[] = [];
  for (let i = 1; i < header.length; i += 2) {
    const name = header[i].replace(/_mean$/, "");
    if (header[i] !== `${name}_mean` || header[i + 1] !== `${name}_sd`) {
      throw new Error(
        `${path}: not a summary CSV (header ${header.join(",")})`,
      );
    }
    variables.push(name);
  }
  const t: number[] = [];
  const mean = new Map<string, number[]>(variables.map((v) => [v, []]));
  const sd = new Map<string, number[]>(variables.map((v) => [v, []]));
  for (const row of rows) {
    t.push(Number(row[0]));
    variables.forEach((v, i) => {
      mean.get(v)!.push(Number(row[1 + 2 * i]));
      sd.get(v)!.push(Number(row[2 + 2 * i]));
    });
  }
  return { variables, t, mean, sd };
}

export function readSweep(path: string): SweepData {
  const { header, rows } = parse(path);
  if (
    header.length !== 4 ||
    header[1] !== "mean_cost" ||
    header[2] !== "std_error"
  ) {
    throw new Error(`${path}: not a sweep CSV (header ${header.join(",")})`);
  }
  return {
    param: header[0],
    values: rows.map((r) => Number(r[0])),
    meanCost: rows.map((r) => Number(r[1])),
    stdError: rows.map((r) => Number(r[2])),
  };
}
