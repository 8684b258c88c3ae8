/**
 * Readers for the harness CSV logs.
 *
 * Per-run logs:   run,stage,x_name,x,metric,value
 * Aggregates:     stage,x_name,x,metric,mean,stderr,runs
 *
 * Parsing is strict: a missing header, a truncated row, or a non-numeric
 * field raises with the offending line number so a half-written file never
 * renders silently.
 */

export interface RunRecord {
  run: number;
  stage: string;
  xName: string;
  x: number;
  metric: string;
  value: number;
}

export interface AggRecord {
  stage: string;
  xName: string;
  x: number;
  metric: string;
  mean: number;
  stderr: number;
  runs: number;
}

export interface Curve {
  xs: number[];
  means: number[];
  stderrs: number[];
}

const RUN_HEADER = "run,stage,x_name,x,metric,value";
const AGG_HEADER = "stage,x_name,x,metric,mean,stderr,runs";

function splitRows(text: string, path: string, header: string): string[][] {
  const lines = text.split("\n");
  if (lines.length === 0 || lines[0].trim() !== header) {
    throw new Error(`${path}: expected header "${header}", got "${lines[0] ?? ""}"`);
  }
  const width = header.split(",").length;
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (line === "") continue; // trailing newline
    const cells = line.split(",");
    if (cells.length !== width) {
      throw new Error(
        `${path}:${i + 1}: truncated or malformed row (${cells.length} of ${width} columns)`);
    }
    rows.push(cells);
  }
  if (rows.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  return rows;
}

function num(cell: string, path: string, where: string): number {
  const v = Number(cell);
  if (cell.trim() === "" || Number.isNaN(v)) {
    throw new Error(`${path}: non-numeric ${where}: "${cell}"`);
  }
  return v;
}

export function parseRunCsv(text: string, path = "run.csv"): RunRecord[] {
  return splitRows(text, path, RUN_HEADER).map((c, i) => ({
    run: num(c[0], path, `run on row ${i + 2}`),
    stage: c[1],
    xName: c[2],
    x: num(c[3], path, `x on row ${i + 2}`),
    metric: c[4],
    value: num(c[5], path, `value on row ${i + 2}`),
  }));
}

export function parseAggregateCsv(text: string, path = "aggregate.csv"): AggRecord[] {
  return splitRows(text, path, AGG_HEADER).map((c, i) => ({
    stage: c[0],
    xName: c[1],
    x: num(c[2], path, `x on row ${i + 2}`),
    metric: c[3],
    mean: num(c[4], path, `mean on row ${i + 2}`),
    stderr: num(c[5], path, `stderr on row ${i + 2}`),
    runs: num(c[6], path, `runs on row ${i + 2}`),
  }));
}

/** Stages present in an aggregate, in first-appearance order. */
export function stages(records: AggRecord[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const r of records) {
    if (!seen.has(r.stage)) {
      seen.add(r.stage);
      out.push(r.stage);
    }
  }
  return out;
}

/** The mean/stderr curve of one (stage, metric), sorted by x. */
export function curve(records: AggRecord[], stage: string, metric: string): Curve {
  const rows = records
    .filter((r) => r.stage === stage && r.metric === metric)
    .sort((a, b) => a.x - b.x);
  if (rows.length === 0) {
    const available = [...new Set(records.map((r) => `${r.stage}/${r.metric}`))];
    throw new Error(
      `no rows for stage "${stage}" metric "${metric}"; available: ${available.join(", ")}`);
  }
  return {
    xs: rows.map((r) => r.x),
    means: rows.map((r) => r.mean),
    stderrs: rows.map((r) => r.stderr),
  };
}

/** Per-state values of an option map exported by the harness (one run). */
export function optionMap(
  records: RunRecord[], stage: string, run = 0,
): { greedy: Map<number, number>; stop: Map<number, number> } {
  const greedy = new Map<number, number>();
  const stop = new Map<number, number>();
  for (const r of records) {
    if (r.stage !== stage || r.run !== run) continue;
    if (r.metric === "greedy_action") greedy.set(r.x, r.value);
    if (r.metric === "stop") stop.set(r.x, r.value);
  }
  if (greedy.size === 0) {
    throw new Error(`no option-map rows for stage "${stage}" (run ${run})`);
  }
  return { greedy, stop };
}
