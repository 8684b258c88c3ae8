import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { curve, optionMap, parseAggregateCsv, parseRunCsv, stages } from "../src/csv.js";

const FIXTURES = join(__dirname, "fixtures", "tiny");
const aggText = readFileSync(join(FIXTURES, "aggregate.csv"), "utf-8");
const runText = readFileSync(join(FIXTURES, "run_000.csv"), "utf-8");

describe("aggregate parsing", () => {
  it("parses every row with numeric fields", () => {
    const records = parseAggregateCsv(aggText);
    expect(records.length).toBeGreaterThan(10);
    for (const r of records) {
      expect(Number.isFinite(r.x)).toBe(true);
      expect(Number.isFinite(r.mean)).toBe(true);
      expect(r.runs).toBe(2);
    }
  });

  it("exposes stages in first-appearance order", () => {
    const records = parseAggregateCsv(aggText);
    const ss = stages(records);
    expect(ss[0]).toMatch(/^options:/);
    expect(ss).toContain("plan:primitives");
    expect(ss).toContain("plan:rr");
  });

  it("extracts sorted curves", () => {
    const records = parseAggregateCsv(aggText);
    const c = curve(records, "plan:rr", "start_value");
    expect(c.xs.length).toBe(6); // 600 updates at cadence 100
    expect([...c.xs].sort((a, b) => a - b)).toEqual(c.xs);
    expect(c.stderrs.every((e) => e >= 0)).toBe(true);
  });

  it("rejects a missing header", () => {
    expect(() => parseAggregateCsv("nope\n1,2,3", "f.csv")).toThrow(/expected header/);
  });

  it("rejects a truncated row with the line number", () => {
    const truncated = aggText.trimEnd().split("\n");
    const cut = truncated[truncated.length - 1].slice(0, 10);
    const text = truncated.slice(0, -1).concat([cut]).join("\n");
    expect(() => parseAggregateCsv(text, "agg.csv"))
      .toThrow(/agg\.csv:\d+: truncated/);
  });

  it("rejects an empty file", () => {
    expect(() => parseAggregateCsv("stage,x_name,x,metric,mean,stderr,runs\n"))
      .toThrow(/no data rows/);
  });

  it("lists available metrics when one is missing", () => {
    const records = parseAggregateCsv(aggText);
    expect(() => curve(records, "plan:sp", "start_value"))
      .toThrow(/available: .*plan:rr\/start_value/);
  });
});

describe("run-log parsing", () => {
  it("parses option maps", () => {
    const records = parseRunCsv(runText);
    const { greedy, stop } = optionMap(records, "option_map:rr:H1:w1");
    expect(greedy.size).toBe(72);
    expect(stop.size).toBe(72);
    for (const a of greedy.values()) {
      expect([0, 1, 2, 3]).toContain(a);
    }
  });

  it("errors on an absent map stage", () => {
    const records = parseRunCsv(runText);
    expect(() => optionMap(records, "option_map:nope")).toThrow(/no option-map rows/);
  });

  it("rejects non-numeric values", () => {
    expect(() => parseRunCsv("run,stage,x_name,x,metric,value\n0,s,x,oops,m,1\n", "r.csv"))
      .toThrow(/non-numeric/);
  });
});
