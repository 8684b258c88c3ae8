/**
 * Figure specs: which (stage, metric) pairs from the harness logs feed each
 * panel, and how panels compose into one SVG per figure.
 *
 * Everything is regenerated from the CSVs — no numbers are recomputed here,
 * so the experiment logs stay the single source of truth.
 */

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { join } from "node:path";

import {
  AggRecord, RunRecord, curve, optionMap, parseAggregateCsv, parseRunCsv,
} from "./csv.js";
import { Layout, parseLayout } from "./layout.js";
import { linePanel, policyMap, rowOfPanels, Series } from "./svg.js";

export const FIGURE_IDS = [
  "fig1", "fig2", "fig3", "fig4", "fig5", "fig7", "fig8", "fig9", "fig10",
] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

const RED = "#c23b3b";
const BLUE = "#2b5fc2";
const GREEN = "#2e8b57";
const ORANGE = "#d97706";
const PURPLE = "#7c3aed";
const PALETTE = [BLUE, RED, GREEN, ORANGE, PURPLE];

interface Inputs {
  agg: AggRecord[];
  runs: RunRecord[] | null;
  layout: Layout | null;
}

function loadInputs(inDir: string, needRuns: boolean, needLayout: boolean): Inputs {
  const agg = parseAggregateCsv(
    readFileSync(join(inDir, "aggregate.csv"), "utf-8"), "aggregate.csv");
  const runs = needRuns
    ? parseRunCsv(readFileSync(join(inDir, "run_000.csv"), "utf-8"), "run_000.csv")
    : null;
  const layout = needLayout
    ? parseLayout(readFileSync(join(inDir, "layout.txt"), "utf-8"))
    : null;
  return { agg, runs, layout };
}

function planPanel(agg: AggRecord[], menus: Array<[string, string]>,
                   title: string): string {
  const series: Series[] = menus.map(([menuId, label], i) => ({
    curve: curve(agg, `plan:${menuId}`, "start_value"),
    label,
    color: PALETTE[i % PALETTE.length],
  }));
  return linePanel({
    title, xLabel: "states updated", yLabel: "planned value of the start state",
    series,
  });
}

function optionLearningPanel(agg: AggRecord[], taskId: string, title: string): string {
  return linePanel({
    title,
    xLabel: "time steps",
    yLabel: "RMSE vs optimal subtask values",
    rightYLabel: "start-state value estimate",
    series: [
      { curve: curve(agg, `options:${taskId}`, "rmse_vs_optimal"),
        label: "value RMSE", color: RED },
      { curve: curve(agg, `options:${taskId}`, "start_value_estimate"),
        label: "start value", color: BLUE, axis: "right" },
    ],
  });
}

function modelLearningPanel(agg: AggRecord[], optionId: string, title: string): string {
  return linePanel({
    title,
    xLabel: "time steps",
    yLabel: "reward-model RMSE",
    rightYLabel: "transition-model RMSE",
    series: [
      { curve: curve(agg, `models:${optionId}`, "reward_rmse"),
        label: "reward model", color: RED },
      { curve: curve(agg, `models:${optionId}`, "transition_rmse"),
        label: "transition model", color: BLUE, axis: "right" },
    ],
  });
}

function snapshotPanel(agg: AggRecord[], menuId: string, title: string): string {
  return linePanel({
    title,
    xLabel: "model-learning steps before planning",
    yLabel: "final planned start-state value",
    series: [{
      curve: curve(agg, `plan_from_snapshot:${menuId}`, "final_start_value"),
      label: "planned value", color: GREEN,
    }],
    markers: true,
    width: 420,
  });
}

function mapPanel(inputs: Inputs, taskId: string, title: string): string {
  if (!inputs.runs || !inputs.layout) throw new Error("maps need run_000.csv and layout.txt");
  const { greedy, stop } = optionMap(inputs.runs, `option_map:${taskId}`);
  return policyMap({ title, layout: inputs.layout, greedy, stop });
}

const HALLWAY_TASKS = ["rr:H1:w1", "rr:H2:w1", "rr:H3:w1", "rr:H4:w1"];

const BUILDERS: Record<FigureId, (inputs: Inputs) => string> = {
  fig1: (inp) => planPanel(inp.agg, [
    ["primitives", "primitive actions only"],
    ["rr", "with reward-respecting option"],
    ["sp", "with shortest-path option"],
  ], "Planning progress in the two-room world"),

  fig2: (inp) => rowOfPanels([
    optionLearningPanel(inp.agg, "rr:H1:w1",
                        "Learning the hallway option off-policy"),
    mapPanel(inp, "rr:H1:w1", "learned policy; red cells stop"),
  ]),

  fig3: (inp) => rowOfPanels([
    modelLearningPanel(inp.agg, "option:rr:H1:w1",
                       "Learning the hallway option's model"),
    snapshotPanel(inp.agg, "rr", "planning with partial models"),
  ]),

  fig4: (inp) => rowOfPanels([
    planPanel(inp.agg, [
      ["rr_w0.1", "bonus weight 0.1"],
      ["rr_w1", "bonus weight 1"],
      ["rr_w10", "bonus weight 10"],
      ["rr_w100", "bonus weight 100"],
    ], "Planning with options learned under different bonus weights"),
    ...["rr:H1:w0.1", "rr:H1:w1", "rr:H1:w10", "rr:H1:w100"].map((t) =>
      mapPanel(inp, t, `bonus weight ${t.split(":w")[1]}`)),
  ]),

  fig5: (inp) => rowOfPanels([
    rowOfPanels(HALLWAY_TASKS.map((t, k) =>
      mapPanel(inp, t, `option for H${k + 1}`))),
    planPanel(inp.agg, [
      ["primitives", "primitive actions only"],
      ["rr", "with reward-respecting options"],
      ["eigen", "with eigenoptions"],
    ], "Planning progress in the four-room world"),
  ]),

  fig7: (inp) => rowOfPanels(HALLWAY_TASKS.map((t, k) =>
    optionLearningPanel(inp.agg, t, `subtask for H${k + 1}`))),

  fig8: (inp) => rowOfPanels(HALLWAY_TASKS.map((t, k) =>
    mapPanel(inp, t, `option for H${k + 1}`))),

  fig9: (inp) => rowOfPanels(HALLWAY_TASKS.map((t, k) =>
    modelLearningPanel(inp.agg, `option:${t}`, `model for H${k + 1}`))),

  fig10: (inp) => snapshotPanel(inp.agg, "rr",
                                "Four-room planning with partial models"),
};

const NEEDS_MAPS: Record<FigureId, boolean> = {
  fig1: false, fig2: true, fig3: false, fig4: true, fig5: true,
  fig7: false, fig8: true, fig9: false, fig10: false,
};

export function renderFigure(figId: FigureId, inDir: string, outDir: string): string {
  const builder = BUILDERS[figId];
  if (!builder) throw new Error(`unknown figure id "${figId}"`);
  const inputs = loadInputs(inDir, NEEDS_MAPS[figId], NEEDS_MAPS[figId]);
  const svg = builder(inputs);
  mkdirSync(outDir, { recursive: true });
  const outPath = join(outDir, `${figId}.svg`);
  writeFileSync(outPath, svg + "\n", "utf-8");
  return outPath;
}
