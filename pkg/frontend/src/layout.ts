/**
 * Parser for the gridworld layout text format.
 *
 * One character per cell: `#` wall, `.` open, `S` start, `G` goal
 * (terminal), `-` penalty, `H` hallway. State indices used by the CSV logs
 * are row-major over non-wall, non-goal cells — the same bijection as the
 * environment's one-hot features.
 */

export type CellKind = "wall" | "open" | "start" | "goal" | "penalty" | "hallway";

export interface Layout {
  height: number;
  width: number;
  grid: CellKind[][];
  /** state index -> [row, col] over non-wall, non-goal cells, row-major */
  cells: Array<[number, number]>;
}

const KINDS: Record<string, CellKind> = {
  "#": "wall",
  ".": "open",
  S: "start",
  G: "goal",
  "-": "penalty",
  H: "hallway",
};

export function parseLayout(text: string): Layout {
  const lines = text.split("\n").filter((ln) => ln.trim() !== "");
  if (lines.length === 0) throw new Error("empty layout text");
  const width = lines[0].length;
  const grid: CellKind[][] = [];
  const cells: Array<[number, number]> = [];
  for (let r = 0; r < lines.length; r++) {
    if (lines[r].length !== width) {
      throw new Error(`layout row ${r + 1} has width ${lines[r].length}, expected ${width}`);
    }
    const row: CellKind[] = [];
    for (let c = 0; c < width; c++) {
      const kind = KINDS[lines[r][c]];
      if (kind === undefined) {
        throw new Error(`unknown layout character "${lines[r][c]}" at ${r},${c}`);
      }
      row.push(kind);
      if (kind !== "wall" && kind !== "goal") cells.push([r, c]);
    }
    grid.push(row);
  }
  return { height: lines.length, width, grid, cells };
}
