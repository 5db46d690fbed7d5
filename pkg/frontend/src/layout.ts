/** Deterministic node placement; no client-side layout solving.
 *
 * layered-by-depth: column = hop distance from the focus (the wire form's
 * depth), so rings of the trace line up. flow: column = longest path from a
 * root, so every edge points strictly rightward (data-flow reading).
 * Within a column, rows follow first-seen insertion order, which is stable
 * across re-renders.
 */

import { GraphView } from "./types.js";

export type LayoutMode = "layered-by-depth" | "flow";

export interface Placement {
  x: number;
  y: number;
  column: number;
  row: number;
}

export const NODE_W = 168;
export const NODE_H = 56;
export const COL_GAP = 72;
export const ROW_GAP = 26;

function flowColumns(view: GraphView): Map<string, number> {
  // Longest path from any root, following parent -> child edges.
  const children = new Map<string, string[]>();
  const parentCount = new Map<string, number>();
  for (const id of view.nodes.keys()) {
    parentCount.set(id, 0);
  }
  for (const edge of view.edges.values()) {
    const out = children.get(edge.parent) ?? [];
    out.push(edge.child);
    children.set(edge.parent, out);
    parentCount.set(edge.child, (parentCount.get(edge.child) ?? 0) + 1);
  }
  const column = new Map<string, number>();
  const ready: string[] = [];
  for (const [id, count] of parentCount) {
    if (count === 0) {
      column.set(id, 0);
      ready.push(id);
    }
  }
  while (ready.length > 0) {
    const id = ready.shift() as string;
    for (const child of children.get(id) ?? []) {
      const proposed = (column.get(id) ?? 0) + 1;
      column.set(child, Math.max(column.get(child) ?? 0, proposed));
      const remaining = (parentCount.get(child) ?? 1) - 1;
      parentCount.set(child, remaining);
      if (remaining === 0) {
        ready.push(child);
      }
    }
  }
  return column;
}

export function layout(view: GraphView, mode: LayoutMode): Map<string, Placement> {
  const column = new Map<string, number>();
  if (mode === "flow") {
    for (const [id, col] of flowColumns(view)) {
      column.set(id, col);
    }
  } else {
    let maxDepth = 0;
    for (const node of view.nodes.values()) {
      maxDepth = Math.max(maxDepth, node.depth);
    }
    // Deepest ancestry on the left, focus on the right: matches flow reading.
    for (const node of view.nodes.values()) {
      column.set(node.id, maxDepth - node.depth);
    }
  }
  const rows = new Map<number, number>();
  const placements = new Map<string, Placement>();
  for (const id of view.nodes.keys()) {
    const col = column.get(id) ?? 0;
    const row = rows.get(col) ?? 0;
    rows.set(col, row + 1);
    placements.set(id, {
      column: col,
      row,
      x: col * (NODE_W + COL_GAP),
      y: row * (NODE_H + ROW_GAP),
    });
  }
  return placements;
}

export function canvasSize(placements: Map<string, Placement>): { width: number; height: number } {
  let width = NODE_W;
  let height = NODE_H;
  for (const p of placements.values()) {
    width = Math.max(width, p.x + NODE_W);
    height = Math.max(height, p.y + NODE_H);
  }
  return { width: width + 16, height: height + 16 };
}
