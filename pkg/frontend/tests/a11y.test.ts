import { describe, expect, it } from "vitest";

import { emptyView, mergeSubgraph } from "../src/merge.js";
import { renderTrace } from "../src/render.js";
import { canonicalTrace } from "./fixtures.js";

function keydown(target: Element, key: string): void {
  target.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

describe("keyboard access", () => {
  it("every node is focusable with a role and label", () => {
    const el = document.createElement("div");
    renderTrace(el, mergeSubgraph(emptyView(), canonicalTrace()), {
      layoutMode: "layered-by-depth",
      selected: null,
    });
    const nodes = [...el.querySelectorAll("g.node")];
    expect(nodes.length).toBeGreaterThan(0);
    for (const node of nodes) {
      expect(node.getAttribute("tabindex")).toBe("0");
      expect(node.getAttribute("role")).toBe("button");
      expect(node.getAttribute("aria-label")).toBeTruthy();
    }
  });

  it("Enter selects, E expands truncated nodes, P pivots", () => {
    const sub = canonicalTrace();
    const limited = {
      ...sub,
      nodes: sub.nodes.map((n, i) => ({ ...n, truncated: i === 1 })),
    };
    const selected: string[] = [];
    const expanded: string[] = [];
    const pivoted: string[] = [];
    const el = document.createElement("div");
    renderTrace(el, mergeSubgraph(emptyView(), limited), {
      layoutMode: "layered-by-depth",
      selected: null,
      onSelect: (id) => selected.push(id),
      onExpand: (id) => expanded.push(id),
      onPivot: (id) => pivoted.push(id),
    });
    const nodes = [...el.querySelectorAll("g.node")];
    const truncatedNode = nodes.find(
      (n) => n.getAttribute("data-id") === limited.nodes[1]!.id,
    )!;
    const plainNode = nodes.find(
      (n) => n.getAttribute("data-id") === limited.nodes[0]!.id,
    )!;

    keydown(plainNode, "Enter");
    expect(selected).toEqual([limited.nodes[0]!.id]);

    keydown(truncatedNode, "e");
    expect(expanded).toEqual([limited.nodes[1]!.id]);
    keydown(plainNode, "e"); // not truncated: no expand
    expect(expanded).toEqual([limited.nodes[1]!.id]);

    keydown(plainNode, "p");
    expect(pivoted).toEqual([limited.nodes[0]!.id]);
  });
});
