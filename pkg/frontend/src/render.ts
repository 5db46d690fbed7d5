/** SVG rendering of the merged lineage view.
 *
 * Every node is drawn exactly once; edges are drawn parent -> child (the
 * data-flow direction). Messages are green ellipses, external sources gray
 * boxes; the producing subsystem tints the node border via its color key.
 * Depth-truncated frontier nodes carry an expand affordance. Payloads are
 * never shown: this is a metadata-only view.
 */

import { canvasSize, layout, LayoutMode, NODE_H, NODE_W, Placement } from "./layout.js";
import { GraphView, WireNode } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const BORDER_COLORS: Record<string, string> = {
  orange: "#d97706",
  yellow: "#ca8a04",
  blue: "#2563eb",
  gray: "#6b7280",
};

export interface RenderOptions {
  layoutMode: LayoutMode;
  selected: string | null;
  onSelect?: (id: string) => void;
  onExpand?: (id: string) => void;
  onPivot?: (id: string) => void;
}

function nodeFill(node: WireNode): string {
  return node.kind === "message" ? "#bbf7d0" : "#e5e7eb";
}

function nodeBorder(node: WireNode): string {
  return BORDER_COLORS[node.subsystem_color_key] ?? "#374151";
}

function nodeLabel(node: WireNode): string {
  if (node.kind === "external_source") {
    const source = node.id.startsWith("ext:") ? node.id.slice(4).split(":")[0] : node.id;
    return `${source ?? node.id} (external)`;
  }
  return node.data_type;
}

function nodeSubLabel(node: WireNode): string {
  if (node.producer === null) {
    return node.kind === "message" ? "(unresolved)" : node.data_type;
  }
  return `${node.producer.algorithm} · ${node.producer.subsystem}`;
}

function text(x: number, y: number, content: string, cls: string): SVGTextElement {
  const el = document.createElementNS(SVG_NS, "text");
  el.setAttribute("x", String(x));
  el.setAttribute("y", String(y));
  el.setAttribute("class", cls);
  el.textContent = content;
  return el;
}

function drawNode(node: WireNode, place: Placement, options: RenderOptions): SVGGElement {
  const group = document.createElementNS(SVG_NS, "g");
  group.setAttribute("class", `node ${node.id === options.selected ? "selected" : ""}`.trim());
  group.setAttribute("data-id", node.id);
  group.setAttribute("data-kind", node.kind);
  group.setAttribute("transform", `translate(${place.x}, ${place.y})`);
  group.setAttribute("tabindex", "0");
  group.setAttribute("role", "button");
  group.setAttribute(
    "aria-label",
    `${nodeLabel(node)}, ${nodeSubLabel(node)}${node.truncated ? ", expandable" : ""}`,
  );

  const shape = document.createElementNS(SVG_NS, node.kind === "message" ? "rect" : "rect");
  shape.setAttribute("width", String(NODE_W));
  shape.setAttribute("height", String(NODE_H));
  shape.setAttribute("rx", node.kind === "message" ? "26" : "4");
  shape.setAttribute("fill", nodeFill(node));
  shape.setAttribute("stroke", nodeBorder(node));
  shape.setAttribute("stroke-width", node.id === options.selected ? "3" : "1.5");
  if (node.truncated) {
    shape.setAttribute("stroke-dasharray", "6 3");
  }
  group.appendChild(shape);
  group.appendChild(text(NODE_W / 2, 24, nodeLabel(node), "node-label"));
  group.appendChild(text(NODE_W / 2, 42, nodeSubLabel(node), "node-sublabel"));

  if (node.truncated) {
    const badge = document.createElementNS(SVG_NS, "g");
    badge.setAttribute("class", "expand-affordance");
    badge.setAttribute("transform", `translate(${NODE_W - 14}, 14)`);
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("r", "10");
    circle.setAttribute("fill", "#1f2937");
    badge.appendChild(circle);
    badge.appendChild(text(0, 4, "+", "expand-plus"));
    group.appendChild(badge);
  }

  group.addEventListener("click", () => options.onSelect?.(node.id));
  group.addEventListener("dblclick", () => {
    if (node.truncated) options.onExpand?.(node.id);
  });
  group.addEventListener("keydown", (event) => {
    const key = (event as KeyboardEvent).key;
    if (key === "Enter" || key === " ") {
      event.preventDefault();
      options.onSelect?.(node.id);
    } else if (key === "e" || key === "E") {
      if (node.truncated) options.onExpand?.(node.id);
    } else if (key === "p" || key === "P") {
      options.onPivot?.(node.id);
    }
  });
  return group;
}

function drawEdge(
  from: Placement,
  to: Placement,
  label: string,
): SVGGElement {
  const group = document.createElementNS(SVG_NS, "g");
  group.setAttribute("class", "edge");
  const line = document.createElementNS(SVG_NS, "line");
  // Parent (from) right edge to child (to) left edge.
  const x1 = from.x + NODE_W;
  const y1 = from.y + NODE_H / 2;
  const x2 = to.x;
  const y2 = to.y + NODE_H / 2;
  line.setAttribute("x1", String(x1));
  line.setAttribute("y1", String(y1));
  line.setAttribute("x2", String(x2));
  line.setAttribute("y2", String(y2));
  line.setAttribute("stroke", "#94a3b8");
  line.setAttribute("stroke-width", "1.5");
  line.setAttribute("marker-end", "url(#arrowhead)");
  group.appendChild(line);
  group.appendChild(text((x1 + x2) / 2, (y1 + y2) / 2 - 4, label, "edge-label"));
  return group;
}

function arrowDefs(): SVGDefsElement {
  const defs = document.createElementNS(SVG_NS, "defs");
  const marker = document.createElementNS(SVG_NS, "marker");
  marker.setAttribute("id", "arrowhead");
  marker.setAttribute("markerWidth", "8");
  marker.setAttribute("markerHeight", "8");
  marker.setAttribute("refX", "7");
  marker.setAttribute("refY", "3");
  marker.setAttribute("orient", "auto");
  const path = document.createElementNS(SVG_NS, "path");
  path.setAttribute("d", "M0,0 L7,3 L0,6 Z");
  path.setAttribute("fill", "#94a3b8");
  marker.appendChild(path);
  defs.appendChild(marker);
  return defs;
}

/** Rebuild the graph SVG inside *container*. */
export function renderTrace(container: HTMLElement, view: GraphView, options: RenderOptions): void {
  const placements = layout(view, options.layoutMode);
  const { width, height } = canvasSize(placements);
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("role", "application");
  svg.setAttribute("aria-label", "lineage graph");
  svg.appendChild(arrowDefs());

  for (const edge of view.edges.values()) {
    const from = placements.get(edge.parent);
    const to = placements.get(edge.child);
    if (from && to) {
      svg.appendChild(drawEdge(from, to, edge.data_type));
    }
  }
  for (const node of view.nodes.values()) {
    const place = placements.get(node.id);
    if (place) {
      svg.appendChild(drawNode(node, place, options));
    }
  }
  container.replaceChildren(svg);
}
