/** Pure merge of fetched subgraphs into the client-side graph view.
 *
 * Merging is set-union on node ids and edge keys. When a node arrives again:
 * depth takes the minimum (shortest known hop count from the original focus)
 * and the truncated flag ANDs (once any fetch has shown a node's neighbors it
 * stops being a frontier). Roots are recomputed over the merged edge set, so
 * they always mean "no parent edge inside the current view".
 */

import { edgeKey, GraphView, WireNode, WireSubgraph } from "./types.js";

export function emptyView(): GraphView {
  return { nodes: new Map(), edges: new Map(), roots: new Set() };
}

export function mergeSubgraph(view: GraphView, sub: WireSubgraph, depthBase = 0): GraphView {
  const nodes = new Map(view.nodes);
  const edges = new Map(view.edges);
  for (const incoming of sub.nodes) {
    const offset: WireNode = { ...incoming, depth: incoming.depth + depthBase };
    const existing = nodes.get(offset.id);
    if (existing === undefined) {
      nodes.set(offset.id, offset);
    } else {
      nodes.set(offset.id, {
        ...existing,
        depth: Math.min(existing.depth, offset.depth),
        truncated: existing.truncated && offset.truncated,
      });
    }
  }
  for (const edge of sub.edges) {
    edges.set(edgeKey(edge), edge);
  }
  const withParentEdge = new Set<string>();
  for (const edge of edges.values()) {
    withParentEdge.add(edge.child);
  }
  const roots = new Set<string>();
  for (const id of nodes.keys()) {
    if (!withParentEdge.has(id)) {
      roots.add(id);
    }
  }
  return { nodes, edges, roots };
}
