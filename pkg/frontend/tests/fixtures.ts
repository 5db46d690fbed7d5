/** Seeded random wire-subgraph fixtures plus captured service responses. */

import canonicalTraceBody from "./fixtures/canonical_trace.json";
import canonicalReplayBody from "./fixtures/canonical_replay.json";
import goalBothDepth1Body from "./fixtures/goal_both_depth1.json";
import { checkReplay, checkSubgraph, ReplayResponse, WireEdge, WireNode, WireSubgraph } from "../src/types.js";

export function canonicalTrace(): WireSubgraph {
  return checkSubgraph(JSON.parse(JSON.stringify(canonicalTraceBody)));
}

export function canonicalReplay(): ReplayResponse {
  return checkReplay(JSON.parse(JSON.stringify(canonicalReplayBody)));
}

export function goalBothDepth1(): WireSubgraph {
  return checkSubgraph(JSON.parse(JSON.stringify(goalBothDepth1Body)));
}

/** Deterministic PRNG (mulberry32) so fixture generation is reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const DATA_TYPES = ["tracks", "observations", "state_vector", "alert", "report"];
const ALGORITHMS = ["OrbitFit", "Screening", "Correlator", "Fusion"];
const SUBSYSTEMS: Array<[string, string]> = [
  ["sensing", "orange"],
  ["processing", "yellow"],
  ["decision", "blue"],
];

function pick<T>(rand: () => number, items: readonly T[]): T {
  return items[Math.floor(rand() * items.length)] as T;
}

/** A random backward-trace-shaped subgraph: focus at depth 0, every other
 * node attached one hop above an existing node. */
export function randomSubgraph(seed: number): WireSubgraph {
  const rand = mulberry32(seed);
  const count = 1 + Math.floor(rand() * 29);
  const nodes: WireNode[] = [];
  const edges: WireEdge[] = [];

  const makeNode = (index: number, depth: number): WireNode => {
    const external = index > 0 && rand() < 0.2;
    if (external) {
      return {
        id: `ext:src-${index}:${Math.floor(rand() * 1e9).toString(16)}`,
        kind: "external_source",
        data_type: pick(rand, DATA_TYPES),
        producer: null,
        subsystem_color_key: "gray",
        depth,
        truncated: false,
      };
    }
    const [subsystem, color] = pick(rand, SUBSYSTEMS);
    return {
      id: `00000000-0000-4000-8000-${String(index).padStart(12, "0")}`,
      kind: "message",
      data_type: pick(rand, DATA_TYPES),
      producer: { algorithm: pick(rand, ALGORITHMS), version: "1.0.0", subsystem },
      subsystem_color_key: color,
      depth,
      truncated: false,
    };
  };

  nodes.push(makeNode(0, 0));
  for (let i = 1; i < count; i++) {
    // Parents hang off an existing message node (externals have no parents).
    const candidates = nodes.filter((n) => n.kind === "message");
    const child = pick(rand, candidates);
    const parent = makeNode(i, child.depth + 1);
    nodes.push(parent);
    edges.push({ child: child.id, parent: parent.id, data_type: parent.data_type });
  }
  // Mark the deepest message frontier truncated now and then.
  const maxDepth = Math.max(...nodes.map((n) => n.depth));
  for (const node of nodes) {
    if (node.kind === "message" && node.depth === maxDepth && rand() < 0.5) {
      node.truncated = true;
    }
  }
  const withParents = new Set(edges.map((e) => e.child));
  const roots = nodes.filter((n) => !withParents.has(n.id)).map((n) => n.id);
  const focus = nodes[0] as WireNode;
  return checkSubgraph({ focus: focus.id, direction: "backward", nodes, edges, roots });
}
