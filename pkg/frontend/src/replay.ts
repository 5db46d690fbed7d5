/** Replay panel: the focus's ancestry as an ordered step list. */

import { GraphView, ReplayResponse } from "./types.js";

export interface ReplayStep {
  message_id: string;
  data_type: string | null;
  algorithm: string | null;
  loaded: boolean;
}

/** Join plan ids against the loaded view; order is exactly the server's. */
export function buildReplaySteps(replay: ReplayResponse, view: GraphView): ReplayStep[] {
  return replay.plan.map((id) => {
    const node = view.nodes.get(id);
    return {
      message_id: id,
      data_type: node?.data_type ?? null,
      algorithm: node?.producer?.algorithm ?? null,
      loaded: node !== undefined,
    };
  });
}

export function renderReplayPanel(container: HTMLElement, steps: ReplayStep[]): void {
  const list = document.createElement("ol");
  list.setAttribute("class", "replay-steps");
  for (const step of steps) {
    const item = document.createElement("li");
    item.setAttribute("data-id", step.message_id);
    const title = document.createElement("span");
    title.setAttribute("class", "replay-type");
    title.textContent = step.data_type ?? step.message_id;
    item.appendChild(title);
    const producer = document.createElement("span");
    producer.setAttribute("class", "replay-producer");
    producer.textContent = step.loaded
      ? (step.algorithm ?? "external")
      : "(not loaded)";
    item.appendChild(producer);
    list.appendChild(item);
  }
  container.replaceChildren(list);
}
