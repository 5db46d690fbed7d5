/** Application wiring: message list, toolbar, graph canvas, replay panel. */

import { TraceApi } from "./api.js";
import { clearBanner, showBanner, showToast } from "./banner.js";
import { LayoutMode } from "./layout.js";
import { renderTrace } from "./render.js";
import { buildReplaySteps, renderReplayPanel } from "./replay.js";
import { ExplorerController } from "./state.js";
import { Direction, MessageSummary } from "./types.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
}

export function bootstrap(): void {
  const api = new TraceApi("");
  const canvas = byId<HTMLElement>("graph");
  const banner = byId<HTMLElement>("banner");
  const toastHost = byId<HTMLElement>("toasts");
  const replayPanel = byId<HTMLElement>("replay-panel");
  const messageList = byId<HTMLElement>("message-list");
  const directionSelect = byId<HTMLSelectElement>("direction");
  const depthSelect = byId<HTMLSelectElement>("depth");
  const layoutSelect = byId<HTMLSelectElement>("layout");
  const replayButton = byId<HTMLButtonElement>("replay-button");
  const focusLabel = byId<HTMLElement>("focus-label");

  const controller = new ExplorerController(api, {
    onChange: () => {
      clearBanner(banner);
      focusLabel.textContent = controller.state.focus ?? "select a message";
      renderTrace(canvas, controller.view, {
        layoutMode: controller.state.layoutMode,
        selected: controller.state.selected,
        onSelect: (id) => controller.select(id),
        onExpand: (id) => void controller.expand(id),
        onPivot: (id) => void controller.setFocus(id),
      });
    },
    onError: (message) => {
      // Last good view stays rendered; failures are banner + toast only.
      showBanner(banner, message);
      showToast(toastHost, message);
    },
  });

  directionSelect.addEventListener("change", () => {
    controller.setDirection(directionSelect.value as Direction);
  });
  depthSelect.addEventListener("change", () => {
    const raw = depthSelect.value;
    controller.setDepth(raw === "unlimited" ? "unlimited" : Number(raw));
  });
  layoutSelect.addEventListener("change", () => {
    controller.setLayout(layoutSelect.value as LayoutMode);
  });
  replayButton.addEventListener("click", () => {
    void controller.loadReplay().then((replay) => {
      if (replay !== null) {
        renderReplayPanel(replayPanel, buildReplaySteps(replay, controller.view));
      }
    });
  });

  function messageRow(summary: MessageSummary): HTMLElement {
    const row = document.createElement("button");
    row.className = "message-row";
    row.type = "button";
    row.dataset.id = summary.message_id;
    row.innerHTML = "";
    const title = document.createElement("div");
    title.className = "message-type";
    title.textContent = `#${summary.sequence} ${summary.data_type}`;
    const meta = document.createElement("div");
    meta.className = "message-meta";
    meta.textContent = `${summary.producer.algorithm} · ${summary.timestamp}`;
    row.append(title, meta);
    row.addEventListener("click", () => void controller.setFocus(summary.message_id));
    return row;
  }

  async function loadMessages(): Promise<void> {
    try {
      let after = 0;
      const rows: HTMLElement[] = [];
      for (;;) {
        const page = await api.messages(after, 200);
        for (const summary of page.messages) {
          rows.push(messageRow(summary));
        }
        if (page.next_after_seq === null) break;
        after = page.next_after_seq;
      }
      messageList.replaceChildren(...rows);
    } catch (err) {
      showBanner(banner, String(err instanceof Error ? err.message : err));
    }
  }

  void loadMessages();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  bootstrap();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", bootstrap);
}
