/** View state and the actions that drive exploration.
 *
 * Each answered trace steers the next step: pivoting refetches around a new
 * focus (layout mode preserved), expanding pulls one more depth layer from a
 * frontier node and merges it in. At most one fetch result is honored per
 * user action: every action takes a token, and responses whose token has
 * been superseded are discarded, so a slow earlier fetch can never clobber a
 * newer view.
 */

import { LayoutMode } from "./layout.js";
import { emptyView, mergeSubgraph } from "./merge.js";
import { Direction, GraphView, MessagePage, ReplayResponse, WireSubgraph } from "./types.js";

export interface ApiLike {
  trace(focus: string, direction: Direction, maxDepth: number | "unlimited"): Promise<WireSubgraph>;
  replay(focus: string): Promise<ReplayResponse>;
  messages(afterSeq?: number, limit?: number): Promise<MessagePage>;
}

export interface ViewState {
  focus: string | null;
  direction: Direction;
  depth: number | "unlimited";
  expanded: Set<string>;
  selected: string | null;
  layoutMode: LayoutMode;
}

export interface ControllerEvents {
  onChange: () => void;
  onError: (message: string) => void;
}

export class ExplorerController {
  view: GraphView = emptyView();
  state: ViewState = {
    focus: null,
    direction: "backward",
    depth: 4,
    expanded: new Set(),
    selected: null,
    layoutMode: "layered-by-depth",
  };
  private token = 0;

  constructor(
    private readonly api: ApiLike,
    private readonly events: ControllerEvents,
  ) {}

  private takeToken(): number {
    this.token += 1;
    return this.token;
  }

  private stale(token: number): boolean {
    return token !== this.token;
  }

  /** Pivot: make *focus* the new center and refetch. Layout mode survives. */
  async setFocus(focus: string, direction?: Direction): Promise<void> {
    const token = this.takeToken();
    const dir = direction ?? this.state.direction;
    try {
      const sub = await this.api.trace(focus, dir, this.state.depth);
      if (this.stale(token)) return;
      this.view = mergeSubgraph(emptyView(), sub);
      this.state = {
        ...this.state,
        focus,
        direction: dir,
        expanded: new Set(),
        selected: focus,
      };
      this.events.onChange();
    } catch (err) {
      if (this.stale(token)) return;
      this.events.onError(String(err instanceof Error ? err.message : err));
    }
  }

  /** Expand: fetch one more depth layer beyond *id* and merge. Idempotent. */
  async expand(id: string): Promise<void> {
    if (this.state.expanded.has(id)) return;
    const base = this.view.nodes.get(id);
    if (base === undefined) return;
    const token = this.takeToken();
    try {
      const sub = await this.api.trace(id, this.state.direction, 1);
      if (this.stale(token)) return;
      this.state.expanded.add(id);
      this.view = mergeSubgraph(this.view, sub, base.depth);
      this.events.onChange();
    } catch (err) {
      if (this.stale(token)) return;
      this.events.onError(String(err instanceof Error ? err.message : err));
    }
  }

  select(id: string | null): void {
    if (id !== null && !this.view.nodes.has(id)) return;
    this.state = { ...this.state, selected: id };
    this.events.onChange();
  }

  setLayout(mode: LayoutMode): void {
    this.state = { ...this.state, layoutMode: mode };
    this.events.onChange();
  }

  setDirection(direction: Direction): void {
    this.state = { ...this.state, direction };
    if (this.state.focus !== null) {
      void this.setFocus(this.state.focus, direction);
    } else {
      this.events.onChange();
    }
  }

  setDepth(depth: number | "unlimited"): void {
    this.state = { ...this.state, depth };
    if (this.state.focus !== null) {
      void this.setFocus(this.state.focus);
    }
  }

  /** Replay plan for the focus, in dependency order (server-ordered). */
  async loadReplay(): Promise<ReplayResponse | null> {
    if (this.state.focus === null) return null;
    try {
      return await this.api.replay(this.state.focus);
    } catch (err) {
      this.events.onError(String(err instanceof Error ? err.message : err));
      return null;
    }
  }
}
