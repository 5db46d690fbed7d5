/** Read-only client for the trace service API. Never mutates server state. */

import {
  checkMessagePage,
  checkReplay,
  checkSubgraph,
  Direction,
  MessagePage,
  ReplayResponse,
  WireSubgraph,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function getJson(url: string): Promise<unknown> {
  const response = await fetch(url, { headers: { Accept: "application/json" } });
  const body: unknown = await response.json().catch(() => {
    throw new ApiError(response.status, "bad_body", "response was not JSON");
  });
  if (!response.ok) {
    const err = body as { error?: string; detail?: string };
    throw new ApiError(response.status, err.error ?? "error", err.detail ?? "request failed");
  }
  return body;
}

export class TraceApi {
  constructor(private readonly base: string = "") {}

  async trace(
    focus: string,
    direction: Direction,
    maxDepth: number | "unlimited",
  ): Promise<WireSubgraph> {
    const url =
      `${this.base}/api/v1/trace/${encodeURIComponent(focus)}` +
      `?direction=${direction}&max_depth=${maxDepth}`;
    return checkSubgraph(await getJson(url));
  }

  async replay(focus: string): Promise<ReplayResponse> {
    return checkReplay(await getJson(`${this.base}/api/v1/replay/${encodeURIComponent(focus)}`));
  }

  async messages(afterSeq = 0, limit = 100): Promise<MessagePage> {
    return checkMessagePage(
      await getJson(`${this.base}/api/v1/messages?after_seq=${afterSeq}&limit=${limit}`),
    );
  }
}
