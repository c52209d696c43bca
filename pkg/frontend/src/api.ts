// Typed client for the graphoptics HTTP service. Everything the explorer
// knows about graphs comes through here.

import type { Complex, GraphDoc } from "./documents.js";

export interface AmplitudeRow {
  ket: string;
  amplitude: Complex;
}

export interface StateResponse {
  vanishing: boolean;
  norm: number;
  amplitudes: AmplitudeRow[];
}

export interface MatchingRow {
  edges: number[];
  ket: string;
  amplitude: Complex;
}

export interface MatchingsResponse {
  count: number;
  matchings: MatchingRow[];
}

export interface CycleRow {
  vertices: number[];
  edges: number[];
}

export interface CancellationResponse {
  ket: string;
  cancelled: boolean;
  net_amplitude: Complex;
  contributions: { edges: number[]; amplitude: Complex }[];
  interference: { first: number; second: number; cycles: CycleRow[] }[];
}

export interface LayoutResponse {
  ids: number[];
  positions: [number, number, number][];
  stress: number;
  trace: number[];
}

export interface SearchResultPayload {
  document: string;
  loss: number;
  feasible: boolean;
  edges_removed: number;
  loss_trace: number[];
  total_iterations: number;
  seed: number;
}

export interface SearchStatus {
  id: string;
  state: "queued" | "running" | "done" | "failed" | "cancelled";
  progress: Record<string, unknown>;
  result?: SearchResultPayload;
  error?: string;
}

export interface SearchEvent {
  type: string;
  seq: number;
  phase?: string;
  loss?: number;
  edge_count?: number;
  restart?: number;
  feasible?: boolean;
  message?: string;
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

type GraphRef = { name: string } | { document: string };

async function errorOf(resp: Response): Promise<ServiceError> {
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    const detail = body?.detail;
    if (typeof detail === "string") message = detail;
    else if (detail?.message) message = String(detail.message);
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ServiceError(resp.status, message);
}

/** Incremental text/event-stream frame parser (id/data fields). */
export class SSEParser {
  private buffer = "";

  push(chunk: string): SearchEvent[] {
    this.buffer += chunk;
    const events: SearchEvent[] = [];
    for (;;) {
      const cut = this.buffer.indexOf("\n\n");
      if (cut < 0) break;
      const frame = this.buffer.slice(0, cut);
      this.buffer = this.buffer.slice(cut + 2);
      const data = frame
        .split("\n")
        .filter((line) => line.startsWith("data:"))
        .map((line) => line.slice(5).trimStart())
        .join("\n");
      if (data) events.push(JSON.parse(data) as SearchEvent);
    }
    return events;
  }
}

export const TERMINAL_EVENTS = new Set(["done", "failed", "cancelled"]);

export class ServiceClient {
  constructor(public readonly base: string) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.url(path), init);
    if (!resp.ok) throw await errorOf(resp);
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async listGraphs(): Promise<string[]> {
    const out = await this.json<{ graphs: string[] }>("/api/graphs");
    return out.graphs;
  }

  async getGraphText(name: string): Promise<string> {
    const resp = await fetch(this.url(`/api/graphs/${encodeURIComponent(name)}`));
    if (!resp.ok) throw await errorOf(resp);
    return resp.text();
  }

  async putGraph(name: string, text: string): Promise<void> {
    const resp = await fetch(this.url(`/api/graphs/${encodeURIComponent(name)}`), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: text,
    });
    if (!resp.ok) throw await errorOf(resp);
  }

  async deleteGraph(name: string): Promise<void> {
    const resp = await fetch(this.url(`/api/graphs/${encodeURIComponent(name)}`), {
      method: "DELETE",
    });
    if (!resp.ok) throw await errorOf(resp);
  }

  computeState(ref: GraphRef): Promise<StateResponse> {
    return this.post<StateResponse>("/api/state", ref);
  }

  matchings(ref: GraphRef): Promise<MatchingsResponse> {
    return this.post<MatchingsResponse>("/api/matchings", ref);
  }

  cancellations(ref: GraphRef, ket: string): Promise<CancellationResponse> {
    return this.post<CancellationResponse>("/api/matchings", { ...ref, ket });
  }

  layout(ref: GraphRef, seed = 0): Promise<LayoutResponse> {
    return this.post<LayoutResponse>("/api/layout", { ...ref, seed });
  }

  async downloadTemplate(
    name: string,
    target: string,
    opts: { task?: string; uncolored?: boolean; seed?: number } = {},
  ): Promise<string> {
    const params = new URLSearchParams({ target });
    if (opts.task !== undefined) params.set("task", opts.task);
    if (opts.uncolored !== undefined) params.set("uncolored", String(opts.uncolored));
    if (opts.seed !== undefined) params.set("seed", String(opts.seed));
    const resp = await fetch(
      this.url(`/api/template/${encodeURIComponent(name)}?${params.toString()}`),
    );
    if (!resp.ok) throw await errorOf(resp);
    return resp.text();
  }

  async submitSearch(templateText: string): Promise<string> {
    const resp = await fetch(this.url("/api/searches"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: templateText,
    });
    if (!resp.ok) throw await errorOf(resp);
    const body = (await resp.json()) as { id: string };
    return body.id;
  }

  searchStatus(id: string): Promise<SearchStatus> {
    return this.json<SearchStatus>(`/api/searches/${id}`);
  }

  async cancelSearch(id: string): Promise<string> {
    const out = await this.post<{ state: string }>(`/api/searches/${id}/cancel`, {});
    return out.state;
  }

  /**
   * Stream progress events from `start` until a terminal event arrives.
   * Works in browsers and node: plain fetch + ReadableStream, no EventSource.
   */
  async streamEvents(
    id: string,
    start: number,
    onEvent: (event: SearchEvent) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const resp = await fetch(this.url(`/api/searches/${id}/events?start=${start}`), { signal });
    if (!resp.ok) throw await errorOf(resp);
    if (!resp.body) throw new ServiceError(0, "event stream has no body");
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SSEParser();
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) return;
        for (const event of parser.push(decoder.decode(value, { stream: true }))) {
          onEvent(event);
          if (TERMINAL_EVENTS.has(event.type)) {
            await reader.cancel();
            return;
          }
        }
      }
    } finally {
      reader.releaseLock();
    }
  }
}

export type { GraphDoc };
