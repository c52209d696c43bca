// Search cockpit: turn the current editing session into a template, submit
// it, follow the event stream, and hand the discovered graph back to the
// editor for the next round.

import { TERMINAL_EVENTS, type SearchEvent, type SearchStatus, type ServiceClient } from "./api.js";
import type { EditorState } from "./editor.js";

/**
 * Build a template for the editor's current geometry. The service owns
 * target amplitudes and template encoding; the client only restricts the
 * initial geometry to the user's uncolored strokes when any were drawn.
 */
export async function prepareTemplate(
  api: ServiceClient,
  editor: EditorState,
  target: string,
  opts: { task?: string; seed?: number; scratchName?: string } = {},
): Promise<string> {
  const name = opts.scratchName ?? "scratch-template";
  await api.putGraph(name, editor.documentText());
  const text = await api.downloadTemplate(name, target, {
    task: opts.task,
    uncolored: true,
    seed: opts.seed,
  });
  if (editor.geometry.length === 0) return text;
  const template = JSON.parse(text) as Record<string, unknown>;
  template.initial_edges = editor.geometry.map(([u, v]) => [u, v]);
  return JSON.stringify(template, null, 2) + "\n";
}

export interface SearchProgress {
  phase: string;
  lossCurve: number[];
  edgeCount: number | null;
  lastEvent: number;
}

export class SearchRun {
  progress: SearchProgress = { phase: "queued", lossCurve: [], edgeCount: null, lastEvent: -1 };
  terminal: string | null = null;
  status: SearchStatus | null = null;

  constructor(
    private api: ServiceClient,
    public readonly id: string,
  ) {}

  static async submit(api: ServiceClient, templateText: string): Promise<SearchRun> {
    return new SearchRun(api, await api.submitSearch(templateText));
  }

  private apply(event: SearchEvent): void {
    this.progress.lastEvent = event.seq;
    if (event.type === "phase" && event.phase) this.progress.phase = event.phase;
    if (TERMINAL_EVENTS.has(event.type)) {
      this.terminal = event.type;
      this.progress.phase = event.type;
    }
    if (typeof event.loss === "number") this.progress.lossCurve.push(event.loss);
    if (typeof event.edge_count === "number") this.progress.edgeCount = event.edge_count;
  }

  /** Follow events until the job finishes; resumes after the last seen event. */
  async follow(onUpdate?: (run: SearchRun) => void, signal?: AbortSignal): Promise<string> {
    while (this.terminal === null) {
      await this.api.streamEvents(
        this.id,
        this.progress.lastEvent + 1,
        (event) => {
          this.apply(event);
          onUpdate?.(this);
        },
        signal,
      );
      if (signal?.aborted) break;
    }
    this.status = await this.api.searchStatus(this.id);
    return this.terminal ?? this.status.state;
  }

  /** Load the discovered graph into the editor (only meaningful when done). */
  loadResult(editor: EditorState): boolean {
    const doc = this.status?.result?.document;
    if (!doc) return false;
    editor.loadDocument(doc);
    return true;
  }
}
