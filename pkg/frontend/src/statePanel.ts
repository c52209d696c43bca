// Live post-selected-state panel. Refreshes are tagged with the editor
// revision that triggered them; a response is applied only if it is newer
// than what the panel shows AND still matches the current document, so the
// panel never displays stale amplitudes after overlapping edits.

import type { ServiceClient, StateResponse } from "./api.js";
import { formatAmplitude } from "./documents.js";
import type { EditorState } from "./editor.js";

export class StatePanel {
  state: StateResponse | null = null;
  /** Editor revision the displayed state belongs to; -1 = nothing shown. */
  appliedRevision = -1;
  lastError: string | null = null;

  async refresh(editor: EditorState, api: ServiceClient): Promise<boolean> {
    const revision = editor.revision;
    const text = editor.documentText();
    let response: StateResponse;
    try {
      response = await api.computeState({ document: text });
    } catch (err) {
      if (revision === editor.revision) this.lastError = (err as Error).message;
      return false;
    }
    if (revision !== editor.revision || revision <= this.appliedRevision) {
      return false; // stale: the editor moved on, or a newer refresh already landed
    }
    this.state = response;
    this.appliedRevision = revision;
    this.lastError = null;
    return true;
  }

  lines(): string[] {
    if (!this.state) return [];
    if (this.state.vanishing) return ["state vanishes (all terms cancel)"];
    return this.state.amplitudes.map(
      (row) => `|${row.ket}>  ${formatAmplitude(row.amplitude)}`,
    );
  }
}
