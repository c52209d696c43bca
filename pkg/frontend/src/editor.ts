// Single-writer editing state. The scene and the panels are projections of
// this; every functional edit bumps `revision` so async service responses
// for older revisions can be recognized and dropped.

import {
  compareEdges,
  edgeKey,
  parseDocument,
  serializeDocument,
  type Complex,
  type EdgeRec,
  type GraphDoc,
  type Role,
} from "./documents.js";

export type UncoloredEdge = [number, number];

export class EditError extends Error {}

export class EditorState {
  doc: GraphDoc;
  /** Bumped by functional edits only; vertex drags don't invalidate the state panel. */
  revision = 0;
  /** Search-geometry strokes: uncolored vertex pairs for restricting templates. */
  geometry: UncoloredEdge[] = [];

  constructor(doc?: GraphDoc) {
    this.doc = doc ?? { name: "", vertices: [], edges: [] };
  }

  static fromText(text: string): EditorState {
    return new EditorState(parseDocument(text));
  }

  documentText(): string {
    return serializeDocument(this.doc);
  }

  loadDocument(text: string): void {
    this.doc = parseDocument(text);
    this.geometry = [];
    this.revision += 1;
  }

  /** Deep snapshot for optimistic updates; call the returned function to roll back. */
  snapshot(): () => void {
    const doc = structuredClone(this.doc);
    const geometry = this.geometry.map((g) => [...g] as UncoloredEdge);
    return () => {
      this.doc = doc;
      this.geometry = geometry;
      this.revision += 1;
    };
  }

  vertex(id: number) {
    const v = this.doc.vertices.find((v) => v.id === id);
    if (!v) throw new EditError(`no vertex ${id}`);
    return v;
  }

  addVertex(role: Role, dimension: number, position?: [number, number, number]): number {
    const id = this.doc.vertices.length;
    this.doc.vertices.push(position ? { id, role, dimension, position } : { id, role, dimension });
    this.revision += 1;
    return id;
  }

  /** Remove a vertex, its edges, and renumber the rest to keep ids contiguous. */
  deleteVertex(id: number): void {
    this.vertex(id);
    const remap = (x: number) => (x > id ? x - 1 : x);
    this.doc.vertices = this.doc.vertices
      .filter((v) => v.id !== id)
      .map((v) => ({ ...v, id: remap(v.id) }));
    this.doc.edges = this.doc.edges
      .filter((e) => e.u !== id && e.v !== id)
      .map((e) => ({ ...e, u: remap(e.u), v: remap(e.v) }));
    this.geometry = this.geometry
      .filter(([a, b]) => a !== id && b !== id)
      .map(([a, b]) => [remap(a), remap(b)] as UncoloredEdge);
    this.revision += 1;
  }

  addEdge(u: number, v: number, cu: number, cv: number, weight: Complex = { re: 1, im: 0 }): number {
    if (u === v) throw new EditError("self-loops are not allowed");
    if (u > v) {
      [u, v] = [v, u];
      [cu, cv] = [cv, cu];
    }
    const du = this.vertex(u).dimension;
    const dv = this.vertex(v).dimension;
    if (cu < 0 || cu >= du || cv < 0 || cv >= dv) {
      throw new EditError(`mode pair (${cu}, ${cv}) out of range for dimensions (${du}, ${dv})`);
    }
    const rec: EdgeRec = { u, v, cu, cv, weight };
    if (this.doc.edges.some((e) => edgeKey(e) === edgeKey(rec))) {
      throw new EditError(`edge ${edgeKey(rec)} already exists`);
    }
    this.doc.edges.push(rec);
    this.doc.edges.sort(compareEdges);
    this.revision += 1;
    return this.doc.edges.findIndex((e) => edgeKey(e) === edgeKey(rec));
  }

  deleteEdge(index: number): void {
    if (index < 0 || index >= this.doc.edges.length) throw new EditError(`no edge ${index}`);
    this.doc.edges.splice(index, 1);
    this.revision += 1;
  }

  setWeight(index: number, weight: Complex): void {
    if (index < 0 || index >= this.doc.edges.length) throw new EditError(`no edge ${index}`);
    this.doc.edges[index].weight = weight;
    this.revision += 1;
  }

  /** Drag: positions persist on save but don't change the quantum state. */
  moveVertex(id: number, position: [number, number, number]): void {
    this.vertex(id).position = position;
  }

  addGeometryEdge(u: number, v: number): void {
    if (u === v) throw new EditError("self-loops are not allowed");
    if (u > v) [u, v] = [v, u];
    this.vertex(u);
    this.vertex(v);
    if (this.geometry.some(([a, b]) => a === u && b === v)) {
      throw new EditError(`geometry edge ${u}-${v} already drawn`);
    }
    this.geometry.push([u, v]);
    this.geometry.sort((x, y) => x[0] - y[0] || x[1] - y[1]);
  }

  removeGeometryEdge(u: number, v: number): void {
    if (u > v) [u, v] = [v, u];
    const i = this.geometry.findIndex(([a, b]) => a === u && b === v);
    if (i < 0) throw new EditError(`no geometry edge ${u}-${v}`);
    this.geometry.splice(i, 1);
  }
}
