// Pure scene model: what to draw, derived from a graph document plus the
// ephemeral UI state. The three.js layer in main.ts renders this verbatim,
// which keeps everything here testable without a browser.

import { edgeKey, modeColor, type EdgeRec, type GraphDoc, type Role } from "./documents.js";

export type Shape = "sphere" | "cube" | "tetrahedron";

export const ROLE_SHAPES: Record<Role, Shape> = {
  detector: "sphere",
  ancilla: "cube",
  input: "tetrahedron",
};

export interface SceneVertex {
  id: number;
  role: Role;
  shape: Shape;
  position: [number, number, number];
  selected: boolean;
}

export interface SceneTube {
  edgeIndex: number;
  key: string;
  from: [number, number, number];
  to: [number, number, number];
  /** First half of the tube, colored by the mode at the lower-id endpoint. */
  colorU: string;
  /** Second half, colored by the mode at the higher-id endpoint. */
  colorV: string;
  radius: number;
  negative: boolean;
  highlighted: boolean;
  uncolored: boolean;
}

export interface MatchingModel {
  label: string;
  offset: [number, number, number];
  edgeIndices: number[];
  tubes: SceneTube[];
}

export interface CycleHighlight {
  vertices: number[];
  edgeIndices: number[];
}

export interface SceneModel {
  vertices: SceneVertex[];
  tubes: SceneTube[];
  models: MatchingModel[];
}

/** Ring placement for documents without stored coordinates. */
export function fallbackPosition(index: number, total: number): [number, number, number] {
  const angle = (2 * Math.PI * index) / Math.max(total, 1);
  return [3 * Math.cos(angle), 3 * Math.sin(angle), 0];
}

export function vertexPositions(doc: GraphDoc): Map<number, [number, number, number]> {
  const out = new Map<number, [number, number, number]>();
  doc.vertices.forEach((v, i) => {
    out.set(v.id, v.position ?? fallbackPosition(i, doc.vertices.length));
  });
  return out;
}

function tubeRadius(weight: { re: number; im: number }): number {
  const mag = Math.hypot(weight.re, weight.im);
  return 0.04 + 0.06 * Math.min(mag, 2) / 2;
}

function buildTube(
  e: EdgeRec,
  index: number,
  positions: Map<number, [number, number, number]>,
  highlighted: Set<number>,
): SceneTube {
  return {
    edgeIndex: index,
    key: edgeKey(e),
    from: positions.get(e.u)!,
    to: positions.get(e.v)!,
    colorU: modeColor(e.cu),
    colorV: modeColor(e.cv),
    radius: tubeRadius(e.weight),
    negative: e.weight.re < 0,
    highlighted: highlighted.has(index),
    uncolored: false,
  };
}

export interface SceneOptions {
  selection?: Set<number>;
  highlightedEdges?: Set<number>;
  /** Uncolored search-geometry strokes, drawn as neutral tubes. */
  geometry?: [number, number][];
}

export function buildScene(doc: GraphDoc, opts: SceneOptions = {}): SceneModel {
  const positions = vertexPositions(doc);
  const selection = opts.selection ?? new Set();
  const highlighted = opts.highlightedEdges ?? new Set<number>();
  const vertices: SceneVertex[] = doc.vertices.map((v) => ({
    id: v.id,
    role: v.role,
    shape: ROLE_SHAPES[v.role],
    position: positions.get(v.id)!,
    selected: selection.has(v.id),
  }));
  const tubes = doc.edges.map((e, i) => buildTube(e, i, positions, highlighted));
  for (const [u, v] of opts.geometry ?? []) {
    tubes.push({
      edgeIndex: -1,
      key: `${u}-${v}:geometry`,
      from: positions.get(u)!,
      to: positions.get(v)!,
      colorU: "#9aa0a6",
      colorV: "#9aa0a6",
      radius: 0.03,
      negative: false,
      highlighted: false,
      uncolored: true,
    });
  }
  return { vertices, tubes, models: [] };
}

/** Spawn one perfect matching as a detached copy floating beside the graph. */
export function spawnMatching(
  doc: GraphDoc,
  edgeIndices: number[],
  slot: number,
  label = `matching ${slot + 1}`,
): MatchingModel {
  const positions = vertexPositions(doc);
  const offset: [number, number, number] = [8 * (slot + 1), 0, 0];
  const tubes = edgeIndices.map((i) => buildTube(doc.edges[i], i, positions, new Set()));
  return { label, offset, edgeIndices: [...edgeIndices], tubes };
}

/**
 * Superimpose two matchings: the symmetric difference of their edge sets
 * decomposes into even-length cycles — the interference loops.
 */
export function superimpose(doc: GraphDoc, a: number[], b: number[]): CycleHighlight[] {
  const inA = new Set(a);
  const diff = [...a.filter((i) => !b.includes(i)), ...b.filter((i) => !inA.has(i))];
  const byVertex = new Map<number, number[]>();
  for (const i of diff) {
    const e = doc.edges[i];
    for (const vid of [e.u, e.v]) {
      const list = byVertex.get(vid) ?? [];
      list.push(i);
      byVertex.set(vid, list);
    }
  }
  const seen = new Set<number>();
  const cycles: CycleHighlight[] = [];
  for (const startEdge of diff) {
    if (seen.has(startEdge)) continue;
    const vertices: number[] = [];
    const edgeIndices: number[] = [];
    let edge = startEdge;
    let at = doc.edges[edge].u;
    for (;;) {
      seen.add(edge);
      vertices.push(at);
      edgeIndices.push(edge);
      const e = doc.edges[edge];
      at = e.u === at ? e.v : e.u;
      const next = (byVertex.get(at) ?? []).find((i) => !seen.has(i));
      if (next === undefined) break;
      edge = next;
    }
    cycles.push({ vertices, edgeIndices });
  }
  cycles.sort((x, y) => Math.min(...x.vertices) - Math.min(...y.vertices));
  return cycles;
}
