// Graph-document types mirroring the service's JSON schema, plus the small
// helpers (ordering, keys, colors) the scene and editor share.

export type Role = "detector" | "ancilla" | "input";

export interface Complex {
  re: number;
  im: number;
}

export interface VertexRec {
  id: number;
  role: Role;
  dimension: number;
  position?: [number, number, number];
}

export interface EdgeRec {
  u: number;
  v: number;
  cu: number;
  cv: number;
  weight: Complex;
}

export interface TargetRec {
  ket: string;
  amplitude: Complex;
}

export interface GraphDoc {
  name: string;
  vertices: VertexRec[];
  edges: EdgeRec[];
  target?: TargetRec[];
}

export class DocumentFormatError extends Error {}

export function edgeKey(e: { u: number; v: number; cu: number; cv: number }): string {
  return `${e.u}:${e.v}:${e.cu}:${e.cv}`;
}

export function compareEdges(a: EdgeRec, b: EdgeRec): number {
  return a.u - b.u || a.v - b.v || a.cu - b.cu || a.cv - b.cv;
}

function asNumber(x: unknown, path: string): number {
  if (typeof x !== "number" || !Number.isFinite(x)) {
    throw new DocumentFormatError(`${path}: expected a finite number`);
  }
  return x;
}

function asInt(x: unknown, path: string): number {
  const n = asNumber(x, path);
  if (!Number.isInteger(n)) throw new DocumentFormatError(`${path}: expected an integer`);
  return n;
}

function asComplex(x: unknown, path: string): Complex {
  if (typeof x !== "object" || x === null) {
    throw new DocumentFormatError(`${path}: expected {re, im}`);
  }
  const o = x as Record<string, unknown>;
  return { re: asNumber(o.re, `${path}.re`), im: asNumber(o.im, `${path}.im`) };
}

const ROLES: Role[] = ["detector", "ancilla", "input"];

/** Parse and lightly check a graph document; deep validation is the service's job. */
export function parseDocument(text: string): GraphDoc {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new DocumentFormatError(`not valid JSON: ${(err as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new DocumentFormatError("top level: expected an object");
  }
  const o = raw as Record<string, unknown>;
  if (!Array.isArray(o.vertices)) throw new DocumentFormatError("vertices: expected a list");
  if (!Array.isArray(o.edges)) throw new DocumentFormatError("edges: expected a list");
  const vertices: VertexRec[] = o.vertices.map((rec, i) => {
    const r = rec as Record<string, unknown>;
    const role = r.role as Role;
    if (!ROLES.includes(role)) throw new DocumentFormatError(`vertices[${i}].role: unknown role`);
    const v: VertexRec = {
      id: asInt(r.id, `vertices[${i}].id`),
      role,
      dimension: asInt(r.dimension, `vertices[${i}].dimension`),
    };
    if (r.position !== undefined) {
      const p = r.position;
      if (!Array.isArray(p) || p.length !== 3) {
        throw new DocumentFormatError(`vertices[${i}].position: expected [x, y, z]`);
      }
      v.position = [
        asNumber(p[0], `vertices[${i}].position[0]`),
        asNumber(p[1], `vertices[${i}].position[1]`),
        asNumber(p[2], `vertices[${i}].position[2]`),
      ];
    }
    return v;
  });
  const edges: EdgeRec[] = o.edges.map((rec, i) => {
    const r = rec as Record<string, unknown>;
    return {
      u: asInt(r.u, `edges[${i}].u`),
      v: asInt(r.v, `edges[${i}].v`),
      cu: asInt(r.cu, `edges[${i}].cu`),
      cv: asInt(r.cv, `edges[${i}].cv`),
      weight: asComplex(r.weight, `edges[${i}].weight`),
    };
  });
  const doc: GraphDoc = {
    name: typeof o.name === "string" ? o.name : "",
    vertices,
    edges,
  };
  if (o.target !== undefined) {
    if (!Array.isArray(o.target)) throw new DocumentFormatError("target: expected a list");
    doc.target = o.target.map((rec, i) => {
      const r = rec as Record<string, unknown>;
      if (typeof r.ket !== "string") {
        throw new DocumentFormatError(`target[${i}].ket: expected a string`);
      }
      return { ket: r.ket, amplitude: asComplex(r.amplitude, `target[${i}].amplitude`) };
    });
  }
  return doc;
}

/** Serialize with stable field order; the service canonicalizes on upload. */
export function serializeDocument(doc: GraphDoc): string {
  const vertices = [...doc.vertices]
    .sort((a, b) => a.id - b.id)
    .map((v) => {
      const rec: Record<string, unknown> = { id: v.id, role: v.role, dimension: v.dimension };
      if (v.position) rec.position = v.position;
      return rec;
    });
  const edges = [...doc.edges].sort(compareEdges).map((e) => ({
    u: e.u,
    v: e.v,
    cu: e.cu,
    cv: e.cv,
    weight: { re: e.weight.re, im: e.weight.im },
  }));
  const out: Record<string, unknown> = { name: doc.name, vertices, edges };
  if (doc.target) {
    out.target = doc.target.map((t) => ({
      ket: t.ket,
      amplitude: { re: t.amplitude.re, im: t.amplitude.im },
    }));
  }
  return JSON.stringify(out, null, 2) + "\n";
}

// Deterministic mode palette: golden-angle hue walk keeps neighboring mode
// indices visually distinct at any dimension.
export function modeColor(mode: number): string {
  const hue = (mode * 137.508) % 360;
  return hslToHex(hue, 0.72, 0.5);
}

function hslToHex(h: number, s: number, l: number): string {
  const f = (n: number) => {
    const k = (n + h / 30) % 12;
    const c = l - s * Math.min(l, 1 - l) * Math.max(-1, Math.min(k - 3, 9 - k, 1));
    return Math.round(255 * c)
      .toString(16)
      .padStart(2, "0");
  };
  return `#${f(0)}${f(8)}${f(4)}`;
}

export function formatAmplitude(z: Complex): string {
  const part = (x: number) => {
    const r = Math.round(x * 1e6) / 1e6;
    return (r >= 0 ? "+" : "") + r;
  };
  return `${part(z.re)}${part(z.im)}i`;
}
