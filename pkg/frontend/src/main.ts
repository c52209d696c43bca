// Browser entry point: renders the scene model with three.js, wires pointer
// and panel interactions, and keeps everything in sync with the service.
// All quantum computations happen on the service; this file only projects.

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import { ServiceClient, type CancellationResponse, type MatchingRow } from "./api.js";
import { modeColor, type Role } from "./documents.js";
import { EditorState } from "./editor.js";
import {
  buildScene,
  spawnMatching,
  superimpose,
  type CycleHighlight,
  type SceneModel,
  type SceneTube,
} from "./scene.js";
import { prepareTemplate, SearchRun } from "./search.js";
import { StatePanel } from "./statePanel.js";

type Tool = "orbit" | "draw" | "geometry" | "erase";

const api = new ServiceClient(window.location.origin);
const editor = new EditorState();
const statePanel = new StatePanel();

let tool: Tool = "orbit";
let selection = new Set<number>();
let pendingSource: number | null = null;
let matchingRows: MatchingRow[] = [];
let spawnedSlots: number[] = []; // indices into matchingRows, in spawn order
let cycleHighlights: CycleHighlight[] = [];
let activeRun: SearchRun | null = null;

// ---------------------------------------------------------------------------
// DOM scaffolding

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const viewport = el<HTMLDivElement>("viewport");
const toastBox = el<HTMLDivElement>("toasts");

function toast(message: string): void {
  const node = document.createElement("div");
  node.className = "toast";
  node.textContent = message;
  toastBox.appendChild(node);
  setTimeout(() => node.remove(), 6000);
}

// ---------------------------------------------------------------------------
// three.js scene

const renderer = new THREE.WebGLRenderer({ antialias: true });
renderer.setPixelRatio(window.devicePixelRatio);
viewport.appendChild(renderer.domElement);

const scene3 = new THREE.Scene();
scene3.background = new THREE.Color(0x10131a);
const camera = new THREE.PerspectiveCamera(55, 1, 0.1, 500);
camera.position.set(0, -9, 5);
const controls = new OrbitControls(camera, renderer.domElement);
controls.enableDamping = true;

scene3.add(new THREE.AmbientLight(0xffffff, 0.7));
const keyLight = new THREE.DirectionalLight(0xffffff, 1.2);
keyLight.position.set(4, -6, 8);
scene3.add(keyLight);

const graphGroup = new THREE.Group();
scene3.add(graphGroup);

function resize(): void {
  const w = viewport.clientWidth;
  const h = viewport.clientHeight;
  renderer.setSize(w, h);
  camera.aspect = w / h;
  camera.updateProjectionMatrix();
}
window.addEventListener("resize", resize);

const vertexMeshes = new Map<number, THREE.Mesh>();

function vertexGeometry(shape: string): THREE.BufferGeometry {
  if (shape === "cube") return new THREE.BoxGeometry(0.55, 0.55, 0.55);
  if (shape === "tetrahedron") return new THREE.TetrahedronGeometry(0.42);
  return new THREE.SphereGeometry(0.32, 24, 16);
}

function addTubeMeshes(group: THREE.Group, tube: SceneTube, offset: THREE.Vector3): void {
  const from = new THREE.Vector3(...tube.from).add(offset);
  const to = new THREE.Vector3(...tube.to).add(offset);
  const mid = from.clone().lerp(to, 0.5);
  const halves: Array<[THREE.Vector3, THREE.Vector3, string]> = [
    [from, mid, tube.colorU],
    [mid, to, tube.colorV],
  ];
  for (const [a, b, color] of halves) {
    const length = a.distanceTo(b);
    const geo = new THREE.CylinderGeometry(tube.radius, tube.radius, length, 10);
    const mat = new THREE.MeshStandardMaterial({
      color,
      emissive: tube.highlighted ? 0xffcc33 : 0x000000,
      emissiveIntensity: tube.highlighted ? 0.8 : 0,
      transparent: tube.uncolored,
      opacity: tube.uncolored ? 0.45 : 1,
    });
    const mesh = new THREE.Mesh(geo, mat);
    mesh.position.copy(a.clone().lerp(b, 0.5));
    mesh.quaternion.setFromUnitVectors(
      new THREE.Vector3(0, 1, 0),
      b.clone().sub(a).normalize(),
    );
    mesh.userData.edgeIndex = tube.edgeIndex;
    group.add(mesh);
  }
  if (tube.negative) {
    // small dark ring marks a negative weight, readable from any angle
    const ring = new THREE.Mesh(
      new THREE.TorusGeometry(tube.radius * 3.2, tube.radius * 0.6, 8, 20),
      new THREE.MeshStandardMaterial({ color: 0x111111 }),
    );
    ring.position.copy(mid);
    ring.quaternion.setFromUnitVectors(
      new THREE.Vector3(0, 0, 1),
      to.clone().sub(from).normalize(),
    );
    ring.userData.edgeIndex = tube.edgeIndex;
    group.add(ring);
  }
}

function renderModel(model: SceneModel): void {
  graphGroup.clear();
  vertexMeshes.clear();
  for (const v of model.vertices) {
    const mat = new THREE.MeshStandardMaterial({
      color: v.selected ? 0xffd54f : 0xcfd8dc,
      emissive: v.selected ? 0x664400 : 0x000000,
    });
    const mesh = new THREE.Mesh(vertexGeometry(v.shape), mat);
    mesh.position.set(...v.position);
    mesh.userData.vertexId = v.id;
    graphGroup.add(mesh);
    vertexMeshes.set(v.id, mesh);
  }
  const zero = new THREE.Vector3();
  for (const tube of model.tubes) addTubeMeshes(graphGroup, tube, zero);
  for (const detached of model.models) {
    const group = new THREE.Group();
    const offset = new THREE.Vector3(...detached.offset);
    for (const tube of detached.tubes) addTubeMeshes(group, tube, offset);
    for (const v of model.vertices) {
      const covered = detached.tubes.some(
        (t) => editor.doc.edges[t.edgeIndex]?.u === v.id || editor.doc.edges[t.edgeIndex]?.v === v.id,
      );
      if (!covered) continue;
      const mesh = new THREE.Mesh(
        vertexGeometry(v.shape),
        new THREE.MeshStandardMaterial({ color: 0x90a4ae }),
      );
      mesh.position.set(...v.position).add(offset);
      group.add(mesh);
    }
    graphGroup.add(group);
  }
}

function rebuildScene(): void {
  const highlightedEdges = new Set<number>();
  for (const cycle of cycleHighlights) for (const i of cycle.edgeIndices) highlightedEdges.add(i);
  const model = buildScene(editor.doc, {
    selection,
    highlightedEdges,
    geometry: editor.geometry,
  });
  spawnedSlots.forEach((rowIndex, slot) => {
    const row = matchingRows[rowIndex];
    if (row) model.models.push(spawnMatching(editor.doc, row.edges, slot, `|${row.ket}>`));
  });
  renderModel(model);
}

// ---------------------------------------------------------------------------
// panels

function renderStatePanel(): void {
  const box = el<HTMLDivElement>("state-panel");
  box.textContent = "";
  const lines = statePanel.lines();
  if (statePanel.lastError) {
    box.textContent = `service error: ${statePanel.lastError}`;
    return;
  }
  if (lines.length === 0) {
    box.textContent = editor.doc.edges.length ? "computing…" : "no edges yet";
    return;
  }
  for (const line of lines) {
    const row = document.createElement("div");
    row.textContent = line;
    box.appendChild(row);
  }
  if (statePanel.state && !statePanel.state.vanishing) {
    const norm = document.createElement("div");
    norm.className = "dim";
    norm.textContent = `norm ${statePanel.state.norm.toPrecision(6)}`;
    box.appendChild(norm);
  }
}

function renderMatchingsPanel(): void {
  const box = el<HTMLDivElement>("matchings-panel");
  box.textContent = "";
  matchingRows.forEach((row, i) => {
    const div = document.createElement("div");
    const check = document.createElement("input");
    check.type = "checkbox";
    check.checked = spawnedSlots.includes(i);
    check.addEventListener("change", () => toggleSpawn(i));
    div.appendChild(check);
    div.appendChild(
      document.createTextNode(` |${row.ket}>  edges [${row.edges.join(", ")}]`),
    );
    box.appendChild(div);
  });
  const cycles = el<HTMLDivElement>("cycles-panel");
  cycles.textContent = cycleHighlights.length
    ? cycleHighlights
        .map((c) => `interference loop: ${c.vertices.join(" – ")} (${c.vertices.length}-cycle)`)
        .join("\n")
    : "superimpose two matchings to see their interference loops";
}

function toggleSpawn(rowIndex: number): void {
  const at = spawnedSlots.indexOf(rowIndex);
  if (at >= 0) spawnedSlots.splice(at, 1);
  else spawnedSlots.push(rowIndex);
  cycleHighlights =
    spawnedSlots.length === 2
      ? superimpose(
          editor.doc,
          matchingRows[spawnedSlots[0]].edges,
          matchingRows[spawnedSlots[1]].edges,
        )
      : [];
  renderMatchingsPanel();
  rebuildScene();
}

async function refreshMatchings(): Promise<void> {
  const revision = editor.revision;
  try {
    const out = await api.matchings({ document: editor.documentText() });
    if (revision !== editor.revision) return;
    matchingRows = out.matchings;
  } catch {
    matchingRows = [];
  }
  spawnedSlots = [];
  cycleHighlights = [];
  renderMatchingsPanel();
}

function renderCancellation(report: CancellationResponse): void {
  const box = el<HTMLDivElement>("ket-report");
  const lines = [
    `ket ${report.ket}: ${report.cancelled ? "cancelled" : "survives"}`,
    ...report.contributions.map(
      (c) => `  edges [${c.edges.join(", ")}]  ${c.amplitude.re.toPrecision(4)}${
        c.amplitude.im >= 0 ? "+" : ""
      }${c.amplitude.im.toPrecision(4)}i`,
    ),
    ...report.interference.flatMap((pair) =>
      pair.cycles.map((cy) => `  pair ${pair.first}%${pair.second} loop ${cy.vertices.join("-")}`),
    ),
  ];
  box.textContent = lines.join("\n");
}

// ---------------------------------------------------------------------------
// edits with optimistic update + rollback

async function afterFunctionalEdit(): Promise<void> {
  rebuildScene();
  renderStatePanel();
  const applied = await statePanel.refresh(editor, api);
  if (applied) renderStatePanel();
  void refreshMatchings();
}

/** Apply an edit, then let the service veto it (rollback + toast on rejection). */
async function applyEdit(edit: () => void): Promise<void> {
  const rollback = editor.snapshot();
  try {
    edit();
  } catch (err) {
    toast((err as Error).message);
    return;
  }
  rebuildScene();
  const revision = editor.revision;
  try {
    await api.computeState({ document: editor.documentText() });
  } catch (err) {
    if (revision === editor.revision) {
      rollback();
      toast(`edit rejected: ${(err as Error).message}`);
      await afterFunctionalEdit();
    }
    return;
  }
  await afterFunctionalEdit();
}

// ---------------------------------------------------------------------------
// pointer interaction

const raycaster = new THREE.Raycaster();
const pointer = new THREE.Vector2();
let dragging: { id: number; plane: THREE.Plane } | null = null;

function pickVertex(event: PointerEvent): number | null {
  const rect = renderer.domElement.getBoundingClientRect();
  pointer.x = ((event.clientX - rect.left) / rect.width) * 2 - 1;
  pointer.y = -((event.clientY - rect.top) / rect.height) * 2 + 1;
  raycaster.setFromCamera(pointer, camera);
  const hits = raycaster.intersectObjects([...vertexMeshes.values()]);
  return hits.length ? (hits[0].object.userData.vertexId as number) : null;
}

renderer.domElement.addEventListener("pointerdown", (event) => {
  const id = pickVertex(event);
  if (id === null) {
    if (tool !== "orbit") {
      pendingSource = null;
      selection.clear();
      rebuildScene();
    }
    return;
  }
  if (tool === "orbit") {
    // plain click selects; drag moves the vertex on a camera-facing plane
    const mesh = vertexMeshes.get(id)!;
    const normal = camera.getWorldDirection(new THREE.Vector3());
    dragging = { id, plane: new THREE.Plane().setFromNormalAndCoplanarPoint(normal, mesh.position) };
    controls.enabled = false;
    selection = new Set([id]);
    rebuildScene();
  } else if (tool === "erase") {
    void applyEdit(() => editor.deleteVertex(id));
  } else if (pendingSource === null) {
    pendingSource = id;
    selection = new Set([id]);
    rebuildScene();
  } else if (pendingSource !== id) {
    const source = pendingSource;
    pendingSource = null;
    selection.clear();
    if (tool === "geometry") {
      try {
        editor.addGeometryEdge(source, id);
      } catch (err) {
        toast((err as Error).message);
      }
      rebuildScene();
    } else {
      const cu = Number(el<HTMLSelectElement>("mode-u").value);
      const cv = Number(el<HTMLSelectElement>("mode-v").value);
      const re = Number(el<HTMLInputElement>("weight-re").value) || 0;
      const im = Number(el<HTMLInputElement>("weight-im").value) || 0;
      void applyEdit(() => editor.addEdge(source, id, cu, cv, { re, im }));
    }
  }
});

renderer.domElement.addEventListener("pointermove", (event) => {
  if (!dragging) return;
  const rect = renderer.domElement.getBoundingClientRect();
  pointer.x = ((event.clientX - rect.left) / rect.width) * 2 - 1;
  pointer.y = -((event.clientY - rect.top) / rect.height) * 2 + 1;
  raycaster.setFromCamera(pointer, camera);
  const hit = new THREE.Vector3();
  if (raycaster.ray.intersectPlane(dragging.plane, hit)) {
    editor.moveVertex(dragging.id, [hit.x, hit.y, hit.z]);
    rebuildScene();
  }
});

renderer.domElement.addEventListener("pointerup", () => {
  dragging = null;
  controls.enabled = true;
});

// ---------------------------------------------------------------------------
// toolbar

function refreshModeSelectors(): void {
  const maxDim = Math.max(2, ...editor.doc.vertices.map((v) => v.dimension));
  for (const id of ["mode-u", "mode-v"]) {
    const select = el<HTMLSelectElement>(id);
    const keep = select.value;
    select.textContent = "";
    for (let m = 0; m < maxDim; m++) {
      const opt = document.createElement("option");
      opt.value = String(m);
      opt.textContent = `mode ${m}`;
      opt.style.backgroundColor = modeColor(m);
      select.appendChild(opt);
    }
    if (keep) select.value = keep;
  }
}

for (const t of ["orbit", "draw", "geometry", "erase"] as Tool[]) {
  el<HTMLButtonElement>(`tool-${t}`).addEventListener("click", () => {
    tool = t;
    pendingSource = null;
    for (const other of ["orbit", "draw", "geometry", "erase"]) {
      el(`tool-${other}`).classList.toggle("active", other === t);
    }
  });
}

el<HTMLButtonElement>("add-vertex").addEventListener("click", () => {
  const role = el<HTMLSelectElement>("vertex-role").value as Role;
  const dimension = Number(el<HTMLInputElement>("vertex-dim").value) || 2;
  void applyEdit(() => {
    editor.addVertex(role, dimension, [0, 0, 2.5]);
  });
  refreshModeSelectors();
});

el<HTMLButtonElement>("run-layout").addEventListener("click", async () => {
  try {
    const out = await api.layout({ document: editor.documentText() }, 0);
    out.ids.forEach((id, i) => editor.moveVertex(id, out.positions[i]));
    rebuildScene();
  } catch (err) {
    toast(`layout failed: ${(err as Error).message}`);
  }
});

el<HTMLButtonElement>("save-graph").addEventListener("click", async () => {
  const name = el<HTMLInputElement>("graph-name").value.trim();
  if (!name) return toast("give the graph a name first");
  try {
    await api.putGraph(name, editor.documentText());
    toast(`saved ${name}`);
    void populateLibrary();
  } catch (err) {
    toast(`save rejected: ${(err as Error).message}`);
  }
});

el<HTMLButtonElement>("load-graph").addEventListener("click", async () => {
  const name = el<HTMLSelectElement>("library-list").value;
  if (!name) return;
  try {
    editor.loadDocument(await api.getGraphText(name));
    el<HTMLInputElement>("graph-name").value = name;
    refreshModeSelectors();
    await afterFunctionalEdit();
  } catch (err) {
    toast(`load failed: ${(err as Error).message}`);
  }
});

el<HTMLButtonElement>("download-graph").addEventListener("click", () => {
  const blob = new Blob([editor.documentText()], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = `${el<HTMLInputElement>("graph-name").value.trim() || "graph"}.graph.json`;
  a.click();
  URL.revokeObjectURL(a.href);
});

el<HTMLInputElement>("upload-graph").addEventListener("change", async (event) => {
  const file = (event.target as HTMLInputElement).files?.[0];
  if (!file) return;
  try {
    editor.loadDocument(await file.text());
    refreshModeSelectors();
    await afterFunctionalEdit();
  } catch (err) {
    toast(`upload rejected: ${(err as Error).message}`);
  }
});

el<HTMLButtonElement>("inspect-ket").addEventListener("click", async () => {
  const ket = el<HTMLInputElement>("ket-input").value.trim();
  if (!ket) return;
  try {
    renderCancellation(await api.cancellations({ document: editor.documentText() }, ket));
  } catch (err) {
    toast(`ket inspection failed: ${(err as Error).message}`);
  }
});

async function populateLibrary(): Promise<void> {
  try {
    const names = await api.listGraphs();
    const select = el<HTMLSelectElement>("library-list");
    select.textContent = "";
    for (const name of names) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      select.appendChild(opt);
    }
  } catch {
    // service offline: the library panel just stays empty
  }
}

// ---------------------------------------------------------------------------
// search cockpit

function renderProgress(run: SearchRun | null): void {
  const box = el<HTMLDivElement>("search-progress");
  if (!run) {
    box.textContent = "no search running";
    return;
  }
  const p = run.progress;
  box.textContent =
    `job ${run.id.slice(0, 8)}  phase ${p.phase}` +
    (p.edgeCount !== null ? `  edges ${p.edgeCount}` : "") +
    (p.lossCurve.length ? `  loss ${p.lossCurve[p.lossCurve.length - 1].toExponential(2)}` : "");
  drawLossCurve(p.lossCurve);
}

function drawLossCurve(curve: number[]): void {
  const canvas = el<HTMLCanvasElement>("loss-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx || curve.length === 0) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const logs = curve.map((x) => Math.log10(Math.max(x, 1e-16)));
  const lo = Math.min(...logs);
  const hi = Math.max(...logs, lo + 1e-9);
  ctx.strokeStyle = "#4fc3f7";
  ctx.beginPath();
  logs.forEach((y, i) => {
    const px = (i / Math.max(curve.length - 1, 1)) * canvas.width;
    const py = canvas.height - ((y - lo) / (hi - lo)) * (canvas.height - 4) - 2;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}

el<HTMLButtonElement>("start-search").addEventListener("click", async () => {
  const target = el<HTMLInputElement>("search-target").value.trim();
  if (!target) return toast("pick a target, e.g. ghz:4,2");
  const task = el<HTMLSelectElement>("search-task").value;
  const seed = Number(el<HTMLInputElement>("search-seed").value) || 0;
  try {
    const template = await prepareTemplate(api, editor, target, { task, seed });
    activeRun = await SearchRun.submit(api, template);
    renderProgress(activeRun);
    const terminal = await activeRun.follow((run) => renderProgress(run));
    renderProgress(activeRun);
    if (terminal === "done") toast("search finished — result ready to load");
    else toast(`search ${terminal}`);
  } catch (err) {
    toast(`search failed: ${(err as Error).message}`);
  }
});

el<HTMLButtonElement>("cancel-search").addEventListener("click", async () => {
  if (!activeRun) return;
  try {
    await api.cancelSearch(activeRun.id);
  } catch (err) {
    toast((err as Error).message);
  }
});

el<HTMLButtonElement>("load-result").addEventListener("click", async () => {
  if (!activeRun?.loadResult(editor)) return toast("no finished search to load");
  refreshModeSelectors();
  await afterFunctionalEdit();
});

// ---------------------------------------------------------------------------
// boot

function animate(): void {
  requestAnimationFrame(animate);
  controls.update();
  renderer.render(scene3, camera);
}

resize();
refreshModeSelectors();
renderStatePanel();
renderMatchingsPanel();
renderProgress(null);
void populateLibrary();
rebuildScene();
animate();
