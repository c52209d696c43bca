"""Graph and search-template documents, plus the on-disk graph library.

Both document kinds are canonical JSON: vertices sorted by id, edges sorted
lexicographically by (u, v, cu, cv), two-space indentation, one trailing
newline, floats rendered at full shortest-round-trip precision. Encoding a
decoded document therefore reproduces it byte for byte.

Graph document:

    {
      "name": "...",
      "vertices": [{"id": 0, "role": "detector", "dimension": 2,
                    "position": [x, y, z]?}, ...],
      "edges": [{"u": 0, "v": 1, "cu": 0, "cv": 0,
                 "weight": {"re": 1.0, "im": 0.0}}, ...],
      "target": [{"ket": "0000", "amplitude": {"re": ..., "im": ...}}, ...]?
    }

Search template: {"name"?, "vertices", "target", "task"?, "initial_edges"?,
"optimizer"?, "pruning"?, "seed"?} where initial_edges entries are either
[u, v] (uncolored: all mode pairs) or [u, v, cu, cv].

Kets serialize as digit strings when every relevant dimension is at most 10,
and as comma-separated integers otherwise. Library files live under
``<dir>/<name>.graph.json`` and are written atomically.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

from .discovery import (
    GENERATION,
    TASKS,
    GeometryEdge,
    OptimizerSettings,
    PruneSettings,
    SearchConfig,
    _task_sites,
)
from .graphs import ColoredGraph, DETECTOR, Edge, QuantumState, Vertex
from .layout import Layout
from .states import TargetState

GRAPH_SUFFIX = ".graph.json"
_NAME_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.-]*$")


class DocumentError(ValueError):
    """A document failed to parse; the message names the offending field."""


@dataclass(frozen=True)
class GraphDocument:
    graph: ColoredGraph
    positions: dict[int, tuple[float, float, float]]
    target: TargetState | None = None


# --------------------------------------------------------------------------
# ket rendering


def ket_to_string(ket: Sequence[int], dims: Sequence[int]) -> str:
    if all(d <= 10 for d in dims):
        return "".join(str(m) for m in ket)
    return ",".join(str(m) for m in ket)


def ket_from_string(text: str, path: str = "ket") -> tuple[int, ...]:
    if not isinstance(text, str) or not text:
        raise DocumentError(f"{path}: expected a non-empty ket string")
    parts = text.split(",") if "," in text else list(text)
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise DocumentError(f"{path}: {text!r} is not a ket string") from None


# --------------------------------------------------------------------------
# typed field access


def _require(obj: Any, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise DocumentError(f"{path}: expected an object")
    if key not in obj:
        raise DocumentError(f"{path}: missing {key!r}")
    return obj[key]


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise DocumentError(f"{path}: expected a string, got {value!r}")
    return value


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise DocumentError(f"{path}: expected an array")
    return value


def _complex_of(obj: Any, path: str) -> complex:
    return complex(_as_number(_require(obj, "re", path), f"{path}.re"),
                   _as_number(_require(obj, "im", path), f"{path}.im"))


def _parse_json(doc: str, kind: str) -> Any:
    try:
        return json.loads(doc)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{kind}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# graph documents


def _weight_obj(w: complex) -> dict:
    return {"re": float(w.real), "im": float(w.imag)}


def _vertex_records(
    g: ColoredGraph, positions: Mapping[int, Sequence[float]] | None
) -> list[dict]:
    records = []
    for v in g.vertices:
        rec: dict[str, Any] = {"id": v.id, "role": v.role, "dimension": v.dimension}
        if positions is not None and v.id in positions:
            x, y, z = positions[v.id]
            rec["position"] = [float(x), float(y), float(z)]
        records.append(rec)
    return records


def _target_records(target: TargetState, dims: Sequence[int]) -> list[dict]:
    return [
        {"ket": ket_to_string(ket, dims), "amplitude": _weight_obj(amp)}
        for ket, amp in target.state.sorted_items()
    ]


def _normalize_positions(
    g: ColoredGraph,
    positions: Layout | Mapping[int, Sequence[float]] | Sequence[Sequence[float]] | None,
) -> dict[int, tuple[float, float, float]] | None:
    if positions is None:
        return None
    if isinstance(positions, Layout):
        positions = positions.positions
    if isinstance(positions, Mapping):
        items = positions.items()
    else:
        seq = list(positions)
        if len(seq) != len(g.vertices):
            raise ValueError(
                f"{len(seq)} positions for {len(g.vertices)} vertices"
            )
        items = zip((v.id for v in g.vertices), seq)
    return {int(i): (float(p[0]), float(p[1]), float(p[2])) for i, p in items}


def encode_graph(
    g: ColoredGraph,
    positions: Layout | Mapping[int, Sequence[float]] | Sequence[Sequence[float]] | None = None,
    target: TargetState | None = None,
) -> str:
    """Render a graph (plus optional layout and target) as a canonical document."""
    pos = _normalize_positions(g, positions)
    obj: dict[str, Any] = {
        "name": g.name,
        "vertices": _vertex_records(g, pos),
        "edges": [
            {"u": e.u, "v": e.v, "cu": e.cu, "cv": e.cv, "weight": _weight_obj(e.weight)}
            for e in g.edges
        ],
    }
    if target is not None:
        obj["target"] = _target_records(target, g.dims_of(g.site_ids))
    return _dump(obj)


def _decode_vertices(
    raw: Any, path: str
) -> tuple[tuple[Vertex, ...], dict[int, tuple[float, float, float]]]:
    vertices = []
    positions: dict[int, tuple[float, float, float]] = {}
    for i, rec in enumerate(_as_list(raw, path)):
        p = f"{path}[{i}]"
        vid = _as_int(_require(rec, "id", p), f"{p}.id")
        role = _as_str(rec.get("role", DETECTOR), f"{p}.role")
        dim = _as_int(rec.get("dimension", 1), f"{p}.dimension")
        vertices.append(Vertex(vid, role, dim))
        if "position" in rec:
            coords = _as_list(rec["position"], f"{p}.position")
            if len(coords) != 3:
                raise DocumentError(f"{p}.position: expected 3 coordinates")
            positions[vid] = tuple(
                _as_number(c, f"{p}.position[{k}]") for k, c in enumerate(coords)
            )
    return tuple(vertices), positions


def _decode_edges(raw: Any, path: str) -> tuple[Edge, ...]:
    edges = []
    for i, rec in enumerate(_as_list(raw, path)):
        p = f"{path}[{i}]"
        edges.append(
            Edge(
                _as_int(_require(rec, "u", p), f"{p}.u"),
                _as_int(_require(rec, "v", p), f"{p}.v"),
                _as_int(_require(rec, "cu", p), f"{p}.cu"),
                _as_int(_require(rec, "cv", p), f"{p}.cv"),
                _complex_of(_require(rec, "weight", p), f"{p}.weight"),
            )
        )
    return tuple(edges)


def _decode_target(raw: Any, dims: Sequence[int], path: str) -> TargetState:
    amps: dict[tuple[int, ...], complex] = {}
    for i, rec in enumerate(_as_list(raw, path)):
        p = f"{path}[{i}]"
        ket = ket_from_string(_require(rec, "ket", p), f"{p}.ket")
        amps[ket] = _complex_of(_require(rec, "amplitude", p), f"{p}.amplitude")
    try:
        return TargetState(QuantumState(len(dims), tuple(dims), amps))
    except ValueError as exc:
        raise DocumentError(f"{path}: {exc}") from None


def decode_graph(doc: str) -> GraphDocument:
    """Parse a graph document; structural faults raise DocumentError.

    Semantic problems (mode out of range, duplicate edges, ...) are left to
    validate_graph so a client can inspect a broken graph instead of being
    locked out of it.
    """
    root = _parse_json(doc, "graph document")
    if not isinstance(root, dict):
        raise DocumentError("graph document: expected a top-level object")
    name = _as_str(root.get("name", ""), "name")
    vertices, positions = _decode_vertices(_require(root, "vertices", "graph document"), "vertices")
    edges = _decode_edges(_require(root, "edges", "graph document"), "edges")
    try:
        graph = ColoredGraph(vertices, edges, name)
    except ValueError as exc:
        raise DocumentError(f"graph document: {exc}") from None
    target = None
    if root.get("target") is not None:
        target = _decode_target(root["target"], graph.dims_of(graph.site_ids), "target")
    return GraphDocument(graph, positions, target)


# --------------------------------------------------------------------------
# search templates


def encode_search_template(config: SearchConfig) -> str:
    """Render a search configuration as a canonical template document."""
    probe = ColoredGraph(config.vertices, ())
    dims = probe.dims_of(_task_sites(probe, config.task))
    obj: dict[str, Any] = {
        "name": config.name,
        "vertices": _vertex_records(probe, None),
        "target": _target_records(config.target, dims),
        "task": config.task,
    }
    if config.initial_edges is not None:
        obj["initial_edges"] = [
            [ge.u, ge.v] if not ge.colored else [ge.u, ge.v, ge.cu, ge.cv]
            for ge in config.initial_edges
        ]
    obj["optimizer"] = {
        "max_iterations": config.optimizer.max_iterations,
        "restarts": config.optimizer.restarts,
        "grad_tol": float(config.optimizer.grad_tol),
        "loss_tol": float(config.optimizer.loss_tol),
    }
    obj["pruning"] = {
        "threshold": float(config.pruning.threshold),
        "reopt_restarts": config.pruning.reopt_restarts,
    }
    obj["seed"] = config.seed
    return _dump(obj)


def _decode_geometry(raw: Any, path: str) -> tuple[GeometryEdge, ...]:
    out = []
    for i, rec in enumerate(_as_list(raw, path)):
        p = f"{path}[{i}]"
        entry = _as_list(rec, p)
        if len(entry) == 2:
            out.append(GeometryEdge(_as_int(entry[0], f"{p}[0]"), _as_int(entry[1], f"{p}[1]")))
        elif len(entry) == 4:
            out.append(GeometryEdge(*(_as_int(x, f"{p}[{k}]") for k, x in enumerate(entry))))
        else:
            raise DocumentError(f"{p}: expected [u, v] or [u, v, cu, cv]")
    return tuple(out)


def decode_search_template(doc: str) -> SearchConfig:
    """Parse a template document into a search configuration."""
    root = _parse_json(doc, "search template")
    if not isinstance(root, dict):
        raise DocumentError("search template: expected a top-level object")
    name = _as_str(root.get("name", ""), "name")
    vertices, _ = _decode_vertices(_require(root, "vertices", "search template"), "vertices")
    task = _as_str(root.get("task", GENERATION), "task")
    if task not in TASKS:
        raise DocumentError(f"task: unknown task {task!r}")
    if root.get("target") is None:
        raise DocumentError("search template: target required")
    try:
        probe = ColoredGraph(vertices, ())
        dims = probe.dims_of(_task_sites(probe, task))
    except ValueError as exc:
        raise DocumentError(f"vertices: {exc}") from None
    target = _decode_target(root["target"], dims, "target")

    initial = None
    if root.get("initial_edges") is not None:
        initial = _decode_geometry(root["initial_edges"], "initial_edges")

    opt = OptimizerSettings()
    raw_opt = root.get("optimizer")
    if raw_opt is not None:
        if not isinstance(raw_opt, dict):
            raise DocumentError("optimizer: expected an object")
        opt = replace(
            opt,
            max_iterations=_as_int(raw_opt.get("max_iterations", opt.max_iterations), "optimizer.max_iterations"),
            restarts=_as_int(raw_opt.get("restarts", opt.restarts), "optimizer.restarts"),
            grad_tol=_as_number(raw_opt.get("grad_tol", opt.grad_tol), "optimizer.grad_tol"),
            loss_tol=_as_number(raw_opt.get("loss_tol", opt.loss_tol), "optimizer.loss_tol"),
        )
    prune_settings = PruneSettings()
    raw_prune = root.get("pruning")
    if raw_prune is not None:
        if not isinstance(raw_prune, dict):
            raise DocumentError("pruning: expected an object")
        prune_settings = replace(
            prune_settings,
            threshold=_as_number(raw_prune.get("threshold", prune_settings.threshold), "pruning.threshold"),
            reopt_restarts=_as_int(raw_prune.get("reopt_restarts", prune_settings.reopt_restarts), "pruning.reopt_restarts"),
        )
    seed = _as_int(root.get("seed", 0), "seed")
    try:
        return SearchConfig(
            vertices=vertices,
            target=target,
            task=task,
            initial_edges=initial,
            optimizer=opt,
            pruning=prune_settings,
            seed=seed,
            name=name,
        )
    except ValueError as exc:
        raise DocumentError(f"search template: {exc}") from None


def template_from_graph(
    g: ColoredGraph,
    target: TargetState,
    *,
    task: str = GENERATION,
    uncolored: bool = True,
    optimizer: OptimizerSettings | None = None,
    pruning: PruneSettings | None = None,
    seed: int = 0,
) -> SearchConfig:
    """Search configuration whose initial geometry is the given graph.

    With ``uncolored`` (the usual restriction workflow) each connected vertex
    pair becomes one uncolored entry expanding to every mode combination;
    otherwise the exact colored edges carry over.
    """
    if uncolored:
        pairs = sorted({(e.u, e.v) for e in g.edges})
        geometry = tuple(GeometryEdge(u, v) for u, v in pairs)
    else:
        geometry = tuple(GeometryEdge(e.u, e.v, e.cu, e.cv) for e in g.edges)
    return SearchConfig(
        vertices=g.vertices,
        target=target,
        task=task,
        initial_edges=geometry,
        optimizer=optimizer or OptimizerSettings(),
        pruning=pruning or PruneSettings(),
        seed=seed,
        name=g.name,
    )


# --------------------------------------------------------------------------
# graph library


def _library_path(directory: str, name: str) -> str:
    if not _NAME_RE.match(name) or ".." in name:
        raise ValueError(f"invalid library name {name!r}")
    return os.path.join(directory, name + GRAPH_SUFFIX)


def library_list(directory: str) -> list[str]:
    """Names of stored graphs, sorted; an absent directory counts as empty."""
    try:
        entries = os.listdir(directory)
    except FileNotFoundError:
        return []
    return sorted(
        e[: -len(GRAPH_SUFFIX)] for e in entries if e.endswith(GRAPH_SUFFIX)
    )


def library_save(directory: str, name: str, document: str) -> str:
    """Atomically write a document under the given name; returns the path."""
    path = _library_path(directory, name)
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(document)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def library_load(directory: str, name: str) -> str:
    """Read a stored document; unknown names raise FileNotFoundError."""
    path = _library_path(directory, name)
    try:
        with open(path, "r") as fh:
            return fh.read()
    except FileNotFoundError:
        raise FileNotFoundError(f"no graph named {name!r} in {directory}") from None


def library_delete(directory: str, name: str) -> None:
    path = _library_path(directory, name)
    try:
        os.unlink(path)
    except FileNotFoundError:
        raise FileNotFoundError(f"no graph named {name!r} in {directory}") from None
