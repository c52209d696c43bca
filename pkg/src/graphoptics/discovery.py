"""Minimal-experiment search: weight optimization plus topological pruning.

The search starts from the largest graph compatible with the roster (or a
restricted geometry), minimizes 1 - fidelity over real edge weights by
gradient descent, then repeatedly deletes edges whose removal keeps the
re-optimized loss below a threshold. Analyzer graphs are scored the same way
with the target conjugated and kets read at the input vertices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .graphs import (
    ColoredGraph,
    Edge,
    GraphError,
    QuantumState,
    Vertex,
    ZERO_TOL,
    compute_state,
    enumerate_perfect_matchings,
)
from .states import TargetState

GENERATION = "generation"
ANALYZER = "analyzer"
TASKS = (GENERATION, ANALYZER)

ProgressFn = Callable[[dict], None]
StopFn = Callable[[], bool]


class SearchCancelled(RuntimeError):
    """The surrounding job asked the search to stop."""


@dataclass(frozen=True)
class GeometryEdge:
    """One entry of an initial geometry; uncolored entries stand for every mode pair."""

    u: int
    v: int
    cu: int | None = None
    cv: int | None = None

    def __post_init__(self) -> None:
        if (self.cu is None) != (self.cv is None):
            raise ValueError(f"geometry edge ({self.u},{self.v}) must color both endpoints or neither")

    @property
    def colored(self) -> bool:
        return self.cu is not None


@dataclass(frozen=True)
class OptimizerSettings:
    max_iterations: int = 2000
    restarts: int = 5
    grad_tol: float = 1e-8
    loss_tol: float = 1e-10
    step_init: float = 1.0
    step_max: float = 16.0


@dataclass(frozen=True)
class PruneSettings:
    threshold: float = 1e-2
    reopt_restarts: int = 1


@dataclass(frozen=True)
class SearchConfig:
    vertices: tuple[Vertex, ...]
    target: TargetState
    task: str = GENERATION
    initial_edges: tuple[GeometryEdge, ...] | None = None
    optimizer: OptimizerSettings = OptimizerSettings()
    pruning: PruneSettings = PruneSettings()
    seed: int = 0
    name: str = ""


@dataclass(frozen=True)
class OptimizeOutcome:
    graph: ColoredGraph
    loss: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class SearchResult:
    graph: ColoredGraph
    loss: float
    loss_trace: tuple[float, ...]
    edges_removed: int
    seed: int
    feasible: bool
    total_iterations: int


def build_initial_graph(
    vertices: Sequence[Vertex],
    pairs: Iterable[tuple[int, int]] | None = None,
    task: str = GENERATION,
    name: str = "",
) -> ColoredGraph:
    """Largest graph on the roster: every vertex pair, every mode combination.

    ``pairs`` restricts which vertex pairs receive edges; all weights start
    at 1. Generation tasks require an even vertex count (odd counts admit no
    perfect matchings at all).
    """
    vertices = tuple(vertices)
    if not vertices:
        raise GraphError("vertex roster is empty")
    if task == GENERATION and len(vertices) % 2 == 1:
        raise GraphError(
            f"generation task needs an even vertex count, got {len(vertices)}"
        )
    by_id = {v.id: v for v in vertices}
    if pairs is None:
        pair_list = list(itertools.combinations(sorted(by_id), 2))
    else:
        pair_list = [(min(u, v), max(u, v)) for u, v in pairs]
    edges = []
    for u, v in sorted(set(pair_list)):
        if u == v or u not in by_id or v not in by_id:
            raise GraphError(f"invalid vertex pair ({u},{v})")
        for cu in range(by_id[u].dimension):
            for cv in range(by_id[v].dimension):
                edges.append(Edge(u, v, cu, cv, 1.0))
    return ColoredGraph(vertices, tuple(edges), name)


def expand_uncolored_edges(
    vertices: Sequence[Vertex],
    geometry: Iterable[GeometryEdge | Sequence[int]],
    name: str = "",
) -> ColoredGraph:
    """Expand a mixed colored/uncolored geometry into a concrete graph.

    An uncolored entry (u, v) yields all dim(u) * dim(v) colored edges;
    colored entries pass through. Duplicates collapse to a single edge.
    """
    vertices = tuple(vertices)
    by_id = {v.id: v for v in vertices}
    seen: dict[tuple[int, int, int, int], Edge] = {}
    for entry in geometry:
        ge = entry if isinstance(entry, GeometryEdge) else GeometryEdge(*entry)
        u, v, cu, cv = ge.u, ge.v, ge.cu, ge.cv
        if u > v:
            u, v = v, u
            cu, cv = cv, cu
        if u == v:
            raise GraphError(f"geometry edge ({ge.u},{ge.v}) is a self-loop")
        if u not in by_id or v not in by_id:
            raise GraphError(f"geometry edge ({ge.u},{ge.v}) references unknown vertices")
        if ge.colored:
            if not 0 <= cu < by_id[u].dimension or not 0 <= cv < by_id[v].dimension:
                raise GraphError(
                    f"geometry edge ({ge.u},{ge.v},{ge.cu},{ge.cv}) has a mode outside the vertex dimensions"
                )
            seen.setdefault((u, v, cu, cv), Edge(u, v, cu, cv, 1.0))
        else:
            for mu in range(by_id[u].dimension):
                for mv in range(by_id[v].dimension):
                    seen.setdefault((u, v, mu, mv), Edge(u, v, mu, mv, 1.0))
    return ColoredGraph(vertices, tuple(seen.values()), name)


def _task_sites(g: ColoredGraph, task: str) -> tuple[int, ...]:
    if task == GENERATION:
        return g.site_ids
    if task == ANALYZER:
        if not g.input_ids:
            raise GraphError("analyzer graph needs at least one input vertex")
        return g.input_ids
    raise ValueError(f"unknown task {task!r}")


class _Evaluator:
    """Vectorized loss/gradient for one topology.

    The perfect matchings and their kets depend only on the topology, so they
    are tabulated once; every evaluation is then a handful of array ops. The
    loss is 1 - |<t|psi>|^2 / <psi|psi> with psi multilinear in the weights.
    """

    def __init__(self, g: ColoredGraph, target: TargetState | QuantumState, task: str = GENERATION):
        t_state = target.state if isinstance(target, TargetState) else target
        sites = _task_sites(g, task)
        dims = g.dims_of(sites)
        if t_state.num_sites != len(sites) or tuple(t_state.dims) != dims:
            raise ValueError(
                f"target has {t_state.num_sites} sites {tuple(t_state.dims)}, "
                f"graph exposes {len(sites)} sites {dims}"
            )
        t_map = t_state.amplitudes
        if task == ANALYZER:
            # the functional must match the *conjugated* target amplitudes
            t_map = {k: a.conjugate() for k, a in t_map.items()}
        t_norm = math.sqrt(sum(abs(a) ** 2 for a in t_map.values()))
        if t_norm <= ZERO_TOL:
            raise ValueError("target state has zero norm")

        pms = enumerate_perfect_matchings(g)
        self.num_edges = len(g.edges)
        self.degenerate = not pms
        if self.degenerate:
            return
        kets = []
        covered_mode: dict[int, int] = {}
        for pm in pms:
            covered_mode.clear()
            for ei in pm.edges:
                e = g.edges[ei]
                covered_mode[e.u] = e.cu
                covered_mode[e.v] = e.cv
            kets.append(tuple(covered_mode[s] for s in sites))
        unique = sorted(set(kets))
        index = {k: i for i, k in enumerate(unique)}
        self.kets = unique
        self.ket_id = np.array([index[k] for k in kets], dtype=np.intp)
        self.edge_idx = np.array([pm.edges for pm in pms], dtype=np.intp)
        self.t_vec = np.array([t_map.get(k, 0.0) for k in unique], dtype=complex) / t_norm

    def _amplitudes(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = w[self.edge_idx]
        amp_pm = m.prod(axis=1)
        amps = np.zeros(len(self.kets), dtype=complex)
        np.add.at(amps, self.ket_id, amp_pm)
        return m, amps

    def value(self, w: Sequence[complex]) -> float:
        if self.degenerate:
            return 1.0
        _, amps = self._amplitudes(np.asarray(w, dtype=complex))
        norm_sq = float((amps.real**2 + amps.imag**2).sum())
        if norm_sq < 1e-300:
            return 1.0
        overlap = np.vdot(self.t_vec, amps)
        return 1.0 - float(abs(overlap) ** 2 / norm_sq)

    def value_and_gradient(self, w: Sequence[complex]) -> tuple[float, np.ndarray]:
        """Loss plus its gradient d/dRe(w) + i d/dIm(w) per edge."""
        w = np.asarray(w, dtype=complex)
        if self.degenerate:
            return 1.0, np.zeros(self.num_edges, dtype=complex)
        m, amps = self._amplitudes(w)
        norm_sq = float((amps.real**2 + amps.imag**2).sum())
        if norm_sq < 1e-300:
            return 1.0, np.zeros(self.num_edges, dtype=complex)
        overlap = np.vdot(self.t_vec, amps)

        # per-matching products that omit one member edge (prefix * suffix)
        rows, cols = m.shape
        prefix = np.ones_like(m)
        suffix = np.ones_like(m)
        if cols > 1:
            np.cumprod(m[:, :-1], axis=1, out=prefix[:, 1:])
            suffix[:, :-1] = np.cumprod(m[:, :0:-1], axis=1)[:, ::-1]
        partial = prefix * suffix

        t_pm = self.t_vec.conj()[self.ket_id]
        a_pm = amps.conj()[self.ket_id]
        d_overlap = np.zeros(self.num_edges, dtype=complex)
        d_norm = np.zeros(self.num_edges, dtype=complex)
        flat = self.edge_idx.ravel()
        np.add.at(d_overlap, flat, (t_pm[:, None] * partial).ravel())
        np.add.at(d_norm, flat, (a_pm[:, None] * partial).ravel())

        # Wirtinger derivative of the fidelity, then real/imaginary parts
        d_fid = (overlap.conjugate() * d_overlap * norm_sq - abs(overlap) ** 2 * d_norm) / norm_sq**2
        grad = -2.0 * d_fid.conjugate()
        return 1.0 - float(abs(overlap) ** 2 / norm_sq), grad


def loss(g: ColoredGraph, target: TargetState | QuantumState, task: str = GENERATION) -> float:
    """1 - fidelity of the graph state against the target; 1 if the state vanishes."""
    return _Evaluator(g, target, task).value(np.asarray(g.weights, dtype=complex))


def loss_gradient(
    g: ColoredGraph, target: TargetState | QuantumState, task: str = GENERATION
) -> np.ndarray:
    """Exact per-edge loss derivatives, Re/Im packed as a complex vector."""
    _, grad = _Evaluator(g, target, task).value_and_gradient(np.asarray(g.weights, dtype=complex))
    return grad


def _descend(
    ev: _Evaluator,
    x0: np.ndarray,
    settings: OptimizerSettings,
    should_stop: StopFn | None,
) -> tuple[np.ndarray, float, bool, int]:
    """Gradient descent with backtracking (Armijo) line search over real weights."""
    x = np.asarray(x0, dtype=float).copy()
    val, grad_c = ev.value_and_gradient(x)
    grad = grad_c.real
    step = settings.step_init
    iterations = 0
    converged = False
    while iterations < settings.max_iterations:
        if should_stop is not None and should_stop():
            raise SearchCancelled("weight optimization cancelled")
        gnorm_sq = float(grad @ grad)
        if math.sqrt(gnorm_sq) < settings.grad_tol or val < settings.loss_tol:
            converged = True
            break
        t = step
        candidate = None
        for _ in range(60):
            trial = x - t * grad
            trial_val = ev.value(trial)
            if trial_val <= val - 1e-4 * t * gnorm_sq:
                candidate = (trial, trial_val)
                break
            t *= 0.5
        if candidate is None:
            break  # no descent at numerical precision
        x, val = candidate
        _, grad_c = ev.value_and_gradient(x)
        grad = grad_c.real
        step = min(t * 2.0, settings.step_max)
        iterations += 1
    else:
        converged = math.sqrt(float(grad @ grad)) < settings.grad_tol or val < settings.loss_tol
    return x, val, converged, iterations


def optimize_weights(
    g: ColoredGraph,
    target: TargetState | QuantumState,
    settings: OptimizerSettings | None = None,
    *,
    seed: int | Sequence[int] = 0,
    task: str = GENERATION,
    progress: ProgressFn | None = None,
    should_stop: StopFn | None = None,
) -> OptimizeOutcome:
    """Best weights over a warm start plus ``settings.restarts`` random starts.

    Deterministic under a fixed seed; the returned loss never exceeds the
    loss of the input weights (the unmodified graph is always a candidate).
    """
    settings = settings or OptimizerSettings()
    ev = _Evaluator(g, target, task)
    w_orig = np.asarray(g.weights, dtype=complex)
    base_loss = ev.value(w_orig)
    if ev.degenerate or not g.edges:
        return OptimizeOutcome(g, base_loss, False, 0)

    rng = np.random.default_rng(seed)
    starts = [w_orig.real.astype(float)]
    starts += [rng.uniform(-1.0, 1.0, len(g.edges)) for _ in range(settings.restarts)]

    best_w: np.ndarray | None = None  # None means "keep the original weights"
    best_loss = base_loss
    best_converged = base_loss < settings.loss_tol
    iterations = 0
    for k, x0 in enumerate(starts):
        x, val, conv, used = _descend(ev, x0, settings, should_stop)
        iterations += used
        if val < best_loss:
            best_w, best_loss, best_converged = x, val, conv
        if progress is not None:
            progress({"type": "restart", "restart": k, "loss": best_loss})
    out_graph = g if best_w is None else g.with_weights(best_w.astype(complex))
    return OptimizeOutcome(out_graph, best_loss, best_converged, iterations)


def prune(
    g: ColoredGraph,
    target: TargetState | QuantumState,
    settings: PruneSettings | None = None,
    *,
    optimizer: OptimizerSettings | None = None,
    seed: int = 0,
    task: str = GENERATION,
    progress: ProgressFn | None = None,
    should_stop: StopFn | None = None,
) -> SearchResult:
    """Remove edges while the re-optimized loss stays at or below the threshold.

    Candidates are tried in ascending |weight| (ties by canonical edge order);
    a rejected removal restores the previous weights. The loop ends when no
    single removal survives.
    """
    settings = settings or PruneSettings()
    optimizer = optimizer or OptimizerSettings()
    reopt = replace(optimizer, restarts=settings.reopt_restarts)

    current = g
    current_loss = loss(current, target, task)
    trace = [current_loss]
    removed = 0
    iterations = 0
    trial = 0
    while True:
        order = sorted(
            range(len(current.edges)),
            key=lambda i: (abs(current.edges[i].weight), current.edges[i].key()),
        )
        accepted = False
        for idx in order:
            if should_stop is not None and should_stop():
                raise SearchCancelled("pruning cancelled")
            trial += 1
            candidate = current.without_edge(idx)
            out = optimize_weights(
                candidate,
                target,
                reopt,
                seed=[seed, trial] if isinstance(seed, int) else list(seed) + [trial],
                task=task,
                should_stop=should_stop,
            )
            iterations += out.iterations
            if out.loss <= settings.threshold:
                current = out.graph
                current_loss = out.loss
                removed += 1
                trace.append(out.loss)
                if progress is not None:
                    progress(
                        {
                            "type": "edge_removed",
                            "edge_count": len(current.edges),
                            "loss": out.loss,
                        }
                    )
                accepted = True
                break
        if not accepted:
            break
    return SearchResult(
        graph=current,
        loss=current_loss,
        loss_trace=tuple(trace),
        edges_removed=removed,
        seed=seed if isinstance(seed, int) else -1,
        feasible=current_loss <= settings.threshold,
        total_iterations=iterations,
    )


def validate_config(config: SearchConfig) -> None:
    """Reject rosters, targets, and geometries that cannot form a search."""
    if config.task not in TASKS:
        raise ValueError(f"unknown task {config.task!r}")
    if not config.vertices:
        raise GraphError("vertex roster is empty")
    ids = sorted(v.id for v in config.vertices)
    if ids != list(range(len(ids))):
        raise GraphError(f"vertex ids must be 0..{len(ids) - 1}, got {ids}")
    if config.task == GENERATION and len(config.vertices) % 2 == 1:
        raise GraphError(
            f"generation task needs an even vertex count, got {len(config.vertices)}"
        )
    probe = ColoredGraph(config.vertices, ())
    sites = _task_sites(probe, config.task)
    t = config.target.state
    if t.num_sites != len(sites) or tuple(t.dims) != probe.dims_of(sites):
        raise ValueError(
            f"target has {t.num_sites} sites {tuple(t.dims)}, "
            f"roster exposes {len(sites)} sites {probe.dims_of(sites)}"
        )


def discover(
    config: SearchConfig,
    *,
    progress: ProgressFn | None = None,
    should_stop: StopFn | None = None,
) -> SearchResult:
    """Full search: initial graph, weight optimization, pruning.

    Reproducible from the recorded seed; infeasible searches come back with
    ``feasible=False`` rather than a high-loss graph masquerading as a
    solution.
    """
    validate_config(config)
    emit = progress if progress is not None else (lambda event: None)
    if config.initial_edges is None:
        g0 = build_initial_graph(config.vertices, task=config.task, name=config.name)
    else:
        g0 = expand_uncolored_edges(config.vertices, config.initial_edges, name=config.name)

    emit({"type": "phase", "phase": "optimizing", "edge_count": len(g0.edges)})
    opt = optimize_weights(
        g0,
        config.target,
        config.optimizer,
        seed=config.seed,
        task=config.task,
        progress=emit,
        should_stop=should_stop,
    )
    emit({"type": "phase", "phase": "pruning", "loss": opt.loss, "edge_count": len(opt.graph.edges)})
    result = prune(
        opt.graph,
        config.target,
        config.pruning,
        optimizer=config.optimizer,
        seed=config.seed,
        task=config.task,
        progress=emit,
        should_stop=should_stop,
    )
    result = replace(result, total_iterations=result.total_iterations + opt.iterations)
    emit(
        {
            "type": "done",
            "loss": result.loss,
            "edge_count": len(result.graph.edges),
            "feasible": result.feasible,
        }
    )
    return result


def analyzer_functional(g: ColoredGraph) -> QuantumState:
    """Coincidence amplitude per input-vertex ket; other vertices only contribute coverage."""
    if not g.input_ids:
        raise GraphError("analyzer graph needs at least one input vertex")
    return compute_state(g, sites=g.input_ids)


@dataclass(frozen=True)
class AnalyzerReport:
    is_valid: bool
    offending_kets: tuple[tuple[int, ...], ...]
    scale: complex
    functional: QuantumState


def verify_analyzer(
    g: ColoredGraph, target: TargetState | QuantumState, tol: float = 1e-8
) -> AnalyzerReport:
    """Check that the analyzer projects onto the target.

    Valid iff the input-ket functional equals a single complex multiple of
    the conjugated target amplitudes, and every non-target ket stays below
    tolerance. All comparisons are relative to the functional's norm, so a
    global rescaling of the edge weights never changes the verdict.
    """
    t = target.state if isinstance(target, TargetState) else target
    functional = analyzer_functional(g)
    if functional.num_sites != t.num_sites or functional.dims != t.dims:
        raise ValueError(
            f"target has {t.num_sites} sites {t.dims}, functional has "
            f"{functional.num_sites} sites {functional.dims}"
        )
    fnorm = functional.norm()
    if fnorm <= ZERO_TOL:
        return AnalyzerReport(False, tuple(sorted(t.amplitudes)), 0j, functional)
    t_norm_sq = sum(abs(a) ** 2 for a in t.amplitudes.values())
    # least-squares proportionality factor for F ~ c * conj(t)
    scale = sum(
        amp * functional.amplitudes.get(ket, 0j) for ket, amp in t.amplitudes.items()
    ) / t_norm_sq
    offending = []
    for ket in sorted(set(functional.amplitudes) | set(t.amplitudes)):
        residual = functional.amplitudes.get(ket, 0j) - scale * t.amplitudes.get(ket, 0j).conjugate()
        if abs(residual) > tol * fnorm:
            offending.append(ket)
    is_valid = not offending and abs(scale) > tol * fnorm
    return AnalyzerReport(is_valid, tuple(offending), scale, functional)
