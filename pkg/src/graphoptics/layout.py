"""3D vertex placement by Kamada-Kawai stress minimization.

Stress E = sum over pairs of (1/d_ij^2) * (||x_i - x_j|| - d_ij)^2 with d the
breadth-first graph distance on the simple collapse of the multigraph. The
minimizer sweeps vertices one at a time, descending each to near-stationarity,
which keeps the sweep trace monotone and lands exactly realizable embeddings
(paths, K2) at machine-precision stress.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .graphs import ColoredGraph, GraphError


@dataclass(frozen=True)
class LayoutSettings:
    seed: int = 0
    max_iters: int = 1000  # full sweeps over all vertices
    tol: float = 1e-4  # stop when one sweep improves stress by less


@dataclass(frozen=True)
class Layout:
    """Positions in vertex-id order, final stress, and the per-sweep stress trace."""

    positions: tuple[tuple[float, float, float], ...]
    stress: float
    trace: tuple[float, ...]


def graph_distances(g: ColoredGraph) -> np.ndarray:
    """All-pairs shortest path lengths; parallel edges and colors collapse.

    Pairs in different components get (largest finite distance + 1), so the
    stress objective stays finite and smooth on disconnected graphs.
    """
    n = len(g.vertices)
    index = {v.id: i for i, v in enumerate(g.vertices)}
    adj: list[set[int]] = [set() for _ in range(n)]
    for e in g.edges:
        iu, iv = index[e.u], index[e.v]
        adj[iu].add(iv)
        adj[iv].add(iu)
    dist = np.full((n, n), np.inf)
    for s in range(n):
        dist[s, s] = 0.0
        queue = deque([s])
        while queue:
            cur = queue.popleft()
            for nxt in adj[cur]:
                if not np.isfinite(dist[s, nxt]):
                    dist[s, nxt] = dist[s, cur] + 1.0
                    queue.append(nxt)
    finite = dist[np.isfinite(dist)]
    fill = (finite.max() if finite.size else 0.0) + 1.0
    dist[~np.isfinite(dist)] = fill
    return dist


def stress(positions: np.ndarray, distances: np.ndarray) -> float:
    """Evaluate the layout objective for given positions and target distances."""
    positions = np.asarray(positions, dtype=float)
    distances = np.asarray(distances, dtype=float)
    n = positions.shape[0]
    if positions.ndim != 2 or positions.shape[1] != 3 or distances.shape != (n, n):
        raise ValueError(
            f"positions {positions.shape} and distances {distances.shape} do not agree"
        )
    total = 0.0
    for i in range(n):
        diff = positions[i + 1 :] - positions[i]
        r = np.sqrt((diff**2).sum(axis=1))
        d = distances[i, i + 1 :]
        total += float((((r - d) ** 2) / d**2).sum())
    return total


def _vertex_stress(x: np.ndarray, others: np.ndarray, d: np.ndarray) -> float:
    r = np.sqrt(((others - x) ** 2).sum(axis=1))
    return float((((r - d) ** 2) / d**2).sum())


def _vertex_grad(x: np.ndarray, others: np.ndarray, d: np.ndarray) -> np.ndarray:
    diff = x - others
    r = np.sqrt((diff**2).sum(axis=1))
    safe = np.maximum(r, 1e-12)
    coeff = 2.0 * (r - d) / (d**2 * safe)
    return (coeff[:, None] * diff).sum(axis=0)


def _descend_vertex(x: np.ndarray, others: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Minimize one vertex's stress contribution to near-stationarity."""
    val = _vertex_stress(x, others, d)
    step = 1.0
    for _ in range(100):
        grad = _vertex_grad(x, others, d)
        gnorm_sq = float(grad @ grad)
        if math.sqrt(gnorm_sq) < 1e-9:
            break
        t = step
        moved = False
        for _ in range(50):
            trial = x - t * grad
            tval = _vertex_stress(trial, others, d)
            if tval <= val - 1e-4 * t * gnorm_sq:
                x, val, moved = trial, tval, True
                break
            t *= 0.5
        if not moved:
            break
        step = min(t * 2.0, 4.0)
    return x


def kamada_kawai_3d(g: ColoredGraph, settings: LayoutSettings | None = None) -> Layout:
    """Embed the graph in 3D; deterministic under the seed, centered at the origin."""
    settings = settings or LayoutSettings()
    n = len(g.vertices)
    if n == 0:
        raise GraphError("layout needs at least one vertex")
    if n == 1:
        return Layout(((0.0, 0.0, 0.0),), 0.0, (0.0,))

    d = graph_distances(g)
    rng = np.random.default_rng(settings.seed)
    # uniform in the unit ball: random direction, radius ~ u^(1/3)
    direction = rng.normal(size=(n, 3))
    x = direction / np.linalg.norm(direction, axis=1, keepdims=True)
    x *= rng.uniform(size=(n, 1)) ** (1.0 / 3.0)

    others_idx = [np.array([j for j in range(n) if j != i]) for i in range(n)]
    value = stress(x, d)
    trace = [value]
    for _ in range(settings.max_iters):
        for i in range(n):
            idx = others_idx[i]
            x[i] = _descend_vertex(x[i], x[idx], d[i, idx])
        new_value = stress(x, d)
        trace.append(new_value)
        if value - new_value < settings.tol:
            value = new_value
            break
        value = new_value

    x -= x.mean(axis=0)
    return Layout(tuple(map(tuple, x.tolist())), value, tuple(trace))
