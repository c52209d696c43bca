from __future__ import annotations

import itertools

import numpy as np
import pytest

import graphoptics as go


@pytest.fixture
def square_graph() -> go.ColoredGraph:
    """Four detectors in a cycle; the minimal GHZ(4,2) experiment."""
    return go.ColoredGraph(
        go.detectors(4, 2),
        (
            go.edge(0, 1, 0, 0),
            go.edge(1, 2, 1, 1),
            go.edge(2, 3, 0, 0),
            go.edge(0, 3, 1, 1),
        ),
        "square",
    )


@pytest.fixture
def bell_graph() -> go.ColoredGraph:
    return go.ColoredGraph(
        go.detectors(2, 2),
        (go.edge(0, 1, 0, 0), go.edge(0, 1, 1, 1)),
        "bell",
    )


def random_graph(
    rng: np.random.Generator,
    n_vertices: int = 4,
    dim: int = 2,
    n_edges: int = 10,
    complex_weights: bool = True,
    roles: bool = False,
) -> go.ColoredGraph:
    """Random simple-multigraph with distinct (u, v, cu, cv) slots."""
    if roles:
        role_choices = [go.DETECTOR, go.ANCILLA, go.INPUT]
        vertices = tuple(
            go.Vertex(i, role_choices[int(rng.integers(3))], dim) for i in range(n_vertices)
        )
    else:
        vertices = go.detectors(n_vertices, dim)
    slots = [
        (u, v, cu, cv)
        for u, v in itertools.combinations(range(n_vertices), 2)
        for cu in range(dim)
        for cv in range(dim)
    ]
    take = min(n_edges, len(slots))
    chosen = rng.choice(len(slots), size=take, replace=False)
    edges = []
    for idx in chosen:
        u, v, cu, cv = slots[int(idx)]
        w = complex(rng.normal(), rng.normal()) if complex_weights else complex(rng.normal())
        edges.append(go.Edge(u, v, cu, cv, w))
    return go.ColoredGraph(vertices, tuple(edges))


def brute_force_matchings(g: go.ColoredGraph) -> list[tuple[int, ...]]:
    """Oracle: try every edge subset of size V/2 and keep the exact covers."""
    n = len(g.vertices)
    if n == 0 or n % 2:
        return []
    ids = [v.id for v in g.vertices]
    out = []
    for subset in itertools.combinations(range(len(g.edges)), n // 2):
        touched = []
        for i in subset:
            touched.append(g.edges[i].u)
            touched.append(g.edges[i].v)
        if sorted(touched) == sorted(ids):
            out.append(subset)
    return sorted(out)
