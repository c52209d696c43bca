from __future__ import annotations

import numpy as np
import pytest

import graphoptics as go
from conftest import random_graph


def fd_gradient(g: go.ColoredGraph, target, h: float = 1e-6) -> np.ndarray:
    """Central finite differences over the real and imaginary weight parts."""
    w = np.asarray(g.weights, dtype=complex)
    out = np.zeros(len(w), dtype=complex)
    for i in range(len(w)):
        for delta in (h, 1j * h):
            wp, wm = w.copy(), w.copy()
            wp[i] += delta
            wm[i] -= delta
            slope = (go.loss(g.with_weights(wp), target) - go.loss(g.with_weights(wm), target)) / (2 * h)
            out[i] += slope if delta == h else 1j * slope
    return out


# -------------------------------------------------------------- initial graphs


def test_build_initial_graph_weights_start_at_one():
    g = go.build_initial_graph(go.detectors(4, 2))
    assert len(g.edges) == 24
    assert set(g.weights) == {1.0 + 0j}
    assert go.validate_graph(g).ok


def test_build_initial_graph_rejects_odd_roster_for_generation():
    with pytest.raises(go.GraphError):
        go.build_initial_graph(go.detectors(3, 2))


def test_build_initial_graph_pair_restriction():
    g = go.build_initial_graph(go.detectors(4, 2), pairs=[(0, 1), (2, 3)])
    assert len(g.edges) == 8
    assert {(e.u, e.v) for e in g.edges} == {(0, 1), (2, 3)}


def test_expand_uncolored_pair_product_rule():
    verts = go.detectors(2, 3)
    g = go.expand_uncolored_edges(verts, [go.GeometryEdge(0, 1)])
    assert len(g.edges) == 9


def test_expand_mixed_geometry_deduplicates():
    verts = go.detectors(2, 2)
    g = go.expand_uncolored_edges(
        verts, [go.GeometryEdge(0, 1, 0, 0), go.GeometryEdge(0, 1)]
    )
    assert len(g.edges) == 4  # colored entry is covered by the expansion


def test_expand_rejects_bad_references():
    verts = go.detectors(2, 2)
    with pytest.raises(go.GraphError):
        go.expand_uncolored_edges(verts, [go.GeometryEdge(0, 5)])
    with pytest.raises(go.GraphError):
        go.expand_uncolored_edges(verts, [go.GeometryEdge(0, 0)])
    with pytest.raises(go.GraphError):
        go.expand_uncolored_edges(verts, [go.GeometryEdge(0, 1, 0, 2)])
    with pytest.raises(ValueError):
        go.GeometryEdge(0, 1, 0, None)


# ------------------------------------------------------------------- the loss


def test_loss_agrees_with_state_fidelity():
    target = go.ghz_state(4, 2)
    rng = np.random.default_rng(11)
    for _ in range(25):
        g = random_graph(rng, n_vertices=4, n_edges=int(rng.integers(0, 14)))
        state = go.compute_state(g)
        direct = 1.0 - go.fidelity(state, target) if state.amplitudes else 1.0
        assert go.loss(g, target) == pytest.approx(direct, abs=1e-12)


def test_loss_of_exact_solution_is_zero(square_graph):
    assert go.loss(square_graph, go.ghz_state(4, 2)) == pytest.approx(0.0, abs=1e-12)


def test_loss_without_matchings_is_one():
    g = go.ColoredGraph(go.detectors(4, 2), (go.edge(0, 1, 0, 0),))
    assert go.loss(g, go.ghz_state(4, 2)) == 1.0


def test_gradient_matches_finite_differences():
    target = go.ghz_state(4, 2)
    rng = np.random.default_rng(23)
    for _ in range(10):
        g = random_graph(rng, n_vertices=4, n_edges=10)
        analytic = go.loss_gradient(g, target)
        numeric = fd_gradient(g, target)
        denom = max(np.linalg.norm(numeric), 1e-12)
        assert np.linalg.norm(analytic - numeric) / denom < 1e-6


def test_gradient_hand_value():
    # psi = w0|00> + w1|11| at (1, 0) vs Bell: dL/dRe(w1) = -1, dL/dRe(w0) = 0
    g = go.ColoredGraph(
        go.detectors(2, 2),
        (go.Edge(0, 1, 0, 0, 1.0), go.Edge(0, 1, 1, 1, 0.0)),
    )
    grad = go.loss_gradient(g, go.bell_pair(2))
    assert grad[0] == pytest.approx(0.0, abs=1e-12)
    assert grad[1] == pytest.approx(-1.0, abs=1e-12)


def test_evaluator_rejects_shape_mismatch(square_graph):
    with pytest.raises(ValueError):
        go.loss(square_graph, go.bell_pair(2))


# ----------------------------------------------------------------- optimizer


def test_optimize_recovers_bell_weights():
    g = go.ColoredGraph(
        go.detectors(2, 2),
        (go.Edge(0, 1, 0, 0, 0.3), go.Edge(0, 1, 1, 1, -2.0)),
    )
    out = go.optimize_weights(g, go.bell_pair(2), seed=1)
    assert out.loss < 1e-10
    assert out.converged
    w = out.graph.weights
    assert w[0].real * w[1].real > 0  # equal sign -> constructive pair


def test_optimize_never_worse_than_input(square_graph):
    # input is already exact; random restarts must not degrade it
    out = go.optimize_weights(square_graph, go.ghz_state(4, 2), seed=5)
    assert out.loss <= go.loss(square_graph, go.ghz_state(4, 2)) + 1e-15


def test_optimize_deterministic_under_seed():
    g = go.build_initial_graph(go.detectors(4, 2))
    target = go.ghz_state(4, 2)
    a = go.optimize_weights(g, target, go.OptimizerSettings(restarts=2), seed=7)
    b = go.optimize_weights(g, target, go.OptimizerSettings(restarts=2), seed=7)
    assert a.graph.weights == b.graph.weights
    assert a.loss == b.loss and a.iterations == b.iterations


def test_optimize_empty_graph_is_noop():
    g = go.ColoredGraph(go.detectors(4, 2), ())
    out = go.optimize_weights(g, go.ghz_state(4, 2))
    assert out.loss == 1.0 and not out.converged and out.iterations == 0


def test_optimizer_progress_reports_each_restart():
    g = go.build_initial_graph(go.detectors(4, 2))
    events = []
    go.optimize_weights(
        g, go.ghz_state(4, 2), go.OptimizerSettings(restarts=3), progress=events.append
    )
    restarts = [e["restart"] for e in events if e["type"] == "restart"]
    assert restarts == [0, 1, 2, 3]  # warm start plus three randoms
    losses = [e["loss"] for e in events if e["type"] == "restart"]
    assert losses == sorted(losses, reverse=True)  # best-so-far never rises


# -------------------------------------------------------------------- pruning


def test_prune_removes_redundant_edge(square_graph):
    verts = square_graph.vertices
    junk = go.edge(0, 2, 0, 1, 0.05)
    g = go.ColoredGraph(verts, square_graph.edges + (junk,))
    res = go.prune(g, go.ghz_state(4, 2), go.PruneSettings(threshold=1e-4), seed=3)
    assert res.edges_removed >= 1
    assert len(res.graph.edges) == 4
    assert res.feasible and res.loss < 1e-4
    assert {e.key() for e in res.graph.edges} == {e.key() for e in square_graph.edges}


def test_prune_keeps_essential_edges(square_graph):
    res = go.prune(square_graph, go.ghz_state(4, 2), go.PruneSettings(threshold=1e-6), seed=0)
    assert res.edges_removed == 0
    assert res.graph == square_graph
    assert res.loss_trace == (pytest.approx(0.0, abs=1e-12),)


def test_prune_trace_and_counts_are_consistent(square_graph):
    junk = go.edge(1, 3, 0, 1, 0.01)
    g = go.ColoredGraph(square_graph.vertices, square_graph.edges + (junk,))
    res = go.prune(g, go.ghz_state(4, 2), seed=2)
    assert len(res.loss_trace) == res.edges_removed + 1
    assert all(l <= 1e-2 for l in res.loss_trace[1:])


def test_prune_infeasible_start_stays_put():
    g = go.ColoredGraph(go.detectors(4, 2), (go.edge(0, 1, 0, 0), go.edge(2, 3, 1, 1)))
    res = go.prune(g, go.ghz_state(4, 2), seed=0)
    assert not res.feasible
    assert res.edges_removed == 0


# ------------------------------------------------------------------- discover


def test_discover_finds_minimal_ghz_graph():
    cfg = go.SearchConfig(vertices=go.detectors(4, 2), target=go.ghz_state(4, 2), seed=0)
    res = go.discover(cfg)
    assert res.feasible
    assert len(res.graph.edges) == 4
    assert res.loss < 1e-6
    state = go.compute_state(res.graph)
    assert go.fidelity(state, go.ghz_state(4, 2)) > 0.999999


def test_discover_respects_restricted_geometry():
    geometry = tuple(go.GeometryEdge(u, v) for u, v in ((0, 1), (1, 2), (2, 3), (0, 3)))
    cfg = go.SearchConfig(
        vertices=go.detectors(4, 2),
        target=go.ghz_state(4, 2),
        initial_edges=geometry,
        seed=1,
    )
    res = go.discover(cfg)
    allowed = {(0, 1), (1, 2), (2, 3), (0, 3)}
    assert {(e.u, e.v) for e in res.graph.edges} <= allowed
    assert res.feasible


def test_discover_flags_infeasible_geometry():
    # only disjoint pairs: products of Bell pairs, fidelity to GHZ capped at 1/2
    geometry = (go.GeometryEdge(0, 1), go.GeometryEdge(2, 3))
    cfg = go.SearchConfig(
        vertices=go.detectors(4, 2),
        target=go.ghz_state(4, 2),
        initial_edges=geometry,
        seed=0,
    )
    res = go.discover(cfg)
    assert not res.feasible
    assert res.loss > 0.4


def test_discover_emits_ordered_events():
    cfg = go.SearchConfig(vertices=go.detectors(4, 2), target=go.ghz_state(4, 2), seed=0)
    events = []
    go.discover(cfg, progress=events.append)
    kinds = [e["type"] for e in events]
    assert kinds[0] == "phase" and events[0]["phase"] == "optimizing"
    assert kinds[-1] == "done"
    assert kinds.count("done") == 1
    counts = [e["edge_count"] for e in events if e["type"] == "edge_removed"]
    assert counts and counts == sorted(counts, reverse=True) and len(set(counts)) == len(counts)


def test_discover_can_be_cancelled_midway():
    cfg = go.SearchConfig(vertices=go.detectors(4, 2), target=go.ghz_state(4, 2), seed=0)
    calls = [0]

    def stop() -> bool:
        calls[0] += 1
        return calls[0] > 50

    with pytest.raises(go.SearchCancelled):
        go.discover(cfg, should_stop=stop)


def test_discover_reproducible_from_seed():
    cfg = go.SearchConfig(vertices=go.detectors(4, 2), target=go.ghz_state(4, 2), seed=9)
    a = go.discover(cfg)
    b = go.discover(cfg)
    assert a.graph == b.graph
    assert a.loss == b.loss
    assert a.loss_trace == b.loss_trace


def test_validate_config_rejects_mismatched_target():
    with pytest.raises(ValueError):
        go.discover(go.SearchConfig(vertices=go.detectors(4, 2), target=go.bell_pair(2)))


def test_validate_config_rejects_gappy_ids():
    verts = (go.Vertex(0, go.DETECTOR, 2), go.Vertex(2, go.DETECTOR, 2))
    with pytest.raises(go.GraphError):
        go.discover(go.SearchConfig(vertices=verts, target=go.bell_pair(2)))


# ------------------------------------------------------------------ analyzers


def bell_analyzer(flip: bool = False) -> go.ColoredGraph:
    w = -1.0 if flip else 1.0
    return go.ColoredGraph(
        (go.Vertex(0, go.INPUT, 2), go.Vertex(1, go.INPUT, 2)),
        (go.edge(0, 1, 0, 0, 1.0), go.edge(0, 1, 1, 1, w)),
    )


def test_analyzer_functional_reads_input_vertices():
    f = go.analyzer_functional(bell_analyzer())
    assert f.amplitudes == {(0, 0): 1.0 + 0j, (1, 1): 1.0 + 0j}


def test_analyzer_functional_needs_inputs(square_graph):
    with pytest.raises(go.GraphError):
        go.analyzer_functional(square_graph)


def test_bell_analyzer_validates():
    report = go.verify_analyzer(bell_analyzer(), go.bell_pair(2))
    assert report.is_valid
    assert report.offending_kets == ()
    assert abs(report.scale) > 0


def test_sign_flipped_analyzer_is_rejected():
    report = go.verify_analyzer(bell_analyzer(flip=True), go.bell_pair(2))
    assert not report.is_valid
    assert len(report.offending_kets) > 0


def test_analyzer_with_surviving_stray_ket_lists_it():
    g = go.ColoredGraph(
        (go.Vertex(0, go.INPUT, 2), go.Vertex(1, go.INPUT, 2)),
        (
            go.edge(0, 1, 0, 0, 1.0),
            go.edge(0, 1, 1, 1, 1.0),
            go.edge(0, 1, 0, 1, 0.3),
        ),
    )
    report = go.verify_analyzer(g, go.bell_pair(2))
    assert not report.is_valid
    assert (0, 1) in report.offending_kets


def test_analyzer_verdict_is_scale_invariant():
    g = bell_analyzer()
    scaled = g.with_weights([w * (0.001 - 0.002j) for w in g.weights])
    assert go.verify_analyzer(scaled, go.bell_pair(2)).is_valid


def test_analyzer_with_complex_target_checks_conjugate():
    # target (|00> + i|11>)/sqrt2 needs functional proportional to (1, -i)
    target = go.target_state(
        go.QuantumState(2, (2, 2), {(0, 0): 1.0, (1, 1): 1j})
    )
    good = go.ColoredGraph(
        (go.Vertex(0, go.INPUT, 2), go.Vertex(1, go.INPUT, 2)),
        (go.edge(0, 1, 0, 0, 1.0), go.edge(0, 1, 1, 1, -1j)),
    )
    bad = go.ColoredGraph(
        (go.Vertex(0, go.INPUT, 2), go.Vertex(1, go.INPUT, 2)),
        (go.edge(0, 1, 0, 0, 1.0), go.edge(0, 1, 1, 1, 1j)),
    )
    assert go.verify_analyzer(good, target).is_valid
    assert not go.verify_analyzer(bad, target).is_valid


def test_analyzer_search_task():
    # ancilla-free Bell analyzer discovered from the full 2-input geometry
    verts = (go.Vertex(0, go.INPUT, 2), go.Vertex(1, go.INPUT, 2))
    cfg = go.SearchConfig(vertices=verts, target=go.bell_pair(2), task=go.ANALYZER, seed=0)
    res = go.discover(cfg)
    assert res.feasible
    report = go.verify_analyzer(res.graph, go.bell_pair(2), tol=1e-4)
    assert report.is_valid
