"""Colored weighted multigraphs and their perfect-matching state calculus.

A graph encodes an experiment: vertices are detectors (or helper/input
photons), edges are correlated photon-pair sources carrying one mode per
endpoint and a complex amplitude. Coincidence events correspond to perfect
matchings; summing the weight products of all matchings per mode assignment
yields the post-selected quantum state.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

DETECTOR = "detector"
ANCILLA = "ancilla"
INPUT = "input"
ROLES = (DETECTOR, ANCILLA, INPUT)

# Absolute tolerance below which amplitudes count as zero.
ZERO_TOL = 1e-12


class GraphError(ValueError):
    """A graph (or matching) is structurally unusable for the requested operation."""


class VanishingStateError(ValueError):
    """All amplitudes cancel; the state has zero norm."""


@dataclass(frozen=True)
class Vertex:
    """A photon/detector site with a local mode space of size ``dimension``."""

    id: int
    role: str = DETECTOR
    dimension: int = 1


def detectors(count: int, dimension: int) -> tuple[Vertex, ...]:
    """Roster of ``count`` detector vertices, all with the same dimension."""
    return tuple(Vertex(i, DETECTOR, dimension) for i in range(count))


@dataclass(frozen=True)
class Edge:
    """Photon-pair source between vertices ``u`` and ``v``.

    ``cu``/``cv`` are the mode indices deposited at each endpoint; the complex
    weight carries amplitude and phase.
    """

    u: int
    v: int
    cu: int
    cv: int
    weight: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight", complex(self.weight))

    def key(self) -> tuple[int, int, int, int]:
        return (self.u, self.v, self.cu, self.cv)

    def other(self, vertex_id: int) -> int:
        return self.v if vertex_id == self.u else self.u

    def mode_at(self, vertex_id: int) -> int:
        return self.cu if vertex_id == self.u else self.cv


def edge(u: int, v: int, cu: int, cv: int, weight: complex = 1.0) -> Edge:
    """Build an edge, swapping endpoints (and modes) so that u < v."""
    if u > v:
        u, v, cu, cv = v, u, cv, cu
    return Edge(u, v, cu, cv, weight)


@dataclass(frozen=True)
class ColoredGraph:
    """An experiment graph; vertices sorted by id, edges in canonical order."""

    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "vertices", tuple(sorted(self.vertices, key=lambda v: v.id))
        )
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=Edge.key)))

    @cached_property
    def vertex_by_id(self) -> dict[int, Vertex]:
        return {v.id: v for v in self.vertices}

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def site_ids(self) -> tuple[int, ...]:
        """Non-ancilla vertex ids in ascending order (the ket positions)."""
        return tuple(v.id for v in self.vertices if v.role != ANCILLA)

    @cached_property
    def input_ids(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.vertices if v.role == INPUT)

    def dims_of(self, ids: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.vertex_by_id[i].dimension for i in ids)

    @property
    def weights(self) -> tuple[complex, ...]:
        return tuple(e.weight for e in self.edges)

    def with_weights(self, weights: Sequence[complex]) -> ColoredGraph:
        """Same topology with the edge weights replaced (canonical edge order)."""
        if len(weights) != len(self.edges):
            raise GraphError(
                f"expected {len(self.edges)} weights, got {len(weights)}"
            )
        new_edges = tuple(
            Edge(e.u, e.v, e.cu, e.cv, complex(w))
            for e, w in zip(self.edges, weights)
        )
        return ColoredGraph(self.vertices, new_edges, self.name)

    def without_edge(self, index: int) -> ColoredGraph:
        return ColoredGraph(
            self.vertices,
            self.edges[:index] + self.edges[index + 1 :],
            self.name,
        )


@dataclass(frozen=True)
class PerfectMatching:
    """Edge indices (into the parent graph) covering every vertex exactly once."""

    edges: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))


@dataclass(frozen=True)
class QuantumState:
    """Sparse ket-to-amplitude map over ``num_sites`` sites with per-site dims."""

    num_sites: int
    dims: tuple[int, ...]
    amplitudes: dict[tuple[int, ...], complex]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(self.dims))
        amps = {}
        for ket, amp in self.amplitudes.items():
            ket = tuple(ket)
            if len(ket) != self.num_sites:
                raise ValueError(f"ket {ket} has {len(ket)} sites, expected {self.num_sites}")
            for mode, dim in zip(ket, self.dims):
                if not 0 <= mode < dim:
                    raise ValueError(f"ket {ket} violates site dimensions {self.dims}")
            amps[ket] = complex(amp)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return sum(abs(a) ** 2 for a in self.amplitudes.values()) ** 0.5

    def sorted_items(self) -> list[tuple[tuple[int, ...], complex]]:
        return sorted(self.amplitudes.items())


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_graph(g: ColoredGraph) -> ValidationReport:
    """Check every structural invariant; violations are reported, not raised."""
    problems: list[Violation] = []

    ids = [v.id for v in g.vertices]
    if len(set(ids)) != len(ids):
        problems.append(Violation("duplicate-vertex-id", f"vertex ids repeat: {ids}"))
    elif ids != list(range(len(ids))):
        problems.append(
            Violation("vertex-ids-not-contiguous", f"vertex ids must be 0..{len(ids) - 1}, got {ids}")
        )
    for v in g.vertices:
        if v.dimension < 1:
            problems.append(Violation("bad-dimension", f"vertex {v.id} has dimension {v.dimension}"))
        if v.role not in ROLES:
            problems.append(Violation("bad-role", f"vertex {v.id} has unknown role {v.role!r}"))

    known = g.vertex_by_id
    seen: dict[tuple[int, int, int, int], int] = {}
    for i, e in enumerate(g.edges):
        if e.u == e.v:
            problems.append(Violation("self-loop", f"edge {i} loops on vertex {e.u}"))
            continue
        if e.u > e.v:
            problems.append(
                Violation("endpoints-out-of-order", f"edge {i} has u={e.u} > v={e.v}")
            )
        missing = [x for x in (e.u, e.v) if x not in known]
        if missing:
            problems.append(
                Violation("unknown-endpoint", f"edge {i} references missing vertices {missing}")
            )
            continue
        if not 0 <= e.cu < known[e.u].dimension:
            problems.append(
                Violation("mode-out-of-range", f"edge {i}: mode {e.cu} at vertex {e.u} (dim {known[e.u].dimension})")
            )
        if not 0 <= e.cv < known[e.v].dimension:
            problems.append(
                Violation("mode-out-of-range", f"edge {i}: mode {e.cv} at vertex {e.v} (dim {known[e.v].dimension})")
            )
        if e.key() in seen:
            problems.append(
                Violation("duplicate-edge", f"edges {seen[e.key()]} and {i} share (u,v,cu,cv)={e.key()}")
            )
        else:
            seen[e.key()] = i
        if not cmath.isfinite(e.weight):
            problems.append(Violation("non-finite-weight", f"edge {i} has weight {e.weight}"))

    return ValidationReport(tuple(problems))


def _incidence(g: ColoredGraph) -> dict[int, list[int]]:
    inc: dict[int, list[int]] = {v.id: [] for v in g.vertices}
    for i, e in enumerate(g.edges):
        if e.u == e.v or e.u not in inc or e.v not in inc:
            continue  # unusable edges can never sit in a matching
        inc[e.u].append(i)
        inc[e.v].append(i)
    return inc


def enumerate_perfect_matchings(g: ColoredGraph) -> list[PerfectMatching]:
    """All edge subsets covering every vertex exactly once.

    Branches on the lowest-id uncovered vertex, so each matching is produced
    exactly once; the result is sorted lexicographically by member edge
    indices. Odd vertex counts (and the empty graph) yield no matchings.
    """
    n = g.num_vertices
    if n == 0 or n % 2 == 1:
        return []
    inc = _incidence(g)
    order = [v.id for v in g.vertices]
    covered: set[int] = set()
    chosen: list[int] = []
    found: list[tuple[int, ...]] = []

    def extend() -> None:
        if len(covered) == n:
            found.append(tuple(sorted(chosen)))
            return
        pivot = next(v for v in order if v not in covered)
        for ei in inc[pivot]:
            other = g.edges[ei].other(pivot)
            if other in covered:
                continue
            covered.add(pivot)
            covered.add(other)
            chosen.append(ei)
            extend()
            chosen.pop()
            covered.discard(pivot)
            covered.discard(other)

    extend()
    found.sort()
    return [PerfectMatching(m) for m in found]


def _coverage(g: ColoredGraph, pm: PerfectMatching) -> dict[int, int]:
    """Map vertex id -> mode under the matching; raises unless exact cover."""
    modes: dict[int, int] = {}
    for ei in pm.edges:
        if not 0 <= ei < len(g.edges):
            raise GraphError(f"matching references edge index {ei} outside the graph")
        e = g.edges[ei]
        for vid in (e.u, e.v):
            if vid in modes:
                raise GraphError(f"vertex {vid} covered twice by matching {pm.edges}")
            modes[vid] = e.mode_at(vid)
    if len(modes) != g.num_vertices:
        uncovered = sorted(set(v.id for v in g.vertices) - set(modes))
        raise GraphError(f"matching {pm.edges} leaves vertices {uncovered} uncovered")
    return modes


def matching_amplitude(g: ColoredGraph, pm: PerfectMatching) -> complex:
    """Product of the member edge weights."""
    _coverage(g, pm)
    amp = complex(1.0)
    for ei in pm.edges:
        amp *= g.edges[ei].weight
    return amp


def matching_ket(g: ColoredGraph, pm: PerfectMatching, sites: Sequence[int] | None = None) -> tuple[int, ...]:
    """Mode at every site vertex under the matching (default: non-ancilla)."""
    modes = _coverage(g, pm)
    if sites is None:
        sites = g.site_ids
    for vid, mode in modes.items():
        if mode >= g.vertex_by_id[vid].dimension:
            raise GraphError(
                f"vertex {vid} covered at mode {mode} >= dimension {g.vertex_by_id[vid].dimension}"
            )
    return tuple(modes[s] for s in sites)


def compute_state(g: ColoredGraph, sites: Sequence[int] | None = None) -> QuantumState:
    """Unnormalized post-selected state: coherent sum over all perfect matchings.

    Each matching contributes its weight product to the ket read off at the
    site vertices (non-ancilla by default); ancillae must be covered but add
    no ket symbol. Terms cancelling below ``ZERO_TOL`` are dropped.
    """
    if sites is None:
        sites = g.site_ids
    amps: dict[tuple[int, ...], complex] = {}
    for pm in enumerate_perfect_matchings(g):
        ket = matching_ket(g, pm, sites)
        amps[ket] = amps.get(ket, 0.0) + matching_amplitude(g, pm)
    amps = {k: a for k, a in amps.items() if abs(a) > ZERO_TOL}
    return QuantumState(len(sites), g.dims_of(sites), amps)


def normalize_state(s: QuantumState) -> QuantumState:
    """Scale amplitudes to unit norm; zero-norm input means the state vanished."""
    n = s.norm()
    if n <= ZERO_TOL:
        raise VanishingStateError("state vanishes: all amplitudes cancel")
    return QuantumState(s.num_sites, s.dims, {k: a / n for k, a in s.amplitudes.items()})


@dataclass(frozen=True)
class Cycle:
    """Closed alternating walk; ``edges[i]`` joins ``vertices[i]`` and ``vertices[i+1]``."""

    vertices: tuple[int, ...]
    edges: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.edges)


def symmetric_difference_cycles(
    g: ColoredGraph, pm1: PerfectMatching, pm2: PerfectMatching
) -> list[Cycle]:
    """Disjoint even cycles formed by the edges in exactly one of two matchings.

    Superimposing two interfering matchings yields these loops; they certify
    destructive cancellation when the weight products oppose in sign.
    """
    _coverage(g, pm1)
    _coverage(g, pm2)
    diff = sorted(set(pm1.edges) ^ set(pm2.edges))
    if not diff:
        return []

    incident: dict[int, list[int]] = {}
    for ei in diff:
        e = g.edges[ei]
        incident.setdefault(e.u, []).append(ei)
        incident.setdefault(e.v, []).append(ei)

    unused = set(diff)
    cycles: list[Cycle] = []
    for start in sorted(incident):
        pending = [ei for ei in incident[start] if ei in unused]
        if not pending:
            continue
        verts = [start]
        edges_in_order = []
        current = start
        ei = min(pending)
        while True:
            unused.discard(ei)
            edges_in_order.append(ei)
            current = g.edges[ei].other(current)
            if current == start:
                break
            verts.append(current)
            ei = next(x for x in incident[current] if x in unused)
        cycles.append(Cycle(tuple(verts), tuple(edges_in_order)))
    return cycles


@dataclass(frozen=True)
class Contribution:
    matching: PerfectMatching
    amplitude: complex


@dataclass(frozen=True)
class InterferencePair:
    """Two opposing contributions (indices into the report) and their loops."""

    first: int
    second: int
    cycles: tuple[Cycle, ...]


@dataclass(frozen=True)
class CancellationReport:
    ket: tuple[int, ...]
    contributions: tuple[Contribution, ...]
    net_amplitude: complex
    cancelled: bool
    interference: tuple[InterferencePair, ...]


def find_cancellations(
    g: ColoredGraph, ket: Sequence[int], sites: Sequence[int] | None = None
) -> CancellationReport:
    """Explain one ket: its contributing matchings, net amplitude, and loops.

    Every pair of contributions whose amplitudes oppose (negative real part of
    a1 * conj(a2)) is reported with the symmetric-difference cycles between
    the two matchings. Net amplitude within ``ZERO_TOL`` of zero marks the ket
    as destructively cancelled.
    """
    if sites is None:
        sites = g.site_ids
    ket = tuple(ket)
    if len(ket) != len(sites):
        raise GraphError(f"ket {ket} has {len(ket)} sites, graph has {len(sites)}")
    for mode, dim in zip(ket, g.dims_of(sites)):
        if not 0 <= mode < dim:
            raise GraphError(f"ket {ket} violates site dimensions {g.dims_of(sites)}")

    contribs = []
    for pm in enumerate_perfect_matchings(g):
        if matching_ket(g, pm, sites) == ket:
            contribs.append(Contribution(pm, matching_amplitude(g, pm)))
    net = sum((c.amplitude for c in contribs), complex(0.0))

    pairs = []
    for i, j in itertools.combinations(range(len(contribs)), 2):
        if (contribs[i].amplitude * contribs[j].amplitude.conjugate()).real < 0:
            cycles = symmetric_difference_cycles(g, contribs[i].matching, contribs[j].matching)
            pairs.append(InterferencePair(i, j, tuple(cycles)))

    return CancellationReport(
        ket=ket,
        contributions=tuple(contribs),
        net_amplitude=net,
        cancelled=bool(contribs) and abs(net) <= ZERO_TOL,
        interference=tuple(pairs),
    )
