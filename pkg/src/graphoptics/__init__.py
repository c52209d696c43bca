"""Graph-based design of quantum-optics experiments."""

from .graphs import (
    ANCILLA,
    DETECTOR,
    INPUT,
    CancellationReport,
    ColoredGraph,
    Contribution,
    Cycle,
    Edge,
    GraphError,
    InterferencePair,
    PerfectMatching,
    QuantumState,
    ValidationReport,
    VanishingStateError,
    Vertex,
    Violation,
    compute_state,
    detectors,
    edge,
    enumerate_perfect_matchings,
    find_cancellations,
    matching_amplitude,
    matching_ket,
    normalize_state,
    symmetric_difference_cycles,
    validate_graph,
)
from .states import (
    TargetState,
    bell_pair,
    fidelity,
    ghz_state,
    inner_product,
    multi_pair_swap_target,
    parse_target,
    target_state,
)
from .discovery import (
    ANALYZER,
    GENERATION,
    AnalyzerReport,
    GeometryEdge,
    OptimizeOutcome,
    OptimizerSettings,
    PruneSettings,
    SearchCancelled,
    SearchConfig,
    SearchResult,
    analyzer_functional,
    build_initial_graph,
    discover,
    expand_uncolored_edges,
    loss,
    loss_gradient,
    optimize_weights,
    prune,
    verify_analyzer,
)
from .layout import Layout, LayoutSettings, graph_distances, kamada_kawai_3d, stress
from .documents import (
    DocumentError,
    GraphDocument,
    decode_graph,
    decode_search_template,
    encode_graph,
    encode_search_template,
    ket_from_string,
    ket_to_string,
    library_delete,
    library_list,
    library_load,
    library_save,
    template_from_graph,
)

__version__ = "0.1.0"
