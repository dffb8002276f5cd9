"""Graph filter design for distributed linear network operators.

Implement or approximate a desired linear operator as a polynomial of a
graph-shift operator (with shared or per-node coefficients), design shift
operators that make a target implementable, run the filters as synchronous
message passing, and reproduce the reference experiments.
"""

from ._version import __version__
from .design import (
    DesignReport,
    FeasibilityReport,
    LinearTarget,
    SampleStats,
    check_perfect_node_invariant,
    check_perfect_node_variant,
    design_anc,
    design_mse_node_invariant,
    design_mse_node_variant,
    design_perfect_node_invariant,
    design_perfect_node_variant,
    design_wce_node_invariant,
    design_wce_node_variant,
    sample_error,
)
from .estimators import (
    NodeInvariantGraphFilter,
    NodeVariantGraphFilter,
    SourceSinkGraphFilter,
)
from .exceptions import (
    CertificateError,
    ConnectivityError,
    ConvergenceError,
    GenerationError,
    GFDesignError,
    InfeasibleTargetError,
    NotDiagonalizableError,
    ParameterError,
    RealizationError,
    TopologyError,
)
from .filters import (
    NodeInvariantFilter,
    NodeVariantFilter,
    ProductFormFilter,
    filter_from_json,
    filter_to_json,
)
from .graphs import (
    GeneratorConfig,
    Graph,
    cycle_graph,
    generate,
    path_graph,
    read_edgelist,
    spanning_tree,
    star_graph,
    write_edgelist,
)
from .minimax import MinimaxOptions
from .netsim import SimTrace, rounds_to_exactness, simulate
from .shift_design import (
    EigenbasisFit,
    RankOneShiftDesign,
    RankOneTarget,
    build_rank_one_shift,
    fit_shift_to_eigenbasis,
    weighted_incidence,
)
from .shifts import (
    ShiftOperator,
    best_constant_weight,
    laplacian,
    read_shift,
    shift_from_graph,
    write_shift,
)
from .spectral import (
    GraphSignal,
    SpectralData,
    apply_in_frequency,
    decompose,
    frequency_response,
    vandermonde,
)

__all__ = [name for name in dir() if not name.startswith("_")]
