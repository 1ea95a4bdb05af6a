"""Exact-arithmetic toolkit for building and checking extended formulations.

The package turns combinatorial descriptions (graphs, posets, protocol
trees, rectangle partitions) into linear formulations whose projections are
the intended polytopes, and ships the verification machinery (rational LP,
slack matrices, sandwich checks, projection comparison) used to certify
every construction on desk-scale instances.
"""

from .core import (
    LinearConstraint,
    LinearSystem,
    MissingVariableError,
    VarName,
    as_point,
    evaluate_slack,
    is_satisfied,
    rat,
    rat_str,
)
from .lp import LpProgram, LpResult
from .formulation import (
    EmptyPartError,
    Formulation,
    SizeMetrics,
    SpaceMismatchError,
    balas_union,
    box_rows,
    embed,
    formulation_from_json,
    formulation_from_lp,
    formulation_to_json,
    formulation_to_lp,
    juxtapose,
    polar_eta,
    prefix_aux,
    size_metrics,
    union_fold,
)
from .graphs import Graph, Poset, PosetError, graph_from_text, vertex_var, vertex_vars
from .protocol import (
    ALICE,
    BOB,
    CompileError,
    NegativeValueError,
    ProtocolTree,
    RectangleLeafSpec,
    compile_tree,
    factorization_formulation,
    leaf_formulation,
    protocol_from_json,
    protocol_to_json,
)
from .verify import (
    NegativeSlackError,
    PolytopePair,
    Report,
    SlackMatrix,
    VariableCapError,
    check_sandwich,
    fourier_motzkin,
    lp_solve,
    projections_agree,
    qstab_formulation,
    slack_matrix,
    stab_qstab_pair,
    systems_equal_lp,
    verify_partition,
)
from .yannakakis import (
    LeafValueError,
    ProtocolError,
    Transcript,
    YRectangle,
    build_stab_qstab_ef,
    build_tree,
    enumerate_rectangles,
    enumeration_bound,
    leaf_ef,
    rectangle_contains_clique,
    rectangle_contains_stable,
    run_protocol,
)
from .decomposition import (
    DecompositionError,
    DecompositionNode,
    DegeneratePatternError,
    HFreenessError,
    NotThresholdError,
    build_general_tree,
    build_threshold_tree,
    compile_decomposition,
    decomposition_census,
    node_graph,
    split,
)
from .special import (
    MinUpDownInstance,
    NotStarFreeError,
    clawfree_full_ef,
    clawfree_rectangles,
    clawfree_reduced_ef,
    comparability_full_ef,
    comparability_reduced_ef,
    mud_ef,
    mud_facets,
    mud_tree,
    mud_var,
    mud_vertices,
    star_graph,
)
from .unambiguous import (
    CrossIntersectionError,
    IntersectionGraphs,
    NoGoodRectangleError,
    NotMonochromaticError,
    PartitionError,
    PartitionGapError,
    PartitionOverlapError,
    Rectangle,
    RectanglePartition,
    build_unambiguous_tree,
    compile_unambiguous,
    intersection_graphs,
    replay_unambiguous,
)

__version__ = "1.0.0"
