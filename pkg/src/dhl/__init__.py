"""Exact combinatorics of strong subtrees, fans, and dense level selections.

The package is organized around finite data only: implicit homogeneous hosts
(b-ary trees addressed by digit tuples), explicit finite trees, strong
subtrees and their canonical maps, fan counting, dense level selections with
their correlation predicates, finite witness searches with extremal tables,
and the two quasi-homogeneous counterexample generators.  All densities are
exact rationals.
"""

from .budget import Budget, BudgetExceeded
from .counterexamples import (
    CounterexampleInstance,
    Height2Certificate,
    baire_example,
    cantor_example,
    verify_no_height2,
)
from .fans import enumerate_fans, fans_with_root, theta, theta_sequence
from .search import (
    Coloring,
    DhlNumberResult,
    ExtremalResult,
    SearchOutcome,
    avoidance_extremal,
    dhl_number,
    dhl_witness_search,
    extract_1d,
    hl_search,
)
from .selections import (
    CorrelationResult,
    LevelSelection,
    ProductSubset,
    correlated_set,
    fubini_majority,
    fw_density,
    initial_vector,
    is_strongly_correlated,
    min_fan_intersection_density,
    refine_selection,
    section_selection,
)
from .subtrees import (
    CanonicalMap,
    EmbeddingStages,
    StrongSubtree,
    VectorStrongSubtree,
    Violation,
    canonical_isomorphism,
    directed_fan,
    enumerate_strong,
    is_strong_subtree_of,
    is_vector_strong_subtree_of,
    subtree_at_direction,
    validate_strong,
    validate_vector_strong,
    vector_canonical_isomorphism,
    vector_directed_fan,
    vector_subtree_at_direction,
)
from .trees import (
    ExplicitTree,
    ImplicitTree,
    LevelSubset,
    Node,
    TreeError,
    density,
    immediate_successor,
    level_size,
    node_text,
    parse_node,
    relative_density,
    successors_in_level,
)

__all__ = [name for name in dir() if not name.startswith("_")]
