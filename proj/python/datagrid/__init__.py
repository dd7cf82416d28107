"""Parameter-free data grid coclustering for mixed-type tables."""

from ._core import (
    CostBreakdown,
    Dataset,
    GridModel,
    GroundTruth,
    Hierarchy,
    InsightMatrix,
    OptimizationReport,
    adjusted_rand_index,
    build_hierarchy,
    cmi_matrix,
    contrast_matrix,
    cost,
    delta_merge,
    frequency_matrix,
    from_atom_labels,
    generate_planted,
    load_table,
    null_model,
    recovery_ari,
    result_document_json,
    train,
    typicality,
)

__all__ = [name for name in dir() if not name.startswith("_")]
