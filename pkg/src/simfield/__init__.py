"""Similarity fields, trace stability detectors, and the pairwise
typicality pipeline (probe rendering, BTL aggregation, power calibration,
lock-filter denoising, permutation controls)."""

from .btl import (
    BtlResult,
    CalibrationResult,
    GroundTruth,
    apply_power,
    btl_fit,
    mae_pp,
    power_calibrate,
    spearman,
)
from .dynamics import (
    AnchorReport,
    SequenceTrace,
    StabilityVerdict,
    anchor_detect,
    cluster_estimate,
    confinement_check,
    make_trace,
    separation_check,
    stability_assess,
)
from .fields import (
    EntityId,
    Fibre,
    IntelligenceScore,
    MembershipReport,
    SimilarityField,
    calibrated_readout,
    combine_convex,
    combine_product,
    fibre,
    incompatibility,
    intelligence_metrics,
    inverse_readout,
    make_field,
)
from .lockfilter import (
    LockReport,
    PermutationOutcome,
    add_one_p_value,
    detect_locks,
    downweight,
    lock_filter_run,
    perm_test,
)
from .metrics_io import (
    RunReport,
    aggregate_scores,
    build_report,
    emit_report,
    load_truth,
    parse_report,
    parse_scores,
)
from .probes import (
    TEMPLATES,
    PairwiseMatrices,
    ProbeTemplate,
    ScoreRecord,
    YesNoRecord,
    binary_prob,
    fuse_templates,
    make_matrices,
    reduce_variants,
    render_prompts,
    render_yesno_prompts,
    yes_prob,
)

__version__ = "0.1.0"
