"""Bayesian alignment of point configurations under similarity transformations.

Supports labeled and unlabeled matching, one or two scale factors, and a
secondary-structure ingestion pipeline for protein domain comparison.
Inference is MCMC over the joint posterior of the transformation, noise,
matching, and (in two-scale mode) group-label parameters.
"""

from .core import (
    Configuration,
    SimilarityTransform,
    apply_similarity,
    centroid,
    compose,
    is_rotation_matrix,
    read_configuration_csv,
    rotation_from_euler,
    write_configuration_csv,
)
from .distributions import (
    ExactHNGSampler,
    HNGParams,
    NoModeError,
    NormalApprox,
    expfam_normal_approx,
    hng_log_density_unnorm,
    hng_metropolis_step,
    hng_mode,
    hng_normal_approx,
    hng_sample_exact,
    sample_rotation_matrix_fisher,
)
from .matching import MatchingMatrix, enumerate_matchings, is_order_preserving, propose_match_move
from .model import (
    ChainState,
    PriorSpec,
    log_joint,
    log_joint_two_scale,
    noise_conditional,
    rotation_conditional_param,
    scale_conditional_params,
    translation_conditional,
)
from .protein import (
    DegenerateElementError,
    SSERecord,
    configuration_from_sses,
    parse_sse_file,
    principal_axis_vector,
)
from .sampler import (
    ChainOutput,
    ChainSettings,
    PosteriorSummary,
    label_switch_move,
    merge_outputs,
    read_trace,
    run_chain,
    summarize,
    trace_export,
)

__version__ = "0.1.0"
