"""Envelope-assisted sufficient dimension reduction with an auxiliary variable."""

__version__ = "0.1.0"

from .dimension import (  # noqa: E402
    DEFAULT_XI_GRID,
    DimSelection,
    bic_criterion,
    bic_rank,
    default_penalty,
    lower_median,
    select_d,
    select_d_direct,
    select_d_env,
)
from .errors import *  # noqa: E402,F401,F403
from .estimator import (  # noqa: E402
    EstimateResult,
    back_transform,
    direct_estimate,
    envelope_basis,
    projected_kernel,
    two_stage_estimate,
)
from .kernels import (  # noqa: E402
    KernelConfig,
    KernelMatrix,
    KernelSet,
    PsirResult,
    StandardizedData,
    build_kernels,
    hybrid_kernel,
    joint_sir_kernel,
    partial_kernel_zscale,
    psir_kernel,
    save_kernel,
    sir_kernel,
    standardize,
    w_sir_kernel,
)
from .linalg import (  # noqa: E402
    EigenSystem,
    SubspaceBasis,
    inv_sqrt,
    projection,
    sym_eigen,
    trace_correlation,
)
from .slicing import SliceAssignment, cross_slices, slice_continuous, slice_discrete  # noqa: E402
from .tuning import (  # noqa: E402
    QdaModel,
    TuningReport,
    benchmark_psir_qda,
    qda_fit,
    qda_loo_accuracy,
    tune_by_bootstrap,
    tune_by_loo,
)
