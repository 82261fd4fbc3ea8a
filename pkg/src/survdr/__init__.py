"""Sufficient dimension reduction for right-censored survival data.

The package estimates the smallest subspace of the covariate space that
carries all information about a censored failure time, using risk-set
based estimating equations solved on the manifold of orthonormal bases,
plus a closed-form SVD route, simulation benchmarks, subspace metrics,
and bootstrap inference.
"""

from .data import SurvivalDataset, load_csv, risk_set_order, standardize, to_csv
from .estimators import NormalizedDirection, fit, fit_cpsir, normalize_block_identity
from .inference import bootstrap_sd, confidence_intervals, coverage_experiment
from .kernels import (
    HazardEstimate,
    KernelPlan,
    SliceCurve,
    build_plan,
    cond_mean_risk,
    gaussian_product_kernel,
    hazard_exact,
    hazard_smoothed,
    silverman_bandwidth,
    slice_curve,
)
from .metrics import (
    SubspaceScore,
    canonical_correlation,
    canonical_correlations,
    frobenius_distance,
    projection,
    subspace_score,
    trace_correlation,
)
from .moments import (
    EstimatorKind,
    GmmProblem,
    MomentVector,
    cpsir_matrix,
    gmm_objective,
    psi_forward,
    psi_ircp,
    psi_irsemi,
)
from .simulate import SimSetting, SimTruth, censoring_rate, generate, rng_stream, subseed
from .stiefel import (
    FitReport,
    OptimConfig,
    cayley_step,
    line_search,
    numeric_gradient,
    optimize,
    orthonormalize,
    random_orthonormal,
)
from .studies import aggregate, run_study

__version__ = "0.1.0"
