"""Exact simulation and Baxter-type variation statistics for fractional,
bifractional, trifractional and n-th order fractional Brownian motions."""

from ._backend import NAME as BACKEND
from .errors import (
    DivergentJump,
    DomainError,
    EmbeddingNotNonnegative,
    FracvarError,
    GridMismatch,
    HypothesesIndistinguishable,
    NotPositiveDefinite,
    OutOfRange,
    ParameterOutOfRange,
)
from .kernels import (
    Family,
    ProcessSpec,
    baxter_integral,
    baxter_jump,
    covariance,
    covariance_matrix,
    gamma_exponent,
    increment_variance,
    validate,
)
from .sampler import (
    Grid,
    PathSample,
    check_partition_schedule,
    coarsen,
    dyadic_grid,
    half_integer_grid,
    sample_fbm_circulant,
    sample_path,
    sample_paths,
    simulate,
    uniform_grid,
)
from .singularity import (
    DiscriminationResult,
    Hypothesis,
    discriminate_bifbm,
    discriminate_fbm,
    discriminate_trifbm,
    power_study,
)
from .variation import (
    StatisticResult,
    calibrate_trifbm,
    estimate_hurst_v2,
    expected_qv,
    kth_increment,
    kurchenko_statistic,
    p_variation_sum,
    scaled_dyadic_sum,
    trifbm_calibration,
    v_k_constant,
    weighted_qv,
)

__version__ = "0.1.0"
