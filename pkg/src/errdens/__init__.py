"""Kernel estimation of the density of regression errors from leave-one-out residuals."""

from .bandwidth import (
    BandwidthPlan,
    amse_b1,
    b0_star,
    b1_amise_plugin,
    b1_star_rate,
    check_a11,
    rn_argmin_numeric,
    rn_risk,
)
from .errdensity import DensityEstimate, ise, naive_conditional_density, oracle_density, two_step_density
from .errors import (
    AllTrimmed,
    EmptyFile,
    EmptyNeighborhood,
    ErrdensError,
    MalformedCsv,
    NoTrimmedObservations,
    ZeroCurvature,
)
from .kernels import K0, K1, KernelConstants, KernelSpec, compute_constants, eval_k0, eval_k1
from .regression import ResidualSet, Sample, TrimRegion, default_trim, g_hat, nw_estimate, nw_loo, residuals

__version__ = "0.1.0"
