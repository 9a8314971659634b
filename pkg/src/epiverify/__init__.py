"""Triangular transport maps and a verification harness for the entropy
power inequality on Gaussian mixtures."""

from .densities import (
    Conditional1D,
    DimensionMismatchError,
    GaussianMixture,
    MixtureSpecError,
    linear_combine,
    product_mixture,
    sample_mixture,
)
from .entropy import (
    ENTROPY_METHODS,
    DivergenceEstimate,
    EntropyEstimate,
    conditional_entropy_theta,
    divergence_mc,
    entropy_cov,
    entropy_quadrature_1d,
    entropy_resub,
    entropy_via_divergence,
    gaussian_entropy,
    standard_gaussian_entropy,
)
from .epi import (
    DEFAULT_LAMBDAS,
    EpiReport,
    EqualityDiagnostics,
    Measurement,
    Scenario,
    ShannonForm,
    default_grid,
    epi_run,
    equality_diagnostics,
    gap_decomposition,
    shannon_form,
    smoothing_curve,
)
from .numerics import (
    BracketError,
    ConvergenceError,
    QuadratureBudgetError,
    QuadratureConfig,
    RootConfig,
    find_root_monotone,
    integrate_1d,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from .rng import RngStream
from .transport import (
    ComposedMap,
    ThetaMap,
    TriangularMap,
    build_knothe,
    rotate_pair,
    sample_mitsm,
    theta_jensen_components,
    unrotate_pair,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BracketError",
    "ComposedMap",
    "Conditional1D",
    "ConvergenceError",
    "DEFAULT_LAMBDAS",
    "DimensionMismatchError",
    "DivergenceEstimate",
    "ENTROPY_METHODS",
    "EntropyEstimate",
    "EpiReport",
    "EqualityDiagnostics",
    "GaussianMixture",
    "Measurement",
    "MixtureSpecError",
    "QuadratureBudgetError",
    "QuadratureConfig",
    "RngStream",
    "RootConfig",
    "Scenario",
    "ShannonForm",
    "ThetaMap",
    "TriangularMap",
    "build_knothe",
    "conditional_entropy_theta",
    "default_grid",
    "divergence_mc",
    "entropy_cov",
    "entropy_quadrature_1d",
    "entropy_resub",
    "entropy_via_divergence",
    "epi_run",
    "equality_diagnostics",
    "find_root_monotone",
    "gap_decomposition",
    "gaussian_entropy",
    "integrate_1d",
    "linear_combine",
    "product_mixture",
    "rotate_pair",
    "sample_mitsm",
    "sample_mixture",
    "shannon_form",
    "smoothing_curve",
    "standard_gaussian_entropy",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "unrotate_pair",
]
