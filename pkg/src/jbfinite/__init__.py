"""Finite-sample Jarque-Bera normality testing.

The asymptotic chi-squared(2) reference distribution of the Jarque-Bera
statistic is badly wrong for small and medium samples.  This package
regenerates the finite-sample null distributions of the plain (LM) and
moment-adjusted (ALM) statistics by deterministic parallel Monte Carlo,
persists them as portable quantile tables, and provides finite-sample
distribution/quantile functions, the test itself, and response-surface
approximations in powers of 1/N.
"""

from ._backend import backend_name
from .dist import (
    INFINITE,
    PValueResult,
    TableRangeError,
    TestResult,
    jb_test,
    pjb,
    qjb,
)
from .engine import (
    MomentDiagnostics,
    QuantileTable,
    SimConfig,
    default_n_grid,
    default_p_grid,
    empirical_quantile,
    moment_diagnostics,
    quick_n_grid,
    quick_p_grid,
    simulate_null,
)
from .moments import (
    DegenerateSampleError,
    FiniteSampleConstants,
    Kind,
    alm_statistic,
    central_moment,
    chi2_cdf_2df,
    chi2_quantile_2df,
    finite_constants,
    kurtosis,
    lm_statistic,
    skewness,
)
from .rng import StreamSpec, new_stream
from .surface import (
    IllConditionedFitError,
    SurfaceFit,
    eval_surface,
    fit_surface,
    load_fits,
    save_fits,
)
from .tableio import (
    TableChecksumError,
    TableFormatError,
    TableIOError,
    TableValidationError,
    load_table,
    save_table,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "INFINITE",
    "PValueResult",
    "TestResult",
    "TableRangeError",
    "jb_test",
    "pjb",
    "qjb",
    "MomentDiagnostics",
    "QuantileTable",
    "SimConfig",
    "default_n_grid",
    "default_p_grid",
    "quick_n_grid",
    "quick_p_grid",
    "empirical_quantile",
    "moment_diagnostics",
    "simulate_null",
    "DegenerateSampleError",
    "FiniteSampleConstants",
    "Kind",
    "alm_statistic",
    "central_moment",
    "chi2_cdf_2df",
    "chi2_quantile_2df",
    "finite_constants",
    "kurtosis",
    "lm_statistic",
    "skewness",
    "StreamSpec",
    "new_stream",
    "IllConditionedFitError",
    "SurfaceFit",
    "eval_surface",
    "fit_surface",
    "load_fits",
    "save_fits",
    "TableChecksumError",
    "TableFormatError",
    "TableIOError",
    "TableValidationError",
    "load_table",
    "save_table",
]
