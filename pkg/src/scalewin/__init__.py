"""scalewin: scaling-process simulation and sliding-window diagnostics.

Simulates scaling martingales, fractional Brownian motion, and synthetic
intraday patterns, then analyzes them two ways: the ensemble route
(fixed-t densities, scaling collapse, variance-scaling exponent) and the
sliding-window route (pooled increments), quantifying how the latter
fabricates fat tails and an exponent of 1/2 on nonstationary-increment
data.
"""

from .errors import (
    ArgumentError,
    CoverageError,
    DataError,
    FormatError,
    NumericError,
    OutOfDomainError,
    ResolutionError,
    ResourceBudgetError,
    ScalewinError,
    TruncationError,
)
from .models import (
    Constant,
    DiffusionShape,
    ExponentialAffine,
    HurstExponent,
    ScalingDensity,
    ScalingModel,
    Tabulated,
    density_moment,
    density_to_csv,
    default_grid,
    diffusion_local,
    diffusion_scaling_fn,
    load_tabulated_csv,
    ode_residual,
    scaling_density,
)
from .simulate import (
    DailySchedule,
    PathEnsemble,
    SimConfig,
    TimeSeries,
    ensemble_from_binary,
    ensemble_from_csv,
    ensemble_to_binary,
    ensemble_to_csv,
    series_from_binary,
    series_from_csv,
    series_to_binary,
    series_to_csv,
    simulate_daily_pattern,
    simulate_ensemble,
    simulate_fbm,
    simulate_path,
)
from .estimators import (
    AutocorrReport,
    ConditionalMeanReport,
    DensityEstimate,
    HurstFit,
    MsfProfile,
    StationarityVerdict,
    TailReport,
    collapse,
    conditional_mean_test,
    ensemble_density,
    fit_hurst_sliding,
    fit_hurst_variance,
    increment_autocorr,
    msf_profile,
    sliding_density,
    sliding_increments,
    stationarity_verdict,
    tail_diagnostics,
)
from .ingest import (
    DailyAlignedSeries,
    IngestConfig,
    ParseResult,
    TickRecord,
    day_align,
    detrend,
    log_returns,
    parse_csv,
)

__version__ = "0.1.0"
