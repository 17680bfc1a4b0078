"""Isoperimetric structure of log-concave perturbations of Gaussian densities.

Numerical companions to the half-space isoperimetric problem for densities
e^{omega(t) - c |p|^2} on slabs R^n x (a, b): profile construction and ODE
verification, parallel-vs-perpendicular comparison, 1-D monotone transport
with contraction certificates, stability and index-form diagnostics,
spectral-gap certification, and a weighted-length chord optimizer.
"""

from .cli import RunConfig, VerdictRecord, load_config, main, resolved_config_text
from .errors import (
    ConfigError,
    ConsistencyError,
    DomainError,
    GeometryError,
    IsoflowError,
    QuadratureError,
    SmoothnessError,
)
from .geometry import (
    DiscreteCurve,
    IndexFormReport,
    StabilityVerdict,
    TranslationTestFunction,
    cmc_shoot,
    curve_csv,
    curve_weighted_length,
    f_mean_curvature,
    horizontal_segment,
    index_form,
    jacobi_residual,
    parallel_halfspace_stability,
    polyline_curve,
    q_form,
    straight_segment,
    translation_test_function,
    vertical_segment,
)
from .optimize import (
    ChordSpline,
    OptimizeTrace,
    OptimizerConfig,
    StationarityReport,
    chord_curve,
    enclosed_area,
    make_straight_chord,
    minimize,
    shape_gradient,
    stationarity_report,
    trace_csv,
    weighted_length,
)
from .profiles import (
    ComparisonVerdict,
    HalfSpaceCandidate,
    Profile,
    ProfileOdeReport,
    build_profile,
    check_profile_ode,
    compare_profiles,
    profile_csv,
    tilted_profile_wholespace,
    volume_area_parallel,
    volume_area_perpendicular,
)
from .spectrum import (
    PoincareCertificate,
    SpectralProblem,
    build_spectral_problem,
    poincare_certify,
    rayleigh_quotient,
    spectral_gap_1d,
    spectrum_csv,
)
from .transport import (
    ContractionReport,
    PerimeterBoundReport,
    PushforwardReport,
    TransportMap,
    build_transport,
    check_contraction,
    pushforward_check,
    transport_csv,
    transported_perimeter_bound,
)
from .weights import (
    AffineWeight,
    ConcavityReport,
    CumulativeDensity1D,
    Density,
    LogPowerWeight,
    PiecewiseLinearWeight,
    QuadraticWeight,
    QuadratureSpec,
    Weight1D,
    ZeroWeight,
    bakry_emery_curvature,
    check_concavity,
    gaussian_factor,
    integrate_weighted,
    log_density,
    log_density_gradient,
    normalizers,
    tail_interval,
    total_weighted_volume,
)

__version__ = "0.1.0"
