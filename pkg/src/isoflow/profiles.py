"""Half-space families and their isoperimetric profiles.

For f = e^{omega(t) - c|p|^2} on Omega = R^n x (a, b), half-space boundaries
come in families: parallel (boundary {t = s}) and perpendicular ({z_i = s}).
With V(s), A(s) the weighted volume and boundary area, the profile is
F(v) = A(V^{-1}(v)).  Product reductions:

  parallel:       V(s) = (pi/c)^{n/2} int_a^s e^{omega - c t^2} dt
                  A(s) = (pi/c)^{n/2} e^{omega(s) - c s^2}
  perpendicular:  V(s) = (pi/c)^{(n-1)/2} M int_{-inf}^s e^{-c u^2} du
                  A(s) = (pi/c)^{(n-1)/2} M e^{-c s^2},
                  M = int_a^b e^{omega - c t^2} dt.

Since A' = (omega'(s) - 2cs) A along the parallel family and A' = -2cs A
along the perpendicular one, the profiles satisfy

  F'' F + 2c = omega''(s)   (parallel),
  G'' G + 2c = 0            (perpendicular),

so concave omega gives F'' <= -2c/F with equality exactly for affine omega.
Tilted families on the whole space reduce to a 1-D integral with a mixed
argument omega(nu_t s + g u), g = sqrt(1 - nu_t^2), handled by
Gauss-Hermite quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import erfc

from .errors import ConsistencyError, DomainError, SmoothnessError
from .weights import (
    CumulativeDensity1D,
    DEFAULT_QUADRATURE,
    Density,
    PiecewiseLinearWeight,
    QuadratureSpec,
    _gaussian_tail_cutoff,
    gaussian_factor,
    integrate_weighted,
)

__all__ = [
    "HalfSpaceCandidate",
    "Profile",
    "ProfileOdeReport",
    "ComparisonVerdict",
    "volume_area_parallel",
    "volume_area_perpendicular",
    "build_profile",
    "check_profile_ode",
    "compare_profiles",
    "tilted_profile_wholespace",
    "profile_csv",
]

GRID_EPS = 1e-3  # relative volume margin kept clear of the degenerate endpoints


@dataclass(frozen=True)
class HalfSpaceCandidate:
    """A half-space cut of the slab.

    orientation 'parallel' uses level (boundary {t = level}), orientation
    'perpendicular' uses axis/offset (boundary {z_axis = offset}), and
    'tilted' uses a unit normal in R^dim with offset d (boundary
    {<p, normal> = d}).
    """

    orientation: str
    level: float | None = None
    axis: int | None = None
    offset: float | None = None
    normal: tuple[float, ...] | None = None

    def validate(self, density: Density) -> None:
        if self.orientation == "parallel":
            a, b = density.slab
            if self.level is None or not a < self.level < b:
                raise DomainError("parallel candidate needs a level inside the slab")
        elif self.orientation == "perpendicular":
            if density.n < 1:
                raise DomainError("perpendicular candidate needs n >= 1")
            if self.axis is None or not 1 <= self.axis <= density.n:
                raise DomainError("perpendicular axis index must lie in 1..n")
            if self.offset is None or not math.isfinite(self.offset):
                raise DomainError("perpendicular candidate needs a finite offset")
        elif self.orientation == "tilted":
            if self.normal is None or len(self.normal) != density.dim:
                raise DomainError("tilted candidate needs a normal with dim components")
            nrm = math.sqrt(sum(x * x for x in self.normal))
            if abs(nrm - 1.0) > 1e-9:
                raise DomainError("tilted normal must be a unit vector")
        else:
            raise DomainError(f"unknown orientation {self.orientation!r}")


@dataclass(frozen=True)
class Profile:
    """Sampled profile F(v) = A(V^{-1}(v)) of a half-space family."""

    family: str
    s: np.ndarray
    V: np.ndarray
    A: np.ndarray
    v: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    ddF: np.ndarray
    v_total: float

    def __post_init__(self):
        if np.any(np.diff(self.V) <= 0.0):
            raise ConsistencyError("profile volumes must be strictly increasing")
        if np.any(self.F <= 0.0):
            raise ConsistencyError("profile values must be positive on the open range")


def volume_area_parallel(
    density: Density, s: float, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> tuple[float, float]:
    """(V, A) of the half-space {t < s} cut parallel to the slab faces."""
    a, b = density.slab
    if not a <= s <= b:
        raise DomainError("parallel level must lie in the closed slab")
    gf = gaussian_factor(density.n, density.c)
    V = gf * integrate_weighted(density, lo=a, hi=s, spec=spec)
    w = density.weight
    A = gf * math.exp(float(w.value(s)) - density.c * s * s)
    return V, A


def _gaussian_mass_below(c: float, s: float) -> float:
    """int_{-inf}^s e^{-c u^2} du, stable in both tails."""
    return math.sqrt(math.pi / c) * 0.5 * float(erfc(-math.sqrt(c) * s))


def volume_area_perpendicular(
    density: Density, s: float, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> tuple[float, float]:
    """(V, A) of the half-space {z_i < s} cut perpendicular to the faces."""
    if density.n < 1:
        raise DomainError("perpendicular family needs n >= 1")
    gf = gaussian_factor(density.n - 1, density.c)
    M = integrate_weighted(density, spec=spec)
    V = gf * M * _gaussian_mass_below(density.c, s)
    A = gf * M * math.exp(-density.c * s * s)
    return V, A


def _chebyshev_grid(lo: float, hi: float, size: int) -> np.ndarray:
    k = np.arange(size, dtype=float)
    x = np.cos(math.pi * (size - 1 - k) / (size - 1))  # ascending in [-1, 1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x


def _invert_monotone(value_fn, deriv_fn, lo: float, hi: float, target: float, tol: float) -> float:
    """Solve value_fn(s) = target on [lo, hi], bisection bracket + Newton."""
    a, b = lo, hi
    if value_fn(a) - target > 0.0 or value_fn(b) - target < 0.0:
        raise ConsistencyError("volume inversion lost its bracket (non-monotone V?)")
    t = 0.5 * (a + b)
    for _ in range(200):
        ft = value_fn(t) - target
        if abs(ft) <= tol:
            return t
        if ft > 0.0:
            b = t
        else:
            a = t
        d = deriv_fn(t)
        t_next = t - ft / d if d > 0.0 else 0.5 * (a + b)
        if not (a <= t_next <= b):
            t_next = 0.5 * (a + b)
        t = t_next
    raise ConsistencyError("volume inversion did not converge in 200 steps")


def build_profile(
    density: Density,
    family: str,
    grid_size: int = 65,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> Profile:
    """Profile of the parallel or perpendicular family on a Chebyshev volume grid.

    Volumes span [eps V_tot, (1 - eps) V_tot] with eps = 1e-3; each V(s) = v
    is solved to |V(s) - v| <= 1e-10 V_tot.  F' and F'' are recorded from
    the closed forms, so the parallel family needs a C-inf weight.
    """
    if family not in ("parallel", "perpendicular"):
        raise DomainError(f"unknown family {family!r}")
    if grid_size < 3:
        raise DomainError("need at least 3 grid volumes")
    c, n = density.c, density.n
    w = density.weight

    if family == "parallel":
        if isinstance(w, PiecewiseLinearWeight):
            raise SmoothnessError(
                "parallel profiles record omega' and omega''; need a C-inf weight"
            )
        gf = gaussian_factor(n, c)
        cum = CumulativeDensity1D(density, spec=spec)
        lo, hi = float(cum.breaks[0]), float(cum.breaks[-1])
        v_total = gf * cum.total

        def V_of(s):
            return gf * cum.mass_below(s)

        def A_of(s):
            return gf * math.exp(float(w.value(s)) - c * s * s)

    else:
        if n < 1:
            raise DomainError("perpendicular family needs n >= 1")
        gf = gaussian_factor(n - 1, c)
        M = integrate_weighted(density, spec=spec)
        amp = gf * M
        v_total = amp * math.sqrt(math.pi / c)
        # the lateral coordinate is a pure Gaussian; clip at negligible quantiles
        half_width = math.sqrt(-math.log(1e-18) / c)
        lo, hi = -half_width, half_width

        def V_of(s):
            return amp * _gaussian_mass_below(c, s)

        def A_of(s):
            return amp * math.exp(-c * s * s)

    v_grid = _chebyshev_grid(GRID_EPS * v_total, (1.0 - GRID_EPS) * v_total, grid_size)
    tol = 1e-11 * v_total
    s_grid = np.array([_invert_monotone(V_of, A_of, lo, hi, v, tol) for v in v_grid])
    A_grid = np.array([A_of(s) for s in s_grid])
    V_grid = np.array([V_of(s) for s in s_grid])

    if family == "parallel":
        dF = np.asarray(w.deriv(s_grid), dtype=float) - 2.0 * c * s_grid
        ddF = (np.asarray(w.deriv2(s_grid), dtype=float) - 2.0 * c) / A_grid
    else:
        dF = -2.0 * c * s_grid
        ddF = np.full_like(s_grid, -2.0 * c) / A_grid

    return Profile(
        family=family,
        s=s_grid,
        V=V_grid,
        A=A_grid,
        v=v_grid,
        F=A_grid,
        dF=dF,
        ddF=ddF,
        v_total=v_total,
    )


@dataclass(frozen=True)
class ProfileOdeReport:
    """Residuals of F'' + 2c/F over the profile grid.

    defect is the rescaled residual F''F + 2c, whose closed form is
    omega''(s) for parallel families and 0 for perpendicular ones.
    """

    verdict: str  # 'equality' | 'inequality' | 'violation'
    max_abs_residual: float
    max_defect: float
    min_defect: float
    counterexamples: tuple[float, ...]


def check_profile_ode(profile: Profile, c: float, tol: float = 1e-8) -> ProfileOdeReport:
    residual = profile.ddF + 2.0 * c / profile.F
    defect = profile.ddF * profile.F + 2.0 * c
    bad = profile.v[defect > tol]
    if bad.size:
        verdict = "violation"
    elif np.max(np.abs(defect)) <= tol:
        verdict = "equality"
    else:
        verdict = "inequality"
    return ProfileOdeReport(
        verdict=verdict,
        max_abs_residual=float(np.max(np.abs(residual))),
        max_defect=float(np.max(defect)),
        min_defect=float(np.min(defect)),
        counterexamples=tuple(float(v) for v in bad[:16]),
    )


@dataclass(frozen=True)
class ComparisonVerdict:
    """F vs G on a common volume grid; ties within tie_tol * max(F, G)."""

    verdict: str  # 'strict' | 'ge_with_ties' | 'violation'
    min_margin: float
    ties: tuple[float, ...]
    violations: tuple[float, ...]
    grid: np.ndarray
    f_values: np.ndarray
    g_values: np.ndarray


def compare_profiles(
    f_profile: Profile,
    g_profile: Profile,
    grid: np.ndarray | None = None,
    tie_tol: float = 1e-8,
) -> ComparisonVerdict:
    """Pointwise comparison of two profiles of the same density.

    Profiles sampled on different grids are matched by monotone-cubic
    interpolation in v.
    """
    vf, vg = f_profile.v_total, g_profile.v_total
    if abs(vf - vg) > 1e-8 * max(vf, vg):
        raise ConsistencyError(
            f"total volumes differ ({vf!r} vs {vg!r}); profiles are incompatible"
        )
    same_grid = f_profile.v.shape == g_profile.v.shape and np.allclose(
        f_profile.v, g_profile.v, rtol=1e-12, atol=0.0
    )
    if grid is None and same_grid:
        common = f_profile.v
        F = f_profile.F
        G = g_profile.F
    else:
        lo = max(f_profile.v[0], g_profile.v[0])
        hi = min(f_profile.v[-1], g_profile.v[-1])
        if grid is None:
            common = _chebyshev_grid(lo, hi, max(len(f_profile.v), len(g_profile.v)))
        else:
            common = np.asarray(grid, dtype=float)
            if np.any(common < lo) or np.any(common > hi):
                raise DomainError("comparison grid exceeds the common volume range")
        F = PchipInterpolator(f_profile.v, f_profile.F)(common)
        G = PchipInterpolator(g_profile.v, g_profile.F)(common)

    tie_band = tie_tol * np.maximum(F, G)
    margin = F - G
    ties = common[np.abs(margin) <= tie_band]
    violations = common[margin < -tie_band]
    if violations.size:
        verdict = "violation"
    elif ties.size:
        verdict = "ge_with_ties"
    else:
        verdict = "strict"
    return ComparisonVerdict(
        verdict=verdict,
        min_margin=float(np.min(margin)),
        ties=tuple(float(v) for v in ties[:32]),
        violations=tuple(float(v) for v in violations[:32]),
        grid=common,
        f_values=np.asarray(F, dtype=float),
        g_values=np.asarray(G, dtype=float),
    )


class _PanelCumulative:
    """Cumulative integral of a vectorized positive function on [lo, hi]."""

    def __init__(self, fn, lo: float, hi: float, n_panels: int = 1200, order: int = 12):
        self.fn = fn
        self.breaks = np.linspace(lo, hi, n_panels + 1)
        x, wts = np.polynomial.legendre.leggauss(order)
        mid = 0.5 * (self.breaks[1:] + self.breaks[:-1])
        half = 0.5 * (self.breaks[1:] - self.breaks[:-1])
        nodes = mid[:, None] + half[:, None] * x[None, :]
        vals = fn(nodes.ravel()).reshape(nodes.shape)
        panel = np.sum(vals * (half[:, None] * wts[None, :]), axis=1)
        self._cum = np.concatenate(([0.0], np.cumsum(panel)))
        self.total = float(self._cum[-1])
        self._glx, self._glw = x, wts

    def value(self, t: float) -> float:
        t = min(max(float(t), self.breaks[0]), self.breaks[-1])
        j = int(np.searchsorted(self.breaks, t, side="right") - 1)
        j = min(j, len(self.breaks) - 2)
        a = self.breaks[j]
        if t <= a:
            return float(self._cum[j])
        mid, half = 0.5 * (a + t), 0.5 * (t - a)
        nodes = mid + half * self._glx
        return float(self._cum[j] + half * np.dot(self._glw, self.fn(nodes)))


def tilted_profile_wholespace(
    density: Density,
    normal,
    grid_size: int = 65,
    hermite_order: int = 150,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> Profile:
    """Profile of the half-space family {<p, nu> < s} on the whole space.

    Reduction: with nu_t the vertical component of nu and g = sqrt(1-nu_t^2),

        A(s) = (pi/c)^{(n-1)/2} e^{-c s^2} I(nu_t s),
        I(tau) = int e^{omega(tau + g u) - c u^2} du,

    where I is evaluated by Gauss-Hermite quadrature (the weight must be
    C-inf; the integrand is analytic for the closed-form variants).  V is
    accumulated by panel Gauss-Legendre in s.  F' and F'' come from
    log-derivatives of A: F'' F + 2c = nu_t^2 (log I)''(nu_t s) <= 0 by
    log-concavity, matching the parallel/perpendicular closed forms at
    nu_t = 1 / nu_t = 0.
    """
    if not density.whole_space():
        raise DomainError("tilted families are defined on the whole space only")
    w = density.weight
    if isinstance(w, PiecewiseLinearWeight):
        raise SmoothnessError("tilted profiles need a C-inf weight")
    nu = np.asarray(normal, dtype=float)
    if nu.shape != (density.dim,):
        raise DomainError("normal must have dim components")
    nrm = float(np.linalg.norm(nu))
    if abs(nrm - 1.0) > 1e-9:
        raise DomainError("normal must be a unit vector")
    nu = nu / nrm
    if density.n < 1 and abs(nu[-1]) < 1.0:
        raise DomainError("n = 0 admits only the vertical family")
    c, n = density.c, density.n
    nu_t = float(nu[-1])
    g = math.sqrt(max(0.0, 1.0 - nu_t * nu_t))

    hx, hw = np.polynomial.hermite.hermgauss(hermite_order)
    shift = g * hx / math.sqrt(c)  # GH nodes mapped to the u variable

    def log_I(tau: np.ndarray) -> np.ndarray:
        args = np.asarray(tau, dtype=float)[..., None] + shift
        vals = np.exp(w.value(args))
        return np.log(vals @ hw) - 0.5 * math.log(c)

    def dlog_I(tau: float) -> tuple[float, float]:
        args = tau + shift
        phi = np.exp(w.value(args))
        d1 = np.asarray(w.deriv(args), dtype=float)
        d2 = np.asarray(w.deriv2(args), dtype=float)
        m0 = float(phi @ hw)
        m1 = float((d1 * phi) @ hw)
        m2 = float(((d2 + d1 * d1) * phi) @ hw)
        return m1 / m0, m2 / m0 - (m1 / m0) ** 2

    gf = gaussian_factor(n - 1, c) if n >= 1 else 1.0

    def area_vec(s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return gf * np.exp(-c * s * s + log_I(nu_t * s))

    # truncation: (log A)(s) = -c s^2 + log I(nu_t s) is concave; tangent rule
    eps = spec.tail_fraction * spec.abs_tol
    cuts = []
    for right in (True, False):
        ref = max(1.0, 1.0 / math.sqrt(c)) * (1.0 if right else -1.0)
        la = float(log_I(np.asarray(ref * nu_t)))
        sl = nu_t * dlog_I(ref * nu_t)[0]
        drift = sl if right else -sl
        amp = la - sl * ref if right else la + sl * ref
        cut = _gaussian_tail_cutoff(c, drift, amp + math.log(max(gf, 1e-300)), eps)
        cut += spec.tail_pad / math.sqrt(c)
        cut = max(cut, abs(ref) + 1.0 / math.sqrt(c))
        cuts.append(cut if right else -cut)
    hi, lo = cuts

    cum = _PanelCumulative(area_vec, lo, hi)
    v_total = cum.total

    def V_of(s):
        return cum.value(s)

    def A_of(s):
        return float(area_vec(np.asarray([s]))[0])

    v_grid = _chebyshev_grid(GRID_EPS * v_total, (1.0 - GRID_EPS) * v_total, grid_size)
    tol = 1e-11 * v_total
    s_grid = np.array([_invert_monotone(V_of, A_of, lo, hi, v, tol) for v in v_grid])
    A_grid = area_vec(s_grid)
    V_grid = np.array([V_of(s) for s in s_grid])

    dF = np.empty_like(s_grid)
    ddF = np.empty_like(s_grid)
    for i, s in enumerate(s_grid):
        l1, l2 = dlog_I(nu_t * s)
        dF[i] = -2.0 * c * s + nu_t * l1
        ddF[i] = (-2.0 * c + nu_t * nu_t * l2) / A_grid[i]

    return Profile(
        family="tilted",
        s=s_grid,
        V=V_grid,
        A=A_grid,
        v=v_grid,
        F=A_grid,
        dF=dF,
        ddF=ddF,
        v_total=v_total,
    )


def profile_csv(profile: Profile) -> str:
    """CSV serialization, shortest round-trip decimals."""
    lines = ["s,V,A,v,F,dF,ddF"]
    for row in zip(
        profile.s, profile.V, profile.A, profile.v, profile.F, profile.dF, profile.ddF
    ):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
