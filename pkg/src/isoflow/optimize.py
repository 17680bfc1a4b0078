"""Constrained chord optimization: weighted length at fixed weighted area.

A chord is a cubic spline crossing the slab from the bottom wall t = a
to the top wall t = b; the region E is everything to its left inside Ω.
The optimizer performs projected gradient descent on the spline control
points, using the first-variation formula for weighted length,

    δP_f = −∫ H_f ⟨W, N⟩ da_f + [f ⟨T, W⟩] at the wall endpoints,

so stationary chords have constant f-mean curvature and meet the walls
orthogonally.  The area constraint is restored after every trial step
by a horizontal translation, which moves weighted area monotonically.
The expected minimizer is a vertical chord: its weighted length is the
perpendicular profile value at the target area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import erfc

from .errors import ConfigError, DomainError, GeometryError
from .geometry import DiscreteCurve, _trapezoid_weights
from .weights import Density, log_density, log_density_gradient, tail_interval

__all__ = [
    "ChordSpline",
    "OptimizeTrace",
    "OptimizerConfig",
    "StationarityReport",
    "chord_curve",
    "enclosed_area",
    "make_straight_chord",
    "minimize",
    "shape_gradient",
    "stationarity_report",
    "trace_csv",
    "weighted_length",
]

_QUAD_SUBPANELS = 12
_QUAD_ORDER = 16
_QUAD_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _quad_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes whose panels are aligned with the m spline
    knots.  Alignment matters because spline curvature has derivative
    kinks at the knots; the high panel count matters because the
    arclength factor (1 + x'²)^{±3/2} has complex branch points that
    approach the real axis wherever the curve turns steeply."""
    if m not in _QUAD_CACHE:
        x, w = np.polynomial.legendre.leggauss(_QUAD_ORDER)
        edges = np.linspace(0.0, 1.0, (m - 1) * _QUAD_SUBPANELS + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * np.diff(edges)
        theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        _QUAD_CACHE[m] = (theta, weights)
    return _QUAD_CACHE[m]


def _segments_intersect(p: np.ndarray) -> bool:
    """Any non-adjacent pair of polyline segments crossing?  Vectorized."""
    a = p[:-1]
    d = np.diff(p, axis=0)
    n = d.shape[0]
    if n < 3:
        return False
    cross = lambda u, v: u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    denom = cross(d[:, None, :], d[None, :, :])
    rel = a[None, :, :] - a[:, None, :]
    s = cross(rel, d[None, :, :])
    t = cross(rel, d[:, None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        s = s / denom
        t = t / denom
    hit = (s > 1e-12) & (s < 1.0 - 1e-12) & (t > 1e-12) & (t < 1.0 - 1e-12)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    hit &= j > i + 1
    return bool(np.any(hit))


@dataclass(frozen=True)
class ChordSpline:
    """Cubic-spline chord from the bottom wall to the top wall.

    control_x, control_t: control values at uniform parameter knots in
    [0, 1].  The endpoints are pinned to the walls: t(0) = a, t(1) = b.
    In graph mode the vertical profile is frozen to the linear ramp and
    only horizontal controls move, so the curve stays a graph over t.
    The enclosed region E is the part of the slab left of the curve.
    """

    control_x: np.ndarray
    control_t: np.ndarray
    span: tuple[float, float]
    graph: bool = True

    def __post_init__(self):
        cx = np.atleast_1d(np.asarray(self.control_x, dtype=float))
        ct = np.atleast_1d(np.asarray(self.control_t, dtype=float))
        object.__setattr__(self, "control_x", cx)
        object.__setattr__(self, "control_t", ct)
        object.__setattr__(self, "span", (float(self.span[0]), float(self.span[1])))
        a, b = self.span
        m = cx.size
        if m < 4 or m > 64:
            raise GeometryError("chord needs between 4 and 64 control points")
        if ct.shape != cx.shape:
            raise GeometryError("control arrays must have equal length")
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise DomainError("chord span must be a bounded interval")
        if not np.all(np.isfinite(cx)):
            raise GeometryError("control abscissas must be finite")
        if abs(ct[0] - a) > 1e-12 * (1.0 + abs(a)) or abs(ct[-1] - b) > 1e-12 * (1.0 + abs(b)):
            raise GeometryError("chord endpoints must sit on the walls")
        if self.graph:
            ramp = a + (b - a) * self.knots
            if np.max(np.abs(ct - ramp)) > 1e-12 * (1.0 + abs(b - a)):
                raise GeometryError("graph chords must keep the linear vertical ramp")
        else:
            if np.any(ct < a - 1e-12) or np.any(ct > b + 1e-12):
                raise GeometryError("vertical controls must stay inside the slab")
            pts = np.stack(self.position(np.linspace(0.0, 1.0, 200)), axis=-1)
            if _segments_intersect(pts):
                raise GeometryError("chord must be simple (no self-intersections)")

    @property
    def n_controls(self) -> int:
        return self.control_x.size

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.control_x.size)

    def _splines(self) -> tuple[CubicSpline, CubicSpline]:
        k = self.knots
        return CubicSpline(k, self.control_x), CubicSpline(k, self.control_t)

    def position(self, theta) -> tuple[np.ndarray, np.ndarray]:
        sx, st = self._splines()
        theta = np.asarray(theta, dtype=float)
        return sx(theta), st(theta)

    def translated(self, tau: float) -> "ChordSpline":
        return ChordSpline(
            control_x=self.control_x + tau,
            control_t=self.control_t,
            span=self.span,
            graph=self.graph,
        )


def make_straight_chord(
    density: Density, x_bottom: float = 0.0, x_top: float | None = None,
    n_controls: int = 12, graph: bool = True,
) -> ChordSpline:
    """Straight chord between (x_bottom, a) and (x_top, b); vertical default.

    Infinite slab sides are replaced by the weighted tail cutoff, beyond
    which the discarded mass is negligible at working tolerances.
    """
    lo, hi = tail_interval(density)
    x_top = x_bottom if x_top is None else x_top
    knots = np.linspace(0.0, 1.0, n_controls)
    return ChordSpline(
        control_x=x_bottom + (x_top - x_bottom) * knots,
        control_t=lo + (hi - lo) * knots,
        span=(lo, hi),
        graph=graph,
    )


def _chord_fields(density: Density, chord: ChordSpline):
    """Spline geometry and density values at the quadrature nodes."""
    theta, qw = _quad_nodes(chord.n_controls)
    sx, st = chord._splines()
    x = sx(theta)
    t = st(theta)
    dx, dt = sx(theta, 1), st(theta, 1)
    d2x, d2t = sx(theta, 2), st(theta, 2)
    speed = np.hypot(dx, dt)
    if np.any(speed <= 1e-12):
        raise GeometryError("chord parametrization degenerates (zero speed)")
    pts = np.stack([x, t], axis=-1)
    f = np.exp(log_density(density, pts))
    return qw, x, t, dx, dt, d2x, d2t, speed, pts, f


def weighted_length(density: Density, chord: ChordSpline) -> float:
    """P_f(chord) = ∫ f dℓ by knot-aligned composite Gauss-Legendre."""
    qw, *_, speed, _, f = _chord_fields(density, chord)
    return float(np.sum(qw * f * speed))


def _gaussian_left_mass(c: float, x) -> np.ndarray:
    """∫_{−∞}^x e^{−c ξ²} dξ = √(π/c) erfc(−√c x)/2."""
    return math.sqrt(math.pi / c) * 0.5 * erfc(-math.sqrt(c) * np.asarray(x, dtype=float))


def enclosed_area(density: Density, chord: ChordSpline) -> float:
    """V_f(E) for E left of the chord, by the flux form of the area.

    The horizontal antiderivative G(x,t) = e^{ω(t)−ct²} ∫_{−∞}^x e^{−cξ²}dξ
    turns the weighted area into the line integral ∫ G t′ dθ along the
    chord, exact for any simple chord whether or not it is a graph.
    """
    qw, x, t, _, dt, *_ = _chord_fields(density, chord)
    w = density.weight
    vertical = np.exp(w.value(t) - density.c * t * t)
    g = _gaussian_left_mass(density.c, x)
    return float(np.sum(qw * vertical * g * dt))


_BASIS_CACHE: dict[int, np.ndarray] = {}


def _basis(m: int) -> np.ndarray:
    """B_j at the quadrature nodes for the interpolating spline basis."""
    if m not in _BASIS_CACHE:
        theta, _ = _quad_nodes(m)
        k = np.linspace(0.0, 1.0, m)
        basis = np.empty((m, theta.size))
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            basis[j] = CubicSpline(k, e)(theta)
        _BASIS_CACHE[m] = basis
    return _BASIS_CACHE[m]


def shape_gradient(density: Density, chord: ChordSpline):
    """(dP/dx_j, dV/dx_j[, dP/dt_j, dV/dt_j]) from the first variation.

    Moving control j horizontally deforms the chord by W = B_j e_x, so

        dP/dx_j = ∫ H_f B_j f t′ dθ + wall terms f T_x B_j at θ = 0, 1
        dV/dx_j = ∫ B_j f t′ dθ

    with H_f = k − ⟨∇ψ, N⟩ evaluated analytically from the spline.  In
    parametric mode the vertical analogue (W = B_j e_t, interior j) is
    returned as well; graph chords return zero vertical gradients.
    """
    qw, x, t, dx, dt, d2x, d2t, speed, pts, f = _chord_fields(density, chord)
    k = (dx * d2t - dt * d2x) / speed**3
    grad_psi = log_density_gradient(density, pts)
    n_x, n_t = -dt / speed, dx / speed
    hf = k - (grad_psi[:, 0] * n_x + grad_psi[:, 1] * n_t)
    basis = _basis(chord.n_controls)
    dp_x = basis @ (qw * hf * f * dt)
    dv_x = basis @ (qw * f * dt)
    # wall sliding terms: the endpoint controls move the contact point
    # along the wall, contributing f ⟨T, e_x⟩ with outward sign
    f_ends = np.exp(log_density(density, np.stack(chord.position([0.0, 1.0]), axis=-1)))
    sx, st = chord._splines()
    tang = np.array(
        [
            [sx(0.0, 1), st(0.0, 1)],
            [sx(1.0, 1), st(1.0, 1)],
        ],
        dtype=float,
    )
    tang /= np.hypot(tang[:, 0], tang[:, 1])[:, None]
    dp_x[0] += -f_ends[0] * tang[0, 0]
    dp_x[-1] += f_ends[1] * tang[1, 0]
    dp_t = np.zeros_like(dp_x)
    dv_t = np.zeros_like(dv_x)
    if not chord.graph:
        dp_t = basis @ (-qw * hf * f * dx)
        dv_t = basis @ (-qw * f * dx)
        dp_t[0] = dp_t[-1] = 0.0
        dv_t[0] = dv_t[-1] = 0.0
    return dp_x, dv_x, dp_t, dv_t


@dataclass(frozen=True)
class OptimizerConfig:
    """Projected-gradient settings for the fixed-area length descent."""

    target_area: float
    max_iterations: int = 400
    gradient_tolerance: float = 1e-6
    area_tolerance: float = 1e-10
    armijo_slope: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 40
    initial_step: float = 0.5

    def __post_init__(self):
        if not self.target_area > 0.0:
            raise ConfigError("target area must be positive")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ConfigError("backtrack factor must lie in (0, 1)")
        if self.max_iterations < 1 or self.max_backtracks < 1:
            raise ConfigError("iteration budgets must be positive")


@dataclass(frozen=True)
class StationarityReport:
    """First-order optimality diagnostics of a chord.

    A stationary chord has constant f-mean curvature along its length
    (spread ≤ 1e−3 relative) and meets both walls orthogonally
    (tangent within 0.5° of vertical).
    """

    stationary: bool
    hf_mean: float
    hf_spread: float
    angle_bottom_deg: float
    angle_top_deg: float
    length: float


def stationarity_report(density: Density, chord: ChordSpline) -> StationarityReport:
    qw, x, t, dx, dt, d2x, d2t, speed, pts, f = _chord_fields(density, chord)
    k = (dx * d2t - dt * d2x) / speed**3
    grad_psi = log_density_gradient(density, pts)
    hf = k - (grad_psi[:, 0] * (-dt / speed) + grad_psi[:, 1] * (dx / speed))
    spread = float(np.max(hf) - np.min(hf))
    mean = float(np.mean(hf))
    sx, st = chord._splines()
    angles = []
    for theta in (0.0, 1.0):
        tx, tt = float(sx(theta, 1)), float(st(theta, 1))
        angles.append(math.degrees(abs(math.atan2(abs(tx), abs(tt)))))
    stationary = spread <= 1e-3 * (1.0 + abs(mean)) and max(angles) <= 0.5
    return StationarityReport(
        stationary=stationary,
        hf_mean=mean,
        hf_spread=spread,
        angle_bottom_deg=angles[0],
        angle_top_deg=angles[1],
        length=float(np.sum(qw * f * speed)),
    )


def _restore_area(density: Density, chord: ChordSpline, target: float) -> ChordSpline:
    """Translate horizontally until the enclosed area matches the target.

    Translation moves weighted area strictly monotonically, so a bracket
    always exists; the root is polished by Brent iteration.
    """
    def offset_error(tau: float) -> float:
        return enclosed_area(density, chord.translated(tau)) - target

    err0 = offset_error(0.0)
    if abs(err0) <= 1e-15 * (1.0 + target):
        return chord
    step = 0.25
    lo = hi = 0.0
    if err0 < 0.0:
        hi = step
        while offset_error(hi) < 0.0:
            hi *= 2.0
            if hi > 1e3:
                raise DomainError("area restoration bracket failed (target too large)")
        lo = hi / 2.0 if hi > step else 0.0
    else:
        lo = -step
        while offset_error(lo) > 0.0:
            lo *= 2.0
            if lo < -1e3:
                raise DomainError("area restoration bracket failed (target too small)")
        hi = lo / 2.0 if lo < -step else 0.0
    tau = brentq(offset_error, lo, hi, xtol=1e-14, rtol=8.9e-16)
    return chord.translated(float(tau))


def _smoothed(
    density: Density,
    config: "OptimizerConfig",
    trial: ChordSpline,
    base_length: float,
    alpha: float,
    gnorm: float,
) -> ChordSpline:
    """Arclength-resample an accepted parametric step when that keeps
    at least half the Armijo decrease; otherwise keep the raw step."""
    try:
        smooth = _restore_area(density, _resample(trial), config.target_area)
    except (GeometryError, DomainError):
        return trial
    slack = 0.5 * config.armijo_slope * alpha * gnorm * gnorm
    if weighted_length(density, smooth) <= base_length - slack:
        return smooth
    return trial


def _resample(chord: ChordSpline, n_dense: int = 800) -> ChordSpline:
    """Redistribute the knots uniformly by arclength.

    Control points of a free parametric spline drift tangentially under
    gradient descent, which clusters knots and kinks the curve; pulling
    the same geometric curve back onto arclength-uniform knots removes
    the drift without (to interpolation accuracy) changing the shape.
    """
    theta = np.linspace(0.0, 1.0, n_dense)
    x, t = chord.position(theta)
    seg = np.hypot(np.diff(x), np.diff(t))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0.0:
        raise GeometryError("cannot resample a degenerate chord")
    targets = np.linspace(0.0, s[-1], chord.n_controls)
    theta_new = np.interp(targets, s, theta)
    x_new, t_new = chord.position(theta_new)
    a, b = chord.span
    t_new = np.clip(t_new, a, b)
    t_new[0], t_new[-1] = a, b
    return ChordSpline(x_new, t_new, chord.span, graph=False)


@dataclass(frozen=True)
class OptimizeTrace:
    """Per-iteration history of the constrained descent."""

    iterations: np.ndarray
    lengths: np.ndarray
    area_errors: np.ndarray
    gradient_norms: np.ndarray
    status: str
    final: StationarityReport


def _pack(chord: ChordSpline) -> np.ndarray:
    if chord.graph:
        return chord.control_x.copy()
    return np.concatenate([chord.control_x, chord.control_t[1:-1]])


def _box_project(chord: ChordSpline, params: np.ndarray) -> np.ndarray:
    """Clip the vertical control block to the slab (box feasibility)."""
    if chord.graph:
        return params
    out = params.copy()
    a, b = chord.span
    out[chord.n_controls:] = np.clip(out[chord.n_controls:], a, b)
    return out


def _unpack(chord: ChordSpline, params: np.ndarray) -> ChordSpline:
    m = chord.n_controls
    if chord.graph:
        return ChordSpline(params.copy(), chord.control_t, chord.span, graph=True)
    ct = chord.control_t.copy()
    ct[1:-1] = params[m:]
    return ChordSpline(params[:m].copy(), ct, chord.span, graph=False)


def _projected_direction(chord: ChordSpline, grads) -> tuple[np.ndarray, float]:
    """Area-tangential descent direction and its stationarity norm.

    The length gradient is projected off the area gradient, then
    components that would push a wall-pinned vertical control out of
    the slab are masked (active box constraints satisfy the first-order
    conditions, so they do not count toward the gradient norm).
    """
    dp_x, dv_x, dp_t, dv_t = grads
    if chord.graph:
        gp, gv = dp_x, dv_x
    else:
        gp = np.concatenate([dp_x, dp_t[1:-1]])
        gv = np.concatenate([dv_x, dv_t[1:-1]])
    gv_norm2 = float(np.dot(gv, gv))
    if gv_norm2 <= 0.0:
        raise DomainError("area gradient vanished; constraint not controllable")
    direction = -(gp - (float(np.dot(gp, gv)) / gv_norm2) * gv)
    if not chord.graph:
        a, b = chord.span
        ti = chord.control_t[1:-1]
        d_t = direction[chord.n_controls:]
        tol = 1e-12 * (1.0 + abs(b - a))
        d_t[(ti <= a + tol) & (d_t < 0.0)] = 0.0
        d_t[(ti >= b - tol) & (d_t > 0.0)] = 0.0
    return direction, float(np.linalg.norm(direction))


def minimize(
    density: Density, config: OptimizerConfig, chord: ChordSpline
) -> tuple[ChordSpline, OptimizeTrace]:
    """Projected-gradient descent on control points at fixed weighted area.

    Every trial step is followed by a horizontal-translation area
    restoration, so the constraint holds exactly along the accepted
    trace.  Steps are Barzilai-Borwein scaled with Armijo backtracking;
    the run terminates on a small projected gradient, the iteration cap,
    or a failed line search (stalled).
    """
    chord = _restore_area(density, chord, config.target_area)
    rows = []
    status = "max_iterations"
    prev_params = None
    prev_grad = None
    step0 = config.initial_step
    for it in range(config.max_iterations):
        grads = shape_gradient(density, chord)
        direction, gnorm = _projected_direction(chord, grads)
        length = weighted_length(density, chord)
        area_err = abs(enclosed_area(density, chord) - config.target_area)
        rows.append((it, length, area_err, gnorm))
        if gnorm < config.gradient_tolerance:
            status = "converged"
            break
        params = _pack(chord)
        if prev_params is not None:
            s = params - prev_params
            y = -direction - prev_grad
            sy = float(np.dot(s, y))
            step = float(np.dot(s, s)) / sy if sy > 1e-30 else step0
            step = min(max(step, 1e-6), 10.0)
        else:
            step = step0 / max(gnorm, 1.0)
        # per-step displacement cap: keeps the spline from folding
        a, b = chord.span
        max_move = 0.15 * (b - a) / max(float(np.max(np.abs(direction))), 1e-30)
        step = min(step, max_move)
        prev_params, prev_grad = params, -direction
        accepted = False
        alpha = step
        for _ in range(config.max_backtracks):
            try:
                trial = _unpack(chord, _box_project(chord, params + alpha * direction))
                trial = _restore_area(density, trial, config.target_area)
            except (GeometryError, DomainError):
                alpha *= config.backtrack_factor
                continue
            if weighted_length(density, trial) <= length - config.armijo_slope * alpha * gnorm * gnorm:
                if not chord.graph:
                    trial = _smoothed(density, config, trial, length, alpha, gnorm)
                chord = trial
                accepted = True
                break
            alpha *= config.backtrack_factor
        if not accepted:
            status = "stalled"
            break
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return chord, OptimizeTrace(
        iterations=arr[:, 0].astype(int),
        lengths=arr[:, 1],
        area_errors=arr[:, 2],
        gradient_norms=arr[:, 3],
        status=status,
        final=stationarity_report(density, chord),
    )


def trace_csv(trace: OptimizeTrace) -> str:
    """Serialize to CSV with header iter,length,area_err,grad_norm."""
    lines = ["iter,length,area_err,grad_norm"]
    for i, length, aerr, gnorm in zip(
        trace.iterations, trace.lengths, trace.area_errors, trace.gradient_norms
    ):
        lines.append(f"{int(i)},{float(length)!r},{float(aerr)!r},{float(gnorm)!r}")
    return "\n".join(lines) + "\n"


def chord_curve(density: Density, chord: ChordSpline, n: int = 401) -> DiscreteCurve:
    """Resample a spline chord as a discrete curve with analytic fields.

    Nodes sit at uniform arclength, so the spacing contract of
    DiscreteCurve holds for arbitrarily bent chords.  Normals are the
    left normal N = (−t′, x′)/|γ′| and the curvature is the exact
    spline curvature k = (x′t″ − t′x″)/|γ′|³, both evaluated from the
    spline derivatives rather than node differences.
    """
    if n < 3:
        raise GeometryError("need at least 3 nodes")
    sx, st = chord._splines()
    theta_dense = np.linspace(0.0, 1.0, 4097)
    speed_dense = np.hypot(sx(theta_dense, 1), st(theta_dense, 1))
    s_dense = np.concatenate(
        ([0.0], np.cumsum(0.5 * (speed_dense[1:] + speed_dense[:-1]) * np.diff(theta_dense)))
    )
    theta = np.interp(np.linspace(0.0, s_dense[-1], n), s_dense, theta_dense)
    theta[0], theta[-1] = 0.0, 1.0
    x, t = sx(theta), st(theta)
    dx, dt = sx(theta, 1), st(theta, 1)
    d2x, d2t = sx(theta, 2), st(theta, 2)
    speed = np.hypot(dx, dt)
    a, b = density.slab
    points = np.stack((x, np.clip(t, a, b)), axis=-1)
    normals = np.stack((-dt / speed, dx / speed), axis=-1)
    curvature = (dx * d2t - dt * d2x) / speed**3
    return DiscreteCurve(
        points=points,
        normals=normals,
        curvature=curvature,
        weights=_trapezoid_weights(density, points, closed=False),
        boundary_start=True,
        boundary_end=True,
    )
