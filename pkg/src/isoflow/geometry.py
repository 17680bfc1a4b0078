"""Discrete curve geometry in the weighted plane.

Curves live in the closure of Ω = ℝ×(a,b) ⊂ ℝ² carrying the density
f = e^ψ with ψ(p) = ω(t) − c|p|².  This module provides the f-mean
curvature H_f = k − ⟨∇ψ, N⟩, a shooting integrator for curves of
constant H_f, the translational Jacobi identity L_f⟨η,N⟩ = 2c⟨η,N⟩,
and the second-variation forms

    I_f(u,v) = ∫ u′v′ − (Ric_f(N,N) + k²) u v  da_f
    Q_f(u,v) = −∫ u L_f(v) da_f − Σ_{endpoints} u (∂v/∂ν) f

whose sign on mean-zero test functions decides weighted stability.
Slab walls are totally geodesic hyperplanes, so the second fundamental
form terms on ∂Σ vanish identically here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConsistencyError, DomainError, GeometryError
from .weights import (
    Density,
    _gaussian_tail_cutoff,
    bakry_emery_curvature,
    log_density,
    log_density_gradient,
)

__all__ = [
    "DiscreteCurve",
    "IndexFormReport",
    "StabilityVerdict",
    "TranslationTestFunction",
    "cmc_shoot",
    "curve_csv",
    "curve_weighted_length",
    "f_mean_curvature",
    "horizontal_segment",
    "index_form",
    "jacobi_residual",
    "parallel_halfspace_stability",
    "polyline_curve",
    "q_form",
    "straight_segment",
    "translation_test_function",
    "vertical_segment",
]

_BOUNDARY_TOL = 1e-9


def _require_planar(density: Density) -> None:
    if density.dim != 2:
        raise DomainError("curve geometry is restricted to the planar model dim=2")


def _rot90(v: np.ndarray) -> np.ndarray:
    """Counterclockwise quarter turn, (x, t) ↦ (−t, x)."""
    return np.stack((-v[..., 1], v[..., 0]), axis=-1)


def _segment_lengths(points: np.ndarray, closed: bool) -> np.ndarray:
    d = np.diff(points, axis=0)
    ell = np.hypot(d[:, 0], d[:, 1])
    if closed:
        gap = points[0] - points[-1]
        ell = np.append(ell, math.hypot(gap[0], gap[1]))
    return ell


@dataclass(frozen=True)
class DiscreteCurve:
    """Polyline with unit normals, curvature, and da_f node weights.

    points:    (m, 2) ordered nodes (x_i, t_i).
    normals:   (m, 2) unit normals, consistently oriented toward the
               enclosed side E.
    curvature: (m,) signed curvature k_i with respect to the stored
               normal (k = dθ/ds when N is the left normal).
    weights:   (m,) trapezoidal da_f quadrature weights, i.e. half the
               adjacent segment lengths times f(p_i).
    closed:    the last node connects back to the first.
    boundary_start / boundary_end: endpoint sits on a slab wall.
    """

    points: np.ndarray
    normals: np.ndarray
    curvature: np.ndarray
    weights: np.ndarray
    closed: bool = False
    boundary_start: bool = False
    boundary_end: bool = False

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        nrm = np.atleast_2d(np.asarray(self.normals, dtype=float))
        cur = np.atleast_1d(np.asarray(self.curvature, dtype=float))
        wts = np.atleast_1d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "curvature", cur)
        object.__setattr__(self, "weights", wts)
        m = pts.shape[0]
        if m < 3:
            raise GeometryError("curve needs at least 3 nodes")
        if pts.shape != (m, 2) or nrm.shape != (m, 2):
            raise GeometryError("points and normals must have shape (m, 2)")
        if cur.shape != (m,) or wts.shape != (m,):
            raise GeometryError("curvature and weights must have shape (m,)")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(nrm))):
            raise GeometryError("curve data must be finite")
        norms = np.hypot(nrm[:, 0], nrm[:, 1])
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise GeometryError("normals must be unit vectors")
        ell = _segment_lengths(pts, self.closed)
        if np.any(ell <= 0.0):
            raise GeometryError("consecutive nodes must be distinct")
        nominal = float(np.mean(ell))
        if np.max(ell) > 2.2 * nominal or np.min(ell) < nominal / 2.2:
            raise GeometryError("arclength spacing drifts beyond [h/2, 2h]")
        # normals orthogonal to the discrete tangent up to O(h²)
        chord = pts[2:] - pts[:-2]
        chord = chord / np.hypot(chord[:, 0], chord[:, 1])[:, None]
        skew = np.abs(np.sum(chord * nrm[1:-1], axis=-1))
        if skew.size and np.max(skew) > 0.05:
            raise GeometryError("normals are not orthogonal to the curve")
        if np.any(wts < 0.0) or not np.sum(wts) > 0.0:
            raise GeometryError("da_f weights must be nonnegative with positive mass")

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    def arclength(self) -> np.ndarray:
        """Cumulative chord length at the nodes, starting at 0."""
        ell = _segment_lengths(self.points, closed=False)
        return np.concatenate(([0.0], np.cumsum(ell)))

    def tangents(self) -> np.ndarray:
        """Unit tangents in node order, by centered differences."""
        pts = self.points
        if self.closed:
            d = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
        else:
            d = np.empty_like(pts)
            d[1:-1] = pts[2:] - pts[:-2]
            d[0] = pts[1] - pts[0]
            d[-1] = pts[-1] - pts[-2]
        return d / np.hypot(d[:, 0], d[:, 1])[:, None]

    def weighted_area(self) -> float:
        """A_f(Σ) = ∫_Σ da_f by the stored trapezoidal weights."""
        return float(np.sum(self.weights))


def _trapezoid_weights(density: Density, points: np.ndarray, closed: bool) -> np.ndarray:
    ell = _segment_lengths(points, closed)
    m = points.shape[0]
    w = np.zeros(m)
    if closed:
        w += 0.5 * ell
        w += 0.5 * np.roll(ell, 1)
    else:
        w[:-1] += 0.5 * ell
        w[1:] += 0.5 * ell
    return w * np.exp(log_density(density, points))


def _boundary_flags(density: Density, points: np.ndarray) -> tuple[bool, bool]:
    a, b = density.slab
    scale = 1.0 + abs(points[0, 1]) + abs(points[-1, 1])

    def on_wall(t: float) -> bool:
        return (math.isfinite(a) and abs(t - a) <= _BOUNDARY_TOL * scale) or (
            math.isfinite(b) and abs(t - b) <= _BOUNDARY_TOL * scale
        )

    return on_wall(points[0, 1]), on_wall(points[-1, 1])


def _check_in_slab(density: Density, points: np.ndarray) -> None:
    a, b = density.slab
    t = points[:, 1]
    scale = 1.0 + np.max(np.abs(t))
    if np.any(t < a - _BOUNDARY_TOL * scale) or np.any(t > b + _BOUNDARY_TOL * scale):
        raise DomainError("curve exits the slab")


def straight_segment(density: Density, p0, p1, n: int = 201, orientation: int = 1) -> DiscreteCurve:
    """Uniformly sampled straight segment with the left normal of travel.

    orientation +1 keeps N = rot90(T) (the enclosed side lies to the
    left of the direction of travel); −1 flips it.
    """
    _require_planar(density)
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    if n < 3:
        raise GeometryError("need at least 3 nodes")
    lam = np.linspace(0.0, 1.0, n)
    points = p0 + lam[:, None] * (p1 - p0)
    _check_in_slab(density, points)
    chord = p1 - p0
    length = math.hypot(chord[0], chord[1])
    if length <= 0.0:
        raise GeometryError("segment endpoints coincide")
    tangent = chord / length
    normal = float(orientation) * _rot90(tangent)
    flags = _boundary_flags(density, points)
    return DiscreteCurve(
        points=points,
        normals=np.tile(normal, (n, 1)),
        curvature=np.zeros(n),
        weights=_trapezoid_weights(density, points, closed=False),
        boundary_start=flags[0],
        boundary_end=flags[1],
    )


def vertical_segment(density: Density, x0: float, n: int = 201, orientation: int = 1) -> DiscreteCurve:
    """Vertical chord x = x0 crossing the full slab, N = (−1, 0) for +1."""
    a, b = density.slab
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("vertical chord needs a bounded slab")
    return straight_segment(density, (x0, a), (x0, b), n=n, orientation=orientation)


def horizontal_segment(
    density: Density,
    t0: float,
    n: int = 2001,
    half_width: float | None = None,
    orientation: int = 1,
) -> DiscreteCurve:
    """Horizontal line t = t0 truncated where e^{−cx²} is negligible."""
    a, b = density.slab
    if not (a <= t0 <= b):
        raise DomainError("horizontal line must sit inside the slab")
    if half_width is None:
        half_width = _gaussian_tail_cutoff(density.c, 0.0, 0.0, 1e-18)
    return straight_segment(
        density, (-half_width, t0), (half_width, t0), n=n, orientation=orientation
    )


def polyline_curve(
    density: Density, points, orientation: int = 1, closed: bool = False
) -> DiscreteCurve:
    """General curve from ordered nodes; normals and curvature by differences.

    Tangents use centered differences, normals are rot90(T) times the
    orientation, and k = dθ/ds from the unwrapped tangent angle, so both
    carry O(h²) discretization error.
    """
    _require_planar(density)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _check_in_slab(density, points)
    m = points.shape[0]
    if closed:
        d = np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0)
    else:
        d = np.empty_like(points)
        d[1:-1] = points[2:] - points[:-2]
        d[0] = points[1] - points[0]
        d[-1] = points[-1] - points[-2]
    tangents = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    normals = float(orientation) * _rot90(tangents)
    theta = np.unwrap(np.arctan2(tangents[:, 1], tangents[:, 0]))
    s = np.concatenate(([0.0], np.cumsum(_segment_lengths(points, closed=False))))
    k = np.gradient(theta, s) * float(orientation)
    flags = (False, False) if closed else _boundary_flags(density, points)
    return DiscreteCurve(
        points=points,
        normals=normals,
        curvature=k,
        weights=_trapezoid_weights(density, points, closed),
        closed=closed,
        boundary_start=flags[0],
        boundary_end=flags[1],
    )


def f_mean_curvature(density: Density, curve: DiscreteCurve, i: int | None = None):
    """H_f = k − ⟨∇ψ, N⟩ at node i, or at every node when i is None."""
    _require_planar(density)
    if i is None:
        grad = log_density_gradient(density, curve.points)
        return curve.curvature - np.sum(grad * curve.normals, axis=-1)
    grad = log_density_gradient(density, curve.points[i])
    return float(curve.curvature[i] - np.dot(grad, curve.normals[i]))


def _polyline_weighted_length(density: Density, pts: np.ndarray, order: int) -> float:
    x, w = np.polynomial.legendre.leggauss(order)
    lam = 0.5 * (x + 1.0)
    p0 = pts[:-1]
    seg = pts[1:] - p0
    ell = np.hypot(seg[:, 0], seg[:, 1])
    nodes = p0[:, None, :] + lam[None, :, None] * seg[:, None, :]
    f = np.exp(log_density(density, nodes))
    return float(np.sum(0.5 * ell * (f @ w)))


def curve_weighted_length(density: Density, curve: DiscreteCurve, order: int = 12) -> float:
    """P_f of the polyline: per-segment Gauss-Legendre quadrature of f.

    Exact for the polyline itself up to the quadrature order, so straight
    chords incur no discretization error beyond the GL remainder.
    """
    _require_planar(density)
    pts = curve.points
    if curve.closed:
        pts = np.vstack([pts, pts[:1]])
    return _polyline_weighted_length(density, pts, order)


# ---------------------------------------------------------------------------
# constant f-mean-curvature shooting


def _shoot_rhs(density: Density, target: float, state: np.ndarray) -> np.ndarray:
    x, t, theta = state
    normal = np.array([-math.sin(theta), math.cos(theta)])
    grad = log_density_gradient(density, np.array([x, t]))
    return np.array([math.cos(theta), math.sin(theta), target + float(np.dot(grad, normal))])


def _rk4_step(density: Density, target: float, state: np.ndarray, h: float) -> np.ndarray:
    k1 = _shoot_rhs(density, target, state)
    k2 = _shoot_rhs(density, target, state + 0.5 * h * k1)
    k3 = _shoot_rhs(density, target, state + 0.5 * h * k2)
    k4 = _shoot_rhs(density, target, state + h * k3)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def cmc_shoot(
    density: Density,
    target: float,
    start,
    angle: float,
    step: float = 1e-3,
    max_length: float = 2.0,
) -> DiscreteCurve:
    """Integrate the curve with prescribed H_f from a point and direction.

    The tangent angle obeys θ′ = k(p, θ) = target + ⟨∇ψ(p), N(θ)⟩ with
    N(θ) = (−sin θ, cos θ), integrated by classical RK4 at fixed
    arclength step.  The march stops at max_length or on reaching a slab
    wall, in which case the final step is shortened by bisection to land
    on the wall and the endpoint is flagged.
    """
    _require_planar(density)
    a, b = density.slab
    x0, t0 = float(start[0]), float(start[1])
    if not (a < t0 < b):
        raise DomainError("shooting must start strictly inside the slab")
    if step <= 0.0 or max_length <= step:
        raise DomainError("need 0 < step < max_length")
    n_steps = int(round(max_length / step))
    if n_steps > 5_000_000:
        raise DomainError("step too small for the requested length")

    states = [np.array([x0, t0, float(angle)])]
    hit_wall = False
    for _ in range(n_steps):
        nxt = _rk4_step(density, target, states[-1], step)
        if a < nxt[1] < b:
            states.append(nxt)
            continue
        # shorten the final step to land on the wall; if the landing
        # fraction is below 1/2, restart it from the previous node so the
        # last segment stays within the [h/2, 2h] spacing contract
        wall = a if nxt[1] <= a else b
        base = states[-1]
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            tm = _rk4_step(density, target, base, mid * step)[1]
            if (tm - wall) * (base[1] - wall) > 0.0:
                lo = mid
            else:
                hi = mid
        frac = 0.5 * (lo + hi)
        if frac < 0.5 and len(states) >= 2:
            states.pop()
            base = states[-1]
            lo, hi = 1.0, 2.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                tm = _rk4_step(density, target, base, mid * step)[1]
                if (tm - wall) * (base[1] - wall) > 0.0:
                    lo = mid
                else:
                    hi = mid
            frac = 0.5 * (lo + hi)
        landed = _rk4_step(density, target, base, frac * step)
        landed[1] = wall
        states.append(landed)
        hit_wall = True
        break

    if len(states) < 3:
        raise GeometryError("curve left the slab before 3 nodes were laid down")
    arr = np.array(states)
    points = arr[:, :2]
    theta = arr[:, 2]
    normals = np.stack((-np.sin(theta), np.cos(theta)), axis=-1)
    grad = log_density_gradient(density, points)
    k = target + np.sum(grad * normals, axis=-1)
    return DiscreteCurve(
        points=points,
        normals=normals,
        curvature=k,
        weights=_trapezoid_weights(density, points, closed=False),
        boundary_start=False,
        boundary_end=hit_wall,
    )


# ---------------------------------------------------------------------------
# Jacobi identity and index forms


def _spline_derivatives(curve: DiscreteCurve, u: np.ndarray):
    """(u′, u″) at the nodes from a cubic spline in arclength."""
    s = curve.arclength()
    if curve.closed:
        gap = curve.points[0] - curve.points[-1]
        s_ext = np.append(s, s[-1] + math.hypot(gap[0], gap[1]))
        u_ext = np.append(u, u[0])
        sp = CubicSpline(s_ext, u_ext, bc_type="periodic")
    else:
        sp = CubicSpline(s, u)
    return sp(s, 1), sp(s, 2)


def _tangential_gradient_log_density(density: Density, curve: DiscreteCurve) -> np.ndarray:
    grad = log_density_gradient(density, curve.points)
    return np.sum(grad * curve.tangents(), axis=-1)


def jacobi_residual(density: Density, curve: DiscreteCurve, eta) -> float:
    """Max interior residual of L_f h = 2c h for h = ⟨η, N⟩.

    Horizontal translations preserve the weight up to the Gaussian
    factor, which makes h an eigenfunction of the Jacobi operator
    L_f = Δ_{Σ,f} + Ric_f(N,N) + k² with eigenvalue 2c on curves of
    constant f-mean curvature.  Derivatives of h use second-order
    differences in arclength, so the residual decays like O(h²).
    """
    _require_planar(density)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (2,) or abs(math.hypot(eta[0], eta[1]) - 1.0) > 1e-12 or abs(eta[1]) > 1e-12:
        raise DomainError("eta must be a horizontal unit vector")
    hf = f_mean_curvature(density, curve)
    spread = float(np.max(hf) - np.min(hf))
    if spread > 1e-6 * (1.0 + float(np.max(np.abs(hf)))):
        raise ConsistencyError(
            f"curve does not have constant f-mean curvature (spread {spread:.3e})"
        )
    s = curve.arclength()
    h = np.sum(eta * curve.normals, axis=-1)
    # second-order stencils on a possibly nonuniform grid
    s0, s1, s2 = s[:-2], s[1:-1], s[2:]
    h0, h1, h2 = h[:-2], h[1:-1], h[2:]
    dl, dr = s1 - s0, s2 - s1
    dh = (h2 - h1) / dr * (dl / (dl + dr)) + (h1 - h0) / dl * (dr / (dl + dr))
    d2h = 2.0 * ((h2 - h1) / dr - (h1 - h0) / dl) / (dl + dr)
    psi_t = _tangential_gradient_log_density(density, curve)[1:-1]
    ric = bakry_emery_curvature(density, curve.points[1:-1], curve.normals[1:-1])
    k = curve.curvature[1:-1]
    residual = d2h + psi_t * dh + (ric + k * k) * h1 - 2.0 * density.c * h1
    return float(np.max(np.abs(residual)))


@dataclass(frozen=True)
class IndexFormReport:
    """Value of a second-variation form with its quadrature diagnostics."""

    value: float
    quadrature_error: float
    boundary_term: float


def index_form(density: Density, curve: DiscreteCurve, u, v=None) -> IndexFormReport:
    """I_f(u,v) = ∫ u′v′ − (Ric_f(N,N) + k²) u v  da_f.

    Trapezoidal quadrature in the stored da_f weights; derivatives from
    cubic splines in arclength.  Slab walls are totally geodesic, so the
    boundary contribution is identically zero here.  The error estimate
    is a Richardson difference against the half-resolution grid.
    """
    _require_planar(density)
    u = np.asarray(u, dtype=float)
    v = u if v is None else np.asarray(v, dtype=float)
    if u.shape != (curve.n_nodes,) or v.shape != (curve.n_nodes,):
        raise GeometryError("test functions must be sampled at the curve nodes")
    du, _ = _spline_derivatives(curve, u)
    dv, _ = (du, None) if v is u else _spline_derivatives(curve, v)
    ric = bakry_emery_curvature(density, curve.points, curve.normals)
    integrand = du * dv - (ric + curve.curvature**2) * u * v
    value = float(np.sum(integrand * curve.weights))
    coarse_pts = curve.points[::2]
    coarse_w = _trapezoid_weights(density, coarse_pts, curve.closed)
    coarse = float(np.sum(integrand[::2] * coarse_w))
    return IndexFormReport(value=value, quadrature_error=abs(value - coarse) / 3.0, boundary_term=0.0)


def q_form(density: Density, curve: DiscreteCurve, u) -> IndexFormReport:
    """Q_f(u,u) = −∫ u L_f(u) da_f − Σ_{∂Σ} u (∂u/∂ν) f.

    L_f(u) = u″ + ⟨∇ψ, T⟩ u′ + (Ric_f(N,N) + k²) u along the curve, with
    spline derivatives; ν is the outward conormal (−T at the start node,
    +T at the end node) and the 0-dimensional boundary measure is f at
    the endpoint.  Closed curves have no boundary term.  Agrees with
    index_form up to O(h²) for smooth u, exactly in the limit.
    """
    _require_planar(density)
    u = np.asarray(u, dtype=float)
    if u.shape != (curve.n_nodes,):
        raise GeometryError("test function must be sampled at the curve nodes")
    du, d2u = _spline_derivatives(curve, u)
    psi_t = _tangential_gradient_log_density(density, curve)
    ric = bakry_emery_curvature(density, curve.points, curve.normals)
    lf_u = d2u + psi_t * du + (ric + curve.curvature**2) * u
    interior = -float(np.sum(u * lf_u * curve.weights))
    if curve.closed:
        boundary = 0.0
    else:
        f_ends = np.exp(log_density(density, curve.points[[0, -1]]))
        boundary = -(u[0] * (-du[0]) * f_ends[0] + u[-1] * du[-1] * f_ends[1])
    coarse_pts = curve.points[::2]
    coarse_w = _trapezoid_weights(density, coarse_pts, curve.closed)
    coarse = -float(np.sum((u * lf_u)[::2] * coarse_w))
    return IndexFormReport(
        value=interior + boundary,
        quadrature_error=abs(interior - coarse) / 3.0,
        boundary_term=boundary,
    )


@dataclass(frozen=True)
class TranslationTestFunction:
    """Mean-zero variation u = α + ⟨η, N⟩ induced by a translation η."""

    u: np.ndarray
    alpha: float
    degenerate: bool


def translation_test_function(density: Density, curve: DiscreteCurve, eta) -> TranslationTestFunction:
    """u = α + h with h = ⟨η, N⟩ and α = −(∫h da_f)/A_f(Σ).

    The constant α makes ∫ u da_f = 0 exactly, the volume-preserving
    normal speed of a translated-and-rescaled deformation.  When h ≡ 0
    (normal everywhere orthogonal to η) the construction degenerates and
    h itself is returned with the flag set.
    """
    _require_planar(density)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (2,):
        raise DomainError("eta must be a planar vector")
    area = curve.weighted_area()
    if not area > 0.0:
        raise GeometryError("curve carries no weighted area")
    h = np.sum(eta * curve.normals, axis=-1)
    if float(np.max(np.abs(h))) < 1e-14:
        return TranslationTestFunction(u=h, alpha=0.0, degenerate=True)
    alpha = -float(np.sum(h * curve.weights)) / area
    u = alpha + h
    if abs(float(np.sum(u * curve.weights))) > 1e-10 * area:
        raise ConsistencyError("translation test function failed to be mean-zero")
    return TranslationTestFunction(u=u, alpha=alpha, degenerate=False)


@dataclass(frozen=True)
class StabilityVerdict:
    """Stability of a boundary-parallel half-space at height t0."""

    verdict: str
    t0: float
    weight_second_derivative: float
    witness_value: float


def parallel_halfspace_stability(density: Density, t0: float, n: int = 4001) -> StabilityVerdict:
    """Classify {t < t0} by the sign of ω″(t0), with an index-form witness.

    The half-space is weighted stable iff ω″(t0) ≥ 0.  The witness is
    I_f(u,u) for the coordinate function u = x on the horizontal line
    t = t0, whose exact value is ω″(t0) e^{ω(t0)−c t0²} √(π/c) / (2c):
    the Gaussian Poincaré part of the form vanishes identically on
    coordinate functions, leaving the pure ω″ moment.
    """
    _require_planar(density)
    a, b = density.slab
    if not (a < t0 < b):
        raise DomainError("parallel boundary must sit strictly inside the slab")
    d2 = float(np.asarray(density.weight.deriv2(t0)))
    line = horizontal_segment(density, t0, n=n)
    witness = index_form(density, line, line.points[:, 0]).value
    return StabilityVerdict(
        verdict="stable" if d2 >= 0.0 else "unstable",
        t0=float(t0),
        weight_second_derivative=d2,
        witness_value=witness,
    )


def curve_csv(curve: DiscreteCurve) -> str:
    """Serialize to CSV with header x,t,Nx,Nt,k (shortest round-trip floats)."""
    lines = ["x,t,Nx,Nt,k"]
    for p, nv, k in zip(curve.points, curve.normals, curve.curvature):
        cells = (float(p[0]), float(p[1]), float(nv[0]), float(nv[1]), float(k))
        lines.append(",".join(repr(v) for v in cells))
    return "\n".join(lines) + "\n"
