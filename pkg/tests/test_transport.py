"""Monotone rearrangement: construction, contraction, mass and perimeter."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.interpolate import CubicSpline

from isoflow import (
    AffineWeight,
    ConsistencyError,
    Density,
    DomainError,
    LogPowerWeight,
    QuadraticWeight,
    ZeroWeight,
)
from isoflow.geometry import polyline_curve, straight_segment, vertical_segment
from isoflow.transport import (
    TransportMap,
    build_transport,
    check_contraction,
    pushforward_check,
    transport_csv,
    transported_perimeter_bound,
)

INF = math.inf

GAUSS_LINE = Density(ZeroWeight(), 0.5, 2, (-INF, INF))


def resample_by_arclength(points: np.ndarray, n: int) -> np.ndarray:
    seg = np.hypot(*np.diff(points, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    su = np.linspace(0.0, s[-1], n)
    return np.stack(
        [np.interp(su, s, points[:, 0]), np.interp(su, s, points[:, 1])], axis=-1
    )


class TestBuildTransport:
    def test_identity_for_pure_gaussian(self):
        m = build_transport(GAUSS_LINE)
        assert np.max(np.abs(m.rho - m.s)) <= 1e-12
        assert np.max(np.abs(m.drho - 1.0)) <= 1e-12

    def test_affine_weight_is_unit_translation(self):
        """ω = t completes the square to a Gaussian shifted by a0/(2c) = 1."""
        d = Density(AffineWeight(1.0, 0.0), 0.5, 2, (-INF, INF))
        m = build_transport(d)
        assert np.max(np.abs(m.rho - (m.s + 1.0))) <= 1e-10
        assert np.max(np.abs(m.drho - 1.0)) <= 1e-8

    def test_quadratic_weight_is_pure_scaling(self):
        """ω = −t² sharpens c to c + κ, so ρ′ ≡ √(c/(c+κ)) = 1/√3."""
        d = Density(QuadraticWeight(1.0, 0.0, 0.0), 0.5, 2, (-INF, INF))
        m = build_transport(d)
        assert_allclose(m.drho, 1.0 / math.sqrt(3.0), rtol=1e-12)

    def test_monotone_and_identity_residual(self):
        d = Density(LogPowerWeight(2.0), 0.5, 2, (0.0, INF))
        m = build_transport(d)
        assert np.all(np.diff(m.rho) >= 0.0)
        w = d.weight
        lhs = m.alpha * np.exp(-0.5 * m.s**2)
        rhs = m.beta * np.exp(w.value(m.rho) - 0.5 * m.rho**2) * m.drho
        assert np.max(np.abs(lhs - rhs)) <= 1e-8 * m.alpha

    def test_nonconcave_weight_rejected(self):
        d = Density(QuadraticWeight(-0.3, 0.0, 0.0), 0.5, 2, (-INF, INF))
        with pytest.raises(ConsistencyError):
            build_transport(d)

    def test_extreme_quantiles_clipped_with_warning(self):
        grid = np.linspace(-12.0, 12.0, 101)
        with pytest.warns(UserWarning):
            m = build_transport(GAUSS_LINE, s_grid=grid)
        assert m.n_clipped > 0
        assert np.all(np.isfinite(m.rho))

    def test_hand_built_map_must_satisfy_identity(self):
        s = np.linspace(-1.0, 1.0, 9)
        with pytest.raises(ConsistencyError):
            TransportMap(
                source=GAUSS_LINE,
                target=GAUSS_LINE,
                s=s,
                rho=s.copy(),
                drho=np.full(9, 2.0),
                alpha=1.0 / math.sqrt(2.0 * math.pi),
                beta=1.0 / math.sqrt(2.0 * math.pi),
            )


class TestCheckContraction:
    def test_identity_map_max_exactly_one(self):
        rep = check_contraction(build_transport(GAUSS_LINE))
        assert rep.certified
        assert_allclose(rep.max_derivative, 1.0, rtol=1e-12)

    def test_quadratic_scaling_value(self):
        d = Density(QuadraticWeight(1.0, 0.0, 0.0), 0.5, 2, (-INF, INF))
        rep = check_contraction(build_transport(d))
        assert rep.certified
        assert_allclose(rep.max_derivative, 1.0 / math.sqrt(3.0), rtol=1e-12)

    def test_log_power_certified(self):
        d = Density(LogPowerWeight(2.0), 0.5, 2, (0.0, INF))
        rep = check_contraction(build_transport(d))
        assert rep.certified
        assert rep.max_derivative <= 1.0 + 1e-6

    def test_nonconcave_diagnostic_violation(self):
        """κ < 0 flattens c to c + κ < c, stretching by 1/√(1+κ/c) > 1."""
        d = Density(QuadraticWeight(-0.3, 0.0, 0.0), 0.5, 2, (-INF, INF))
        rep = check_contraction(build_transport(d, require_concave=False))
        assert not rep.certified
        assert_allclose(rep.max_derivative, 1.0 / math.sqrt(0.4), rtol=1e-10)

    @settings(deadline=None, max_examples=10)
    @given(
        kappa=st.floats(0.0, 4.0),
        a0=st.floats(-1.0, 1.0),
        c=st.floats(0.25, 2.0),
    )
    def test_concave_weights_always_contract(self, kappa, a0, c):
        d = Density(QuadraticWeight(kappa, a0, 0.0), c, 2, (-INF, INF))
        rep = check_contraction(build_transport(d, grid_size=501))
        assert rep.certified


class TestPushforwardCheck:
    def test_full_interval_total_mass(self):
        d = Density(LogPowerWeight(1.0), 0.5, 2, (0.0, INF))
        m = build_transport(d)
        rep = pushforward_check(m, intervals=[[0.0, INF]])
        assert rep.max_residual <= 1e-14

    def test_median_preserved_for_symmetric_data(self):
        d = Density(QuadraticWeight(1.0, 0.0, 0.0), 0.5, 2, (-INF, INF))
        m = build_transport(d)
        mid = float(m.rho[m.s.size // 2])
        assert abs(mid) <= 1e-12
        rep = pushforward_check(m, intervals=[[-INF if False else -8.0, 0.0]])
        assert rep.max_residual <= 1e-10

    def test_random_intervals_small_residual(self):
        d = Density(LogPowerWeight(1.0), 0.5, 2, (0.0, INF))
        m = build_transport(d)
        rep = pushforward_check(m, n_intervals=50, seed=3)
        assert rep.residuals.shape == (50,)
        assert rep.max_residual <= 1e-8

    def test_reversed_interval_rejected(self):
        m = build_transport(GAUSS_LINE)
        with pytest.raises(DomainError):
            pushforward_check(m, intervals=[[1.0, -1.0]])


class TestPerimeterBound:
    def test_vertical_chord_is_equality(self):
        d = Density(QuadraticWeight(1.0, 0.3, 0.0), 0.5, 2, (-1.0, 1.0))
        m = build_transport(d)
        vl = vertical_segment(d, 0.4, n=201)
        rep = transported_perimeter_bound(m, vl)
        assert abs(rep.slack) <= 1e-8
        assert rep.weighted_perimeter > 0.0

    def test_horizontal_segment_strict_slack(self):
        d = Density(QuadraticWeight(1.0, 0.3, 0.0), 0.5, 2, (-1.0, 1.0))
        m = build_transport(d)
        hz = straight_segment(d, (-1.0, 0.2), (1.0, 0.2), n=401)
        assert transported_perimeter_bound(m, hz).slack > 1e-3

    def test_identity_map_zero_slack_any_curve(self):
        m = build_transport(GAUSS_LINE)
        th = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
        pts = np.stack([0.3 + 0.5 * np.cos(th), 0.5 * np.sin(th)], axis=-1)
        circ = polyline_curve(GAUSS_LINE, pts, closed=True)
        assert abs(transported_perimeter_bound(m, circ).slack) <= 1e-12

    def test_randomized_spline_curves_nonnegative_slack(self):
        d = Density(QuadraticWeight(1.0, 0.3, 0.0), 0.5, 2, (-1.0, 1.0))
        m = build_transport(d)
        rng = np.random.default_rng(11)
        worst = INF
        for _ in range(20):
            knots_x = rng.uniform(-1.5, 1.5, 5)
            knots_t = np.linspace(-0.95, 0.95, 5)
            sp = CubicSpline(knots_t, knots_x)
            dense_t = np.linspace(-0.95, 0.95, 4000)
            pts = resample_by_arclength(np.stack([sp(dense_t), dense_t], axis=-1), 400)
            curve = polyline_curve(d, pts)
            worst = min(worst, transported_perimeter_bound(m, curve).slack)
        assert worst >= -1e-6

    def test_curve_outside_slab_rejected(self):
        d = Density(QuadraticWeight(1.0, 0.0, 0.0), 0.5, 2, (-1.0, 1.0))
        m = build_transport(d)
        wide = Density(QuadraticWeight(1.0, 0.0, 0.0), 0.5, 2, (-2.0, 2.0))
        bad = vertical_segment(wide, 0.0, n=101)
        with pytest.raises(DomainError):
            transported_perimeter_bound(m, bad)


class TestTransportCsv:
    def test_header_and_roundtrip(self):
        m = build_transport(GAUSS_LINE, grid_size=9)
        text = transport_csv(m)
        lines = text.strip().split("\n")
        assert lines[0] == "s,rho,drho"
        assert len(lines) == 10
        row = [float(x) for x in lines[1].split(",")]
        assert_allclose(row[0], m.s[0], rtol=0, atol=0)
        assert_allclose(row[1], m.rho[0], rtol=0, atol=0)
