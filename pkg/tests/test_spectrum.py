"""Weighted interval eigenproblem: calibration, certification, quotients."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import eigh_tridiagonal

from isoflow import (
    AffineWeight,
    ConsistencyError,
    Density,
    DomainError,
    LogPowerWeight,
    PiecewiseLinearWeight,
    QuadraticWeight,
    ZeroWeight,
)
from isoflow.spectrum import (
    build_spectral_problem,
    poincare_certify,
    rayleigh_quotient,
    spectral_gap_1d,
    spectrum_csv,
)

INF = math.inf

# frozen on first verified run: Neumann gap of e^{-t^2/2} dt on (0,1),
# cell-centered scheme at N=2000 (Richardson limit 10.4402028932)
SLAB_GAP_N2000 = 10.440200557405529


def random_concave_piecewise_linear(rng, lo=-1.0, hi=1.0, n_knots=6):
    knots = np.sort(np.concatenate([[lo, hi], rng.uniform(lo, hi, n_knots - 2)]))
    slopes = np.sort(rng.uniform(-2.0, 2.0, n_knots - 1))[::-1]
    values = np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
    return PiecewiseLinearWeight(tuple(knots), tuple(values))


class TestBuildSpectralProblem:
    def test_positivity_invariants(self):
        d = Density(LogPowerWeight(2.0), 0.5, 2, (0.0, INF))
        p = build_spectral_problem(d, n_cells=500)
        assert np.all(p.masses > 0.0)
        assert np.all(p.conductances > 0.0)
        assert np.all(np.diff(p.nodes) > 0.0)
        assert p.interval[0] == 0.0 and math.isfinite(p.interval[1])

    def test_bounded_slab_not_truncated(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        p = build_spectral_problem(d, n_cells=100)
        assert p.interval == (0.0, 1.0)

    def test_minimum_size(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        with pytest.raises(DomainError):
            build_spectral_problem(d, n_cells=8)


class TestSpectralGap:
    @pytest.mark.parametrize("c", [0.25, 0.5, 1.0, 2.0])
    def test_gaussian_calibration(self, c):
        """Whole-line Gaussian gap equals 2c (within 0.5% at N=2000)."""
        d = Density(ZeroWeight(), c, 2, (-INF, INF))
        lam, _ = spectral_gap_1d(build_spectral_problem(d, n_cells=2000))
        assert abs(lam - 2.0 * c) <= 5e-3 * 2.0 * c

    def test_quadratic_weight_shifts_gap(self):
        """ω = −t² makes the measure Gaussian with c′ = 3/2, gap 2c′ = 3."""
        d = Density(QuadraticWeight(1.0, 0.0, 0.0), 0.5, 2, (-INF, INF))
        lam, _ = spectral_gap_1d(build_spectral_problem(d, n_cells=2000))
        assert abs(lam - 3.0) <= 5e-3 * 3.0

    def test_half_line_gaussian_gap(self):
        """Neumann gap on (0,∞) doubles to 4c (even Hermite extension)."""
        d = Density(ZeroWeight(), 0.5, 2, (0.0, INF))
        lam, _ = spectral_gap_1d(build_spectral_problem(d, n_cells=2000))
        assert_allclose(lam, 2.0, rtol=1e-6)

    def test_unit_slab_regression_value(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        lam, _ = spectral_gap_1d(build_spectral_problem(d, n_cells=2000))
        assert lam >= 1.0
        assert_allclose(lam, SLAB_GAP_N2000, rtol=1e-6)

    def test_monotone_refinement(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        lams = [
            spectral_gap_1d(build_spectral_problem(d, n_cells=n))[0]
            for n in (500, 1000, 2000)
        ]
        gaps = np.abs(np.diff(lams))
        assert gaps[1] < gaps[0]
        assert gaps[0] / gaps[1] >= 3.5

    def test_eigenvector_normalization(self):
        d = Density(QuadraticWeight(1.0, 0.3, 0.0), 0.5, 2, (-1.0, 2.0))
        p = build_spectral_problem(d, n_cells=800)
        lam, u = spectral_gap_1d(p)
        assert abs(np.sum(u * p.masses)) <= 1e-10
        assert_allclose(np.sum(u * u * p.masses), 1.0, rtol=1e-10)
        assert lam > 0.0


class TestRayleighQuotient:
    def test_coordinate_function_on_gaussian(self):
        """u = t is the first Hermite eigenfunction: quotient exactly 2c."""
        d = Density(ZeroWeight(), 0.5, 2, (-INF, INF))
        p = build_spectral_problem(d, n_cells=2000)
        assert_allclose(rayleigh_quotient(p, p.nodes.copy()), 1.0, rtol=1e-9)

    def test_eigenvector_reproduces_eigenvalue(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        p = build_spectral_problem(d, n_cells=1000)
        lam, u = spectral_gap_1d(p)
        assert_allclose(rayleigh_quotient(p, u), lam, rtol=1e-10)

    def test_variational_bound(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        p = build_spectral_problem(d, n_cells=1000)
        lam, _ = spectral_gap_1d(p)
        step = np.tanh(8.0 * (p.nodes - 0.5))
        assert rayleigh_quotient(p, step) >= lam - 1e-12

    def test_second_eigenvector_orders_above_gap(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        p = build_spectral_problem(d, n_cells=200)
        w, g = p.masses, p.conductances
        diag_k = np.zeros_like(w)
        diag_k[:-1] += g
        diag_k[1:] += g
        inv_sqrt = 1.0 / np.sqrt(w)
        vals, vecs = eigh_tridiagonal(
            diag_k * inv_sqrt**2, -g * inv_sqrt[:-1] * inv_sqrt[1:],
            select="i", select_range=(0, 2),
        )
        lam1, _ = spectral_gap_1d(p)
        u2 = vecs[:, 2] * inv_sqrt
        assert_allclose(rayleigh_quotient(p, u2), vals[2], rtol=1e-9)
        assert vals[2] >= lam1

    def test_constant_input_degenerate(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        p = build_spectral_problem(d, n_cells=100)
        with pytest.raises(DomainError):
            rayleigh_quotient(p, np.ones(p.n_cells))

    def test_shape_enforced(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        p = build_spectral_problem(d, n_cells=100)
        with pytest.raises(DomainError):
            rayleigh_quotient(p, np.ones(7))


class TestPoincareCertify:
    def test_gaussian_whole_line(self):
        d = Density(ZeroWeight(), 0.5, 2, (-INF, INF))
        cert = poincare_certify(d)
        assert cert.certified
        assert_allclose(cert.lambda_value, 1.0, rtol=1e-6)
        assert_allclose(cert.hyperplane_gap, 1.0, rtol=1e-6)
        assert cert.truncation_shift <= 1e-8

    def test_smooth_sweep_certified(self):
        cases = [
            Density(AffineWeight(1.0, 0.0), 0.5, 2, (0.0, 1.0)),
            Density(QuadraticWeight(1.0, 0.0, 0.0), 0.5, 2, (-1.0, 1.0)),
            Density(LogPowerWeight(2.0), 0.5, 2, (0.0, INF)),
        ]
        for d in cases:
            cert = poincare_certify(d)
            assert cert.certified, f"{d.weight} failed certification"
            assert cert.concave

    def test_randomized_concave_piecewise_linear(self):
        rng = np.random.default_rng(17)
        for _ in range(3):
            w = random_concave_piecewise_linear(rng)
            d = Density(w, 0.5, 2, (-1.0, 1.0))
            cert = poincare_certify(d)
            assert cert.certified
            assert cert.truncation_shift == 0.0

    def test_nonconcave_diagnostic_violation(self):
        """κ = −0.4 flattens the measure to c′ = 0.1: gap 0.2 < bound."""
        d = Density(QuadraticWeight(-0.4, 0.0, 0.0), 0.5, 2, (-INF, INF))
        cert = poincare_certify(d)
        assert not cert.certified
        assert not cert.concave
        assert_allclose(cert.lambda_value, 0.2, rtol=1e-6)


class TestSpectrumCsv:
    def test_header_and_roundtrip(self):
        d = Density(ZeroWeight(), 0.5, 2, (0.0, 1.0))
        p = build_spectral_problem(d, n_cells=16)
        _, u = spectral_gap_1d(p)
        text = spectrum_csv(p, u)
        lines = text.strip().split("\n")
        assert lines[0] == "t,w,u1"
        assert len(lines) == 17
        row = [float(x) for x in lines[1].split(",")]
        assert_allclose(row[0], p.nodes[0], rtol=0, atol=0)
