"""Perturbed balls: normalization, exact geometry, coefficients, the field v."""

import json
import math

import numpy as np
import pytest
from scipy import integrate

from fkd.constants import dimension_params
from fkd.errors import DegenerateDomainError
from fkd.perturbation import (
    HarmonicProfile,
    Mode,
    analytic_deficits,
    boundary_radial_derivative,
    deficit_coeffs,
    first_variation,
    geometry_exact,
    normalize_volume,
    poisson_residual,
    profile_from_json,
    profile_to_json,
    second_variation,
    v_field,
)
from fkd import q_value


def zonal_or_cos(dim):
    return "cos" if dim == 2 else "zonal"


class TestProfileValidation:
    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            Mode(0, 1.0, "cos")

    def test_phase_vocabulary(self):
        with pytest.raises(ValueError):
            Mode(2, 1.0, "tan")
        with pytest.raises(ValueError):
            HarmonicProfile(3, (Mode(2, 1.0, "cos"),))
        with pytest.raises(ValueError):
            HarmonicProfile(2, (Mode(2, 1.0, "zonal"),))

    def test_duplicate_mode_rejected(self):
        with pytest.raises(ValueError):
            HarmonicProfile(2, (Mode(2, 1.0, "cos"), Mode(2, 0.3, "cos")))

    def test_negation(self):
        p = HarmonicProfile.from_modes(2, [(2, 1.0, "cos"), (3, -0.5, "sin")])
        assert [m.a for m in p.negated().modes] == [-1.0, 0.5]

    @pytest.mark.parametrize("dim", (2, 3))
    def test_harmonics_are_l2_normalized(self, dim):
        for k in (1, 2, 3, 5):
            p = HarmonicProfile.single(dim, k)
            if dim == 2:
                th = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
                norm = 2.0 * math.pi * np.mean(p.velocity(th) ** 2)
            else:
                u, w = np.polynomial.legendre.leggauss(128)
                norm = 2.0 * math.pi * np.sum(w * p.velocity(np.arccos(u)) ** 2)
            assert norm == pytest.approx(1.0, rel=1e-12)


class TestNormalizeVolume:
    def test_identity_perturbation(self):
        ball = normalize_volume(HarmonicProfile(2, ()), 0.37)
        assert ball.c == 1.0
        per, vol, dp = geometry_exact(ball)
        assert (per, vol) == pytest.approx((2 * math.pi, math.pi), rel=1e-14)
        assert abs(dp) < 1e-13

    def test_scaling_against_independent_quadrature(self):
        # oracle: polar area integral int rho^2/2 via scipy quadrature
        prof = HarmonicProfile.single(2, 2)
        t = 0.1
        area, _ = integrate.quad(
            lambda th: 0.5 * (1.0 + t * math.cos(2 * th) / math.sqrt(math.pi)) ** 2,
            0.0, 2.0 * math.pi, limit=200)
        ball = normalize_volume(prof, t)
        assert ball.c == pytest.approx(math.sqrt(math.pi / area), rel=1e-12)
        assert ball.c < 1.0

    @pytest.mark.parametrize("dim", (2, 3))
    def test_volume_conserved_exactly(self, dim):
        prof = HarmonicProfile.from_modes(
            dim, [(2, 1.0, zonal_or_cos(dim)), (4, 0.5, zonal_or_cos(dim))])
        omega = dimension_params(dim).omega_N
        for t in (0.05, 0.2):
            _, vol, _ = geometry_exact(normalize_volume(prof, t))
            assert abs(vol - omega) <= 1e-12 * omega

    def test_negative_t_rejected(self):
        with pytest.raises(ValueError):
            normalize_volume(HarmonicProfile.single(2, 2), -0.1)

    def test_star_shape_guard(self):
        prof = HarmonicProfile.single(2, 2)
        with pytest.raises(ValueError, match="star-shape"):
            normalize_volume(prof, 0.95)  # t max|V| = 0.536

    def test_degenerate_domain(self):
        prof = HarmonicProfile.single(2, 2, a=4.0)
        with pytest.raises(DegenerateDomainError):
            normalize_volume(prof, 0.5)  # min(1 + tV) < 0

    @pytest.mark.parametrize("dim", (2, 3))
    def test_acceleration_integral_matches_equality_family(self, dim):
        # unit-norm V: int A dsigma = (1 - N); extract A from c(t) = 1 + c2 t^2 + ...
        prof = HarmonicProfile.single(dim, 2)
        n_omega = dim * dimension_params(dim).omega_N

        def c2(t):
            return (normalize_volume(prof, t).c - 1.0) / t**2

        # one Richardson step in t kills the odd t^3 contamination
        est = 2.0 * c2(5e-3) - c2(1e-2)
        assert 2.0 * est * n_omega == pytest.approx(1.0 - dim, rel=1e-5)


class TestGeometryExact:
    def test_unsupported_dimension(self):
        prof = HarmonicProfile.single(4, 2)
        with pytest.raises(ValueError):
            geometry_exact(normalize_volume(prof, 0.01))

    @pytest.mark.parametrize("dim", (2, 3))
    def test_quadratic_coefficient_reached_at_cubic_rate(self, dim):
        prof = HarmonicProfile.single(dim, 2)
        c_p, _ = deficit_coeffs(prof)
        gaps = {}
        for t in (0.04, 0.02, 0.01):
            _, _, dp = geometry_exact(normalize_volume(prof, t))
            gaps[t] = dp - c_p * t * t
        # |gap| <= K t^3 with K stable (non-increasing) under t-halving
        ks = [abs(gaps[t]) / t**3 for t in (0.04, 0.02, 0.01)]
        assert ks[0] < 0.05
        assert ks[1] <= 1.1 * ks[0] + 1e-12
        assert ks[2] <= 1.1 * ks[1] + 1e-12

    def test_mode2_small_t_gap(self):
        prof = HarmonicProfile.single(2, 2)
        c_p, _ = deficit_coeffs(prof)
        _, _, dp = geometry_exact(normalize_volume(prof, 0.05))
        assert abs(dp - c_p * 0.05**2) <= 0.05 * c_p * 0.05**2

    def test_translation_mode_is_quadratically_neutral(self):
        prof = HarmonicProfile.single(2, 1)
        ratios = []
        for t in (0.04, 0.02, 0.01):
            _, _, dp = geometry_exact(normalize_volume(prof, t))
            ratios.append(dp / t**2)
        assert ratios[0] < 1e-4
        assert ratios[2] < ratios[1] < ratios[0]  # vanishes as t -> 0


class TestDeficitCoeffs:
    @pytest.mark.parametrize("dim", range(2, 11))
    def test_single_mode_ratio_equals_q(self, dim):
        for k in range(2, 21):
            c_p, c_l = deficit_coeffs(HarmonicProfile.single(dim, k))
            assert c_p / c_l == pytest.approx(q_value(dim, k), rel=1e-10)

    def test_translation_mode_exact_zero(self):
        c_p, c_l = deficit_coeffs(HarmonicProfile.single(5, 1))
        assert c_p == 0.0 and c_l == 0.0

    def test_mode2_dim2_closed_form(self):
        c_p, _ = deficit_coeffs(HarmonicProfile.single(2, 2))
        assert c_p == pytest.approx(3.0 / (4.0 * math.pi), rel=1e-12)

    def test_superposition_over_orthogonal_modes(self):
        a, b = HarmonicProfile.single(2, 2), HarmonicProfile.single(2, 5, a=0.7)
        both = HarmonicProfile.from_modes(2, [(2, 1.0, "cos"), (5, 0.7, "cos")])
        pa, la = deficit_coeffs(a)
        pb, lb = deficit_coeffs(b)
        pc, lc = deficit_coeffs(both)
        assert pc == pytest.approx(pa + pb, rel=1e-12)
        assert lc == pytest.approx(la + lb, rel=1e-12)

    def test_cos_sin_energies_add(self):
        mixed = HarmonicProfile.from_modes(2, [(2, 0.6, "cos"), (2, 0.8, "sin")])
        c_p, c_l = deficit_coeffs(mixed)
        unit = deficit_coeffs(HarmonicProfile.single(2, 2))
        assert c_p == pytest.approx(unit[0], rel=1e-12)  # 0.6^2 + 0.8^2 = 1
        assert c_l == pytest.approx(unit[1], rel=1e-12)

    def test_analytic_deficit_pair(self):
        pair = analytic_deficits(HarmonicProfile.single(2, 2), 0.05)
        assert pair.ratio == pytest.approx(q_value(2, 2), rel=1e-12)
        assert pair.c_P >= 0.0 and pair.c_lambda > 0.0


class TestVField:
    def test_boundary_trace(self):
        prof = HarmonicProfile.from_modes(2, [(2, 1.0, "cos"), (3, 0.4, "sin")])
        g = dimension_params(2).G_N
        xi = np.linspace(0.0, 2.0 * math.pi, 37)
        np.testing.assert_allclose(v_field(prof, 1.0, xi), g * prof.velocity(xi), atol=1e-14)

    def test_empty_profile(self):
        assert np.all(v_field(HarmonicProfile(2, ()), 0.5, 0.3) == 0.0)

    def test_center_limit(self):
        prof = HarmonicProfile.single(2, 2)
        assert np.all(v_field(prof, 0.0, np.linspace(0, 6, 7)) == 0.0)

    def test_radius_domain_guard(self):
        with pytest.raises(ValueError):
            v_field(HarmonicProfile.single(2, 2), 1.2, 0.0)

    @pytest.mark.parametrize("dim", (2, 3))
    def test_boundary_slope_against_difference_oracle(self, dim):
        prof = HarmonicProfile.single(dim, 2, a=0.9)
        span = 2.0 * math.pi if dim == 2 else math.pi
        xi = np.linspace(0.0, span, 17)
        h = 1e-3
        # one-sided 5-point derivative staying inside r <= 1
        f = [v_field(prof, 1.0 - i * h, xi) for i in range(5)]
        fd = (25 * f[0] - 48 * f[1] + 36 * f[2] - 16 * f[3] + 3 * f[4]) / (12 * h)
        np.testing.assert_allclose(fd, boundary_radial_derivative(prof, xi),
                                   rtol=1e-8, atol=1e-10)


class TestPoissonResidual:
    PROFILES = ([(2, 1.0)], [(3, 1.0)], [(2, 1.0), (4, 0.5)])

    @pytest.mark.parametrize("dim", (2, 3))
    @pytest.mark.parametrize("spec_modes", PROFILES)
    def test_residual_below_difference_floor(self, dim, spec_modes):
        prof = HarmonicProfile.from_modes(
            dim, [(k, a, zonal_or_cos(dim)) for k, a in spec_modes])
        grid = np.linspace(0.05, 1.0, 400)
        res = poisson_residual(prof, grid)
        span = 2.0 * math.pi if dim == 2 else math.pi
        xi = np.linspace(0.0, span, 96, endpoint=(dim == 3))
        vmax = float(np.max(np.abs(v_field(prof, grid[:, None], xi[None, :]))))
        assert res <= 1e-6 * vmax

    def test_empty_profile_zero(self):
        assert poisson_residual(HarmonicProfile(2, ())) == 0.0

    def test_fourth_order_decay(self):
        prof = HarmonicProfile.single(2, 2)
        res = [poisson_residual(prof, np.linspace(0.05, 1.0, n)) for n in (49, 97, 193)]
        orders = [math.log2(res[i] / res[i + 1]) for i in range(2)]
        assert min(orders) >= 3.8

    def test_nonuniform_grid_rejected(self):
        with pytest.raises(ValueError):
            poisson_residual(HarmonicProfile.single(2, 2), np.array([0.1, 0.2, 0.5]))


class TestSecondVariation:
    def test_empty_profile(self):
        assert second_variation(HarmonicProfile(2, ())) == 0.0

    @pytest.mark.parametrize("dim", (2, 3, 6))
    def test_consistent_with_deficit_coefficient(self, dim):
        prof = HarmonicProfile.from_modes(
            dim, [(2, 1.0, zonal_or_cos(dim)), (4, 0.3, zonal_or_cos(dim))])
        _, c_l = deficit_coeffs(prof)
        p = dimension_params(dim)
        assert second_variation(prof) == pytest.approx(2.0 * p.z_N**2 * c_l, rel=1e-10)

    @pytest.mark.parametrize("dim", range(2, 11))
    def test_translation_bracket_vanishes(self, dim):
        # k = 1: the bracket k - z rho + N - 1 reduces to N - z (N/z) = 0
        from fkd.bessel import HalfIntOrder, bessel_ratio_cf

        p = dimension_params(dim)
        rho1 = bessel_ratio_cf(HalfIntOrder.for_mode(dim, 1), p.z_N)
        assert 1.0 - p.z_N * rho1 + dim - 1.0 == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("dim", (2, 3))
    def test_first_variation_vanishes(self, dim):
        prof = HarmonicProfile.from_modes(
            dim, [(1, 0.8, zonal_or_cos(dim)), (3, 0.5, zonal_or_cos(dim))])
        assert abs(first_variation(prof)) < 1e-12


class TestWireFormat:
    def test_round_trip(self):
        prof = HarmonicProfile.from_modes(2, [(2, 1.0, "cos"), (3, -0.25, "sin")])
        assert profile_from_json(profile_to_json(prof)) == prof

    def test_schema_keys(self):
        obj = profile_to_json(HarmonicProfile.single(3, 2))
        assert obj == {"dim": 3, "modes": [{"k": 2, "a": 1.0, "phase": "zonal"}]}
        assert profile_from_json(json.dumps(obj)).dim == 3

    def test_malformed_rejected(self):
        with pytest.raises(ValueError):
            profile_from_json({"modes": []})
        with pytest.raises(ValueError):
            profile_from_json({"dim": 2, "modes": [{"k": 2}]})
