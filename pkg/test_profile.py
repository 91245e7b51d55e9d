"""
Tests for the stationary front: arrival point, anchor, shape, decay rates near
both ends, the bounded ratio and the endpoint quadrature.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from degenfront.exceptions import ConfigError, ProfileError
from degenfront.schemas.kinetics import KineticsPair
from degenfront.services.kinetics import eval_kinetics, potential_D
from degenfront.services.profile import (
    GridExtent,
    arrival_convergence,
    asymptotic_rates,
    level_position,
    ratio_bound_sup,
    shifted_profile,
    solve_profile,
)


def test_arrival_point(profile):
    assert abs(profile.omega0 - 3.0310673) <= 1e-6


def test_arrival_point_matches_direct_quadrature(kinetics, profile):
    # omega0 = int_0^(1/2) D / sqrt(-2 D_pot) dphi with phi = s^2
    def integrand(s):
        at = eval_kinetics(kinetics, s * s)
        return 2.0 * s * at.D / np.sqrt(-2.0 * potential_D(kinetics, s * s))

    omega0, _ = quad(integrand, 0.0, np.sqrt(0.5), epsabs=1e-12, epsrel=1e-12)
    assert abs(profile.omega0 - omega0) <= 1e-8


def test_degenerate_side_travel_distance(profile):
    travel = profile.omega0 - level_position(profile, 0.625)
    assert abs(travel - 3.8017) <= 1e-3


def test_arrival_point_does_not_depend_on_grid(kinetics, profile):
    coarse = solve_profile(kinetics, n_nodes=201)
    assert coarse.omega0 == pytest.approx(profile.omega0, abs=1e-12)


def test_anchor_and_grid(profile):
    assert abs(level_position(profile, 0.5)) <= 1e-10
    assert profile.n_nodes == 2001
    assert_allclose(1.0 - profile.phi[0], 1e-8, rtol=1e-6)
    assert_allclose(profile.x_nodes[-1], profile.omega0 + 1.0)
    assert_allclose(np.diff(profile.x_nodes), profile.h, rtol=1e-9)


def test_profile_shape(profile):
    assert np.all(np.diff(profile.phi) <= 0.0)
    assert np.all(profile.phi_x <= 0.0)
    beyond = profile.x_nodes >= profile.omega0
    assert np.all(profile.phi[beyond] == 0.0)
    assert np.all(profile.phi_x[beyond] == 0.0)
    assert np.all(profile.phi[~beyond] >= 0.0)
    assert np.count_nonzero(profile.support) >= np.count_nonzero(~beyond) - 1


def test_profile_arrays_are_read_only(profile):
    with pytest.raises(ValueError):
        profile.phi[0] = 0.0


def test_residuals_are_small(profile):
    stats = profile.residual_stats
    assert stats.first_order <= 1e-8
    assert stats.inversion <= 1e-8


def test_curvature_limits_at_arrival(profile):
    left, right = profile.phi_xx_at_omega0
    assert_allclose(left, 5.0 / 24.0)
    assert right == 0.0


def test_asymptotic_rates(profile):
    rates = asymptotic_rates(profile)
    assert_allclose(rates.eta, np.sqrt(3.0) / 4.0)
    assert_allclose(rates.a0, np.sqrt(5.0 / 12.0))
    assert_allclose(rates.curvature_limit, 5.0 / 24.0)
    agreement = rates.agreement()
    assert agreement["eta"] <= 0.02
    assert agreement["a0"] <= 0.02
    assert agreement["curvature"] <= 0.02
    assert rates.within_tolerance


def test_ratio_bound(profile):
    bound = ratio_bound_sup(profile)
    assert_allclose(bound.analytic_left_limit, np.sqrt(3.0) / 2.0)
    assert_allclose(bound.limit_left_infinity, np.sqrt(3.0) / 2.0, rtol=1e-3)
    assert bound.limit_at_omega0 <= 1e-3
    assert np.isfinite(bound.sup_value)
    assert bound.sup_value >= bound.limit_left_infinity


def test_arrival_quadrature_converges(kinetics, profile):
    convergence = arrival_convergence(kinetics)
    assert convergence.panels == (16, 32, 64)
    assert abs(convergence.omega0_values[-1] - profile.omega0) <= 1e-6
    assert convergence.order > 3.0


def test_shifted_profile(profile):
    assert_allclose(shifted_profile(profile, 0.0), profile.phi, atol=1e-14)
    shifted = shifted_profile(profile, 0.5)
    assert shifted[0] == profile.phi[0]
    # phi(x - s) at x = s + 0 recovers the anchor value
    assert_allclose(np.interp(0.5, profile.x_nodes, shifted), 0.5, atol=1e-4)


def test_level_position_rejects_out_of_range(profile):
    with pytest.raises(ConfigError):
        level_position(profile, 1.0)


def test_rejects_bad_anchor(kinetics):
    with pytest.raises(ConfigError):
        solve_profile(kinetics, phi_at_zero=1.2)


def test_rejects_nonzero_speed():
    with pytest.raises(ProfileError):
        solve_profile(KineticsPair.quadratic_cubic(1.0, 0.5), n_nodes=101)


def test_custom_extent(kinetics):
    p = solve_profile(kinetics, x_extent=GridExtent(left_tol=1e-6, right_pad=0.5), n_nodes=301)
    assert_allclose(1.0 - p.phi[0], 1e-6, rtol=1e-6)
    assert_allclose(p.x_nodes[-1] - p.omega0, 0.5)


def test_anchor_choice_only_translates_the_front(kinetics, profile):
    lower = solve_profile(kinetics, phi_at_zero=0.3, n_nodes=401)
    distance = level_position(profile, 0.3)
    assert abs(lower.omega0 - (profile.omega0 - distance)) <= 1e-8
    assert abs(level_position(lower, 0.5) + distance) <= 1e-8


def test_second_order_residual_converges(coarse_profile, profile):
    coarse, fine = coarse_profile.residual_stats.second_order, profile.residual_stats.second_order
    order = np.log(coarse / fine) / np.log(coarse_profile.h / profile.h)
    assert order >= 1.7
    assert fine <= 2e-5


def test_asymptotic_rates_on_a_coarse_grid(kinetics):
    coarse = solve_profile(kinetics, n_nodes=201)
    rates = asymptotic_rates(coarse)
    assert np.isfinite(rates.a0_measured)
    assert rates.a0_measured > 0.0
