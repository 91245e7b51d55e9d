"""
Tests for the projection onto the stable subspace, the resolvent half-plane
constant and exponential decay of the linear semigroup.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from degenfront.exceptions import (
    ConfigError,
    DecayFitError,
    EvolutionError,
    ProjectionError,
    ResolventError,
)
from degenfront.services.linop import assemble_from_coefficients, assemble_operator, smooth_random_vector
from degenfront.services.profile import solve_profile
from degenfront.services.semigroup import (
    LinearTrajectory,
    adjoint_residual,
    build_projection,
    default_resolvent_samples,
    default_t_end,
    discrete_projection,
    eta0_bound,
    evolve_linear,
    fit_decay,
    resolvent_check,
)


@pytest.fixture(scope="module")
def projection(profile):
    return build_projection(profile)


@pytest.fixture(scope="module")
def kernel_projection(coarse_operator, coarse_report):
    return discrete_projection(coarse_operator, coarse_report)


def test_theta_is_positive(projection):
    assert projection.theta > 0.0
    assert projection.D0 == pytest.approx(0.75)


def test_projection_is_idempotent_and_kills_phi_x(projection, operator):
    rng = np.random.default_rng(5)
    assert np.linalg.norm(projection.project(projection.phi_x)) <= 1e-10 * np.linalg.norm(projection.phi_x)
    for _ in range(20):
        u = smooth_random_vector(operator, rng)
        pu = projection.project(u)
        assert np.linalg.norm(projection.project(pu) - pu) <= 1e-10 * np.linalg.norm(u)


def test_psi_vanishes_beyond_arrival(projection, operator):
    beyond = operator.x >= operator.omega0
    assert np.any(beyond)
    assert np.all(projection.psi[beyond] == 0.0)


def test_projection_anchor_must_be_left_of_arrival(profile):
    with pytest.raises(ConfigError):
        build_projection(profile, x0_anchor=profile.omega0 + 0.1)


def test_adjoint_residual_shrinks_under_refinement(kinetics, profile, operator, projection):
    half = solve_profile(kinetics, n_nodes=1001)
    coarse = adjoint_residual(assemble_operator(half), build_projection(half))
    fine = adjoint_residual(operator, projection)
    assert fine <= 5e-3
    assert np.log2(coarse / fine) >= 1.5


def test_adjoint_residual_needs_unregularized_operator(coarse_profile):
    d = assemble_operator(coarse_profile, epsilon=1e-2)
    with pytest.raises(ProjectionError):
        adjoint_residual(d, build_projection(coarse_profile))


def test_constant_coefficient_operator_is_self_adjoint():
    d = assemble_from_coefficients(np.ones(40), np.full(40, -1.0), 0.05)
    assert_allclose(d.L_matrix, d.L_matrix.T, rtol=0, atol=1e-12)


def test_discrete_projection_commutes_with_operator(coarse_operator, kernel_projection):
    u = smooth_random_vector(coarse_operator, np.random.default_rng(9))
    L = coarse_operator.L_matrix
    lhs = kernel_projection.project(L @ u)
    rhs = L @ kernel_projection.project(u)
    assert np.linalg.norm(lhs - rhs) <= 1e-6 * np.linalg.norm(L @ u)
    assert np.dot(kernel_projection.phi_x, coarse_operator.phi_x) > 0.0


def test_discrete_projection_needs_eps_zero(coarse_profile, coarse_report):
    with pytest.raises(ProjectionError):
        discrete_projection(assemble_operator(coarse_profile, epsilon=1e-3), coarse_report)


def test_eta0_bound(coarse_profile):
    bound = eta0_bound(coarse_profile)
    assert bound.C0 >= 0.625
    assert_allclose(bound.m_limit_at_omega0, 2.0 / 3.0 * 0.625)
    assert bound.M_ratio >= bound.m_limit_at_omega0
    assert_allclose(bound.epsilon_star, 1.0 / (2.0 * bound.M_ratio))
    assert_allclose(bound.eta0, bound.C0 + bound.M_ratio / 2.0)


def test_resolvent_bound_holds_right_of_eta0(coarse_profile, coarse_operator):
    eta0 = eta0_bound(coarse_profile).eta0
    samples = default_resolvent_samples(eta0)
    assert len(samples) == 20
    checked = resolvent_check(coarse_operator, eta0, samples[:4] + samples[-2:])
    assert all(s.bound_ok for s in checked)
    assert all(s.smin > 0.0 for s in checked)


def test_resolvent_rejects_samples_left_of_eta0(coarse_operator):
    with pytest.raises(ResolventError):
        resolvent_check(coarse_operator, 2.0, [3.0, 1.5 + 1.0j])


def test_linear_decay_matches_gap(coarse_operator, coarse_report, kernel_projection):
    u0 = smooth_random_vector(coarse_operator, np.random.default_rng(21))
    t_end = default_t_end(coarse_report.lambda1.real)
    traj = evolve_linear(coarse_operator, u0, t_end, 0.05, 1.0, projection=kernel_projection)
    fit = fit_decay(traj)
    target = -coarse_report.lambda1.real
    assert fit.accepted
    assert fit.r_squared >= 0.99
    assert abs(fit.fitted_rate - target) <= 0.10 * target
    assert traj.norm_Pu[-1] <= 1e-6 * traj.norm_Pu[0]


def test_kernel_vector_is_stationary(coarse_operator, coarse_report, kernel_projection):
    v0 = kernel_projection.phi_x
    dt, t_end = 0.05, 10.0
    traj = evolve_linear(coarse_operator, v0, t_end, dt, 1.0)
    steps = round(t_end / dt)
    factor = (1.0 - dt * coarse_report.lambda0.real) ** (-steps)
    assert np.linalg.norm(traj.final - factor * v0) <= 1e-6 * np.linalg.norm(v0)


def test_evolve_linear_keeps_states(coarse_operator):
    u0 = smooth_random_vector(coarse_operator, np.random.default_rng(1))
    traj = evolve_linear(coarse_operator, u0, 1.0, 0.1, 0.5, keep_every=5)
    assert traj.times.size == 11
    assert traj.states.shape == (3, coarse_operator.n)
    assert np.all(np.isnan(traj.norm_Pu))


@pytest.mark.parametrize(
    "kwargs, error",
    [
        ({"theta_scheme": 0.3}, ConfigError),
        ({"reaction": "split"}, ConfigError),
        ({"dt": 0.0}, ConfigError),
    ],
)
def test_evolve_linear_rejects_bad_settings(coarse_operator, kwargs, error):
    settings = {"t_end": 1.0, "dt": 0.1, **kwargs}
    with pytest.raises(error):
        evolve_linear(coarse_operator, np.zeros(coarse_operator.n), **settings)


def test_evolve_linear_checks_dimension(coarse_operator):
    with pytest.raises(EvolutionError):
        evolve_linear(coarse_operator, np.zeros(coarse_operator.n - 1), 1.0, 0.1)


def _trajectory(norms, times):
    return LinearTrajectory(times=times, norm_u=norms, norm_Pu=np.full(times.size, np.nan), final=np.zeros(1))


def test_fit_decay_on_exact_exponential():
    times = np.linspace(0.0, 10.0, 101)
    fit = fit_decay(_trajectory(np.exp(-0.5 * times), times))
    assert fit.accepted
    assert fit.fitted_rate == pytest.approx(0.5)
    assert fit.prefactor == pytest.approx(1.0)
    assert fit.window == (pytest.approx(1.0), pytest.approx(10.0))
    assert fit.record().samples == fit.times.size


def test_fit_decay_stops_at_norm_floor():
    times = np.linspace(0.0, 10.0, 101)
    fit = fit_decay(_trajectory(np.exp(-5.0 * times), times))
    assert fit.window[1] < 6.5
    assert fit.fitted_rate == pytest.approx(5.0)


def test_fit_decay_rejects_constant_norms():
    times = np.linspace(0.0, 10.0, 101)
    fit = fit_decay(_trajectory(np.ones_like(times), times))
    assert not fit.accepted
    assert fit.fitted_rate == 0.0


def test_fit_decay_needs_samples_after_burn_in():
    times = np.linspace(0.0, 1.5, 16)
    with pytest.raises(DecayFitError):
        fit_decay(_trajectory(np.exp(-times), times))


def test_default_t_end():
    assert default_t_end(-0.3) == pytest.approx(100.0)
    with pytest.raises(ConfigError):
        default_t_end(0.0)


def test_theta_times_D0_does_not_depend_on_anchor(profile):
    values = [build_projection(profile, x0_anchor=x0) for x0 in (-3.0, -1.0, 0.0, 1.5, 2.5)]
    products = np.array([pd.theta * pd.D0 for pd in values])
    assert_allclose(products, products[2], rtol=0, atol=1e-8)
    assert len({pd.D0 for pd in values}) == len(values)


def test_projected_energy_never_grows(coarse_operator, kernel_projection):
    rng = np.random.default_rng(50)
    for _ in range(50):
        u0 = smooth_random_vector(coarse_operator, rng)
        traj = evolve_linear(coarse_operator, u0, 5.0, 0.05, 1.0, projection=kernel_projection)
        assert np.all(np.diff(traj.energy_Pu) <= 1e-9 * traj.energy_Pu[0])


def test_projection_commutes_with_linear_evolution(coarse_operator, kernel_projection):
    u0 = smooth_random_vector(coarse_operator, np.random.default_rng(13))
    full = evolve_linear(coarse_operator, u0, 10.0, 0.05, 1.0)
    projected = evolve_linear(coarse_operator, kernel_projection.project(u0), 10.0, 0.05, 1.0)
    gap = coarse_operator.norm(kernel_projection.project(full.final) - projected.final)
    assert gap <= 1e-8 * coarse_operator.norm(u0)


def test_fitted_rate_is_robust_to_halving_dt(coarse_operator, coarse_report, kernel_projection):
    u0 = smooth_random_vector(coarse_operator, np.random.default_rng(21))
    t_end = default_t_end(coarse_report.lambda1.real)
    rates = [
        fit_decay(evolve_linear(coarse_operator, u0, t_end, dt, 1.0, projection=kernel_projection)).fitted_rate
        for dt in (0.05, 0.025)
    ]
    assert abs(rates[0] - rates[1]) <= 0.01 * rates[1]


def test_energy_is_only_recorded_with_a_projection(coarse_operator):
    u0 = smooth_random_vector(coarse_operator, np.random.default_rng(2))
    assert evolve_linear(coarse_operator, u0, 0.5, 0.1).energy_Pu is None
