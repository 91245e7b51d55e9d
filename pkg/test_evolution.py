"""
Tests for nonlinear perturbation runs: the discrete equilibrium, shift
modulation, agreement with the linear semigroup at small amplitude and the
range guards.
"""
import numpy as np
import pytest

from degenfront.exceptions import ConfigError
from degenfront.services.evolution import (
    NonlinearRun,
    decay_advisory,
    evolve_nonlinear,
    gaussian_bump,
    modulate_shift,
    shift_perturbation,
)
from degenfront.services.profile import shifted_profile
from degenfront.services.semigroup import evolve_linear


def test_front_is_a_discrete_equilibrium(coarse_profile):
    run = evolve_nonlinear(
        coarse_profile, np.zeros(coarse_profile.n_nodes - 2), 20.0, 0.05, snapshot_every=20, track_shift=False,
    )
    assert run.snapshot_times[-1] == pytest.approx(20.0)
    assert np.max(np.abs(run.snapshots - coarse_profile.phi)) <= 1e-7
    assert np.max(np.abs(run.final_u)) == 0.0
    assert np.all(run.residual_track == 0.0)
    assert run.range_flags == ()


def test_translated_front_shift_is_recovered(coarse_profile):
    run = evolve_nonlinear(coarse_profile, shift_perturbation(coarse_profile, 0.1), 5.0, 0.05, record_every=10)
    assert abs(run.shift_track[0] - 0.1) <= 1e-4
    assert run.residual_track[0] <= 1e-4
    assert np.max(run.residual_track) <= 1e-3
    assert abs(run.shift_track[-1] - 0.1) <= 1e-3


@pytest.mark.parametrize("s0", [-0.5, -0.1, 0.1, 0.5])
def test_modulate_shift_recovers_exact_translates(coarse_profile, s0):
    estimate = modulate_shift(shifted_profile(coarse_profile, s0), coarse_profile)
    assert abs(estimate.shift - s0) <= 1e-4
    assert not estimate.at_boundary


def test_modulate_shift_flags_the_bracket_boundary(coarse_profile):
    estimate = modulate_shift(shifted_profile(coarse_profile, 3.0), coarse_profile)
    assert estimate.at_boundary
    assert estimate.shift == pytest.approx(2.0, abs=1e-4)


def test_modulate_shift_needs_full_grid(coarse_profile):
    with pytest.raises(ConfigError):
        modulate_shift(np.asarray(coarse_profile.phi[1:-1]), coarse_profile)


def test_small_perturbations_follow_the_linear_semigroup(coarse_profile, coarse_operator):
    gaps = []
    for amplitude in (1e-2, 5e-3, 2.5e-3):
        u0 = gaussian_bump(coarse_profile, amplitude)
        nonlinear = evolve_nonlinear(coarse_profile, u0, 1.0, 0.05, record_every=10, track_shift=False)
        linear = evolve_linear(coarse_operator, u0, 1.0, 0.05, 1.0, reaction="explicit")
        gaps.append(coarse_operator.norm(nonlinear.final_u - linear.final))
    assert np.log2(gaps[0] / gaps[1]) >= 1.8
    assert np.log2(gaps[1] / gaps[2]) >= 1.8


def test_nonnegative_bump_keeps_state_nonnegative(coarse_profile):
    run = evolve_nonlinear(coarse_profile, gaussian_bump(coarse_profile, 0.05), 2.0, 0.05, record_every=5)
    assert np.min(run.min_v) >= -1e-6
    assert run.boundary_warnings == 0


def test_snapshots_live_on_the_full_grid(coarse_profile):
    u0 = gaussian_bump(coarse_profile, 0.01)
    run = evolve_nonlinear(coarse_profile, u0, 1.0, 0.05, snapshot_every=5, track_shift=False)
    assert list(run.snapshot_times) == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert run.final_v.shape == coarse_profile.x_nodes.shape
    assert run.final_v[0] == coarse_profile.phi[0]


def test_excursions_above_one_are_flagged(coarse_profile):
    u0 = gaussian_bump(coarse_profile, 0.2, center=-10.0, width=1.0)
    run = evolve_nonlinear(coarse_profile, u0, 0.1, 0.05, track_shift=False)
    assert run.range_flags
    first = run.range_flags[0]
    assert first.t == 0.0
    assert first.max_v > 1.05
    assert not first.extension_dependent
    assert run.notes


def test_perturbation_sup_norm_is_limited(coarse_profile):
    with pytest.raises(ConfigError, match="sup-norm"):
        evolve_nonlinear(coarse_profile, gaussian_bump(coarse_profile, 0.3), 1.0, 0.05)


def test_perturbation_must_match_interior(coarse_profile):
    with pytest.raises(ConfigError):
        evolve_nonlinear(coarse_profile, np.zeros(coarse_profile.n_nodes), 1.0, 0.05)


def _run_with_residuals(residuals, times):
    return NonlinearRun(
        times=times,
        shift_track=np.zeros_like(times),
        residual_track=residuals,
        min_v=np.zeros_like(times),
        max_v=np.ones_like(times),
        range_flags=(),
        snapshot_times=np.array([times[-1]]),
        snapshots=np.zeros((1, 3)),
        final_u=np.zeros(1),
    )


def test_decay_advisory():
    times = np.linspace(0.0, 10.0, 21)
    run = _run_with_residuals(1e-2 * np.exp(-0.3 * times), times)
    close = decay_advisory(run, 0.3)
    assert close.rate == pytest.approx(0.3)
    assert close.within_band
    far = decay_advisory(run, 0.6)
    assert far.relative_gap == pytest.approx(0.5)
    assert not far.within_band
    assert decay_advisory(run, 0.0) is None
