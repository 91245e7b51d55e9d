"""
Acceptance suite shared by the ``check`` and ``report`` subcommands.

Every check runs on the reference front (b = 1 with the balanced threshold,
phi(0) = 1/2) and yields exactly one CheckResult. Numerical errors raised
inside a check turn it into a failure; checks listed in ``check.skip`` are
reported as skipped.
"""
import logging
import time
from functools import cached_property
from typing import Callable, Dict, List, Tuple

import numpy as np

from degenfront.constants.defaults import CheckStatus
from degenfront.exceptions import ConfigError, NumericalError
from degenfront.schemas.config import RunConfig
from degenfront.schemas.kinetics import KineticsPair
from degenfront.schemas.reports import CheckResult
from degenfront.services.evolution import (
    decay_advisory,
    evolve_nonlinear,
    gaussian_bump,
    shift_perturbation,
)
from degenfront.services.kinetics import balance_alpha, potential_D
from degenfront.services.linop import (
    OperatorDiscretization,
    assemble_operator,
    quadratic_form,
    smooth_random_vector,
    weighted_form,
)
from degenfront.services.profile import (
    FrontProfile,
    GridExtent,
    asymptotic_rates,
    level_position,
    solve_profile,
)
from degenfront.services.semigroup import (
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
from degenfront.services.spectrum import SpectrumReport, eigen_spectrum, epsilon_sweep, refinement_oracle

logger = logging.getLogger(__name__)

REFERENCE_B = 1.0
REFERENCE_OMEGA0 = 3.0310673
OMEGA0_TOL = 1e-6
REFERENCE_TRAVEL = 3.8017
TRAVEL_TOL = 1e-3
BALANCE_SAMPLES = (0.25, 0.5, 1.0, 2.0, 4.0)
GAP_CEILING = -0.1
IMAG_RELATIVE = 1e-8
ORDER_MIN = 1.5
ORACLE_RTOL = 0.02
IDENTITY_RTOL = 0.01
PROJECTION_TOL = 1e-10
DECAY_RTOL = 0.10
STATIONARY_TOL = 1e-6
SAMPLED_STATIONARY_TOL = 1e-2
STATIONARY_T = 10.0
ENERGY_SLACK = 1e-9
DRIFT_TOL = 1e-7
SHIFT_RECOVERY_TOL = 1e-4
TRANSLATE = 0.1
TRANSLATE_T_END = 5.0
TRANSLATE_RESIDUAL_TOL = 1e-3
NONLINEAR_ORDER_MIN = 1.8
NONLINEAR_AMPLITUDES = (1e-2, 5e-3, 2.5e-3)
NONLINEAR_T_END = 2.0
REST_T_END = 20.0


def reference_kinetics() -> KineticsPair:
    return KineticsPair.quadratic_cubic(REFERENCE_B, balance_alpha(REFERENCE_B))


class CheckContext:
    """Lazily built fronts, operators and spectra shared between checks."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.kinetics = reference_kinetics()
        self.extent = GridExtent(cfg.grid.left_tol, cfg.grid.right_pad)
        self.rng = np.random.default_rng(cfg.seed)

    def profile(self, n_nodes: int) -> FrontProfile:
        return solve_profile(self.kinetics, self.cfg.grid.phi_at_zero, self.extent, n_nodes)

    @cached_property
    def spectral_profile(self) -> FrontProfile:
        return self.profile(self.cfg.check.spectrum_nodes)

    @cached_property
    def operator(self) -> OperatorDiscretization:
        return assemble_operator(self.spectral_profile)

    @cached_property
    def report(self) -> SpectrumReport:
        return eigen_spectrum(self.operator, vectors=True)


def _result(name: str, passed: bool, value: float, threshold: str, detail: str) -> CheckResult:
    status = CheckStatus.PASS if passed else CheckStatus.FAIL
    return CheckResult(name=name, status=status, value=float(value), threshold=threshold, detail=detail)


def check_balance_formula(ctx: CheckContext) -> CheckResult:
    alpha = balance_alpha(1.0)
    residual = abs(potential_D(KineticsPair.quadratic_cubic(1.0, alpha), 1.0))
    worst = max(abs(balance_alpha(b) - (3.0 * b + 2.0) / (5.0 * b + 3.0)) for b in BALANCE_SAMPLES)
    error = max(abs(alpha - 0.625), worst)
    passed = error <= 1e-10 and residual <= 1e-10
    return _result(
        "balance_formula", passed, error, "<= 1e-10",
        f"alpha(1)={alpha:.15f}, |D(1)|={residual:.2e}, closed-form error {worst:.2e}",
    )


def check_arrival_point(ctx: CheckContext) -> CheckResult:
    p = ctx.spectral_profile
    travel = p.omega0 - level_position(p, 0.625)
    omega0_error, travel_error = abs(p.omega0 - REFERENCE_OMEGA0), abs(travel - REFERENCE_TRAVEL)
    passed = omega0_error <= OMEGA0_TOL and travel_error <= TRAVEL_TOL
    return _result(
        "arrival_point", passed, max(omega0_error, travel_error), f"omega0 <= {OMEGA0_TOL:g}, travel <= {TRAVEL_TOL:g}",
        f"omega0={p.omega0:.8f}, travel from phi=5/8 {travel:.6f}",
    )


def check_decay_rates(ctx: CheckContext) -> CheckResult:
    rates = asymptotic_rates(ctx.spectral_profile)
    agreement = rates.agreement()
    worst = max(agreement.values())
    detail = ", ".join(f"{key} off by {100 * value:.2f}%" for key, value in sorted(agreement.items()))
    return _result("decay_rates", rates.within_tolerance, worst, "<= 2%", detail)


def check_zero_mode(ctx: CheckContext) -> CheckResult:
    r = ctx.report
    lam0 = abs(r.lambda0)
    passed = lam0 <= r.zero_tol and r.zero_mode_alignment >= 0.999 and r.zero_count == 1
    return _result(
        "zero_mode", passed, lam0, f"<= {r.zero_tol:.1e}, alignment >= 0.999, simple",
        f"lambda0={r.lambda0.real:.3e}, alignment={r.zero_mode_alignment:.6f}, {r.zero_count} in the zero ball",
    )


def check_spectral_gap(ctx: CheckContext) -> CheckResult:
    r = ctx.report
    others = np.delete(r.eigenvalues.real, r.index0)
    imag_ok = r.max_imag <= IMAG_RELATIVE * r.operator_scale
    gap_ok = bool(np.all(others <= GAP_CEILING))
    spectral = ctx.cfg.spectral
    oracle = refinement_oracle(
        ctx.kinetics, spectral.base_nodes, spectral.n_refinements, ctx.cfg.grid.phi_at_zero, ctx.extent,
    )
    relative = abs(r.lambda1.real - oracle.extrapolated) / abs(oracle.extrapolated)
    passed = imag_ok and gap_ok and oracle.order >= ORDER_MIN and relative <= ORACLE_RTOL
    return _result(
        "spectral_gap", passed, r.lambda1.real, f"<= {GAP_CEILING}, order >= {ORDER_MIN}, oracle within 2%",
        f"max|Im|={r.max_imag:.2e} (scale {r.operator_scale:.2e}), lambda1={r.lambda1.real:.6f}, "
        f"oracle {oracle.extrapolated:.6f} at order {oracle.order:.2f}, off by {100 * relative:.2f}%",
    )


def check_energy_identity(ctx: CheckContext) -> CheckResult:
    p = ctx.profile(ctx.cfg.check.identity_nodes)
    d = assemble_operator(p)
    rng = np.random.default_rng(ctx.cfg.seed)
    worst, positive = 0.0, 0
    for _ in range(ctx.cfg.check.identity_vectors):
        u = smooth_random_vector(d, rng)
        q = weighted_form(p, u)
        discrete = quadratic_form(d, u)
        positive += q > 0.0
        worst = max(worst, abs(discrete - q) / abs(q))
    kernel = abs(weighted_form(p, d.phi_x))
    passed = worst <= IDENTITY_RTOL and positive == 0 and kernel <= 1e-8
    return _result(
        "energy_identity", passed, worst, "<= 1%, Q <= 0, |Q(phi_x)| <= 1e-8",
        f"{ctx.cfg.check.identity_vectors} vectors, worst relative gap {worst:.2e}, "
        f"{positive} positive forms, |Q(phi_x)|={kernel:.2e}",
    )


def check_projection_adjoint(ctx: CheckContext) -> CheckResult:
    p = ctx.spectral_profile
    pd = build_projection(p)
    u = smooth_random_vector(ctx.operator, np.random.default_rng(ctx.cfg.seed))
    pu = pd.project(u)
    idempotent = float(np.linalg.norm(pd.project(pu) - pu) / np.linalg.norm(u))
    kernel = float(np.linalg.norm(pd.project(pd.phi_x)) / np.linalg.norm(pd.phi_x))

    finest = ctx.cfg.check.spectrum_nodes
    counts = [(finest - 1) // 4 + 1, (finest - 1) // 2 + 1, finest]
    residuals = []
    for n in counts:
        profile = p if n == p.n_nodes else ctx.profile(n)
        residuals.append(adjoint_residual(assemble_operator(profile), build_projection(profile)))
    order = float(np.log2(residuals[-2] / residuals[-1]))
    passed = pd.theta > 0.0 and idempotent <= PROJECTION_TOL and kernel <= PROJECTION_TOL and order >= ORDER_MIN
    return _result(
        "projection_adjoint", passed, order, f"Theta > 0, P^2 = P and P phi_x = 0 to 1e-10, order >= {ORDER_MIN}",
        f"Theta={pd.theta:.6f}, |P^2 u - P u|={idempotent:.1e}, |P phi_x|={kernel:.1e}, "
        f"adjoint residuals {['%.2e' % r for r in residuals]} at n={counts}",
    )


def check_resolvent_bound(ctx: CheckContext) -> CheckResult:
    p = ctx.profile(ctx.cfg.check.resolvent_nodes)
    bound = eta0_bound(p)
    samples = resolvent_check(assemble_operator(p), bound.eta0, default_resolvent_samples(bound.eta0))
    worst = min(s.smin / s.bound for s in samples)
    failed = sum(not s.bound_ok for s in samples)
    return _result(
        "resolvent_bound", failed == 0, worst, ">= 0.95 of |lambda - eta0| / 2",
        f"eta0={bound.eta0:.4f} (C0={bound.C0:.4f}, M={bound.M_ratio:.4f}), "
        f"{len(samples) - failed}/{len(samples)} samples within the bound",
    )


def check_semigroup_decay(ctx: CheckContext) -> CheckResult:
    d, r = ctx.operator, ctx.report
    evolution = ctx.cfg.evolution
    pd = discrete_projection(d, r)
    target = -r.lambda1.real
    t_end = evolution.t_end or default_t_end(r.lambda1.real)
    rng = np.random.default_rng(ctx.cfg.seed)
    errors, r2, growing = [], [], 0
    for _ in range(ctx.cfg.check.decay_starts):
        u0 = smooth_random_vector(d, rng)
        traj = evolve_linear(d, u0, t_end, evolution.dt, 1.0, projection=pd)
        growing += bool(np.any(np.diff(traj.energy_Pu) > ENERGY_SLACK * traj.energy_Pu[0]))
        fit = fit_decay(traj, evolution.t_burn)
        errors.append(abs(fit.fitted_rate - target) / target)
        r2.append(fit.r_squared if fit.accepted else 0.0)

    stationary = evolve_linear(d, pd.phi_x, STATIONARY_T, evolution.dt, 1.0)
    expected = np.exp(r.lambda0.real * STATIONARY_T) * pd.phi_x
    drift = float(np.linalg.norm(stationary.final - expected) / np.linalg.norm(pd.phi_x))
    sampled = evolve_linear(d, d.phi_x, STATIONARY_T, evolution.dt, 1.0)
    sampled_drift = float(np.linalg.norm(sampled.final - d.phi_x) / np.linalg.norm(d.phi_x))

    worst = max(errors)
    passed = (
        worst <= DECAY_RTOL and min(r2) >= 0.99 and growing == 0
        and drift <= STATIONARY_TOL and sampled_drift <= SAMPLED_STATIONARY_TOL
    )
    return _result(
        "semigroup_decay", passed, worst, "rate within 10% of -lambda1, r^2 >= 0.99, energy non-increasing, kernel stationary to 1e-6",
        f"target rate {target:.6f}, worst relative error {100 * worst:.2f}%, min r^2 {min(r2):.5f}, "
        f"{growing} start(s) with growing energy, "
        f"kernel drift {drift:.1e}, sampled phi_x drift {sampled_drift:.1e}",
    )


def check_regularization_continuity(ctx: CheckContext) -> CheckResult:
    sweep = epsilon_sweep(ctx.spectral_profile, ctx.cfg.spectral.epsilons)
    summary = sweep.summary
    unstable = sum(entry.unstable_count for entry in summary.entries)
    ceilings_ok = all(entry.ceiling_ok for entry in summary.entries)
    shift = summary.entries[-2].lambda1_shift
    passed = summary.continuity_ok and unstable == 0 and ceilings_ok
    return _result(
        "regularization_continuity", passed, shift, "<= 0.05 at the smallest eps, no Re > 1e-2 except lambda0",
        f"lambda1 shift {shift:.2e} at eps={summary.entries[-2].epsilon:g}, {unstable} unstable eigenvalue(s), "
        f"ceilings {'consistent' if ceilings_ok else 'above'} the border maxima, "
        f"monotone={summary.monotone_ok}",
    )


def check_nonlinear_consistency(ctx: CheckContext) -> CheckResult:
    p, d = ctx.spectral_profile, ctx.operator
    dt = ctx.cfg.evolution.dt

    rest = evolve_nonlinear(p, np.zeros(d.n), REST_T_END, dt, snapshot_every=10, track_shift=False)
    drift = float(np.max(np.abs(rest.snapshots - p.phi)))

    translated = evolve_nonlinear(p, shift_perturbation(p, TRANSLATE), TRANSLATE_T_END, dt, record_every=10)
    recovery = abs(translated.shift_track[0] - TRANSLATE)
    settled = abs(translated.shift_track[-1] - TRANSLATE)
    residual = float(np.max(translated.residual_track))

    gaps = []
    for amplitude in NONLINEAR_AMPLITUDES:
        u0 = gaussian_bump(p, amplitude)
        nonlinear = evolve_nonlinear(p, u0, NONLINEAR_T_END, dt, record_every=10, track_shift=False)
        linear = evolve_linear(d, u0, NONLINEAR_T_END, dt, 1.0, reaction="explicit")
        gaps.append(d.norm(nonlinear.final_u - linear.final))
    order = float(np.log2(gaps[-2] / gaps[-1]))

    advisory = decay_advisory(
        evolve_nonlinear(p, gaussian_bump(p, NONLINEAR_AMPLITUDES[0]), NONLINEAR_T_END, dt, record_every=5),
        ctx.report.beta,
    )
    note = "no advisory" if advisory is None else f"advisory rate {advisory.rate:.4f} vs beta {advisory.beta:.4f}"
    passed = (
        drift <= DRIFT_TOL and recovery <= SHIFT_RECOVERY_TOL and order >= NONLINEAR_ORDER_MIN
        and residual <= TRANSLATE_RESIDUAL_TOL and settled <= TRANSLATE_RESIDUAL_TOL
    )
    return _result(
        "nonlinear_consistency", passed, order, f"drift <= 1e-7 to t=20, shift recovery <= 1e-4, translate residual <= 1e-3, order >= {NONLINEAR_ORDER_MIN}",
        f"drift {drift:.1e}, shift recovery error {recovery:.1e}, translate residual {residual:.1e} "
        f"(shift {translated.shift_track[-1]:.5f} at t={TRANSLATE_T_END:g}), linear gaps "
        f"{['%.2e' % g for g in gaps]}, order {order:.2f}; {note}",
    )


CHECKS: Tuple[Tuple[str, Callable[[CheckContext], CheckResult]], ...] = (
    ("balance_formula", check_balance_formula),
    ("arrival_point", check_arrival_point),
    ("decay_rates", check_decay_rates),
    ("zero_mode", check_zero_mode),
    ("spectral_gap", check_spectral_gap),
    ("energy_identity", check_energy_identity),
    ("projection_adjoint", check_projection_adjoint),
    ("resolvent_bound", check_resolvent_bound),
    ("semigroup_decay", check_semigroup_decay),
    ("regularization_continuity", check_regularization_continuity),
    ("nonlinear_consistency", check_nonlinear_consistency),
)

CHECK_NAMES = tuple(name for name, _ in CHECKS)


def run_checks(cfg: RunConfig) -> List[CheckResult]:
    unknown = sorted(set(cfg.check.skip) - set(CHECK_NAMES))
    if unknown:
        raise ConfigError(f"unknown check name(s) {unknown}", key="check.skip")
    ctx = CheckContext(cfg)
    results: List[CheckResult] = []
    for name, check in CHECKS:
        if name in cfg.check.skip:
            results.append(CheckResult(name=name, status=CheckStatus.SKIPPED, detail="skipped by configuration"))
            continue
        started = time.perf_counter()
        try:
            result = check(ctx)
        except NumericalError as exc:
            logger.error("❌ check %s raised: %s", name, exc)
            result = CheckResult(name=name, status=CheckStatus.FAIL, detail=f"{type(exc).__name__}: {exc}")
        result.runtime_s = round(time.perf_counter() - started, 3)
        glyph = {CheckStatus.PASS: "✅", CheckStatus.FAIL: "❌"}.get(result.status, "⚠️")
        logger.info("%s %s: %s", glyph, name, result.detail)
        results.append(result)
    return results


def tally(results: List[CheckResult]) -> Dict[str, int]:
    counts = {status.value: 0 for status in CheckStatus}
    for result in results:
        counts[CheckStatus(result.status).value] += 1
    return counts
