"""
Linear semigroup around the front: the adjoint zero mode psi = (D(phi)/D0) phi_x,
the normalization Theta = <psi, phi_x>, the spectral projection
P u = u - <u, psi> phi_x / Theta, the resolvent half-plane constant eta0, and
exponential decay of P u(t) under theta-scheme time stepping.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, stats

from degenfront.constants.defaults import (
    DECAY_E_FOLDINGS,
    DEFAULT_T_BURN,
    MIN_FIT_SAMPLES,
    NORM_FLOOR,
    RESOLVENT_SLACK,
)
from degenfront.exceptions import ConfigError, DecayFitError, EvolutionError, ProjectionError, ResolventError
from degenfront.schemas.reports import DecayFitRecord
from degenfront.services.kinetics import eval_kinetics
from degenfront.services.linop import OperatorDiscretization
from degenfront.services.profile import FrontProfile, profile_interpolant
from degenfront.services.spectrum import SpectrumReport

logger = logging.getLogger(__name__)

R_SQUARED_MIN = 0.99


@dataclass(frozen=True, eq=False)
class ProjectionData:
    psi: np.ndarray
    theta: float
    phi_x: np.ndarray  # kernel direction (sampled phi_x or the discrete zero mode)
    D0: float
    h: float
    x0: float

    def coefficient(self, u: np.ndarray) -> float:
        return float(self.h * np.dot(self.psi, u) / self.theta)

    def project(self, u: np.ndarray) -> np.ndarray:
        return u - self.coefficient(u) * self.phi_x


def _anchor_weight(p: FrontProfile, x0: float) -> float:
    if not x0 < p.omega0:
        raise ConfigError("projection anchor must lie left of omega0", key="x0_anchor", x0=x0, omega0=p.omega0)
    phi0 = float(profile_interpolant(p)(x0))
    if not np.isfinite(phi0):
        raise ConfigError("projection anchor outside the grid", key="x0_anchor", x0=x0)
    D0 = float(eval_kinetics(p.kinetics, phi0).D)
    if not D0 > 0.0:
        raise ProjectionError("D(phi(x0)) must be positive", x0=x0, D0=D0)
    return D0


def build_projection(p: FrontProfile, x0_anchor: float = 0.0) -> ProjectionData:
    """psi and Theta from the sampled profile derivative."""
    D0 = _anchor_weight(p, x0_anchor)
    phi, phi_x = p.phi[1:-1], np.array(p.phi_x[1:-1])
    weight = np.where(phi > 0.0, eval_kinetics(p.kinetics, phi).D, 0.0)
    psi = weight / D0 * phi_x
    # interior sum is the trapezoidal rule: both end values vanish
    theta = float(p.h * np.dot(psi, phi_x))
    if not theta > 0.0:
        raise ProjectionError("Theta must be positive", theta=theta)
    return ProjectionData(psi=psi, theta=theta, phi_x=phi_x, D0=D0, h=p.h, x0=x0_anchor)


def discrete_projection(d: OperatorDiscretization, report: SpectrumReport, x0_anchor: float = 0.0) -> ProjectionData:
    """
    Projection built from the computed kernel vector v0 of L_matrix. Because
    W L is symmetric, W v0 is the matching left eigenvector, so this projection
    commutes with every function of L_matrix up to rounding.
    """
    if d.profile is None:
        raise ProjectionError("discretization has no profile attached")
    if d.epsilon != 0.0:
        raise ProjectionError("the zero-mode projection needs eps = 0", epsilon=d.epsilon)
    D0 = _anchor_weight(d.profile, x0_anchor)
    v0 = report.zero_mode
    reference = d.phi_x
    v0 = v0 * (np.linalg.norm(reference) / np.linalg.norm(v0))
    if np.dot(v0, reference) < 0.0:
        v0 = -v0
    psi = d.weight * v0 / D0
    theta = float(d.h * np.dot(psi, v0))
    if not theta > 0.0:
        raise ProjectionError("Theta must be positive", theta=theta)
    return ProjectionData(psi=psi, theta=theta, phi_x=v0, D0=D0, h=d.h, x0=x0_anchor)


def adjoint_residual(d: OperatorDiscretization, pd: ProjectionData) -> float:
    """
    ||L^T psi|| / ||psi||, leaving out the first row: it sees the Dirichlet
    zero in place of the truncated far-field value of phi_x.
    """
    if d.epsilon != 0.0:
        raise ProjectionError("adjoint residual is defined for eps = 0", epsilon=d.epsilon)
    if pd.psi.shape != (d.n,):
        raise ProjectionError("psi does not match the discretization", n=d.n, got=pd.psi.shape)
    residual = d.L_matrix.T @ pd.psi
    return float(np.linalg.norm(residual[1:]) / np.linalg.norm(pd.psi))


@dataclass(frozen=True)
class EtaBound:
    C0: float
    M_ratio: float
    epsilon_star: float
    eta0: float
    m_limit_at_omega0: float
    m_left: float


def eta0_bound(p: FrontProfile) -> EtaBound:
    """
    C0 = max |q0| with q0 = D(phi)_xx / 2 + f'(phi), M = max D(phi)_x^2 / D(phi)
    over x < omega0, eps* = 1 / (2 M) and eta0 = C0 + M / 2.
    """
    k = p.kinetics
    support = p.support
    values = eval_kinetics(k, p.phi[support])
    phi_x, phi_xx = p.phi_x[support], p.phi_xx[support]
    d_xx = values.Dpp * phi_x ** 2 + values.Dp * phi_xx
    q0 = 0.5 * d_xx + values.fp

    at_zero = eval_kinetics(k, 0.0)
    # D(phi)_xx -> -f'(0) / 3 as x -> omega0-, and q0 = f'(0) where phi = 0
    q0_limit = -at_zero.fp / 6.0 + at_zero.fp
    C0 = float(np.max(np.abs(np.concatenate([q0, [q0_limit, at_zero.fp]]))))

    ratio = (values.Dp * phi_x) ** 2 / values.D
    m_limit = -(2.0 / 3.0) * at_zero.fp
    M = float(max(np.max(ratio, initial=0.0), m_limit))
    eps_star = 1.0 / (2.0 * M)
    eta0 = C0 + 1.0 / (4.0 * eps_star)
    logger.debug("eta0 bound: C0=%.6f M=%.6f eta0=%.6f", C0, M, eta0)
    return EtaBound(
        C0=C0,
        M_ratio=M,
        epsilon_star=float(eps_star),
        eta0=float(eta0),
        m_limit_at_omega0=float(m_limit),
        m_left=float(ratio[0]) if ratio.size else 0.0,
    )


@dataclass(frozen=True)
class ResolventSample:
    lam: complex
    smin: float
    bound: float
    bound_ok: bool


def default_resolvent_samples(eta0: float) -> List[complex]:
    """Twenty points right of eta0: eight real, twelve complex."""
    real = [eta0 + offset for offset in (0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)]
    cplx = [eta0 + a + 1j * b for a in (0.5, 1.0, 5.0) for b in (1.0, 5.0, 20.0, 50.0)]
    return real + cplx


def resolvent_check(
    d: OperatorDiscretization, eta0: float, lambda_samples: Sequence[complex],
) -> List[ResolventSample]:
    """smin(lambda I - L) against |lambda - eta0| / 2 with a 5% slack."""
    samples = [complex(lam) for lam in lambda_samples]
    rejected = [lam for lam in samples if not lam.real > eta0]
    if rejected:
        raise ResolventError("samples must satisfy Re lambda > eta0", eta0=eta0, rejected=rejected)
    identity = np.eye(d.n)
    out: List[ResolventSample] = []
    for lam in samples:
        shifted = lam * identity - d.L_matrix if lam.imag else lam.real * identity - d.L_matrix
        smin = float(linalg.svdvals(shifted)[-1])
        bound = abs(lam - eta0) / 2.0
        out.append(ResolventSample(lam=lam, smin=smin, bound=bound, bound_ok=smin >= bound * (1.0 - RESOLVENT_SLACK)))
    failed = sum(not s.bound_ok for s in out)
    if failed:
        logger.warning("⚠️ resolvent bound failed at %d of %d samples", failed, len(out))
    return out


@dataclass(frozen=True, eq=False)
class LinearTrajectory:
    times: np.ndarray
    norm_u: np.ndarray
    norm_Pu: np.ndarray
    final: np.ndarray
    states: Optional[np.ndarray] = None
    energy_Pu: Optional[np.ndarray] = None  # D(phi)-weighted, non-increasing for theta = 1


def _band_apply(upper: np.ndarray, main: np.ndarray, lower: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = main * u
    out[:-1] += upper * u[1:]
    out[1:] += lower * u[:-1]
    return out


def _banded(upper: np.ndarray, main: np.ndarray, lower: np.ndarray) -> np.ndarray:
    ab = np.zeros((3, main.size))
    ab[0, 1:] = upper
    ab[1] = main
    ab[2, :-1] = lower
    return ab


def evolve_linear(
    d: OperatorDiscretization,
    u0: np.ndarray,
    t_end: float,
    dt: float,
    theta_scheme: float = 1.0,
    projection: Optional[ProjectionData] = None,
    reaction: str = "implicit",
    keep_every: int = 0,
) -> LinearTrajectory:
    """
    (I - theta dt L) u+ = (I + (1 - theta) dt L) u.

    ``reaction="explicit"`` moves f'(phi) to the right-hand side with a full
    step, which is the linearization of the nonlinear stepper when theta = 1.
    """
    u = np.array(u0, dtype=float)
    if u.shape != (d.n,):
        raise EvolutionError("initial condition does not match the discretization", n=d.n, got=u.shape)
    if not dt > 0.0 or not t_end > 0.0:
        raise ConfigError("dt and t_end must be positive", key="evolution.dt")
    if not 0.5 <= theta_scheme <= 1.0:
        raise ConfigError("theta must lie in [0.5, 1]", key="evolution.theta")
    if reaction not in ("implicit", "explicit"):
        raise ConfigError(f"unknown reaction treatment '{reaction}'", key="reaction")

    source = d.L_matrix if reaction == "implicit" else d.diffusion_matrix
    upper, main, lower = np.diagonal(source, 1), np.diagonal(source).copy(), np.diagonal(source, -1)
    ab = _banded(-theta_scheme * dt * upper, 1.0 - theta_scheme * dt * main, -theta_scheme * dt * lower)
    explicit = (1.0 - theta_scheme) * dt
    diag_rhs = 1.0 + explicit * main + (dt * d.reaction_diag if reaction == "explicit" else 0.0)

    steps = int(np.ceil(t_end / dt - 1e-9))
    times = dt * np.arange(steps + 1)
    norm_u = np.empty(steps + 1)
    norm_Pu = np.full(steps + 1, np.nan)
    energy_Pu = np.full(steps + 1, np.nan)
    kept: List[np.ndarray] = []

    def record(i: int) -> None:
        norm_u[i] = d.norm(u)
        if projection is not None:
            pu = projection.project(u)
            norm_Pu[i] = d.norm(pu)
            energy_Pu[i] = d.energy_norm(pu)
        if keep_every and i % keep_every == 0:
            kept.append(u.copy())

    record(0)
    for step in range(1, steps + 1):
        rhs = _band_apply(explicit * upper, diag_rhs, explicit * lower, u)
        try:
            u = linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
        except (linalg.LinAlgError, ValueError) as exc:
            raise EvolutionError("linear solve failed", step=step, reason=str(exc)) from exc
        if not np.all(np.isfinite(u)):
            raise EvolutionError("linear solve failed", step=step, reason="non-finite state")
        record(step)

    return LinearTrajectory(
        times=times,
        norm_u=norm_u,
        norm_Pu=norm_Pu,
        final=u,
        states=np.array(kept) if keep_every else None,
        energy_Pu=energy_Pu if projection is not None else None,
    )


def default_t_end(lambda1: float) -> float:
    """Thirty e-foldings of the slowest non-translational mode."""
    if lambda1 >= 0.0:
        raise ConfigError("t_end cannot be derived from a non-negative lambda1", key="evolution.t_end")
    return DECAY_E_FOLDINGS / abs(lambda1)


@dataclass(frozen=True, eq=False)
class DecayFit:
    times: np.ndarray
    norms: np.ndarray
    fitted_rate: float
    r_squared: float
    stderr: float
    confidence_interval: Tuple[float, float]
    window: Tuple[float, float]
    prefactor: float
    accepted: bool

    def record(self) -> DecayFitRecord:
        return DecayFitRecord(
            rate=self.fitted_rate,
            r_squared=self.r_squared,
            stderr=self.stderr,
            confidence_interval=self.confidence_interval,
            window=self.window,
            samples=int(self.times.size),
            prefactor=self.prefactor,
            accepted=self.accepted,
        )


def fit_decay(traj: LinearTrajectory, t_burn: float = DEFAULT_T_BURN) -> DecayFit:
    """
    Least-squares slope of log ||P u(t)|| over t >= t_burn; the window ends at
    the first norm below 1e-14. ``fitted_rate`` is the decay rate (minus the slope).
    """
    norms = traj.norm_Pu if np.all(np.isfinite(traj.norm_Pu)) else traj.norm_u
    after = traj.times >= t_burn
    if np.count_nonzero(after) < MIN_FIT_SAMPLES:
        raise DecayFitError(
            f"at least {MIN_FIT_SAMPLES} samples required after t_burn",
            t_burn=t_burn, samples=int(np.count_nonzero(after)),
        )
    times, values = traj.times[after], norms[after]
    below = np.flatnonzero(values < NORM_FLOOR)
    if below.size:
        times, values = times[: below[0]], values[: below[0]]
    start_norm = float(norms[0]) if norms[0] > 0.0 else float("nan")

    def rejected(reason: str) -> DecayFit:
        logger.info("decay fit rejected: %s", reason)
        window = (float(times[0]), float(times[-1])) if times.size else (float(t_burn), float(t_burn))
        return DecayFit(
            times=times, norms=values, fitted_rate=0.0, r_squared=0.0, stderr=float("nan"),
            confidence_interval=(float("nan"), float("nan")), window=window, prefactor=float("nan"), accepted=False,
        )

    if times.size < MIN_FIT_SAMPLES:
        return rejected(f"{times.size} samples above the norm floor")
    logs = np.log(values)
    if np.ptp(logs) <= 1e-9:
        return rejected("norms constant")

    fit = stats.linregress(times, logs)
    dof = times.size - 2
    half_width = float(stats.t.ppf(0.975, dof) * fit.stderr)
    rate = float(-fit.slope)
    r_squared = float(fit.rvalue ** 2)
    result = DecayFit(
        times=times,
        norms=values,
        fitted_rate=rate,
        r_squared=r_squared,
        stderr=float(fit.stderr),
        confidence_interval=(rate - half_width, rate + half_width),
        window=(float(times[0]), float(times[-1])),
        prefactor=float(np.exp(fit.intercept) / start_norm),
        accepted=r_squared >= R_SQUARED_MIN and rate > 0.0,
    )
    logger.debug("decay fit: rate=%.6f r2=%.6f window=%s", rate, r_squared, result.window)
    return result
