"""
Stationary decreasing front of the degenerate Nagumo equation.

The front solves D(phi) phi_x = -sqrt(-2 D(phi)) with phi -> 1 at -infinity and
phi = 0 from a finite arrival point omega0 on. It is computed in the inverse
formulation dx/dphi = -D(phi) / sqrt(-2 D(phi)), integrated in
sigma = sqrt(phi) on the degenerate side (the 1/sqrt(phi) endpoint singularity
becomes a smooth integrand) and in tau = -log(1 - phi) on the other side (the
logarithmic tail becomes a smooth one with limit slope -1/eta).
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import PchipInterpolator

from degenfront.constants.defaults import (
    DEFAULT_LEFT_TOL,
    DEFAULT_N_NODES,
    DEFAULT_PHI_AT_ZERO,
    DEFAULT_RIGHT_PAD,
    INTEGRATOR_ATOL,
    INTEGRATOR_RTOL,
    RATE_AGREEMENT,
    SERIES_CUTOFF,
    Orientation,
    SpeedSign,
)
from degenfront.exceptions import ConfigError, ProfileError
from degenfront.schemas.kinetics import KineticsPair
from degenfront.schemas.reports import Anchor, ResidualStats
from degenfront.services.kinetics import PotentialD, eval_kinetics, potential, speed_sign

logger = logging.getLogger(__name__)

NEWTON_ITERATIONS = 8
TABLE_SIZE = 4001
ARRIVAL_WINDOW = 0.25
ARRIVAL_FIT_NODES = 6


@dataclass(frozen=True)
class GridExtent:
    left_tol: float = DEFAULT_LEFT_TOL
    right_pad: float = DEFAULT_RIGHT_PAD


@dataclass(frozen=True, eq=False)
class FrontProfile:
    x_nodes: np.ndarray
    phi: np.ndarray
    phi_x: np.ndarray
    phi_xx: np.ndarray
    omega0: float
    anchor: Anchor
    kinetics: KineticsPair
    extent: GridExtent
    # one-sided limits (left, right) of phi_xx at omega0
    phi_xx_at_omega0: Tuple[float, float]
    residual_stats: ResidualStats
    level_map: Optional[Callable[[float], float]] = field(default=None, repr=False)
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("x_nodes", "phi", "phi_x", "phi_xx"):
            getattr(self, name).setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return int(self.x_nodes.size)

    @property
    def h(self) -> float:
        return float(self.x_nodes[1] - self.x_nodes[0])

    @property
    def support(self) -> np.ndarray:
        """Nodes strictly left of omega0 where the front is positive."""
        return (self.x_nodes < self.omega0) & (self.phi > 0.0)


@dataclass(frozen=True)
class AsymptoticRates:
    eta: float
    a0: float
    curvature_limit: float
    ratio_sup: float
    eta_measured: float
    a0_measured: float
    curvature_measured: float
    b0_measured: float

    def agreement(self) -> dict:
        return {
            "eta": abs(self.eta_measured / self.eta - 1.0),
            "a0": abs(self.a0_measured / self.a0 - 1.0),
            "curvature": abs(self.curvature_measured / self.curvature_limit - 1.0),
        }

    @property
    def within_tolerance(self) -> bool:
        return all(err <= RATE_AGREEMENT for err in self.agreement().values())


@dataclass(frozen=True)
class RatioBound:
    sup_value: float
    limit_left_infinity: float
    limit_at_omega0: float
    analytic_left_limit: float


@dataclass(frozen=True)
class ArrivalConvergence:
    panels: Tuple[int, ...]
    omega0_values: Tuple[float, ...]
    order: float


class _FrontIntegrand:
    """dx/dsigma and dx/dtau for a balanced kinetics pair"""

    def __init__(self, k: KineticsPair):
        self.k = k
        self.pot: PotentialD = potential(k).balanced()
        values = eval_kinetics(k, 0.0)
        # 2 sigma D(sigma^2) / sqrt(-2 D(sigma^2)) -> 2 D'(0) / sqrt(-2 D'(0) f'(0) / 3)
        self.sigma_limit = 2.0 * values.Dp / np.sqrt(-2.0 * values.Dp * values.fp / 3.0)

    def sigma_rate(self, sigma: np.ndarray) -> np.ndarray:
        sigma = np.asarray(sigma, dtype=float)
        small = sigma < SERIES_CUTOFF
        s = np.where(small, 1.0, sigma)
        phi = s * s
        minus_two_pot = -2.0 * self.pot(phi)
        rate = 2.0 * s * eval_kinetics(self.k, phi).D / np.sqrt(np.maximum(minus_two_pot, np.finfo(float).tiny))
        return np.where(small, self.sigma_limit, rate)

    def tau_rate(self, tau: np.ndarray) -> np.ndarray:
        w = np.exp(-np.asarray(tau, dtype=float))
        phi = -np.expm1(-np.asarray(tau, dtype=float))
        minus_two_pot = 2.0 * self.pot.upper(w)
        return eval_kinetics(self.k, phi).D * w / np.sqrt(np.maximum(minus_two_pot, np.finfo(float).tiny))


def _check_potential_sign(pot: PotentialD) -> None:
    phi = np.linspace(0.0, 1.0, 2003)[1:-1]
    values = pot(phi)
    if np.any(values >= 0.0):
        worst = phi[np.argmax(values)]
        raise ProfileError("potential sign violation", phi=float(worst), value=float(np.max(values)))


def _integrate(rate: Callable, t_span: Tuple[float, float], label: str):
    sol = solve_ivp(
        lambda t, y: -rate(t),
        t_span,
        [0.0],
        method="DOP853",
        rtol=INTEGRATOR_RTOL,
        atol=INTEGRATOR_ATOL,
        dense_output=True,
    )
    if not sol.success:
        raise ProfileError(f"{label} integration failed: {sol.message}")
    logger.debug("%s branch: %d rhs evaluations, x_end=%.12g", label, sol.nfev, sol.y[0, -1])
    return sol


def _invert(sol, rate: Callable, targets: np.ndarray, bounds: Tuple[float, float]) -> Tuple[np.ndarray, float]:
    """Find t with x(t) = target on the dense output by vectorized Newton iteration."""
    if targets.size == 0:
        return targets.copy(), 0.0
    lo, hi = min(bounds), max(bounds)
    table = np.linspace(lo, hi, TABLE_SIZE)
    x_table = sol.sol(table)[0]
    order = np.argsort(x_table)
    t = np.interp(targets, x_table[order], table[order])
    for _ in range(NEWTON_ITERATIONS):
        step = (sol.sol(t)[0] - targets) / -rate(t)
        t = np.clip(t - step, lo, hi)
    residual = float(np.max(np.abs(sol.sol(t)[0] - targets)))
    return t, residual


def solve_profile(
    k: KineticsPair,
    phi_at_zero: float = DEFAULT_PHI_AT_ZERO,
    x_extent: Optional[GridExtent] = None,
    n_nodes: int = DEFAULT_N_NODES,
) -> FrontProfile:
    """
    Compute the stationary decreasing front on a uniform grid [x_L, omega0 + right_pad].

    x_L is where 1 - phi reaches ``left_tol``; the anchor is phi(0) = phi_at_zero.
    """
    extent = x_extent or GridExtent()
    if not 0.0 < phi_at_zero < 1.0:
        raise ConfigError("phi_at_zero must lie in (0,1)", key="phi_at_zero")
    if not 0.0 < extent.left_tol < 1.0 - phi_at_zero:
        raise ConfigError("left_tol must lie in (0, 1 - phi_at_zero)", key="left_tol")
    if n_nodes < 11:
        raise ConfigError("at least 11 nodes required", key="n_nodes")
    if speed_sign(k, Orientation.DECREASING) != SpeedSign.ZERO:
        raise ProfileError("nonzero speed", value_at_one=potential(k).value_at_one)

    integrand = _FrontIntegrand(k)
    _check_potential_sign(integrand.pot)

    sigma0 = np.sqrt(phi_at_zero)
    tau0 = -np.log1p(-phi_at_zero)
    tau_end = -np.log(extent.left_tol)
    degenerate = _integrate(integrand.sigma_rate, (sigma0, 0.0), "degenerate")
    bulk = _integrate(integrand.tau_rate, (tau0, tau_end), "non-degenerate")
    omega0 = float(degenerate.y[0, -1])
    x_left = float(bulk.y[0, -1])

    x = np.linspace(x_left, omega0 + extent.right_pad, n_nodes)
    phi = np.zeros(n_nodes)
    phi_x = np.zeros(n_nodes)
    left = x < 0.0
    middle = (x >= 0.0) & (x < omega0)

    tau, res_bulk = _invert(bulk, integrand.tau_rate, x[left], (tau0, tau_end))
    sigma, res_deg = _invert(degenerate, integrand.sigma_rate, x[middle], (0.0, sigma0))
    phi[left] = -np.expm1(-tau)
    phi[middle] = sigma * sigma
    # phi_x = dphi/dt / (dx/dt) on each branch
    phi_x[left] = -np.exp(-tau) / integrand.tau_rate(tau)
    phi_x[middle] = -2.0 * sigma / integrand.sigma_rate(sigma)

    values = eval_kinetics(k, phi)
    positive = phi > 0.0
    phi_xx = np.zeros(n_nodes)
    phi_xx[positive] = (-values.f[positive] - values.Dp[positive] * phi_x[positive] ** 2) / values.D[positive]

    at_zero = eval_kinetics(k, 0.0)
    curvature = -at_zero.fp / (3.0 * at_zero.Dp)

    stats = _residual_stats(k, x, phi, phi_x, positive, max(res_bulk, res_deg))
    logger.info(
        "front %s: omega0=%.8f x_L=%.4f h=%.3e residuals %s",
        k.label(), omega0, x_left, x[1] - x[0], stats.model_dump(),
    )

    def level_map(level: float) -> float:
        if not 0.0 <= level < 1.0:
            raise ConfigError("level must lie in [0,1)", key="level")
        if level <= phi_at_zero:
            return float(degenerate.sol(np.sqrt(level))[0])
        return float(bulk.sol(-np.log1p(-level))[0])

    return FrontProfile(
        x_nodes=x,
        phi=phi,
        phi_x=phi_x,
        phi_xx=phi_xx,
        omega0=omega0,
        anchor=Anchor(x=0.0, phi=phi_at_zero),
        kinetics=k,
        extent=extent,
        phi_xx_at_omega0=(float(curvature), 0.0),
        residual_stats=stats,
        level_map=level_map,
    )


def _residual_stats(
    k: KineticsPair, x: np.ndarray, phi: np.ndarray, phi_x: np.ndarray, positive: np.ndarray, inversion: float,
) -> ResidualStats:
    values = eval_kinetics(k, phi)
    pot = potential(k).balanced()
    first = np.abs(values.D * phi_x + np.sqrt(np.maximum(-2.0 * pot(phi), 0.0)))
    flux = values.D * phi_x
    h = x[1] - x[0]
    inner = positive[1:-1] & positive[2:]
    second = np.abs((flux[2:] - flux[:-2]) / (2.0 * h) + values.f[1:-1])
    return ResidualStats(
        first_order=float(np.max(first[positive], initial=0.0)),
        inversion=float(inversion),
        second_order=float(np.max(second[inner], initial=0.0)),
    )


def level_position(p: FrontProfile, level: float) -> float:
    """x at which the front crosses ``level``."""
    if p.level_map is not None:
        return p.level_map(level)
    support = p.support
    xs, phis = p.x_nodes[support][::-1], p.phi[support][::-1]
    if not phis[0] <= level <= phis[-1]:
        raise ConfigError("level outside the sampled range", key="level")
    return float(PchipInterpolator(phis, xs)(level))


@lru_cache(maxsize=32)
def profile_interpolant(p: FrontProfile) -> PchipInterpolator:
    return PchipInterpolator(p.x_nodes, p.phi, extrapolate=False)


def shifted_profile(p: FrontProfile, s: float) -> np.ndarray:
    """phi(x - s) on the profile nodes, constant beyond the grid ends."""
    shifted = profile_interpolant(p)(p.x_nodes - s)
    shifted = np.where(p.x_nodes - s < p.x_nodes[0], p.phi[0], shifted)
    return np.where(p.x_nodes - s > p.x_nodes[-1], 0.0, shifted)


def ratio_values(p: FrontProfile) -> np.ndarray:
    """D(phi) phi_xx / phi_x on the support via -f/phi_x - D'(phi) phi_x, 0 elsewhere."""
    out = np.zeros(p.n_nodes)
    support = p.support & (p.phi_x != 0.0)
    values = eval_kinetics(p.kinetics, p.phi[support])
    out[support] = -values.f / p.phi_x[support] - values.Dp * p.phi_x[support]
    return out


def ratio_bound_sup(p: FrontProfile) -> RatioBound:
    """Sup of |D(phi) phi_xx / phi_x| and its limits at -infinity and at omega0."""
    support = p.support & (p.phi_x != 0.0)
    ratio = np.abs(ratio_values(p)[support])
    if ratio.size < 3:
        raise ProfileError("insufficient tail", nodes=int(ratio.size))
    s = p.omega0 - p.x_nodes[support]
    # the ratio is odd in omega0 - x; extrapolate the last nodes in 1, s, s^3
    near, values_near = s[-4:], ratio[-4:]
    basis = np.column_stack([np.ones_like(near), near, near ** 3])
    intercept = np.linalg.lstsq(basis, values_near, rcond=None)[0][0]
    values = eval_kinetics(p.kinetics, 1.0)
    return RatioBound(
        sup_value=float(np.max(ratio)),
        limit_left_infinity=float(ratio[0]),
        limit_at_omega0=float(abs(intercept)),
        analytic_left_limit=float(np.sqrt(-values.fp * values.D)),
    )


def asymptotic_rates(p: FrontProfile) -> AsymptoticRates:
    """
    Analytic decay rates of the front and their measured counterparts:
    slope of log(1 - phi) on the far-left tail, and the coefficient of
    (omega0 - x)^2 in phi near the arrival point.
    """
    k = p.kinetics
    at_one, at_zero = eval_kinetics(k, 1.0), eval_kinetics(k, 0.0)
    eta = np.sqrt(-at_one.fp / at_one.D)
    a0 = np.sqrt(-(2.0 / 3.0) * at_zero.fp / at_zero.Dp)
    curvature = -at_zero.fp / (3.0 * at_zero.Dp)

    w = 1.0 - p.phi
    tail = (p.x_nodes < p.anchor.x) & (w <= 1e-3) & (w > 0.0)
    if np.count_nonzero(tail) < 10:
        raise ProfileError("insufficient tail", side="left", nodes=int(np.count_nonzero(tail)))
    eta_measured = np.polyfit(p.x_nodes[tail], np.log(w[tail]), 1)[0]

    s = p.omega0 - p.x_nodes
    near = p.support & (s <= ARRIVAL_WINDOW)
    if np.count_nonzero(near) < ARRIVAL_FIT_NODES:
        # coarse grids: widen to the nodes closest to omega0
        last = np.flatnonzero(p.support)[-ARRIVAL_FIT_NODES:]
        if last.size < ARRIVAL_FIT_NODES:
            raise ProfileError("insufficient tail", side="arrival", nodes=int(last.size))
        near = np.zeros_like(p.support)
        near[last] = True
    basis = np.column_stack([s[near] ** 2, s[near] ** 4])
    c2 = np.linalg.lstsq(basis, p.phi[near], rcond=None)[0][0]

    small = p.support & (p.phi <= 0.05)
    b0 = float("nan")
    if np.count_nonzero(small) >= 3:
        b0 = float(np.polyfit(p.phi[small], p.phi_x[small] / np.sqrt(p.phi[small]), 1)[0])

    return AsymptoticRates(
        eta=float(eta),
        a0=float(a0),
        curvature_limit=float(curvature),
        ratio_sup=ratio_bound_sup(p).sup_value,
        eta_measured=float(eta_measured),
        a0_measured=float(2.0 * np.sqrt(c2)),
        curvature_measured=float(2.0 * c2),
        b0_measured=b0,
    )


def arrival_convergence(
    k: KineticsPair, phi_at_zero: float = DEFAULT_PHI_AT_ZERO, panels: Sequence[int] = (16, 32, 64),
) -> ArrivalConvergence:
    """omega0 by composite Simpson in sigma at successively doubled panel counts."""
    integrand = _FrontIntegrand(k)
    sigma0 = np.sqrt(phi_at_zero)
    values = []
    for n in panels:
        sigma = np.linspace(0.0, sigma0, n + 1)
        values.append(float(simpson(integrand.sigma_rate(sigma), x=sigma)))
    order = float("nan")
    if len(values) >= 3:
        d1, d2 = abs(values[-3] - values[-2]), abs(values[-2] - values[-1])
        if d1 > 0.0 and d2 > 0.0:
            order = float(np.log2(d1 / d2))
    return ArrivalConvergence(panels=tuple(panels), omega0_values=tuple(values), order=order)
