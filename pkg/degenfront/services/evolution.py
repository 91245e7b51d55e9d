"""
Nonlinear perturbation runs around the stationary front.

The total state v = phi + u obeys v_t = (Phi(v))_xx + f(v) with the Kirchhoff
transform Phi(v) = int_0^v D, so the conservation-form face flux
(Phi(v_{i+1}) - Phi(v_i)) / h uses the secant average of D across the face.
The perturbation is advanced in well-balanced form
u_t = N_h(phi + u) - N_h(phi): u = 0 is an exact discrete equilibrium.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg, stats
from scipy.optimize import minimize_scalar

from degenfront.constants.defaults import (
    ADVISORY_BAND,
    MAX_PERTURBATION,
    RANGE_ABORT,
    RANGE_GUARD,
    SHIFT_BRACKET,
    SHIFT_XTOL,
)
from degenfront.exceptions import ConfigError, EvolutionError
from degenfront.services.kinetics import eval_kinetics, kirchhoff
from degenfront.services.profile import FrontProfile, shifted_profile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RangeFlag:
    t: float
    min_v: float
    max_v: float
    extension_dependent: bool  # excursion reached the degenerate region x > omega0


@dataclass(frozen=True)
class ShiftEstimate:
    shift: float
    distance: float
    at_boundary: bool


@dataclass(frozen=True, eq=False)
class NonlinearRun:
    times: np.ndarray
    shift_track: np.ndarray
    residual_track: np.ndarray
    min_v: np.ndarray
    max_v: np.ndarray
    range_flags: Tuple[RangeFlag, ...]
    snapshot_times: np.ndarray
    snapshots: np.ndarray  # total state v on the full grid
    final_u: np.ndarray  # interior perturbation
    boundary_warnings: int = 0
    notes: Tuple[str, ...] = field(default=())

    @property
    def final_v(self) -> np.ndarray:
        return self.snapshots[-1]


def _l2(u: np.ndarray, h: float) -> float:
    return float(np.sqrt(h * np.dot(u, u)))


def modulate_shift(v_snapshot: np.ndarray, p: FrontProfile) -> ShiftEstimate:
    """
    argmin over s in [-2, 2] of || v - phi(. - s) || with phi(. - s) from the
    monotone cubic interpolant, by bounded Brent search (golden section with
    parabolic steps) to 1e-6.
    """
    v = np.asarray(v_snapshot, dtype=float)
    if v.shape != p.x_nodes.shape:
        raise ConfigError("snapshot must live on the profile grid", key="v_snapshot", n=p.n_nodes, got=v.shape)
    lo, hi = SHIFT_BRACKET

    def distance(s: float) -> float:
        diff = v - shifted_profile(p, s)
        return float(p.h * np.dot(diff, diff))

    result = minimize_scalar(distance, bounds=(lo, hi), method="bounded", options={"xatol": SHIFT_XTOL})
    shift = float(result.x)
    at_boundary = min(shift - lo, hi - shift) <= 10.0 * SHIFT_XTOL
    if at_boundary:
        logger.warning("⚠️ shift minimizer %.6f at the bracket boundary", shift)
    return ShiftEstimate(shift=shift, distance=float(np.sqrt(result.fun)), at_boundary=at_boundary)


def _step_matrix(weight: np.ndarray, dt: float, h: float) -> np.ndarray:
    """Banded I - dt A diag(weight) for solve_banded((1, 1), ...)."""
    col = dt * weight / h ** 2
    ab = np.zeros((3, weight.size))
    ab[0, 1:] = -col[1:]
    ab[1] = 1.0 + 2.0 * col
    ab[2, :-1] = -col[:-1]
    return ab


def _second_difference(w: np.ndarray, h: float) -> np.ndarray:
    """Dirichlet-zero second difference of an interior vector."""
    padded = np.concatenate([[0.0], w, [0.0]])
    return (padded[2:] - 2.0 * padded[1:-1] + padded[:-2]) / h ** 2


def evolve_nonlinear(
    p: FrontProfile,
    u0: np.ndarray,
    t_end: float,
    dt: float,
    record_every: int = 1,
    snapshot_every: int = 0,
    track_shift: bool = True,
) -> NonlinearRun:
    """
    Frozen-coefficient IMEX stepping of the perturbation u on interior nodes:

        (I - dt A W^n) u+ = u + dt [A (Phi(phi + u) - Phi(phi) - W^n u) + f(phi + u) - f(phi)]

    with W^n = D(phi + u). Both end values of v stay pinned to the front's.
    """
    k = p.kinetics
    phi = np.array(p.phi[1:-1])
    u = np.array(u0, dtype=float)
    if u.shape != phi.shape:
        raise ConfigError("initial perturbation must live on the interior nodes", key="u0", n=phi.size, got=u.shape)
    if np.max(np.abs(u), initial=0.0) > MAX_PERTURBATION:
        raise ConfigError(f"perturbation sup-norm must not exceed {MAX_PERTURBATION}", key="u0")
    if not dt > 0.0 or not t_end > 0.0:
        raise ConfigError("dt and t_end must be positive", key="evolution.dt")

    h = p.h
    x = p.x_nodes
    interior_x = x[1:-1]
    phi_kirchhoff = kirchhoff(k, phi)
    f_phi = eval_kinetics(k, phi).f
    left, right = float(p.phi[0]), float(p.phi[-1])

    def total(u_int: np.ndarray) -> np.ndarray:
        return np.concatenate([[left], phi + u_int, [right]])

    steps = int(np.ceil(t_end / dt - 1e-9))
    times: List[float] = []
    shifts: List[float] = []
    residuals: List[float] = []
    mins: List[float] = []
    maxs: List[float] = []
    flags: List[RangeFlag] = []
    snap_t: List[float] = []
    snaps: List[np.ndarray] = []
    boundary_hits = 0

    def record(step: int) -> None:
        nonlocal boundary_hits
        v = total(u)
        t = step * dt
        lo, hi = float(np.min(v)), float(np.max(v))
        if lo < -RANGE_GUARD or hi > 1.0 + RANGE_GUARD:
            outside = (v < -RANGE_GUARD) | (v > 1.0 + RANGE_GUARD)
            flags.append(RangeFlag(t=t, min_v=lo, max_v=hi, extension_dependent=bool(np.any(outside & (x > p.omega0)))))
        if lo < -RANGE_ABORT or hi > 1.0 + RANGE_ABORT:
            raise EvolutionError("range abort", t=t, min_v=lo, max_v=hi)
        if step % record_every == 0 or step == steps:
            times.append(t)
            mins.append(lo)
            maxs.append(hi)
            if track_shift:
                estimate = modulate_shift(v, p)
                boundary_hits += estimate.at_boundary
                shifts.append(estimate.shift)
                residuals.append(estimate.distance)
            else:
                shifts.append(0.0)
                residuals.append(_l2(v - p.phi, h))
        if (snapshot_every and step % snapshot_every == 0) or step == steps:
            snap_t.append(t)
            snaps.append(v)

    record(0)
    for step in range(1, steps + 1):
        v = phi + u
        values = eval_kinetics(k, v)
        weight = values.D
        delta_kirchhoff = kirchhoff(k, v) - phi_kirchhoff
        rhs = u + dt * (_second_difference(delta_kirchhoff - weight * u, h) + values.f - f_phi)
        try:
            u = linalg.solve_banded((1, 1), _step_matrix(weight, dt, h), rhs, check_finite=False)
        except (linalg.LinAlgError, ValueError) as exc:
            raise EvolutionError("solver failure", step=step, reason=str(exc)) from exc
        if not np.all(np.isfinite(u)):
            raise EvolutionError("solver failure", step=step, reason="non-finite state")
        record(step)

    notes = []
    if flags:
        notes.append(f"{len(flags)} range excursion(s) beyond [{-RANGE_GUARD:g}, {1 + RANGE_GUARD:g}]")
        if any(flag.extension_dependent for flag in flags):
            notes.append("excursions in x > omega0 depend on the polynomial extension of D and f")
    logger.info(
        "nonlinear run t_end=%g dt=%g: residual %.3e -> %.3e, shift %.4f -> %.4f",
        t_end, dt, residuals[0], residuals[-1], shifts[0], shifts[-1],
    )
    return NonlinearRun(
        times=np.array(times),
        shift_track=np.array(shifts),
        residual_track=np.array(residuals),
        min_v=np.array(mins),
        max_v=np.array(maxs),
        range_flags=tuple(flags),
        snapshot_times=np.array(snap_t),
        snapshots=np.array(snaps),
        final_u=u,
        boundary_warnings=int(boundary_hits),
        notes=tuple(notes),
    )


def gaussian_bump(p: FrontProfile, amplitude: float, center: float = 0.0, width: float = 0.5) -> np.ndarray:
    """amplitude * exp(-((x - center) / width)^2) on the interior nodes."""
    x = p.x_nodes[1:-1]
    return amplitude * np.exp(-((x - center) / width) ** 2)


def shift_perturbation(p: FrontProfile, s: float) -> np.ndarray:
    """phi(. - s) - phi on the interior nodes."""
    return (shifted_profile(p, s) - p.phi)[1:-1]


@dataclass(frozen=True)
class DecayAdvisory:
    rate: float
    beta: float
    relative_gap: float
    within_band: bool


def decay_advisory(run: NonlinearRun, beta: float) -> Optional[DecayAdvisory]:
    """
    Fitted decay rate of the residual track over the second half of the run,
    compared with beta. Advisory only: a miss is logged, never raised.
    """
    half = run.times >= 0.5 * run.times[-1]
    times, values = run.times[half], run.residual_track[half]
    keep = values > 0.0
    if np.count_nonzero(keep) < 3 or not beta > 0.0:
        return None
    fit = stats.linregress(times[keep], np.log(values[keep]))
    rate = float(-fit.slope)
    gap = abs(rate - beta) / beta
    advisory = DecayAdvisory(rate=rate, beta=float(beta), relative_gap=float(gap), within_band=gap <= ADVISORY_BAND)
    if not advisory.within_band:
        logger.warning("⚠️ nonlinear decay rate %.4f differs from beta %.4f by %.0f%%", rate, beta, 100 * gap)
    return advisory
