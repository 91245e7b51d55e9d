"""
Eigen-analysis of the discretized linearized operator: the translation zero
mode, the spectral gap, localization diagnostics used as a proxy for the
point/essential split, the eps-regularization sweep and the grid-refinement
oracle for the first non-zero eigenvalue.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from degenfront.constants.defaults import (
    BETA_MARGIN,
    BORDER_SLACK,
    DEFAULT_LEFT_TOL,
    DEFAULT_PHI_AT_ZERO,
    DEFAULT_RIGHT_PAD,
    LEFT_WINDOW,
    PARTICIPATION_DELOCALIZED,
    UNSTABLE_TOL,
    ZERO_TOL_FLOOR,
)
from degenfront.exceptions import ConfigError, SpectrumError
from degenfront.schemas.kinetics import KineticsPair
from degenfront.schemas.reports import EigenRow, SpectrumClassification, SpectrumSummary, SweepEntry, SweepSummary
from degenfront.services.kinetics import eval_kinetics, mu1
from degenfront.services.linop import (
    OperatorDiscretization,
    assemble_operator,
    fredholm_borders,
    symmetrized_bands,
    weighted_form,
)
from degenfront.services.profile import FrontProfile, GridExtent, solve_profile

logger = logging.getLogger(__name__)

CONTINUITY_TOL = 0.05
MONOTONE_ALLOWANCE = 0.10
BORDER_WAVENUMBERS = np.linspace(0.0, 10.0, 101)


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray  # complex, sorted by descending real part
    eigenvectors: Optional[np.ndarray]
    mass_left: np.ndarray
    mass_right: np.ndarray
    participation: np.ndarray
    alignment: np.ndarray
    essential_proxy: np.ndarray
    index0: int
    index1: int
    zero_mode_alignment: float
    zero_mode_rayleigh: float
    mu1: float
    operator_scale: float
    zero_tol: float
    n: int
    epsilon: float
    h: float
    border_max: float
    borders: Tuple[np.ndarray, np.ndarray] = field(repr=False, default=(np.empty(0), np.empty(0)))

    @property
    def lambda0(self) -> complex:
        return complex(self.eigenvalues[self.index0])

    @property
    def lambda1(self) -> complex:
        return complex(self.eigenvalues[self.index1])

    @property
    def gap(self) -> float:
        return float(-self.lambda1.real)

    @property
    def beta(self) -> float:
        return float(min(self.gap, self.mu1) * BETA_MARGIN)

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag)))

    @property
    def zero_count(self) -> int:
        return int(np.count_nonzero(np.abs(self.eigenvalues) <= self.zero_tol))

    @property
    def unstable_count(self) -> int:
        others = np.delete(self.eigenvalues.real, self.index0)
        return int(np.count_nonzero(others > UNSTABLE_TOL))

    @property
    def essential_ceiling(self) -> Optional[float]:
        """Largest real part among delocalized (essential-proxy) eigenvalues, zero mode excluded."""
        mask = self.essential_proxy.copy()
        mask[self.index0] = False
        return float(np.max(self.eigenvalues.real[mask])) if np.any(mask) else None

    @property
    def left_ceiling(self) -> Optional[float]:
        """Largest real part among eigenvectors with half their mass in the far-left window."""
        mask = self.mass_left >= 0.5
        return float(np.max(self.eigenvalues.real[mask])) if np.any(mask) else None

    @property
    def zero_mode(self) -> np.ndarray:
        if self.eigenvectors is None:
            raise SpectrumError("report was computed without eigenvectors")
        return np.real(self.eigenvectors[:, self.index0])

    def summary(self) -> SpectrumSummary:
        return SpectrumSummary(
            n=self.n,
            epsilon=self.epsilon,
            h=self.h,
            lambda0=(self.lambda0.real, self.lambda0.imag),
            zero_mode_alignment=self.zero_mode_alignment,
            lambda1=(self.lambda1.real, self.lambda1.imag),
            gap=self.gap,
            mu1=self.mu1,
            beta=self.beta,
            max_imag=self.max_imag,
            operator_scale=self.operator_scale,
            zero_tol=self.zero_tol,
            zero_count=self.zero_count,
            unstable_count=self.unstable_count,
            essential_ceiling=self.essential_ceiling,
        )

    def rows(self) -> List[EigenRow]:
        return [
            EigenRow(
                re=float(lam.real),
                im=float(lam.imag),
                localization_mass_left=float(self.mass_left[i]),
                mass_right=float(self.mass_right[i]),
                participation=float(self.participation[i]),
                alignment_with_phi_x=float(self.alignment[i]),
                essential_proxy=bool(self.essential_proxy[i]),
            )
            for i, lam in enumerate(self.eigenvalues)
        ]


def zero_tolerance(d: OperatorDiscretization) -> float:
    """max(5e-3, 10 h^2 * coefficient scale)"""
    scale = max(float(np.max(d.weight + d.epsilon)), float(np.max(np.abs(d.reaction_diag))))
    return max(ZERO_TOL_FLOOR, 10.0 * d.h ** 2 * scale)


def sort_eigenvalues(values: np.ndarray) -> np.ndarray:
    """Order: descending real part, ties broken by ascending imaginary part."""
    return np.lexsort((values.imag, -values.real))


def _diagnostics(d: OperatorDiscretization, vectors: np.ndarray):
    power = np.abs(vectors) ** 2
    total = power.sum(axis=0)
    total = np.where(total > 0.0, total, 1.0)
    left_edge = d.profile.x_nodes[0] if d.profile is not None else d.x[0] - d.h
    mass_left = power[d.x < left_edge + LEFT_WINDOW].sum(axis=0) / total
    mass_right = power[d.x > d.omega0].sum(axis=0) / total
    participation = total ** 2 / (d.n * np.sum(power ** 2, axis=0))
    if d.profile is not None:
        phi_x = d.phi_x
        scale = np.linalg.norm(phi_x) * np.sqrt(total)
        alignment = np.abs(phi_x @ vectors) / np.where(scale > 0.0, scale, 1.0)
    else:
        alignment = np.zeros(vectors.shape[1])
    return mass_left, mass_right, participation, alignment


def eigen_spectrum(d: OperatorDiscretization, vectors: bool = True) -> SpectrumReport:
    """Full dense nonsymmetric eigendecomposition of L_matrix and its diagnostics."""
    try:
        values, vecs = linalg.eig(d.L_matrix, right=True, left=False, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SpectrumError("eigensolver did not converge", n=d.n, epsilon=d.epsilon, reason=str(exc)) from exc

    order = sort_eigenvalues(values)
    values, vecs = values[order], vecs[:, order]
    mass_left, mass_right, participation, alignment = _diagnostics(d, vecs)
    essential = (participation >= PARTICIPATION_DELOCALIZED) | (mass_right >= 0.5)

    if d.n < 2:
        raise SpectrumError("at least two interior nodes required", n=d.n)
    index0 = int(np.argmin(np.abs(values)))
    index1 = 0 if index0 != 0 else 1

    rayleigh = float("nan")
    if d.profile is not None and d.epsilon == 0.0:
        v0 = np.real(vecs[:, index0])
        rayleigh = abs(weighted_form(d.profile, v0)) / d.norm(v0) ** 2

    k = d.profile.kinetics if d.profile is not None else None
    borders = fredholm_borders(k, d.epsilon, BORDER_WAVENUMBERS) if k is not None else (np.empty(0), np.empty(0))
    border_max = float(max(np.max(borders[0]), np.max(borders[1]))) if k is not None else float("nan")

    report = SpectrumReport(
        eigenvalues=values,
        eigenvectors=vecs if vectors else None,
        mass_left=mass_left,
        mass_right=mass_right,
        participation=participation,
        alignment=alignment,
        essential_proxy=essential,
        index0=index0,
        index1=index1,
        zero_mode_alignment=float(alignment[index0]),
        zero_mode_rayleigh=rayleigh,
        mu1=mu1(k) if k is not None else float(np.min(np.abs(d.reaction_diag[[0, -1]]))),
        operator_scale=float(np.max(np.abs(d.L_matrix))),
        zero_tol=zero_tolerance(d),
        n=d.n,
        epsilon=d.epsilon,
        h=d.h,
        border_max=border_max,
        borders=borders,
    )
    logger.info(
        "spectrum n=%d eps=%g: lambda0=%.3e lambda1=%.6f max_imag=%.2e",
        d.n, d.epsilon, report.lambda0.real, report.lambda1.real, report.max_imag,
    )
    return report


def real_spectrum(d: OperatorDiscretization) -> np.ndarray:
    """
    Eigenvalues of L_matrix, descending, from the symmetric tridiagonal
    similarity transform of the positive-diffusivity block plus the diagonal
    entries of the degenerate columns.
    """
    diag, off, active = symmetrized_bands(d)
    parts = [d.reaction_diag[~active]]
    if diag.size:
        try:
            parts.append(linalg.eigvalsh_tridiagonal(diag, off))
        except linalg.LinAlgError as exc:
            raise SpectrumError("tridiagonal eigensolver did not converge", n=d.n, reason=str(exc)) from exc
    return np.sort(np.concatenate(parts))[::-1]


def classify_spectrum(r: SpectrumReport, k: KineticsPair) -> SpectrumClassification:
    notes: List[str] = []
    others = np.delete(r.eigenvalues.real, r.index0)
    beta = r.beta
    zero_ok = abs(r.lambda0) <= r.zero_tol
    stable = bool(zero_ok and np.all(others <= -beta) and beta > 0.0)
    zero_simple = r.zero_count == 1
    if not zero_ok:
        notes.append(f"eigenvalue nearest zero {r.lambda0.real:.3e} outside tolerance {r.zero_tol:.1e}")
    if r.zero_count > 1:
        notes.append(f"{r.zero_count} eigenvalues within the zero tolerance")
    if r.unstable_count:
        notes.append(f"{r.unstable_count} eigenvalue(s) with Re > {UNSTABLE_TOL:g}")
    expected_mu1 = mu1(k)
    if abs(expected_mu1 - r.mu1) > 1e-12:
        notes.append(f"mu1 {r.mu1:.6g} differs from the kinetics value {expected_mu1:.6g}")
    ceiling = r.essential_ceiling
    if ceiling is not None and np.isfinite(r.border_max) and ceiling > r.border_max + BORDER_SLACK:
        notes.append(f"essential-proxy eigenvalue {ceiling:.4f} above the border maximum {r.border_max:.4f}")
    left = r.left_ceiling
    at_one = eval_kinetics(k, 1.0).fp
    if left is not None and left > at_one + BORDER_SLACK:
        notes.append(f"left-localized eigenvalue {left:.4f} above f'(1) = {at_one:.4f}")
    return SpectrumClassification(stable=stable, gap_ok=beta > 0.0, zero_simple=zero_simple, notes=notes)


def _thread_cap() -> int:
    raw = os.getenv("DEGENFRONT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"DEGENFRONT_THREADS must be an integer, got '{raw}'", key="DEGENFRONT_THREADS")


@dataclass(frozen=True)
class SweepResult:
    epsilons: Tuple[float, ...]  # as requested, followed by 0.0
    reports: Tuple[SpectrumReport, ...]
    summary: SweepSummary


def epsilon_sweep(p: FrontProfile, epsilons: Sequence[float], threads: Optional[int] = None) -> SweepResult:
    """
    One eigensolve per eps (descending) plus eps = 0, run in a thread pool
    capped by DEGENFRONT_THREADS. Reports come back in input order.
    """
    eps = [float(e) for e in epsilons]
    if any(e <= 0.0 for e in eps):
        raise ConfigError("sweep epsilons must be positive", key="spectral.epsilons")
    if any(a <= b for a, b in zip(eps, eps[1:])):
        raise ConfigError("sweep epsilons must be sorted descending", key="spectral.epsilons")
    eps.append(0.0)

    def solve(e: float) -> SpectrumReport:
        return eigen_spectrum(assemble_operator(p, e), vectors=False)

    workers = threads or _thread_cap()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(solve, eps))

    base = reports[-1]
    entries: List[SweepEntry] = []
    for e, report in zip(eps, reports):
        ceiling = report.essential_ceiling
        entries.append(SweepEntry(
            epsilon=e,
            lambda1=report.lambda1.real,
            lambda1_shift=abs(report.lambda1.real - base.lambda1.real),
            unstable_count=report.unstable_count,
            essential_ceiling=ceiling,
            border_max=report.border_max,
            ceiling_ok=ceiling is None or ceiling <= report.border_max + BORDER_SLACK,
        ))

    shifts = [entry.lambda1_shift for entry in entries[:-1]]
    monotone = all(b <= a * (1.0 + MONOTONE_ALLOWANCE) + 1e-12 for a, b in zip(shifts, shifts[1:]))
    continuity = bool(shifts) and shifts[-1] <= CONTINUITY_TOL
    summary = SweepSummary(entries=entries, continuity_ok=continuity, monotone_ok=monotone)
    logger.info("eps sweep over %s: continuity=%s monotone=%s", eps, continuity, monotone)
    return SweepResult(epsilons=tuple(eps), reports=tuple(reports), summary=summary)


@dataclass(frozen=True)
class RefinementOracle:
    node_counts: Tuple[int, ...]
    lambda1: Tuple[float, ...]
    order: float
    extrapolated: float

    @property
    def relative_error(self) -> float:
        """Distance of the finest level from the extrapolated value"""
        return abs(self.lambda1[-1] - self.extrapolated) / abs(self.extrapolated)


def first_nonzero(values: np.ndarray) -> float:
    """Rightmost eigenvalue once the one nearest zero is removed."""
    values = np.sort(np.real(values))[::-1]
    return float(np.delete(values, np.argmin(np.abs(values)))[0])


def refinement_oracle(
    k: KineticsPair,
    base_nodes: int = 1001,
    levels: int = 3,
    phi_at_zero: float = DEFAULT_PHI_AT_ZERO,
    extent: Optional[GridExtent] = None,
) -> RefinementOracle:
    """
    lambda1 at n, 2n - 1, 4n - 3, ... nodes (h halved each level), the observed
    convergence order and the Richardson extrapolation for a second-order scheme.
    """
    if levels < 3:
        raise ConfigError("the refinement oracle needs at least 3 levels", key="spectral.n_refinements")
    extent = extent or GridExtent(DEFAULT_LEFT_TOL, DEFAULT_RIGHT_PAD)
    counts = tuple((base_nodes - 1) * 2 ** i + 1 for i in range(levels))
    lambdas = []
    for n in counts:
        p = solve_profile(k, phi_at_zero, extent, n)
        lambdas.append(first_nonzero(real_spectrum(assemble_operator(p))))
    a, b, c = lambdas[-3:]
    order = float("nan")
    if abs(b - c) > 0.0 and abs(a - b) > 0.0:
        order = float(np.log2(abs(a - b) / abs(b - c)))
    extrapolated = c + (c - b) / 3.0
    logger.info("refinement oracle %s: lambda1=%s order=%.2f extrapolated=%.8f", counts, lambdas, order, extrapolated)
    return RefinementOracle(node_counts=counts, lambda1=tuple(lambdas), order=order, extrapolated=float(extrapolated))
