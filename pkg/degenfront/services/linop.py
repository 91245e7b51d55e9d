"""
Finite-difference discretization of the linearized operator

    L_eps u = (D_eps(phi) u)_xx + f'(phi) u,    D_eps = D + eps,

on the interior nodes of a front profile with homogeneous Dirichlet ends, plus
the weighted quadratic form <u, D(phi) L u> and the Fredholm borders.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import io as sio
from scipy import sparse
from scipy.integrate import trapezoid

from degenfront.exceptions import DiscretizationError
from degenfront.schemas.kinetics import KineticsPair
from degenfront.services.kinetics import eval_kinetics
from degenfront.services.profile import FrontProfile, ratio_values

logger = logging.getLogger(__name__)

UNIFORM_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class OperatorDiscretization:
    x: np.ndarray  # interior nodes
    L_matrix: np.ndarray
    diffusion_matrix: np.ndarray  # second difference of D_eps * u
    reaction_diag: np.ndarray  # f'(phi)
    weight: np.ndarray  # D(phi), without eps
    epsilon: float
    h: float
    profile: Optional[FrontProfile] = None

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def phi_x(self) -> np.ndarray:
        if self.profile is None:
            raise DiscretizationError("discretization has no profile attached")
        return np.asarray(self.profile.phi_x[1:-1])

    @property
    def omega0(self) -> float:
        return self.profile.omega0 if self.profile is not None else float("inf")

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """Trapezoidal inner product; the Dirichlet end values are zero."""
        return float(self.h * np.dot(u, v))

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(self.h * np.dot(u, u)))

    def energy_norm(self, u: np.ndarray) -> float:
        """Norm weighted by D_eps(phi), in which L_matrix is self-adjoint."""
        return float(np.sqrt(self.h * np.dot(self.weight + self.epsilon, u * u)))

    def bands(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(upper, main, lower) diagonals of L_matrix"""
        return np.diagonal(self.L_matrix, 1), np.diagonal(self.L_matrix).copy(), np.diagonal(self.L_matrix, -1)


def second_difference(n: int, h: float) -> np.ndarray:
    """Dense Dirichlet second-difference matrix on n interior nodes."""
    ones = np.ones(n)
    return sparse.diags([ones[:-1], -2.0 * ones, ones[:-1]], [-1, 0, 1]).toarray() / (h * h)


def assemble_from_coefficients(
    weight: np.ndarray,
    reaction: np.ndarray,
    h: float,
    epsilon: float = 0.0,
    x: Optional[np.ndarray] = None,
    profile: Optional[FrontProfile] = None,
) -> OperatorDiscretization:
    """
    Assemble u -> (second difference of (weight + eps) u) + reaction u.

    Columns where weight + eps vanishes reduce to the reaction entry, so the
    degenerate part of the grid is exactly diagonal.
    """
    weight = np.asarray(weight, dtype=float)
    reaction = np.asarray(reaction, dtype=float)
    if epsilon < 0:
        raise DiscretizationError("epsilon must be non-negative", epsilon=epsilon)
    if weight.shape != reaction.shape or weight.ndim != 1:
        raise DiscretizationError("weight and reaction must be matching vectors")
    n = weight.size
    diffusion = second_difference(n, h) * (weight + epsilon)[np.newaxis, :]
    L = diffusion + np.diag(reaction)
    nodes = x if x is not None else h * np.arange(1, n + 1)
    return OperatorDiscretization(
        x=np.asarray(nodes, dtype=float),
        L_matrix=L,
        diffusion_matrix=diffusion,
        reaction_diag=reaction,
        weight=weight,
        epsilon=float(epsilon),
        h=float(h),
        profile=profile,
    )


def assemble_operator(p: FrontProfile, epsilon: float = 0.0) -> OperatorDiscretization:
    """Second-order tridiagonal discretization of L_eps on the interior profile nodes."""
    spacing = np.diff(p.x_nodes)
    if not np.allclose(spacing, spacing[0], rtol=UNIFORM_RTOL, atol=0.0):
        raise DiscretizationError("non-uniform grid", spread=float(np.ptp(spacing)))
    values = eval_kinetics(p.kinetics, p.phi[1:-1])
    weight = np.where(p.phi[1:-1] > 0.0, values.D, 0.0)
    d = assemble_from_coefficients(weight, values.fp, p.h, epsilon, x=p.x_nodes[1:-1], profile=p)
    logger.debug("assembled operator n=%d eps=%g h=%.3e", d.n, epsilon, d.h)
    return d


def apply_L(d: OperatorDiscretization, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (d.n,):
        raise DiscretizationError("dimension mismatch", expected=d.n, got=u.shape)
    return d.L_matrix @ u


def weighted_form(p: FrontProfile, u: np.ndarray, method: str = "quotient") -> float:
    """
    Q(u) = -int_{x < omega0} G^2 dx with

        G = [D(phi) u]_x - D'(phi) phi_x u - (D(phi) phi_xx / phi_x) u = D(phi) phi_x (u / phi_x)_x.

    ``method="quotient"`` differences u / phi_x on the support, which vanishes
    identically for u proportional to phi_x; ``method="bracket"`` differences
    D(phi) u and uses the bounded ratio from the profile. ``u`` lives on the
    interior nodes.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (p.n_nodes - 2,):
        raise DiscretizationError("dimension mismatch", expected=p.n_nodes - 2, got=u.shape)
    full = np.concatenate([[0.0], u, [0.0]])
    support = p.support & (p.phi_x != 0.0)
    values = eval_kinetics(p.kinetics, p.phi)
    integrand = np.zeros(p.n_nodes)
    if method == "quotient":
        idx = np.flatnonzero(support)
        if idx.size < 3:
            raise DiscretizationError("support too short for the weighted form", nodes=int(idx.size))
        quotient = full[idx] / p.phi_x[idx]
        integrand[idx] = values.D[idx] * p.phi_x[idx] * np.gradient(quotient, p.h, edge_order=2)
    elif method == "bracket":
        weighted = np.where(support, values.D, 0.0) * full
        bracket = np.gradient(weighted, p.h) - (values.Dp * p.phi_x + ratio_values(p)) * full
        integrand = np.where(support, bracket, 0.0)
    else:
        raise DiscretizationError(f"unknown weighted form method '{method}'")
    return float(-trapezoid(integrand ** 2, dx=p.h))


def quadratic_form(d: OperatorDiscretization, u: np.ndarray) -> float:
    """<u, W L u> with the trapezoidal inner product"""
    return d.inner(u, d.weight * apply_L(d, u))


def symmetrized_bands(d: OperatorDiscretization) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Diagonal and off-diagonal of S = V^(1/2) A V^(1/2) + F on the nodes where
    V = weight + eps is positive, together with that node mask.

    L restricted to those nodes equals V^(-1/2) S V^(1/2); the remaining
    columns of L are diagonal, so sigma(L) = sigma(S) + reaction entries there.
    """
    diffusivity = d.weight + d.epsilon
    active = diffusivity > 0.0
    idx = np.flatnonzero(active)
    if idx.size and idx[-1] - idx[0] + 1 != idx.size:
        raise DiscretizationError("positive diffusivity must occupy one contiguous block")
    root = np.sqrt(diffusivity[active])
    diag = -2.0 * diffusivity[active] / d.h ** 2 + d.reaction_diag[active]
    off = root[:-1] * root[1:] / d.h ** 2
    return diag, off, active


def fredholm_borders(
    k: KineticsPair, epsilon: float, k_samples: Union[Sequence[float], np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    lambda_plus(k) = -eps k^2 + f'(0) and lambda_minus(k) = -(eps + D(1)) k^2 + f'(1).
    """
    ks = np.asarray(k_samples, dtype=float)
    at_zero, at_one = eval_kinetics(k, 0.0), eval_kinetics(k, 1.0)
    plus = -epsilon * ks ** 2 + at_zero.fp
    minus = -(epsilon + at_one.D) * ks ** 2 + at_one.fp
    return plus, minus


def smooth_random_vector(d: OperatorDiscretization, rng: np.random.Generator, bumps: int = 8) -> np.ndarray:
    """Sum of random Gaussian bumps centred in the front core, zero at the ends."""
    x = d.x
    right = min(d.omega0, x[-1])
    left = max(x[0] + 0.25 * (right - x[0]), x[0])
    centres = rng.uniform(left, right, bumps)
    widths = rng.uniform(0.5, 2.0, bumps)
    amplitudes = rng.normal(size=bumps)
    u = np.sum(amplitudes[:, None] * np.exp(-((x[None, :] - centres[:, None]) / widths[:, None]) ** 2), axis=0)
    # taper so the field vanishes at both Dirichlet ends
    span = x[-1] - x[0]
    taper = np.sin(np.pi * (x - x[0] + d.h) / (span + 2.0 * d.h))
    return u * taper


def write_matrix_market(d: OperatorDiscretization, path: Union[str, Path]) -> Path:
    """Dump L_matrix in Matrix Market coordinate format."""
    path = Path(path)
    sio.mmwrite(str(path), sparse.coo_matrix(d.L_matrix), comment=f"eps={d.epsilon!r} h={d.h!r}", precision=17)
    return path if path.suffix == ".mtx" else path.with_name(path.name + ".mtx")
