"""
Kinetics of the degenerate Nagumo equation.

Evaluates the diffusion D and bistable reaction f (with derivatives), the
potential D(phi) = int_0^phi D(u) f(u) du, the zero-speed balance condition and
the hypothesis checks on D and f.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, NamedTuple, Optional, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.optimize import brentq

from degenfront.constants.defaults import (
    BALANCE_TOL,
    HYPOTHESIS_MIN_SAMPLES,
    QUADRATURE_ABS_TOL,
    ROOT_TOL,
    Orientation,
    SpeedSign,
)
from degenfront.exceptions import BalanceError, ConfigError, QuadratureError
from degenfront.schemas.kinetics import (
    CubicReaction,
    DiffusionSpec,
    KineticsPair,
    QuadraticDiffusion,
)
from degenfront.schemas.reports import HypothesisReport, Violation

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class KineticsValues(NamedTuple):
    D: ArrayLike
    Dp: ArrayLike
    Dpp: ArrayLike
    f: ArrayLike
    fp: ArrayLike


@dataclass(frozen=True)
class KineticsPolynomials:
    D: Polynomial
    Dp: Polynomial
    Dpp: Polynomial
    f: Polynomial
    fp: Polynomial
    fpp: Polynomial
    kirchhoff: Polynomial  # Phi(v) = int_0^v D
    product: Polynomial  # D * f
    alpha: float


def _diffusion_polynomial(diffusion: DiffusionSpec) -> Polynomial:
    if isinstance(diffusion, QuadraticDiffusion):
        return Polynomial([0.0, diffusion.b, 1.0])
    return Polynomial(list(diffusion.coefficients))


def _cubic(alpha: float) -> Polynomial:
    # u (1 - u) (u - alpha) = -alpha u + (1 + alpha) u^2 - u^3
    return Polynomial([0.0, -alpha, 1.0 + alpha, -1.0])


def _interior_zero(poly: Polynomial) -> float:
    roots = poly.roots()
    interior = sorted(
        float(r.real) for r in np.atleast_1d(roots)
        if abs(r.imag) <= 1e-10 and 1e-8 < r.real < 1.0 - 1e-8
    )
    if not interior:
        return float("nan")
    return interior[len(interior) // 2]


@lru_cache(maxsize=128)
def kinetics_polynomials(k: KineticsPair) -> KineticsPolynomials:
    D = _diffusion_polynomial(k.diffusion)
    if isinstance(k.reaction, CubicReaction):
        f = _cubic(k.reaction.alpha)
        alpha = k.reaction.alpha
    else:
        f = Polynomial(list(k.reaction.coefficients))
        alpha = k.reaction.alpha if k.reaction.alpha is not None else _interior_zero(f)
    return KineticsPolynomials(
        D=D,
        Dp=D.deriv(1),
        Dpp=D.deriv(2),
        f=f,
        fp=f.deriv(1),
        fpp=f.deriv(2),
        kirchhoff=D.integ(),
        product=D * f,
        alpha=float(alpha),
    )


def _out(value: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else value


def eval_kinetics(k: KineticsPair, u: ArrayLike) -> KineticsValues:
    """
    Exact polynomial evaluation of D, D', D'', f, f' at u.

    Values outside [0, 1] use the polynomial extension, which the nonlinear
    stepper relies on for perturbed states.
    """
    polys = kinetics_polynomials(k)
    arr = np.asarray(u, dtype=float)
    return KineticsValues(
        D=_out(polys.D(arr), u),
        Dp=_out(polys.Dp(arr), u),
        Dpp=_out(polys.Dpp(arr), u),
        f=_out(polys.f(arr), u),
        fp=_out(polys.fp(arr), u),
    )


def kirchhoff(k: KineticsPair, v: ArrayLike) -> ArrayLike:
    """Phi(v) = int_0^v D(s) ds"""
    return _out(kinetics_polynomials(k).kirchhoff(np.asarray(v, dtype=float)), v)


def reaction_alpha(k: KineticsPair) -> float:
    return kinetics_polynomials(k).alpha


def mu1(k: KineticsPair) -> float:
    """min{|f'(0)|, |f'(1)|}"""
    fp = kinetics_polynomials(k).fp
    return float(min(abs(fp(0.0)), abs(fp(1.0))))


class PotentialD:
    """
    Evaluator for D(phi) = int_0^phi D(u) f(u) du.

    Two exact antiderivatives are kept: one expanded around 0 and one around 1,
    so the potential keeps full relative accuracy in both tails where it vanishes
    to third and second order respectively.
    """

    def __init__(self, product: Polynomial, value_at_one: Optional[float] = None):
        self.product = product
        self.lower = product.integ()
        # upper(w) = int_{1-w}^{1} D f du
        self.upper = product(Polynomial([1.0, -1.0])).integ()
        self.value_at_one = float(self.lower(1.0)) if value_at_one is None else float(value_at_one)

    def __call__(self, phi: ArrayLike) -> ArrayLike:
        arr = np.asarray(phi, dtype=float)
        value = np.where(arr > 0.5, self.value_at_one - self.upper(1.0 - arr), self.lower(arr))
        return _out(value, phi)

    def derivative(self, phi: ArrayLike) -> ArrayLike:
        return _out(self.product(np.asarray(phi, dtype=float)), phi)

    def is_balanced(self) -> bool:
        return abs(self.value_at_one) <= BALANCE_TOL

    def balanced(self) -> "PotentialD":
        """Copy with D(1) snapped to exactly zero."""
        if not self.is_balanced():
            raise BalanceError("potential is not balanced", value_at_one=self.value_at_one)
        return PotentialD(self.product, value_at_one=0.0)


@lru_cache(maxsize=128)
def potential(k: KineticsPair) -> PotentialD:
    return PotentialD(kinetics_polynomials(k).product)


def potential_D(k: KineticsPair, phi: float, method: str = "exact") -> float:
    """
    D(phi) for phi in [0, 1].

    ``method="exact"`` uses the polynomial antiderivative; ``"quadrature"`` runs
    adaptive Gauss-Kronrod quadrature to abs tol 1e-12.
    """
    if method == "exact":
        return float(potential(k)(phi))
    if method != "quadrature":
        raise ConfigError(f"unknown potential method '{method}'", key="method")

    product = kinetics_polynomials(k).product
    result = quad(lambda u: product(u), 0.0, phi, epsabs=QUADRATURE_ABS_TOL, epsrel=0.0, limit=200, full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3 or abserr > QUADRATURE_ABS_TOL:
        message = result[3] if len(result) > 3 else "error estimate above tolerance"
        raise QuadratureError(f"quadrature did not converge: {message}", achieved=abserr, phi=phi)
    return float(value)


def balance_alpha_for(diffusion: DiffusionSpec) -> float:
    """Cubic threshold alpha in (0, 1) with int_0^1 D(u) u (1-u) (u-alpha) du = 0."""
    D = _diffusion_polynomial(diffusion)

    def balance(alpha: float) -> float:
        return float((D * _cubic(alpha)).integ()(1.0))

    lo, hi = 0.0, 1.0
    if balance(lo) * balance(hi) >= 0.0:
        raise BalanceError("no balanced alpha", at_zero=balance(lo), at_one=balance(hi))
    alpha = brentq(balance, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    logger.debug("balanced alpha %.17g, residual %.3e", alpha, balance(alpha))
    return float(alpha)


def balance_alpha(b: float) -> float:
    """
    Balanced alpha for D(u) = u^2 + b u, cross-checked against (3b+2)/(5b+3).
    """
    if not b > 0:
        raise BalanceError("no balanced alpha", b=b, reason="b must be positive")
    alpha = balance_alpha_for(QuadraticDiffusion(b=b))
    closed = (3.0 * b + 2.0) / (5.0 * b + 3.0)
    if abs(alpha - closed) > 1e-10:
        logger.warning("⚠️ balance root %.17g disagrees with closed form %.17g (b=%g)", alpha, closed, b)
    return alpha


def speed_sign(k: KineticsPair, orientation: Orientation) -> SpeedSign:
    """
    Sign of the front speed c = -K D(1) (increasing) or c = K D(1) (decreasing).
    The constant K > 0 itself is never computed.
    """
    value = potential(k).value_at_one
    if abs(value) <= BALANCE_TOL:
        return SpeedSign.ZERO
    sign = np.sign(value)
    if Orientation(orientation) == Orientation.INCREASING:
        sign = -sign
    return SpeedSign.POSITIVE if sign > 0 else SpeedSign.NEGATIVE


def validate_hypotheses(k: KineticsPair, samples: int = 1000) -> HypothesisReport:
    """
    Check the sign conditions on D and f on a uniform sample of [0, 1] plus the
    endpoints. Violations are returned as data; one entry per failed condition,
    located at the worst sample.
    """
    if samples < HYPOTHESIS_MIN_SAMPLES:
        raise ConfigError(f"at least {HYPOTHESIS_MIN_SAMPLES} samples required", key="samples")

    polys = kinetics_polynomials(k)
    alpha = polys.alpha
    u = np.linspace(0.0, 1.0, samples + 1)
    violations: List[Violation] = []

    def point(condition: str, location: float, value: float) -> None:
        violations.append(Violation(condition=condition, location=location, value=value, count=1))

    def sampled(condition: str, where: np.ndarray, values: np.ndarray, bad: np.ndarray) -> None:
        mask = where & bad
        if np.any(mask):
            idx = np.flatnonzero(mask)
            worst = idx[np.argmax(np.abs(values[idx]))]
            violations.append(Violation(
                condition=condition, location=float(u[worst]), value=float(values[worst]), count=int(idx.size),
            ))

    D0 = float(polys.D(0.0))
    if D0 != 0.0:
        point("D(0) ≠ 0", 0.0, D0)
    Dv, Dpv = polys.D(u), polys.Dp(u)
    sampled("D(u) ≤ 0 on (0,1]", u > 0.0, Dv, Dv <= 0.0)
    if Dpv[0] <= 0.0:
        point("D'(0) ≤ 0", 0.0, float(Dpv[0]))
    sampled("D'(u) ≤ 0 on (0,1]", u > 0.0, Dpv, Dpv <= 0.0)

    if not (np.isfinite(alpha) and 0.0 < alpha < 1.0):
        point("α ∉ (0,1)", alpha if np.isfinite(alpha) else 0.0, alpha if np.isfinite(alpha) else 0.0)
    else:
        f_alpha = float(polys.f(alpha))
        if abs(f_alpha) > ROOT_TOL:
            point("f(α) ≠ 0", alpha, f_alpha)
        fp_alpha = float(polys.fp(alpha))
        if fp_alpha <= 0.0:
            point("f'(α) ≤ 0", alpha, fp_alpha)
        fv = polys.f(u)
        sampled("f(u) ≥ 0 on (0,α)", (u > 0.0) & (u < alpha), fv, fv >= 0.0)
        sampled("f(u) ≤ 0 on (α,1)", (u > alpha) & (u < 1.0), fv, fv <= 0.0)

    for end in (0.0, 1.0):
        f_end = float(polys.f(end))
        if abs(f_end) > ROOT_TOL:
            point(f"f({end:g}) ≠ 0", end, f_end)
        fp_end = float(polys.fp(end))
        if fp_end >= 0.0:
            point(f"f'({end:g}) ≥ 0", end, fp_end)

    if violations:
        logger.info("hypothesis check for %s: %d violation(s)", k.label(), len(violations))
    return HypothesisReport(ok=not violations, violations=violations, samples=samples)
