"""Exact analysis of three-term homogeneous ray restrictions.

For a direction u with positive coefficient values e = E(u), a = A(u),
b = B(u) and homogeneity degrees alpha < eta < beta (all nonzero), the ray
restriction of the energy is the scalar map

    phi(t) = (1/eta) e t^eta - (lam/alpha) a t^alpha - (1/beta) b t^beta,

defined for t > 0.  Its derivative is negative for t small and for t large,
so phi has either two critical points (a minimum then a maximum), one
degenerate critical point, or none, depending on lam against a computable
threshold.  This module provides the closed forms for the threshold and the
degenerate parameter, a residual-certified root finder, the second-order
classification, and safe a-priori root bounds.

All powers are computed as exp(k * log t); t > 0 is enforced, so negative and
fractional degrees are handled uniformly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ContractViolation, DomainError
from .rootfind import bisect_sign_change, expand_until_negative

#: Relative half-width of the band around the threshold that is classified
#: as degenerate.  Inside the band the two bisection brackets collapse.
DEGENERACY_BAND = 1e-9


@dataclass(frozen=True)
class HomogeneityDegrees:
    """Degrees (alpha, eta, beta) of the three homogeneous terms."""

    alpha: float
    eta: float
    beta: float

    def __post_init__(self):
        if not (self.alpha < self.eta < self.beta):
            raise DomainError(
                f"degrees must be ordered alpha < eta < beta, got "
                f"({self.alpha}, {self.eta}, {self.beta})"
            )
        if 0.0 in (self.alpha, self.eta, self.beta):
            raise DomainError("degrees must be nonzero")


@dataclass(frozen=True)
class FiberingCoefficients:
    """Per-direction values (e, a, b) of the three terms; all positive."""

    e: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.e > 0.0 and self.a > 0.0 and self.b > 0.0):
            raise DomainError(f"coefficients must be positive, got {self}")


@dataclass(frozen=True)
class CriticalThreshold:
    """Threshold data for a ray: the largest lam admitting critical points.

    lambda_u is the threshold, t0 the parameter where the two critical points
    merge at lam = lambda_u, and c_const the degree-only constant in the
    threshold formula.
    """

    lambda_u: float
    t0: float
    c_const: float


class RootKind(enum.Enum):
    TWO_ROOTS = "two_roots"
    DEGENERATE = "degenerate"
    NO_ROOTS = "no_roots"


class StationaryKind(enum.Enum):
    LOCAL_MIN = "local_min"
    LOCAL_MAX = "local_max"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class FiberingRoots:
    """Critical points of phi on a ray.

    For TWO_ROOTS, 0 < t_plus < t_minus with t_plus the local minimum and
    t_minus the local maximum.  For DEGENERATE both equal the merge parameter.
    For NO_ROOTS both are None.
    """

    kind: RootKind
    t_plus: float | None
    t_minus: float | None


@dataclass(frozen=True)
class RootBounds:
    """A-priori bounds on the two critical points.

    t_plus_upper and t_minus_lower follow from the second-order sign
    identities and always hold.  The alt_* values carry an alternative
    constant pair sometimes quoted for these bounds (swapped ratio for the
    maximum, absolute-valued degree difference for the minimum); they do not
    follow from the sign identities and are reported for comparison only.
    """

    t_plus_upper: float
    t_minus_lower: float
    alt_t_plus_upper: float
    alt_t_minus_lower: float


def _pow(t: float, k: float) -> float:
    return math.exp(k * math.log(t))


def _check_ray_args(lam: float, t: float | None = None) -> None:
    if lam <= 0.0 or not math.isfinite(lam):
        raise DomainError(f"lam must be positive and finite, got {lam}")
    if t is not None and (t <= 0.0 or not math.isfinite(t)):
        raise DomainError(f"t must be positive and finite, got {t}")


def phi_value(
    coeffs: FiberingCoefficients, deg: HomogeneityDegrees, lam: float, t: float
) -> float:
    """(1/eta) e t^eta - (lam/alpha) a t^alpha - (1/beta) b t^beta."""
    _check_ray_args(lam, t)
    return (
        coeffs.e / deg.eta * _pow(t, deg.eta)
        - lam / deg.alpha * coeffs.a * _pow(t, deg.alpha)
        - coeffs.b / deg.beta * _pow(t, deg.beta)
    )


def phi_prime(
    coeffs: FiberingCoefficients, deg: HomogeneityDegrees, lam: float, t: float
) -> float:
    """e t^(eta-1) - lam a t^(alpha-1) - b t^(beta-1)."""
    _check_ray_args(lam, t)
    return (
        coeffs.e * _pow(t, deg.eta - 1.0)
        - lam * coeffs.a * _pow(t, deg.alpha - 1.0)
        - coeffs.b * _pow(t, deg.beta - 1.0)
    )


def phi_second(
    coeffs: FiberingCoefficients, deg: HomogeneityDegrees, lam: float, t: float
) -> float:
    """Second t-derivative of phi."""
    _check_ray_args(lam, t)
    return (
        coeffs.e * (deg.eta - 1.0) * _pow(t, deg.eta - 2.0)
        - lam * coeffs.a * (deg.alpha - 1.0) * _pow(t, deg.alpha - 2.0)
        - coeffs.b * (deg.beta - 1.0) * _pow(t, deg.beta - 2.0)
    )


def derivative_scale(
    coeffs: FiberingCoefficients, deg: HomogeneityDegrees, lam: float, t: float
) -> float:
    """Largest magnitude among the three terms of phi'(t); residual unit."""
    _check_ray_args(lam, t)
    return max(
        coeffs.e * _pow(t, deg.eta - 1.0),
        lam * coeffs.a * _pow(t, deg.alpha - 1.0),
        coeffs.b * _pow(t, deg.beta - 1.0),
    )


def lambda_threshold(
    coeffs: FiberingCoefficients, deg: HomogeneityDegrees
) -> CriticalThreshold:
    """Closed-form threshold lam(u), merge parameter t0(u), and degree constant.

        C = (beta-eta)/(beta-alpha) * ((eta-alpha)/(beta-alpha))^((eta-alpha)/(beta-eta))
        t0 = ((eta-alpha)/(beta-alpha) * e/b)^(1/(beta-eta))
        lam(u) = C * e^((beta-alpha)/(beta-eta)) / (a * b^((eta-alpha)/(beta-eta)))

    lam(u) is the unique lam at which max_t phi'(t) = 0; it is invariant under
    rescaling the direction (degree-zero in u).  Computed in log space to keep
    extreme coefficient magnitudes inside double range.
    """
    al, eta, be = deg.alpha, deg.eta, deg.beta
    r = (eta - al) / (be - eta)
    c_const = (be - eta) / (be - al) * _pow((eta - al) / (be - al), r)
    t0 = math.exp((math.log((eta - al) / (be - al)) + math.log(coeffs.e / coeffs.b)) / (be - eta))
    log_lam = (
        math.log(c_const)
        + (be - al) / (be - eta) * math.log(coeffs.e)
        - math.log(coeffs.a)
        - r * math.log(coeffs.b)
    )
    return CriticalThreshold(lambda_u=math.exp(log_lam), t0=t0, c_const=c_const)


def _polish_newton(coeffs, deg, lam, t, steps=3):
    """A few guarded Newton steps on phi'; keeps the better residual."""
    best_t, best_r = t, abs(phi_prime(coeffs, deg, lam, t))
    for _ in range(steps):
        d2 = phi_second(coeffs, deg, lam, t)
        if d2 == 0.0:
            break
        step = phi_prime(coeffs, deg, lam, t) / d2
        t_new = t - step
        if t_new <= 0.0 or not math.isfinite(t_new):
            break
        r_new = abs(phi_prime(coeffs, deg, lam, t_new))
        if r_new < best_r:
            best_t, best_r = t_new, r_new
        t = t_new
    return best_t


def fibering_roots(
    coeffs: FiberingCoefficients,
    deg: HomogeneityDegrees,
    lam: float,
    tol: float = 1e-9,
    band: float = DEGENERACY_BAND,
) -> FiberingRoots:
    """Critical points of phi, classified against the threshold.

    lam below the threshold (outside the relative degeneracy band) yields
    TWO_ROOTS found by bisection of phi' on the two sides of t0; inside the
    band DEGENERATE at t0; above, NO_ROOTS.  Each returned root r satisfies
    |phi'(r)| <= tol * scale with scale the largest derivative term at r.
    """
    _check_ray_args(lam)
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    thr = lambda_threshold(coeffs, deg)
    if abs(lam - thr.lambda_u) <= band * thr.lambda_u:
        return FiberingRoots(kind=RootKind.DEGENERATE, t_plus=thr.t0, t_minus=thr.t0)
    if lam > thr.lambda_u:
        return FiberingRoots(kind=RootKind.NO_ROOTS, t_plus=None, t_minus=None)

    dphi = lambda t: phi_prime(coeffs, deg, lam, t)
    # phi' < 0 near 0 and near infinity, and phi'(t0) > 0 for lam < lam(u).
    t_left = expand_until_negative(dphi, thr.t0, 0.5)
    t_right = expand_until_negative(dphi, thr.t0, 2.0)
    t_plus = bisect_sign_change(dphi, t_left, thr.t0)
    t_minus = bisect_sign_change(dphi, thr.t0, t_right)
    t_plus = _polish_newton(coeffs, deg, lam, t_plus)
    t_minus = _polish_newton(coeffs, deg, lam, t_minus)
    for r in (t_plus, t_minus):
        resid = abs(phi_prime(coeffs, deg, lam, r))
        scale = derivative_scale(coeffs, deg, lam, r)
        if resid > tol * scale:
            raise ContractViolation(
                f"root residual {resid:.3e} exceeds {tol:.1e} * scale {scale:.3e}"
            )
    return FiberingRoots(kind=RootKind.TWO_ROOTS, t_plus=t_plus, t_minus=t_minus)


def second_order_form(
    coeffs: FiberingCoefficients, deg: HomogeneityDegrees, t: float
) -> float:
    """(eta-alpha) e t^eta - (beta-alpha) b t^beta.

    Equals t^2 phi''(t) at any stationary point of phi; the lam-term has been
    eliminated through phi'(t) = 0, which avoids the cancellation that makes
    raw phi'' unreliable near degenerate roots.
    """
    return (deg.eta - deg.alpha) * coeffs.e * _pow(t, deg.eta) - (
        deg.beta - deg.alpha
    ) * coeffs.b * _pow(t, deg.beta)


def classify_stationary(
    coeffs: FiberingCoefficients,
    deg: HomogeneityDegrees,
    lam: float,
    t: float,
    tol: float = 1e-6,
) -> StationaryKind:
    """Second-order type of a stationary point of phi.

    Requires |phi'(t)| <= tol * scale (contract).  The sign test uses the
    reduced form of t^2 phi''; magnitudes within tol of its own term scale
    are classified DEGENERATE.
    """
    resid = abs(phi_prime(coeffs, deg, lam, t))
    scale = derivative_scale(coeffs, deg, lam, t)
    if resid > tol * scale:
        raise ContractViolation(
            f"classify_stationary called at non-stationary t={t} "
            f"(|phi'| = {resid:.3e} > {tol:.1e} * {scale:.3e})"
        )
    form = second_order_form(coeffs, deg, t)
    form_scale = max(
        (deg.eta - deg.alpha) * coeffs.e * _pow(t, deg.eta),
        (deg.beta - deg.alpha) * coeffs.b * _pow(t, deg.beta),
    )
    if form > tol * form_scale:
        return StationaryKind.LOCAL_MIN
    if form < -tol * form_scale:
        return StationaryKind.LOCAL_MAX
    return StationaryKind.DEGENERATE


def root_bounds(
    coeffs: FiberingCoefficients,
    deg: HomogeneityDegrees,
    lam: float,
    band: float = DEGENERACY_BAND,
) -> RootBounds:
    """A-priori bounds valid in the two-root regime (lam below threshold).

    From the second-order sign identities:
        t_plus^(eta-alpha)  <  lam (beta-alpha)/(beta-eta) * a/e
        t_minus^(beta-eta)  >= (eta-alpha)/(beta-alpha) * e/b
    The alt_* constants use (eta-alpha)/|eta-beta| for the minimum and the
    swapped ratio (beta-alpha)/(eta-alpha) for the maximum; they do not follow
    from the sign identities and are reported only.
    """
    _check_ray_args(lam)
    thr = lambda_threshold(coeffs, deg)
    if lam >= thr.lambda_u * (1.0 - band):
        raise ContractViolation(
            f"root_bounds requires lam < lambda(u): lam={lam}, threshold={thr.lambda_u}"
        )
    al, eta, be = deg.alpha, deg.eta, deg.beta
    t_plus_upper = _pow(
        lam * (be - al) / (be - eta) * coeffs.a / coeffs.e, 1.0 / (eta - al)
    )
    t_minus_lower = _pow((eta - al) / (be - al) * coeffs.e / coeffs.b, 1.0 / (be - eta))
    alt_t_plus_upper = _pow(
        lam * (eta - al) / abs(eta - be) * coeffs.a / coeffs.e, 1.0 / (eta - al)
    )
    alt_t_minus_lower = _pow(
        (be - al) / (eta - al) * coeffs.e / coeffs.b, 1.0 / (be - eta)
    )
    return RootBounds(
        t_plus_upper=t_plus_upper,
        t_minus_lower=t_minus_lower,
        alt_t_plus_upper=alt_t_plus_upper,
        alt_t_minus_lower=alt_t_minus_lower,
    )


def minimum_maximum_ratio(
    coeffs: FiberingCoefficients, deg: HomogeneityDegrees, lam: float
) -> float:
    """Diagnostic ratio E(t_minus u) / B(t_minus u) at the ray maximum.

    The second-order identity bounds this by (beta-eta)/(eta-alpha)·... only
    up to a constant whose printed value is disputed; the ratio is therefore
    recorded, never asserted.
    """
    roots = fibering_roots(coeffs, deg, lam)
    if roots.kind is not RootKind.TWO_ROOTS:
        raise ContractViolation("ratio defined only in the two-root regime")
    t = roots.t_minus
    return (coeffs.e * _pow(t, deg.eta)) / (coeffs.b * _pow(t, deg.beta))
