"""Two-dimensional affine p-energy and its concave-convex driver.

The affine energy replaces the isotropic Dirichlet integrand by a -2 power
mean of directional norms over the unit circle,

    E(u) = gamma_p * ( integral over S^1 of |grad_xi u|_p^(-2) dsigma )^(-1/2),

with grad_xi u = grad u . xi and gamma_p the normalizing constant built from
unit-ball volumes.  E is 1-homogeneous, even, and invariant under
volume-preserving linear maps of the domain; E^p plays the role of the
leading p-homogeneous term in the three-term ray analysis with the
concave/convex mass terms |u|_q^q and |u|_r^r.

Angular integration uses the trapezoidal rule on equispaced directions with
antipodal pairing (integrands of real fields are even under xi -> -xi), which
is spectrally accurate for the smooth periodic integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fibering
from .errors import ConfigError, DomainError, NumericalError
from .fields import (
    DiscreteField,
    GridDomain,
    dirichlet_energy_p,
    gradient,
    lp_gradient,
    lp_norm_pow,
)
from .errors import BranchUnavailableError, DegenerateRayError
from .nehari import (
    Branch,
    BranchLevel,
    FixedLambdaFamily,
    HomogeneousHint,
    PowerSumProfile,
    SolveOptions,
    minimize_branch,
    sphere_point,
)
from .rootfind import bisect_sign_change


def unit_ball_volume(s: float) -> float:
    """Volume of the unit ball in dimension s (real s >= 0)."""
    if s < 0.0:
        raise DomainError(f"dimension must be nonnegative, got {s}")
    return math.pi ** (s / 2.0) / math.gamma(s / 2.0 + 1.0)


@dataclass(frozen=True)
class AffineEnergyConfig:
    """Exponent and angular resolution of the plane affine energy."""

    p: float
    angular_nodes: int = 64

    def __post_init__(self):
        if self.p <= 1.0:
            raise ConfigError(f"p must exceed 1, got {self.p}")
        if self.angular_nodes < 8 or self.angular_nodes % 2:
            raise ConfigError(
                f"angular_nodes must be even and >= 8, got {self.angular_nodes}"
            )

    @property
    def gamma(self) -> float:
        """(2 w_{p})^(-1) (2 w_2 w_{p-1}) (2 w_2)^(p/2) for the plane."""
        p = self.p
        return (
            (2.0 * unit_ball_volume(p)) ** -1.0
            * (2.0 * unit_ball_volume(2.0) * unit_ball_volume(p - 1.0))
            * (2.0 * unit_ball_volume(2.0)) ** (p / 2.0)
        )


@lru_cache(maxsize=32)
def _half_circle(n_half: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions over the half circle and full-circle trapezoidal weights."""
    theta = np.pi * np.arange(n_half) / n_half
    xi = np.stack([np.cos(theta), np.sin(theta)])
    weights = np.full(n_half, 2.0 * np.pi / n_half)  # antipodal pair included
    return xi, weights


def directional_norm_pows(cfg: AffineEnergyConfig, u: DiscreteField) -> np.ndarray:
    """D_m = integral |grad u . xi_m|^p, one entry per half-circle node."""
    if u.grid.dim != 2:
        raise DomainError("affine energy requires a 2-D grid")
    xi, _ = _half_circle(cfg.angular_nodes // 2)
    g = gradient(u).components
    proj = np.tensordot(xi.T, g, axes=([1], [0]))  # (m, cells_x, cells_y)
    return np.sum(np.abs(proj) ** cfg.p, axis=(1, 2)) * u.grid.cell_volume


def _check_directions(cfg: AffineEnergyConfig, u: DiscreteField, d: np.ndarray) -> None:
    if u.is_zero():
        raise DomainError("affine energy is undefined at the zero field")
    floor = 1e-14 * dirichlet_energy_p(u, cfg.p) ** (1.0 / cfg.p)
    if np.min(d) ** (1.0 / cfg.p) < floor:
        raise NumericalError(
            "field is constant along a quadrature direction; the -2 power "
            "diverges",
            diagnostics={"min_directional_norm": float(np.min(d) ** (1.0 / cfg.p))},
        )


def affine_energy(cfg: AffineEnergyConfig, u: DiscreteField) -> float:
    d = directional_norm_pows(cfg, u)
    _check_directions(cfg, u, d)
    _, w = _half_circle(cfg.angular_nodes // 2)
    s = float(np.sum(w * d ** (-2.0 / cfg.p)))
    return cfg.gamma * s ** -0.5


def affine_energy_pow(cfg: AffineEnergyConfig, u: DiscreteField) -> float:
    """E(u)^p, the p-homogeneous leading term."""
    return affine_energy(cfg, u) ** cfg.p


def affine_energy_gradient(cfg: AffineEnergyConfig, u: DiscreteField) -> DiscreteField:
    """Nodal gradient of u -> (1/p) E(u)^p by the chain rule.

    The outer quadrature weights multiply anisotropic p-Laplacian terms
    |grad u . xi|^(p-2) (grad u . xi) xi assembled through the cell-stencil
    adjoint; pairing with u returns E^p exactly (Euler identity).
    """
    p = cfg.p
    d = directional_norm_pows(cfg, u)
    _check_directions(cfg, u, d)
    xi, w = _half_circle(cfg.angular_nodes // 2)
    s = float(np.sum(w * d ** (-2.0 / p)))
    outer = cfg.gamma**p * s ** (-(p + 2.0) / 2.0) * w * d ** (-(2.0 + p) / p)

    grid = u.grid
    g = gradient(u).components
    proj = np.tensordot(xi.T, g, axes=([1], [0]))
    # |proj|^(p-2) proj with the removable zero handled (p may be below 2)
    weighted = np.zeros_like(proj)
    nz = proj != 0.0
    weighted[nz] = np.abs(proj[nz]) ** (p - 2.0) * proj[nz]
    weighted *= outer[:, None, None]
    wx = np.tensordot(xi[0], weighted, axes=([0], [0]))
    wy = np.tensordot(xi[1], weighted, axes=([0], [0]))
    hx, hy = grid.h
    wx *= grid.cell_volume / hx
    wy *= grid.cell_volume / hy
    acc = np.zeros((grid.shape[0] + 2, grid.shape[1] + 2))
    acc[1:, :-1] += wx
    acc[:-1, :-1] -= wx
    acc[:-1, 1:] += wy
    acc[:-1, :-1] -= wy
    return DiscreteField(grid, acc[1:-1, 1:-1])


def isotropy_reference_sum(cfg: AffineEnergyConfig, u: DiscreteField) -> float:
    """Closed-form angular integral at p = 2: 2 pi / sqrt(det M) with
    M the second-moment matrix of the cell gradients.  Oracle only."""
    if cfg.p != 2.0:
        raise DomainError("closed form only at p = 2")
    g = gradient(u).components
    vol = u.grid.cell_volume
    mxx = float(np.sum(g[0] * g[0])) * vol
    mxy = float(np.sum(g[0] * g[1])) * vol
    myy = float(np.sum(g[1] * g[1])) * vol
    det = mxx * myy - mxy * mxy
    return 2.0 * np.pi / math.sqrt(det)


# --- the concave-convex problem ------------------------------------------------


@dataclass(frozen=True)
class AffineProblem:
    """Exponents and parameter of the plane concave-convex equation."""

    config: AffineEnergyConfig
    grid: GridDomain
    q: float
    r: float
    lam: float

    def __post_init__(self):
        p = self.config.p
        if not (1.0 < self.q < p < self.r):
            raise ConfigError(f"need 1 < q < p < r, got ({self.q}, {p}, {self.r})")
        if p < 2.0:
            p_star = 2.0 * p / (2.0 - p)
            if self.r >= p_star:
                raise ConfigError(
                    f"need r < {p_star} (critical exponent), got {self.r}"
                )
        if self.lam <= 0.0:
            raise ConfigError(f"lam must be positive, got {self.lam}")


def affine_family(
    cfg: AffineEnergyConfig, grid: GridDomain, q: float, r: float
) -> FixedLambdaFamily:
    """Phi_lam = (1/p) E^p - (lam/q)|u|_q^q - (1/r)|u|_r^r as a family."""
    AffineProblem(config=cfg, grid=grid, q=q, r=r, lam=1.0)  # validate exponents
    p = cfg.p
    degrees = fibering.HomogeneityDegrees(q, p, r)

    def coefficients(v):
        return fibering.FiberingCoefficients(
            affine_energy_pow(cfg, v), lp_norm_pow(v, q), lp_norm_pow(v, r)
        )

    def hint_for(lam):
        return HomogeneousHint(degrees=degrees, lam=lam, coefficients=coefficients)

    def i1_value(u):
        return affine_energy_pow(cfg, u) / p - lp_norm_pow(u, r) / r

    def i1_grad(u):
        return affine_energy_gradient(cfg, u) + (-1.0 / r) * lp_gradient(u, r)

    def i1_ray(v):
        return PowerSumProfile(
            [(affine_energy_pow(cfg, v) / p, p), (-lp_norm_pow(v, r) / r, r)]
        )

    def i2_value(u):
        return lp_norm_pow(u, q) / q

    def i2_grad(u):
        return (1.0 / q) * lp_gradient(u, q)

    return FixedLambdaFamily(
        name=f"affine[p={p!r},q={q!r},r={r!r}]",
        grid=grid,
        sphere_power=p,
        alpha=q,
        i1_value=i1_value,
        i1_grad=i1_grad,
        i1_ray=i1_ray,
        i2_value=i2_value,
        i2_grad=i2_grad,
        hint_for=hint_for,
        even=True,
    )


def lambda_A_estimate(
    family: FixedLambdaFamily, samples: int, seed: int = 0, smooth: int = 2
) -> float:
    """Sampled upper estimate of the family threshold: min of the exact ray
    thresholds over random unit directions.  Positive, and weakly decreasing
    in the sample count."""
    return family.sampled_threshold(samples, seed=seed, smooth=smooth)


def solve_affine(
    family: FixedLambdaFamily, lam: float, branch: Branch, opts: SolveOptions = SolveOptions()
) -> BranchLevel:
    return minimize_branch(family.problem(lam), branch, opts)


# --- parameter sweep and qualitative checks -----------------------------------


@dataclass(frozen=True)
class SweepRow:
    lam: float
    feasible: bool
    level_plus: float | None = None
    level_minus: float | None = None
    norm_plus: float | None = None
    residual_plus: float | None = None
    residual_minus: float | None = None


@dataclass(frozen=True)
class SlopeFit:
    applicable: bool
    slope: float | None
    target: float | None
    lambdas: tuple[float, ...] = ()
    norms: tuple[float, ...] = ()


@dataclass(frozen=True)
class AffineSweepReport:
    lambda_estimate: float
    rows: tuple[SweepRow, ...]
    ordering_ok: bool
    smallest_sign_ok: bool
    lambda_bar: float | None
    lambda_bar_bracket: tuple[float, float] | None
    slope_fit: SlopeFit


def _minus_level(family, lam, opts) -> float:
    return minimize_branch(family.problem(lam), Branch.MINUS, opts).level


def locate_sign_change(
    family: FixedLambdaFamily,
    lo: float,
    hi: float,
    opts: SolveOptions,
    rel_tol: float = 1e-3,
) -> float:
    """Parameter where the minus-branch level changes sign, by bisection.

    The level decreases in lam (envelope of a lam-linear family), so a
    bracket with opposite signs pins the crossing.
    """
    return bisect_sign_change(
        lambda lam: _minus_level(family, lam, opts),
        lo,
        hi,
        max_iter=60,
        xtol_rel=rel_tol,
    )


def fit_norm_slope(lambdas, norms) -> float:
    """Least-squares slope of log norm against log lam."""
    x = np.log(np.asarray(lambdas))
    y = np.log(np.asarray(norms))
    design = np.vstack([x, np.ones_like(x)]).T
    return float(np.linalg.lstsq(design, y, rcond=None)[0][0])


def affine_sweep(
    family: FixedLambdaFamily,
    lambdas,
    opts: SolveOptions = SolveOptions(),
    lambda_estimate: float | None = None,
    slope_points: int = 0,
) -> AffineSweepReport:
    """Branch levels over a lam grid plus the qualitative structure checks.

    Each grid point gets both branch levels (or a feasibility flag); the
    report carries the sign pattern at the smallest lam, the located zero of
    the minus-branch level when the grid brackets one, and (over the last
    slope_points grid values, or the whole grid) the fitted log-log slope of
    the ground-state norm when q > p/2.
    """
    if lambda_estimate is None:
        lambda_estimate = family.sampled_threshold(64, seed=opts.seed)
    rows = []
    for lam in sorted(lambdas):
        prob = family.problem(lam)
        try:
            plus = minimize_branch(prob, Branch.PLUS, opts)
            minus = minimize_branch(prob, Branch.MINUS, opts)
        except (BranchUnavailableError, DegenerateRayError):
            rows.append(SweepRow(lam=lam, feasible=False))
            continue
        rows.append(
            SweepRow(
                lam=lam,
                feasible=True,
                level_plus=plus.level,
                level_minus=minus.level,
                norm_plus=plus.minimizer.t,
                residual_plus=plus.tangent_residual,
                residual_minus=minus.tangent_residual,
            )
        )
    feasible = [row for row in rows if row.feasible]
    ordering_ok = all(row.level_plus < row.level_minus for row in feasible)
    smallest = feasible[0] if feasible else None
    smallest_sign_ok = (
        smallest is not None and smallest.level_plus < 0.0 < smallest.level_minus
    )

    lambda_bar = None
    bracket = None
    for a, b in zip(feasible, feasible[1:]):
        if a.level_minus > 0.0 > b.level_minus:
            bracket = (a.lam, b.lam)
            lambda_bar = locate_sign_change(family, a.lam, b.lam, opts)
            break

    p, q = family.sphere_power, family.alpha
    applicable = q > p / 2.0
    if applicable and len(feasible) >= 3:
        tail = feasible[-slope_points:] if slope_points else feasible
        fit = SlopeFit(
            applicable=True,
            slope=fit_norm_slope([r.lam for r in tail], [r.norm_plus for r in tail]),
            target=p / (p - q),
            lambdas=tuple(r.lam for r in tail),
            norms=tuple(r.norm_plus for r in tail),
        )
    else:
        fit = SlopeFit(applicable=applicable, slope=None, target=p / (p - q) if applicable else None)

    return AffineSweepReport(
        lambda_estimate=lambda_estimate,
        rows=tuple(rows),
        ordering_ok=ordering_ok,
        smallest_sign_ok=smallest_sign_ok,
        lambda_bar=lambda_bar,
        lambda_bar_bracket=bracket,
        slope_fit=fit,
    )


@dataclass(frozen=True)
class RayGapDiagnostics:
    """Sampled margins of the derivative profile H_lam(tv) = t Phi'(tv)v.

    min_h_at_max is the sampled floor of H_lam at its ray maximizer (positive
    below the threshold), min_phi_gap the sampled floor of
    Phi(s(v)v) - Phi(t_plus(v)v), and min_s_gap of s(v) - t_plus(v).
    """

    samples: int
    min_h_at_max: float
    min_phi_gap: float
    min_s_gap: float


def ray_gap_diagnostics(
    family: FixedLambdaFamily, lam: float, samples: int, seed: int = 0, smooth: int = 2
) -> RayGapDiagnostics:
    prob = family.problem(lam)
    hint = family.hint_for(lam)
    rng = np.random.default_rng(seed)
    min_h = np.inf
    min_gap = np.inf
    min_s_gap = np.inf
    for _ in range(samples):
        v = sphere_point(family.grid, family.sphere_power, rng, smooth)
        coeffs = hint.coefficients(v)
        roots = fibering.fibering_roots(coeffs, hint.degrees, lam)
        if roots.kind is not fibering.RootKind.TWO_ROOTS:
            continue
        h_profile = PowerSumProfile(
            [
                (coeffs.e, hint.degrees.eta),
                (-lam * coeffs.a, hint.degrees.alpha),
                (-coeffs.b, hint.degrees.beta),
            ]
        )
        s = bisect_sign_change(
            lambda t: float(h_profile.derivative(t)), roots.t_plus, roots.t_minus
        )
        ray = prob.ray_of(v)
        min_h = min(min_h, float(h_profile.value(s)))
        min_gap = min(min_gap, float(ray.value(s)) - float(ray.value(roots.t_plus)))
        min_s_gap = min(min_s_gap, s - roots.t_plus)
    return RayGapDiagnostics(
        samples=samples, min_h_at_max=min_h, min_phi_gap=min_gap, min_s_gap=min_s_gap
    )
