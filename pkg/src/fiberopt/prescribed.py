"""Prescribed-energy solves via the generalized quotient.

Given a pair I1 = J - K and a positive alpha-homogeneous I2, a critical
point of Phi_lam = I1 - lam*I2 with prescribed value c < 0 is found by
minimizing the quotient

    lam_c(u) = (I1(u) - c) / I2(u)

on a branch: critical parameters of t -> lam_c(tv) are the solutions of
H(tv) = -alpha*c, where H(u) = I1'(u)u - alpha*I1(u).  Each ray profile of H
rises from zero to a single maximum at s(v) and falls to -infinity, so two
solutions t_c_plus < s < t_c_minus exist exactly when -alpha*c stays below
the ray maximum; the admissible window for all rays is 0 < -alpha*c < h0
with h0 the sphere infimum of the ray maxima.

Two model constructors are included: the semilinear concave-convex problem
(Laplacian, concave |u|^(q-2)u term, superlinear f) and its two-exponent
quasilinear extension driven by a p- plus q-Laplacian.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import fibering
from .errors import (
    ConfigError,
    ContractViolation,
    DegenerateRayError,
    DomainError,
    EnergyLevelOutOfRange,
    UnimodalityError,
)
from .fields import (
    DiscreteField,
    GridDomain,
    composite_integral,
    dirichlet_energy_p,
    energy_gradient_p,
    field_from_function,
    lp_gradient,
    lp_norm_pow,
    normalize,
)
from .nehari import (
    Branch,
    BranchLevel,
    CallableRayProfile,
    FixedLambdaFamily,
    HomogeneousHint,
    PowerSumProfile,
    SolveOptions,
    SphereObjective,
    VariationalProblem,
    minimize_branch,
    minimize_on_sphere,
    sphere_point,
)
from .rootfind import bisect_sign_change, expand_until_negative

#: relative band around the ray maximum inside which the two roots of
#: H(tv) = -alpha*c are treated as merged
H_DEGENERACY_BAND = 1e-9


@dataclass(frozen=True)
class SplitStructure:
    """Optional shape of J: J(u) = (1/norm_power)|u|^norm_power + remainder(u),
    with the remainder nonnegative and remainder_power-homogeneous."""

    norm_power: float
    remainder_power: float | None = None
    remainder: Callable[[DiscreteField], float] | None = None


@dataclass(frozen=True)
class FSpec:
    """Scalar nonlinearity: f, its derivative, and its antiderivative F.

    power is set when f(s) = |s|^(power-2) s, which enables the closed-form
    ray analysis.
    """

    f: Callable
    fprime: Callable
    antiderivative: Callable
    power: float | None = None


def power_fspec(r: float) -> FSpec:
    """f(s) = |s|^(r-2) s."""
    if r <= 2.0:
        raise ConfigError(f"superlinear power requires r > 2, got {r}")
    return FSpec(
        f=lambda s: np.abs(s) ** (r - 2.0) * s,
        fprime=lambda s: (r - 1.0) * np.abs(s) ** (r - 2.0),
        antiderivative=lambda s: np.abs(s) ** r / r,
        power=r,
    )


@dataclass(frozen=True)
class PrescribedProblem:
    """Quotient problem data: I1 = J - K split, homogeneous I2, level c < 0."""

    name: str
    grid: GridDomain
    sphere_power: float
    alpha: float
    c: float
    j_value: Callable[[DiscreteField], float]
    j_grad: Callable[[DiscreteField], DiscreteField]
    k_value: Callable[[DiscreteField], float]
    k_grad: Callable[[DiscreteField], DiscreteField]
    i2_value: Callable[[DiscreteField], float]
    i2_grad: Callable[[DiscreteField], DiscreteField]
    h_grad: Callable[[DiscreteField], DiscreteField]
    i1_ray: Callable[[DiscreteField], object]
    h_ray: Callable[[DiscreteField], object]
    structure: SplitStructure | None = None
    even: bool = True

    def __post_init__(self):
        if self.c >= 0.0:
            raise ConfigError(f"prescribed level must be negative, got c={self.c}")
        if self.alpha <= 1.0:
            raise ConfigError(f"alpha must exceed 1, got {self.alpha}")

    def i1_value(self, u: DiscreteField) -> float:
        return self.j_value(u) - self.k_value(u)

    def i1_grad(self, u: DiscreteField) -> DiscreteField:
        return self.j_grad(u) + (-1.0) * self.k_grad(u)

    def with_c(self, c: float) -> "PrescribedProblem":
        return replace(self, c=c)


# --- the H functional ---------------------------------------------------------


def h_value(prob: PrescribedProblem, u: DiscreteField) -> float:
    """H(u) = I1'(u)u - alpha I1(u)."""
    return prob.i1_grad(u).dot(u) - prob.alpha * prob.i1_value(u)


def h_ray(prob: PrescribedProblem, v: DiscreteField, t: float) -> tuple[float, float]:
    """(H(tv), d/dt H(tv)) from the model's closed ray profile."""
    profile = prob.h_ray(v)
    return float(profile.value(t)), float(profile.derivative(t))


@dataclass(frozen=True)
class HProfile:
    """Ray data of H: the maximizer s, the max value, and the two solutions
    of H(tv) = -alpha*c when they exist."""

    s: float
    h_max: float
    t_plus: float | None = None
    t_minus: float | None = None

    @property
    def has_roots(self) -> bool:
        return self.t_plus is not None


def h_max_on_ray(prob: PrescribedProblem, v: DiscreteField) -> HProfile:
    """Maximizer of t -> H(tv) with a shape check of the rise-then-fall form.

    The derivative of the ray profile must change sign exactly once, from
    positive to negative; otherwise the ray violates the expected shape and
    is reported with its dump.  The maximizer is the bisected derivative
    zero inside the flip interval.
    """
    profile = prob.h_ray(v)
    t_lo, t_hi = 1e-4, 1e4
    for _ in range(40):
        if profile.derivative(t_lo) > 0.0:
            break
        t_lo *= 0.125
    for _ in range(40):
        if profile.derivative(t_hi) < 0.0:
            break
        t_hi *= 8.0
    t = np.geomspace(t_lo, t_hi, 601)
    d = np.asarray(profile.derivative(t))
    signs = np.sign(d)
    nonzero = signs[signs != 0.0]
    flips = int(np.sum(nonzero[1:] != nonzero[:-1]))
    if flips != 1 or nonzero[0] <= 0.0 or nonzero[-1] >= 0.0:
        raise UnimodalityError(
            "ray of H is not increasing-then-decreasing",
            diagnostics={
                "t": t.tolist(),
                "H": np.asarray(profile.value(t)).tolist(),
                "sign_changes": flips,
            },
        )
    i = int(np.nonzero(signs > 0.0)[0][-1])
    s = bisect_sign_change(
        lambda x: float(profile.derivative(x)), float(t[i]), float(t[min(i + 1, len(t) - 1)])
    )
    return HProfile(s=s, h_max=float(profile.value(s)))


def roots_of_H(prob: PrescribedProblem, v: DiscreteField) -> HProfile:
    """Solutions of H(tv) = -alpha*c around the ray maximum.

    Returns a rootless profile when -alpha*c exceeds the ray maximum, raises
    inside the degeneracy band, and otherwise brackets one root on each side
    of the maximizer.
    """
    base = h_max_on_ray(prob, v)
    target = -prob.alpha * prob.c
    if target <= 0.0:
        raise ContractViolation(f"-alpha*c must be positive, got {target}")
    if abs(target - base.h_max) <= H_DEGENERACY_BAND * abs(base.h_max):
        raise DegenerateRayError(
            "energy level at the ray maximum",
            diagnostics={"h_max": base.h_max, "target": target},
        )
    if target > base.h_max:
        return base
    profile = prob.h_ray(v)
    g = lambda t: float(profile.value(t)) - target
    t_lo = expand_until_negative(g, base.s, 0.5)
    t_hi = expand_until_negative(g, base.s, 2.0)
    t_plus = bisect_sign_change(g, t_lo, base.s)
    t_minus = bisect_sign_change(g, base.s, t_hi)
    return replace(base, t_plus=t_plus, t_minus=t_minus)


class _HMaxObjective(SphereObjective):
    """v -> max_t H(tv); covector s * H'(sv) by the envelope identity."""

    def __init__(self, prob: PrescribedProblem):
        self.prob = prob

    def value(self, v):
        return h_max_on_ray(self.prob, v).h_max

    def value_and_covector(self, v):
        ray = h_max_on_ray(self.prob, v)
        covector = ray.s * self.prob.h_grad(ray.s * v).values
        return ray.h_max, covector


@dataclass(frozen=True)
class HGroundLevel:
    h0: float
    direction: DiscreteField
    s: float
    iterations: int
    tangent_residual: float
    converged: bool


def h_ground_level(prob: PrescribedProblem, opts: SolveOptions = SolveOptions()) -> HGroundLevel:
    """Sphere infimum of the ray maxima of H, with the certifying direction.

    The reported value is an upper bound on the true infimum; its quality is
    judged by reproducibility across seeds, not by exactness.
    """
    minimum = minimize_on_sphere(_HMaxObjective(prob), prob.grid, prob.sphere_power, opts)
    ray = h_max_on_ray(prob, minimum.v)
    return HGroundLevel(
        h0=minimum.value,
        direction=minimum.v,
        s=ray.s,
        iterations=minimum.iterations,
        tangent_residual=minimum.tangent_residual,
        converged=minimum.converged,
    )


# --- the quotient -------------------------------------------------------------


def lambda_c_value(prob: PrescribedProblem, u: DiscreteField) -> float:
    """(I1(u) - c) / I2(u)."""
    i2 = prob.i2_value(u)
    if i2 <= 0.0:
        raise ContractViolation(f"I2 must be positive away from zero, got {i2}")
    return (prob.i1_value(u) - prob.c) / i2


def lambda_c_grad(prob: PrescribedProblem, u: DiscreteField) -> DiscreteField:
    i2 = prob.i2_value(u)
    lam = (prob.i1_value(u) - prob.c) / i2
    return (1.0 / i2) * (prob.i1_grad(u) + (-lam) * prob.i2_grad(u))


class _QuotientRayProfile:
    """t -> (P(t) - c) / (t^alpha I2(v)) for a scalar profile P of I1.

    The derivative uses the identity

        d/dt lam_c(tv) = (H(tv) + alpha c) / (t^(alpha+1) I2(v))

    with H(tv) = t P'(t) - alpha P(t), so ray criticality of the quotient and
    the root equation for H are the same computation up to roundoff.
    """

    def __init__(self, i1_profile, alpha: float, c: float, i2v: float):
        self.i1_profile = i1_profile
        self.alpha = alpha
        self.c = c
        self.i2v = i2v

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = (self.i1_profile.value(t) - self.c) / (
            np.exp(self.alpha * np.log(t)) * self.i2v
        )
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        h = t * self.i1_profile.derivative(t) - self.alpha * self.i1_profile.value(t)
        out = (h + self.alpha * self.c) / (np.exp((self.alpha + 1.0) * np.log(t)) * self.i2v)
        return float(out) if out.ndim == 0 else out


def lambda_c_problem(prob: PrescribedProblem) -> VariationalProblem:
    """The quotient as a sphere problem; branch minima are the first levels."""
    return VariationalProblem(
        name=f"{prob.name}[quotient c={prob.c!r}]",
        grid=prob.grid,
        sphere_power=prob.sphere_power,
        value=lambda u: lambda_c_value(prob, u),
        grad=lambda u: lambda_c_grad(prob, u),
        ray=lambda v: _QuotientRayProfile(
            prob.i1_ray(v), prob.alpha, prob.c, prob.i2_value(v)
        ),
        homogeneous_hint=None,
        even=prob.even,
    )


@dataclass(frozen=True)
class EnergySolution:
    """Certified output of a prescribed-energy solve."""

    lambda_star: float
    u_star: DiscreteField
    branch: Branch
    phi_residual: float
    energy_error: float
    level: BranchLevel


def solve_prescribed(
    prob: PrescribedProblem,
    branch: Branch,
    opts: SolveOptions = SolveOptions(),
    h0: float | None = None,
) -> EnergySolution:
    """Branch minimum of the quotient, certified as a critical point of
    Phi_lam* at the level c.

    Requires 0 < -alpha*c < h0; h0 is computed when not supplied.
    """
    if h0 is None:
        h0 = h_ground_level(prob, opts).h0
    target = -prob.alpha * prob.c
    if not (0.0 < target < h0):
        raise EnergyLevelOutOfRange(
            f"need 0 < -alpha*c < h0; got -alpha*c={target}, h0={h0}", h0=h0
        )
    level = minimize_branch(lambda_c_problem(prob), branch, opts)
    u_star = level.minimizer.t * level.minimizer.direction
    lam_star = level.level
    residual_field = prob.i1_grad(u_star) + (-lam_star) * prob.i2_grad(u_star)
    phi_residual = float(np.linalg.norm(residual_field.values))
    energy_error = abs(
        prob.i1_value(u_star) - lam_star * prob.i2_value(u_star) - prob.c
    )
    return EnergySolution(
        lambda_star=lam_star,
        u_star=u_star,
        branch=branch,
        phi_residual=phi_residual,
        energy_error=energy_error,
        level=level,
    )


# --- diagnostics --------------------------------------------------------------


@dataclass(frozen=True)
class GapDiagnostics:
    """Sampled margins of the branch geometry at a fixed level c.

    All minima are over the sample set; positivity of the first three is the
    assertable property.  sup_plus_norm tracks the reach of the first-root
    branch (it shrinks with c), min_minus_mass is the smallest I2-mass seen
    on the second-root branch (a non-vanishing proxy; reported only).
    """

    samples: int
    rootless: int
    min_s_gap: float
    min_quotient_gap: float
    min_derivative_floor: float
    sup_plus_norm: float
    min_minus_mass: float


def gap_diagnostics(
    prob: PrescribedProblem, samples: int, seed: int = 0, smooth: int = 2
) -> GapDiagnostics:
    rng = np.random.default_rng(seed)
    rootless = 0
    min_s_gap = np.inf
    min_quotient_gap = np.inf
    min_floor = np.inf
    sup_plus = 0.0
    min_mass = np.inf
    for _ in range(samples):
        v = sphere_point(prob.grid, prob.sphere_power, rng, smooth)
        ray = roots_of_H(prob, v)
        if not ray.has_roots:
            rootless += 1
            continue
        profile = prob.h_ray(v)
        eps = 0.5 * (ray.s - ray.t_plus)
        window = np.linspace(ray.t_plus, ray.t_plus + eps, 33)
        floor = float(np.min(np.asarray(profile.derivative(window))))
        gap = lambda_c_value(prob, ray.s * v) - lambda_c_value(prob, ray.t_plus * v)
        min_s_gap = min(min_s_gap, ray.s - ray.t_plus)
        min_quotient_gap = min(min_quotient_gap, gap)
        min_floor = min(min_floor, floor)
        sup_plus = max(sup_plus, ray.t_plus)
        min_mass = min(min_mass, prob.alpha * prob.i2_value(ray.t_minus * v))
    return GapDiagnostics(
        samples=samples,
        rootless=rootless,
        min_s_gap=min_s_gap,
        min_quotient_gap=min_quotient_gap,
        min_derivative_floor=min_floor,
        sup_plus_norm=sup_plus,
        min_minus_mass=min_mass,
    )


def pure_mode(grid: GridDomain, k: int, p: float) -> DiscreteField:
    """k-th sine mode, unit in the Dirichlet p-norm."""
    if grid.dim == 1:
        u = field_from_function(grid, lambda x: np.sin(k * np.pi * x))
    else:
        u = field_from_function(
            grid, lambda x, y: np.sin(k * np.pi * x) * np.sin(k * np.pi * y)
        )
    return normalize(u, p)


@dataclass(frozen=True)
class CoercivityProbe:
    norms: list[float]
    values: list[float]
    increasing_tail: bool


def coercivity_probe(prob: PrescribedProblem, modes: int = 6) -> CoercivityProbe:
    """Quotient values along second-branch points of growing norm.

    Pure grid modes of increasing frequency have shrinking mass terms, so
    their second roots grow without bound; the quotient increasing over the
    last steps is the sampled direction of coercivity (evidence, not proof).
    """
    norms, values = [], []
    for k in range(1, modes + 1):
        v = pure_mode(prob.grid, k, prob.sphere_power)
        ray = roots_of_H(prob, v)
        if not ray.has_roots:
            continue
        norms.append(ray.t_minus)
        values.append(lambda_c_value(prob, ray.t_minus * v))
    increasing = len(values) >= 3 and values[-1] > values[-2] > values[-3]
    return CoercivityProbe(norms=norms, values=values, increasing_tail=increasing)


# --- model constructors ---------------------------------------------------


def check_concavity_gap(f_spec: FSpec, q: float, s_max: float = 1e3) -> list[str]:
    """Spot check of the shape condition on s -> (q-1) f(s)/s - f'(s).

    The map should decrease on (0, inf), increase on (-inf, 0), and fall
    without bound; violations on the sample grid are returned as warnings.
    """
    issues = []
    s = np.geomspace(1e-3, s_max, 200)
    tol = 1e-12
    pos = (q - 1.0) * np.asarray(f_spec.f(s)) / s - np.asarray(f_spec.fprime(s))
    if not np.all(np.diff(pos) <= tol * np.max(np.abs(pos))):
        issues.append("map not decreasing on the positive axis")
    # points -s with s ascending walk leftward, so the map must decrease here
    neg = (q - 1.0) * np.asarray(f_spec.f(-s)) / (-s) - np.asarray(f_spec.fprime(-s))
    if not np.all(np.diff(neg) <= tol * np.max(np.abs(neg))):
        issues.append("map not increasing on the negative axis")
    if pos[-1] >= pos[0]:
        issues.append("no decay toward -infinity on the sampled range")
    return issues


def build_semilinear_cc(
    grid: GridDomain, q: float, c: float, f_spec: FSpec | None = None, r: float = 4.0
) -> PrescribedProblem:
    """Laplacian problem with concave power q and superlinear term f.

    I1(u) = (1/2) int |grad u|^2 - int F(u),  I2(u) = (1/q) int |u|^q,
    H(u) = (2-q)/2 int |grad u|^2 + int (q F(u) - f(u) u).
    """
    if not (1.0 < q < 2.0):
        raise ConfigError(f"need 1 < q < 2, got q={q}")
    if f_spec is None:
        f_spec = power_fspec(r)
    issues = check_concavity_gap(f_spec, q)
    for issue in issues:
        warnings.warn(f"nonlinearity shape check: {issue}", stacklevel=2)
    f, fp, F = f_spec.f, f_spec.fprime, f_spec.antiderivative

    def j_value(u):
        return 0.5 * dirichlet_energy_p(u, 2.0)

    def j_grad(u):
        return energy_gradient_p(u, 2.0)

    def k_value(u):
        return composite_integral(u, F)

    def k_grad(u):
        return DiscreteField(u.grid, np.asarray(f(u.values)) * u.grid.cell_volume)

    def i2_value(u):
        return lp_norm_pow(u, q) / q

    def i2_grad(u):
        return (1.0 / q) * lp_gradient(u, q)

    def h_grad(u):
        nodal = (q - 1.0) * np.asarray(f(u.values)) - np.asarray(fp(u.values)) * u.values
        return (2.0 - q) * energy_gradient_p(u, 2.0) + DiscreteField(
            u.grid, nodal * u.grid.cell_volume
        )

    if f_spec.power is not None:
        rr = f_spec.power

        def i1_ray(v):
            return PowerSumProfile(
                [(0.5 * dirichlet_energy_p(v, 2.0), 2.0), (-lp_norm_pow(v, rr) / rr, rr)]
            )

        def h_ray_profile(v):
            return PowerSumProfile(
                [
                    (0.5 * (2.0 - q) * dirichlet_energy_p(v, 2.0), 2.0),
                    ((q / rr - 1.0) * lp_norm_pow(v, rr), rr),
                ]
            )

    else:

        def i1_ray(v):
            d2 = dirichlet_energy_p(v, 2.0)
            return CallableRayProfile(
                lambda t: 0.5 * t * t * d2 - composite_integral(t * v, F),
                lambda t: t * d2
                - float(
                    np.sum(np.asarray(f(t * v.values)) * v.values) * v.grid.cell_volume
                ),
            )

        def h_ray_profile(v):
            d2 = dirichlet_energy_p(v, 2.0)

            def value(t):
                w = t * v.values
                nodal = q * np.asarray(F(w)) - np.asarray(f(w)) * w
                return 0.5 * (2.0 - q) * t * t * d2 + float(
                    np.sum(nodal) * v.grid.cell_volume
                )

            def derivative(t):
                w = t * v.values
                nodal = ((q - 1.0) * np.asarray(f(w)) - np.asarray(fp(w)) * w) * v.values
                return (2.0 - q) * t * d2 + float(np.sum(nodal) * v.grid.cell_volume)

            return CallableRayProfile(value, derivative)

    return PrescribedProblem(
        name=f"semilinear_cc[q={q!r}]",
        grid=grid,
        sphere_power=2.0,
        alpha=q,
        c=c,
        j_value=j_value,
        j_grad=j_grad,
        k_value=k_value,
        k_grad=k_grad,
        i2_value=i2_value,
        i2_grad=i2_grad,
        h_grad=h_grad,
        i1_ray=i1_ray,
        h_ray=h_ray_profile,
        structure=SplitStructure(norm_power=2.0),
        even=f_spec.power is not None,
    )


def build_pq_laplacian(
    grid: GridDomain, p: float, q: float, r1: float, r2: float, c: float
) -> PrescribedProblem:
    """Two-exponent quasilinear problem.

    I1(u) = (1/p) int |grad u|^p + (1/q) int |grad u|^q - (1/r2) int |u|^r2,
    I2(u) = (1/r1) int |u|^r1,
    H(u) = (p-r1)/p int |grad u|^p + (q-r1)/q int |grad u|^q
           - (r2-r1)/r2 int |u|^r2.
    """
    if not (1.0 < r1 < q < p < r2):
        raise ConfigError(f"need 1 < r1 < q < p < r2, got ({r1}, {q}, {p}, {r2})")
    n_dim = grid.dim
    if p < n_dim:
        p_star = n_dim * p / (n_dim - p)
        if r2 >= p_star:
            raise ConfigError(f"need r2 < {p_star} (critical exponent), got {r2}")

    def j_value(u):
        return dirichlet_energy_p(u, p) / p + dirichlet_energy_p(u, q) / q

    def j_grad(u):
        return energy_gradient_p(u, p) + energy_gradient_p(u, q)

    def k_value(u):
        return lp_norm_pow(u, r2) / r2

    def k_grad(u):
        return (1.0 / r2) * lp_gradient(u, r2)

    def i2_value(u):
        return lp_norm_pow(u, r1) / r1

    def i2_grad(u):
        return (1.0 / r1) * lp_gradient(u, r1)

    def h_grad(u):
        return (
            (p - r1) * energy_gradient_p(u, p)
            + (q - r1) * energy_gradient_p(u, q)
            + (-(r2 - r1) / r2) * lp_gradient(u, r2)
        )

    def i1_ray(v):
        return PowerSumProfile(
            [
                (dirichlet_energy_p(v, p) / p, p),
                (dirichlet_energy_p(v, q) / q, q),
                (-lp_norm_pow(v, r2) / r2, r2),
            ]
        )

    def h_ray_profile(v):
        return PowerSumProfile(
            [
                ((p - r1) / p * dirichlet_energy_p(v, p), p),
                ((q - r1) / q * dirichlet_energy_p(v, q), q),
                (-(r2 - r1) / r2 * lp_norm_pow(v, r2), r2),
            ]
        )

    def remainder(u):
        return dirichlet_energy_p(u, q) / q

    return PrescribedProblem(
        name=f"pq_laplacian[p={p!r},q={q!r}]",
        grid=grid,
        sphere_power=p,
        alpha=r1,
        c=c,
        j_value=j_value,
        j_grad=j_grad,
        k_value=k_value,
        k_grad=k_grad,
        i2_value=i2_value,
        i2_grad=i2_grad,
        h_grad=h_grad,
        i1_ray=i1_ray,
        h_ray=h_ray_profile,
        structure=SplitStructure(norm_power=p, remainder_power=q, remainder=remainder),
        even=True,
    )


# --- fixed-parameter families ------------------------------------------------


def semilinear_cc_family(
    grid: GridDomain, q: float, f_spec: FSpec | None = None, r: float = 4.0
) -> FixedLambdaFamily:
    """Phi_lam = I1 - lam*I2 for the semilinear model, with the closed-form
    ray structure when f is a pure power."""
    prob = build_semilinear_cc(grid, q, c=-1.0, f_spec=f_spec, r=r)
    hint_for = None
    if f_spec is None or f_spec.power is not None:
        rr = r if f_spec is None else f_spec.power
        degrees = fibering.HomogeneityDegrees(q, 2.0, rr)

        def coefficients(v):
            return fibering.FiberingCoefficients(
                dirichlet_energy_p(v, 2.0), lp_norm_pow(v, q), lp_norm_pow(v, rr)
            )

        def hint_for(lam):
            return HomogeneousHint(degrees=degrees, lam=lam, coefficients=coefficients)

    return FixedLambdaFamily(
        name=prob.name,
        grid=grid,
        sphere_power=2.0,
        alpha=q,
        i1_value=prob.i1_value,
        i1_grad=prob.i1_grad,
        i1_ray=prob.i1_ray,
        i2_value=prob.i2_value,
        i2_grad=prob.i2_grad,
        hint_for=hint_for,
        even=prob.even,
    )


def pq_laplacian_family(
    grid: GridDomain, p: float, q: float, r1: float, r2: float
) -> FixedLambdaFamily:
    """Phi_lam = I1 - lam*I2 for the two-exponent model (no closed ray form)."""
    prob = build_pq_laplacian(grid, p, q, r1, r2, c=-1.0)
    return FixedLambdaFamily(
        name=prob.name,
        grid=grid,
        sphere_power=p,
        alpha=r1,
        i1_value=prob.i1_value,
        i1_grad=prob.i1_grad,
        i1_ray=prob.i1_ray,
        i2_value=prob.i2_value,
        i2_grad=prob.i2_grad,
        hint_for=None,
        even=prob.even,
    )
