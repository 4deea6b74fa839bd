"""Branch machinery on the unit sphere of the Dirichlet p-norm.

A variational problem here is an energy Phi whose restriction to every ray
t -> Phi(t v), t > 0, has exactly two critical points: a local minimum
t_plus(v) followed by a local maximum t_minus(v).  Projecting a unit
direction to either critical point defines the two branch sets; the reduced
functionals  Psi_pm(v) = Phi(t_pm(v) v)  are minimized over the sphere by
projected gradient descent with renormalization retraction, which yields the
two first branch levels: the ground state level on the plus branch and its
counterpart on the minus branch.

The reduced derivative along a tangent direction w is
    Psi_pm'(v) w = t_pm(v) * Phi'(t_pm(v) v) w,
valid at nondegenerate ray roots; the radial component of Phi' vanishes at
the root, so the full gradient at the projected point is controlled by the
tangential residual alone.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fibering
from .errors import (
    BranchUnavailableError,
    ContractViolation,
    DegenerateRayError,
    DomainError,
    NumericalError,
)
from .fields import (
    DiscreteField,
    GridDomain,
    dirichlet_energy_p,
    energy_gradient_p,
    normalize,
    random_field,
    sphere_norm,
    stiffness_solve,
)


class Branch(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


# --- ray profiles -------------------------------------------------------------


class PowerSumProfile:
    """t -> sum_k c_k t^(e_k) with vectorized value and derivative."""

    def __init__(self, terms):
        self.terms = tuple((float(c), float(e)) for c, e in terms)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        out = sum(c * np.exp(e * lt) for c, e in self.terms)
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        out = sum(c * e * np.exp((e - 1.0) * lt) for c, e in self.terms)
        return float(out) if out.ndim == 0 else out


class CallableRayProfile:
    """Ray profile backed by scalar callables (generic fallback)."""

    def __init__(self, value_fn, derivative_fn):
        self._value = value_fn
        self._derivative = derivative_fn

    def value(self, t):
        if np.ndim(t) == 0:
            return self._value(float(t))
        return np.array([self._value(float(ti)) for ti in np.asarray(t)])

    def derivative(self, t):
        if np.ndim(t) == 0:
            return self._derivative(float(t))
        return np.array([self._derivative(float(ti)) for ti in np.asarray(t)])


# --- problem description --------------------------------------------------


@dataclass(frozen=True)
class HomogeneousHint:
    """Closed-form ray structure: Phi(tv) = (1/eta)E t^eta - (lam/alpha)A t^alpha - (1/beta)B t^beta."""

    degrees: fibering.HomogeneityDegrees
    lam: float
    coefficients: Callable[[DiscreteField], fibering.FiberingCoefficients]


@dataclass(frozen=True)
class VariationalProblem:
    """Energy with two-critical-point rays on the Dirichlet p-sphere.

    value/grad evaluate Phi and its nodal gradient; ray(v) returns the scalar
    profile of t -> Phi(tv) (defaults to evaluating value/grad along the
    ray).  When homogeneous_hint is present the ray roots come from the
    closed-form fibering analysis instead of scanning.
    """

    name: str
    grid: GridDomain
    sphere_power: float
    value: Callable[[DiscreteField], float]
    grad: Callable[[DiscreteField], DiscreteField]
    ray: Callable[[DiscreteField], object] | None = None
    homogeneous_hint: HomogeneousHint | None = None
    even: bool = True

    def ray_of(self, v: DiscreteField):
        if self.ray is not None:
            return self.ray(v)
        return CallableRayProfile(
            lambda t: self.value(t * v),
            lambda t: self.grad(t * v).dot(v),
        )

    def ray_profile(self, v: DiscreteField, t: float) -> tuple[float, float]:
        """(Phi(tv), d/dt Phi(tv))."""
        profile = self.ray_of(v)
        return float(profile.value(t)), float(profile.derivative(t))


@dataclass(frozen=True)
class NehariPoint:
    """A critical point of a ray restriction: u = t * direction on a branch."""

    direction: DiscreteField
    branch: Branch
    t: float
    value: float
    residual: float


@dataclass(frozen=True)
class BranchLevel:
    branch: Branch
    level: float
    minimizer: NehariPoint
    iterations: int
    tangent_residual: float
    converged: bool
    starts_used: int
    resampled: int


@dataclass(frozen=True)
class SolveOptions:
    starts: int = 8
    max_iter: int = 400
    tol: float = 1e-6
    ray_tol: float = 1e-9
    seed: int = 0
    threads: int = 0
    smooth_starts: int = 2
    armijo: float = 1e-4
    shrink: float = 0.5
    step0: float = 1.0


def sphere_point(
    grid: GridDomain, p: float, rng: np.random.Generator, smooth: int = 2
) -> DiscreteField:
    return normalize(random_field(grid, rng, smooth=smooth), p)


def _check_unit(v: DiscreteField, p: float) -> None:
    norm = sphere_norm(v, p)
    if abs(norm - 1.0) > 1e-10:
        raise ContractViolation(f"direction must be unit, |v| = {norm}")


# --- ray root extraction ----------------------------------------------------

_SCAN_POINTS = 385


def _scan_two_roots(profile, ray_tol: float):
    """Locate the (min, max) pair of critical parameters by scan + bisection."""
    t_lo, t_hi = 1e-3, 1e3
    for _ in range(40):
        if profile.derivative(t_lo) < 0.0:
            break
        t_lo *= 0.125
    else:
        raise NumericalError("ray derivative not negative near zero")
    for _ in range(40):
        if profile.derivative(t_hi) < 0.0:
            break
        t_hi *= 8.0
    else:
        raise NumericalError("ray derivative not negative at infinity")

    points = _SCAN_POINTS
    for _ in range(3):
        t = np.geomspace(t_lo, t_hi, points)
        d = np.asarray(profile.derivative(t))
        pos = d > 0.0
        flips = np.nonzero(pos[1:] != pos[:-1])[0]
        if not np.any(pos):
            raise BranchUnavailableError(
                "ray has no critical points",
                diagnostics={"max_derivative": float(np.max(d))},
            )
        if len(flips) == 2:
            break
        points *= 4
    else:
        raise NumericalError(
            "ray derivative sign pattern is not minus/plus/minus",
            diagnostics={"sign_changes": len(flips)},
        )

    scale = float(np.max(np.abs(d)))
    roots = []
    for i in flips:
        lo, hi = float(t[i]), float(t[i + 1])
        dfn = lambda s: float(profile.derivative(s))
        root = _bisect(dfn, lo, hi)
        if abs(dfn(root)) > ray_tol * scale:
            raise NumericalError(
                "ray root residual above tolerance",
                diagnostics={"t": root, "residual": abs(dfn(root)), "scale": scale},
            )
        roots.append(root)
    return roots[0], roots[1]


def _bisect(f, lo, hi, max_iter=200):
    flo = f(lo)
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return float(np.sqrt(lo * hi))


def _project_t(prob: VariationalProblem, v: DiscreteField, branch: Branch, ray_tol: float) -> float:
    """Ray parameter of the requested branch root."""
    if prob.homogeneous_hint is not None:
        hint = prob.homogeneous_hint
        coeffs = hint.coefficients(v)
        roots = fibering.fibering_roots(coeffs, hint.degrees, hint.lam, tol=ray_tol)
        if roots.kind is fibering.RootKind.NO_ROOTS:
            thr = fibering.lambda_threshold(coeffs, hint.degrees)
            raise BranchUnavailableError(
                "lam above the ray threshold",
                diagnostics={"lam": hint.lam, "lambda_u": thr.lambda_u},
            )
        if roots.kind is fibering.RootKind.DEGENERATE:
            raise DegenerateRayError(
                "ray inside the degeneracy band",
                diagnostics={"lam": hint.lam, "t0": roots.t_plus},
            )
        return roots.t_plus if branch is Branch.PLUS else roots.t_minus
    profile = prob.ray_of(v)
    t_plus, t_minus = _scan_two_roots(profile, ray_tol)
    return t_plus if branch is Branch.PLUS else t_minus


def project_to_branch(
    prob: VariationalProblem,
    v: DiscreteField,
    branch: Branch,
    ray_tol: float = 1e-9,
) -> NehariPoint:
    """Critical point of t -> Phi(tv) on the requested branch.

    Raises BranchUnavailableError when the ray admits no critical points and
    DegenerateRayError inside the degeneracy band.
    """
    _check_unit(v, prob.sphere_power)
    t = _project_t(prob, v, branch, ray_tol)
    point = t * v
    value = prob.value(point)
    residual = float(np.linalg.norm(prob.grad(point).values))
    return NehariPoint(direction=v, branch=branch, t=t, value=value, residual=residual)


def reduced_value(
    prob: VariationalProblem, v: DiscreteField, branch: Branch, ray_tol: float = 1e-9
) -> float:
    """Psi_pm(v) = Phi(t_pm(v) v)."""
    _check_unit(v, prob.sphere_power)
    t = _project_t(prob, v, branch, ray_tol)
    return prob.value(t * v)


def _tangent_project(covector: np.ndarray, normal: np.ndarray) -> np.ndarray:
    return covector - (np.vdot(normal, covector) / np.vdot(normal, normal)) * normal


def reduced_gradient(
    prob: VariationalProblem, v: DiscreteField, branch: Branch, ray_tol: float = 1e-9
) -> DiscreteField:
    """Tangential part of t_pm(v) * Phi'(t_pm(v) v) at the unit direction v.

    Tangency is taken with respect to the derivative of the sphere norm, so a
    vanishing result is exactly first-order optimality of Psi_pm on the
    sphere.
    """
    _check_unit(v, prob.sphere_power)
    t = _project_t(prob, v, branch, ray_tol)
    covector = t * prob.grad(t * v).values
    normal = energy_gradient_p(v, prob.sphere_power).values
    return DiscreteField(prob.grid, _tangent_project(covector, normal))


# --- sphere minimization ----------------------------------------------------


class SphereObjective:
    """Objective on the unit sphere: value plus a nodal covector."""

    def value(self, v: DiscreteField) -> float:
        raise NotImplementedError

    def value_and_covector(self, v: DiscreteField) -> tuple[float, np.ndarray]:
        raise NotImplementedError


class BranchObjective(SphereObjective):
    """Reduced functional of one branch as a sphere objective."""

    def __init__(self, prob: VariationalProblem, branch: Branch, ray_tol: float):
        self.prob = prob
        self.branch = branch
        self.ray_tol = ray_tol

    def project_t(self, v):
        return _project_t(self.prob, v, self.branch, self.ray_tol)

    def value(self, v):
        return self.prob.value(self.project_t(v) * v)

    def value_and_covector(self, v):
        t = self.project_t(v)
        point = t * v
        return self.prob.value(point), t * self.prob.grad(point).values


@dataclass(frozen=True)
class SphereMinimum:
    v: DiscreteField
    value: float
    iterations: int
    tangent_residual: float
    converged: bool
    starts_used: int
    resampled: int


def _descend(objective, v, grid, p, opts: SolveOptions):
    val, covector = objective.value_and_covector(v)
    residual = np.inf
    iterations = 0
    stalls = 0
    prev_values = prev_direction = None
    tau_init = opts.step0
    noise_floor = 16.0 * np.finfo(float).eps
    for iterations in range(1, opts.max_iter + 1):
        normal = energy_gradient_p(v, p).values
        tangent = _tangent_project(covector, normal)
        residual = float(np.linalg.norm(tangent))
        if residual <= opts.tol:
            return v, val, iterations - 1, residual, True
        # preconditioned direction, tangent in the normal pairing
        d = stiffness_solve(grid, covector)
        dn = stiffness_solve(grid, normal)
        w = d - (np.vdot(normal, d) / np.vdot(normal, dn)) * dn
        slope = float(np.vdot(covector, w))
        if not np.isfinite(slope) or slope <= 0.0:
            break
        if prev_values is not None:
            # spectral (Barzilai-Borwein) curvature estimate along the last
            # step; a unit initial step needs thousands of iterations on the
            # flat plus-branch landscapes
            s = v.values - prev_values
            y = w - prev_direction
            sy = float(np.vdot(s, y))
            tau_init = float(np.vdot(s, s)) / sy if sy > 0.0 else opts.step0
            tau_init = min(max(tau_init, 1e-6), 1e6)
        tau = tau_init
        accepted = False
        for _ in range(60):
            try:
                cand = normalize(DiscreteField(grid, v.values - tau * w), p)
                cand_val = objective.value(cand)
            except (BranchUnavailableError, DegenerateRayError, DomainError):
                tau *= opts.shrink
                continue
            if cand_val < val - opts.armijo * tau * slope:
                improvement = val - cand_val
                prev_values, prev_direction = v.values, w
                v = cand
                val, covector = objective.value_and_covector(v)
                accepted = True
                # decreases at the float resolution of the value cannot
                # accumulate; a few in a row means the noise floor is hit
                stalls = stalls + 1 if improvement <= noise_floor * max(1.0, abs(val)) else 0
                break
            tau *= opts.shrink
        if not accepted or stalls >= 3:
            break
    normal = energy_gradient_p(v, p).values
    residual = float(np.linalg.norm(_tangent_project(covector, normal)))
    return v, val, iterations, residual, residual <= opts.tol


def minimize_on_sphere(
    objective: SphereObjective, grid: GridDomain, p: float, opts: SolveOptions
) -> SphereMinimum:
    """Multi-start projected gradient descent with renormalization retraction.

    Starts that fail feasibility (the objective raises) are resampled and
    counted; results merge by minimum value with ties broken by start index,
    so the outcome is a deterministic function of (objective, opts.seed)
    independent of the worker count.
    """
    seeds = np.random.SeedSequence(opts.seed).spawn(50 * opts.starts)
    starts: list[DiscreteField] = []
    resampled = 0
    for child in seeds:
        if len(starts) == opts.starts:
            break
        v = sphere_point(grid, p, np.random.default_rng(child), opts.smooth_starts)
        try:
            objective.value(v)
        except (BranchUnavailableError, DegenerateRayError):
            resampled += 1
            continue
        starts.append(v)
    if not starts:
        raise BranchUnavailableError(
            "all starts failed branch projection",
            diagnostics={"attempts": resampled},
        )

    def run(v0):
        return _descend(objective, v0, grid, p, opts)

    if opts.threads and opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(v0) for v0 in starts]

    best = min(range(len(results)), key=lambda i: (results[i][1], i))
    v, val, iterations, residual, converged = results[best]
    return SphereMinimum(
        v=v,
        value=val,
        iterations=iterations,
        tangent_residual=residual,
        converged=converged,
        starts_used=len(starts),
        resampled=resampled,
    )


def minimize_branch(
    prob: VariationalProblem, branch: Branch, opts: SolveOptions = SolveOptions()
) -> BranchLevel:
    """First branch level: minimum of the reduced functional over the sphere."""
    objective = BranchObjective(prob, branch, opts.ray_tol)
    minimum = minimize_on_sphere(objective, prob.grid, prob.sphere_power, opts)
    point = project_to_branch(prob, minimum.v, branch, opts.ray_tol)
    return BranchLevel(
        branch=branch,
        level=minimum.value,
        minimizer=point,
        iterations=minimum.iterations,
        tangent_residual=minimum.tangent_residual,
        converged=minimum.converged,
        starts_used=minimum.starts_used,
        resampled=minimum.resampled,
    )


# --- diagnostics ------------------------------------------------------------


@dataclass(frozen=True)
class ContinuityRecord:
    radius: float
    modulus: float
    base_t: float


def continuity_probe(
    prob: VariationalProblem,
    v: DiscreteField,
    branch: Branch,
    radius: float,
    samples: int,
    seed: int = 0,
    ray_tol: float = 1e-9,
) -> ContinuityRecord:
    """Max |t_pm(v') - t_pm(v)| over random perturbations of sphere-norm size radius."""
    base = project_to_branch(prob, v, branch, ray_tol)
    if radius == 0.0:
        return ContinuityRecord(radius=0.0, modulus=0.0, base_t=base.t)
    rng = np.random.default_rng(seed)
    modulus = 0.0
    p = prob.sphere_power
    for _ in range(samples):
        w = normalize(random_field(prob.grid, rng, smooth=1), p)
        perturbed = normalize(v + radius * w, p)
        t = project_to_branch(prob, perturbed, branch, ray_tol).t
        modulus = max(modulus, abs(t - base.t))
    return ContinuityRecord(radius=radius, modulus=modulus, base_t=base.t)


@dataclass(frozen=True)
class ConditionRatios:
    """Sampled minima of the growth-condition ratios and implied constants.

    For each sampled unit direction the ratios E^(beta/eta)/B, |u|^eta/E,
    E^(alpha/eta)/A and B^(alpha/beta)/A are recorded; the reciprocal of each
    minimum is the smallest constant making the corresponding comparison hold
    on the sample set.  Reported, never asserted.
    """

    min_growth_b: float
    min_norm_e: float
    min_growth_a_energy: float
    min_growth_a_mass: float
    samples: int

    @property
    def constants(self) -> dict:
        return {
            "B_le_C_E^(beta/eta)": 1.0 / self.min_growth_b,
            "E_le_C_norm^eta": 1.0 / self.min_norm_e,
            "A_le_C_E^(alpha/eta)": 1.0 / self.min_growth_a_energy,
            "A_le_C_B^(alpha/beta)": 1.0 / self.min_growth_a_mass,
        }


def condition_ratios(
    prob: VariationalProblem, samples: int, seed: int = 0, smooth: int = 2
) -> ConditionRatios:
    if prob.homogeneous_hint is None:
        raise ContractViolation("condition_ratios requires a homogeneous hint")
    hint = prob.homogeneous_hint
    deg = hint.degrees
    rng = np.random.default_rng(seed)
    mins = [np.inf] * 4
    for _ in range(samples):
        v = sphere_point(prob.grid, prob.sphere_power, rng, smooth)
        coeffs = hint.coefficients(v)
        ratios = (
            coeffs.e ** (deg.beta / deg.eta) / coeffs.b,
            1.0 / coeffs.e,  # |v| = 1 on the sphere
            coeffs.e ** (deg.alpha / deg.eta) / coeffs.a,
            coeffs.b ** (deg.alpha / deg.beta) / coeffs.a,
        )
        mins = [min(m, r) for m, r in zip(mins, ratios)]
    return ConditionRatios(*mins, samples=samples)


# --- fixed-parameter families ------------------------------------------------


@dataclass(frozen=True)
class FixedLambdaFamily:
    """Family Phi_lam = I1 - lam * I2 with I2 positive and alpha-homogeneous.

    i1_ray(v) must return the scalar profile of t -> I1(tv).  When the family
    is of the homogeneous three-term class, hint_for builds the closed-form
    ray structure for a given lam.
    """

    name: str
    grid: GridDomain
    sphere_power: float
    alpha: float
    i1_value: Callable[[DiscreteField], float]
    i1_grad: Callable[[DiscreteField], DiscreteField]
    i1_ray: Callable[[DiscreteField], object]
    i2_value: Callable[[DiscreteField], float]
    i2_grad: Callable[[DiscreteField], DiscreteField]
    hint_for: Callable[[float], HomogeneousHint] | None = None
    even: bool = True

    def problem(self, lam: float) -> VariationalProblem:
        if lam <= 0.0:
            raise DomainError(f"lam must be positive, got {lam}")

        def value(u):
            return self.i1_value(u) - lam * self.i2_value(u)

        def grad(u):
            return self.i1_grad(u) + (-lam) * self.i2_grad(u)

        def ray(v):
            base = self.i1_ray(v)
            i2v = self.i2_value(v)
            if isinstance(base, PowerSumProfile):
                return PowerSumProfile(base.terms + ((-lam * i2v, self.alpha),))
            return CallableRayProfile(
                lambda t: base.value(t) - lam * i2v * t**self.alpha,
                lambda t: base.derivative(t)
                - lam * self.alpha * i2v * t ** (self.alpha - 1.0),
            )

        return VariationalProblem(
            name=f"{self.name}[lam={lam!r}]",
            grid=self.grid,
            sphere_power=self.sphere_power,
            value=value,
            grad=grad,
            ray=ray,
            homogeneous_hint=self.hint_for(lam) if self.hint_for else None,
            even=self.even,
        )

    def ray_threshold(self, v: DiscreteField) -> float:
        """Largest lam for which the ray through v has critical points.

        Exact through the fibering closed form when available, otherwise the
        maximum of dI1(tv)/dt / (alpha t^(alpha-1) I2(v)) over a dense grid.
        """
        if self.hint_for is not None:
            hint = self.hint_for(1.0)
            return fibering.lambda_threshold(hint.coefficients(v), hint.degrees).lambda_u
        profile = self.i1_ray(v)
        i2v = self.i2_value(v)
        t = np.geomspace(1e-5, 1e5, 4001)
        num = np.asarray(profile.derivative(t))
        den = self.alpha * t ** (self.alpha - 1.0) * i2v
        return float(np.max(num / den))

    def sampled_threshold(self, samples: int, seed: int = 0, smooth: int = 2) -> float:
        """Minimum ray threshold over random unit directions (upper estimate
        of the family-wide threshold; decreases weakly in the sample count)."""
        rng = np.random.default_rng(seed)
        best = np.inf
        for _ in range(samples):
            v = sphere_point(self.grid, self.sphere_power, rng, smooth)
            best = min(best, self.ray_threshold(v))
        return best


def validate_problem(
    prob: VariationalProblem, directions, rel_tol: float = 1e-5
) -> None:
    """Consistency of the ray profile with value/grad (and the hint, if any)."""
    for v in directions:
        for t in (0.4, 1.0, 2.3):
            val, der = prob.ray_profile(v, t)
            direct = prob.value(t * v)
            if abs(val - direct) > 1e-10 * max(1.0, abs(direct)):
                raise ContractViolation(
                    f"ray value mismatch at t={t}: {val} vs {direct}"
                )
            h = 1e-6 * t
            fd = (prob.value((t + h) * v) - prob.value((t - h) * v)) / (2.0 * h)
            if abs(der - fd) > rel_tol * max(1.0, abs(fd)):
                raise ContractViolation(
                    f"ray derivative mismatch at t={t}: {der} vs {fd}"
                )
