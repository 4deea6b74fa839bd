"""Branch machinery tests.

A synthetic norm-power energy pins the ray analysis to the quadratic
formula: Phi(u) = (1/2)|u|^2 - lam |u| - (1/3)|u|^3 in the Dirichlet norm
has unit coefficients on every ray, so its critical parameters are the roots
of t^2 - t + lam.  Solver behavior is exercised on the concave-convex model
family from the fixtures.
"""

import numpy as np
import pytest

from fiberopt.errors import BranchUnavailableError, ContractViolation, DegenerateRayError
from fiberopt.fibering import FiberingCoefficients, HomogeneityDegrees
from fiberopt.fields import (
    DiscreteField,
    energy_gradient_p,
    normalize,
    random_field,
    sphere_norm,
    unit_interval,
)
from fiberopt.nehari import (
    Branch,
    HomogeneousHint,
    SolveOptions,
    VariationalProblem,
    condition_ratios,
    continuity_probe,
    minimize_branch,
    project_to_branch,
    reduced_gradient,
    reduced_value,
    sphere_point,
    validate_problem,
)

GRID = unit_interval(31)


def norm_power_problem(lam, with_hint=True):
    """Phi(u) = (1/2)N^2 - lam N - (1/3)N^3 with N the Dirichlet 2-norm."""

    def value(u):
        n = sphere_norm(u, 2.0)
        return 0.5 * n**2 - lam * n - n**3 / 3.0

    def grad(u):
        n = sphere_norm(u, 2.0)
        return (1.0 - lam / n - n) * energy_gradient_p(u, 2.0)

    hint = None
    if with_hint:
        hint = HomogeneousHint(
            degrees=HomogeneityDegrees(1.0, 2.0, 3.0),
            lam=lam,
            coefficients=lambda v: FiberingCoefficients(1.0, 1.0, 1.0),
        )
    return VariationalProblem(
        name="norm_power",
        grid=GRID,
        sphere_power=2.0,
        value=value,
        grad=grad,
        homogeneous_hint=hint,
    )


@pytest.fixture()
def unit_direction(rng):
    return sphere_point(GRID, 2.0, rng, smooth=2)


class TestProjection:
    def test_quadratic_roots_hint_path(self, unit_direction):
        prob = norm_power_problem(0.1875)
        plus = project_to_branch(prob, unit_direction, Branch.PLUS)
        minus = project_to_branch(prob, unit_direction, Branch.MINUS)
        assert plus.t == pytest.approx(0.25, abs=1e-12)
        assert minus.t == pytest.approx(0.75, abs=1e-12)

    def test_quadratic_roots_scan_path(self, unit_direction):
        prob = norm_power_problem(0.1875, with_hint=False)
        plus = project_to_branch(prob, unit_direction, Branch.PLUS)
        minus = project_to_branch(prob, unit_direction, Branch.MINUS)
        assert plus.t == pytest.approx(0.25, abs=1e-9)
        assert minus.t == pytest.approx(0.75, abs=1e-9)

    def test_reduced_values_quadratic(self, unit_direction):
        prob = norm_power_problem(0.1875)
        psi_plus = reduced_value(prob, unit_direction, Branch.PLUS)
        psi_minus = reduced_value(prob, unit_direction, Branch.MINUS)
        assert psi_plus == pytest.approx(-0.020833333333333332, rel=1e-10)
        assert psi_minus == pytest.approx(0.0, abs=1e-12)
        assert psi_plus < psi_minus

    def test_branch_errors(self, unit_direction):
        with pytest.raises(BranchUnavailableError):
            project_to_branch(norm_power_problem(0.3), unit_direction, Branch.PLUS)
        with pytest.raises(DegenerateRayError):
            project_to_branch(norm_power_problem(0.25), unit_direction, Branch.PLUS)

    def test_requires_unit_direction(self, unit_direction):
        prob = norm_power_problem(0.1875)
        with pytest.raises(ContractViolation):
            project_to_branch(prob, 2.0 * unit_direction, Branch.PLUS)

    def test_evenness_and_idempotence(self, cc_family, cc_lambda, unit_direction):
        prob = cc_family.problem(cc_lambda)
        v = normalize(
            random_field(cc_family.grid, np.random.default_rng(3), smooth=2), 2.0
        )
        t = project_to_branch(prob, v, Branch.PLUS).t
        assert project_to_branch(prob, -v, Branch.PLUS).t == pytest.approx(t, rel=1e-12)
        again = project_to_branch(prob, v, Branch.PLUS).t
        assert again == pytest.approx(t, rel=1e-14)

    def test_branch_ordering_on_random_rays(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        rng = np.random.default_rng(7)
        for _ in range(20):
            v = sphere_point(cc_family.grid, 2.0, rng, smooth=2)
            plus = project_to_branch(prob, v, Branch.PLUS)
            minus = project_to_branch(prob, v, Branch.MINUS)
            assert plus.t < minus.t
            assert plus.value < minus.value

    def test_nehari_membership_radial_derivative(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        rng = np.random.default_rng(11)
        for _ in range(5):
            v = sphere_point(cc_family.grid, 2.0, rng, smooth=2)
            for branch in (Branch.PLUS, Branch.MINUS):
                point = project_to_branch(prob, v, branch)
                u = point.t * v
                radial = prob.grad(u).dot(u)
                scale = max(abs(prob.value(u)), 1.0)
                assert abs(radial) <= 1e-8 * scale


class TestProblemValidation:
    def test_family_problem_consistent(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        rng = np.random.default_rng(13)
        directions = [sphere_point(cc_family.grid, 2.0, rng, smooth=2) for _ in range(3)]
        validate_problem(prob, directions)

    def test_hint_agrees_with_direct_value(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        hint = prob.homogeneous_hint
        rng = np.random.default_rng(17)
        v = sphere_point(cc_family.grid, 2.0, rng, smooth=2)
        coeffs = hint.coefficients(v)
        for t in (0.3, 1.0, 2.7):
            from fiberopt.fibering import phi_value

            closed = phi_value(coeffs, hint.degrees, cc_lambda, t)
            direct = prob.value(t * v)
            assert closed == pytest.approx(direct, rel=1e-10)


class TestReducedGradient:
    def test_tangential_finite_differences(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        rng = np.random.default_rng(19)
        for branch in (Branch.PLUS, Branch.MINUS):
            for _ in range(5):
                v = sphere_point(cc_family.grid, 2.0, rng, smooth=2)
                g = reduced_gradient(prob, v, branch).values
                w = random_field(cc_family.grid, rng, smooth=1).values
                normal = energy_gradient_p(v, 2.0).values
                w -= (np.vdot(normal, w) / np.vdot(normal, normal)) * normal
                wf = DiscreteField(cc_family.grid, w)
                eps = 1e-5
                fd = (
                    reduced_value(prob, normalize(v + eps * wf, 2.0), branch)
                    - reduced_value(prob, normalize(v + (-eps) * wf, 2.0), branch)
                ) / (2.0 * eps)
                denom = max(np.linalg.norm(g) * np.linalg.norm(w), 1e-30)
                assert abs(float(np.vdot(g, w)) - fd) / denom <= 1e-4

    def test_gradient_is_tangent(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        v = sphere_point(cc_family.grid, 2.0, np.random.default_rng(23), smooth=2)
        g = reduced_gradient(prob, v, Branch.PLUS).values
        normal = energy_gradient_p(v, 2.0).values
        assert abs(np.vdot(normal, g)) <= 1e-10 * np.linalg.norm(normal) * max(
            np.linalg.norm(g), 1e-30
        )


class TestMinimizeBranch:
    def test_levels_ordered_and_certified(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        opts = SolveOptions(starts=4, tol=1e-6, max_iter=300, seed=0)
        plus = minimize_branch(prob, Branch.PLUS, opts)
        minus = minimize_branch(prob, Branch.MINUS, opts)
        assert plus.converged and plus.tangent_residual <= 1e-6
        assert plus.level < 0.0
        assert plus.level < minus.level
        assert minus.level - plus.level > 1e-5
        assert plus.level == plus.minimizer.value

    def test_spec_example_low_lambda(self, cc_family):
        # lam far below the threshold: the first level is still negative and
        # the tangent residual certifies the minimizer
        prob = cc_family.problem(0.1)
        level = minimize_branch(prob, Branch.PLUS, SolveOptions(starts=4, seed=0))
        assert level.level < 0.0
        assert level.tangent_residual <= 1e-6

    def test_more_starts_never_increase_level(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        few = minimize_branch(prob, Branch.PLUS, SolveOptions(starts=2, seed=5))
        many = minimize_branch(prob, Branch.PLUS, SolveOptions(starts=6, seed=5))
        assert many.level <= few.level + 1e-15

    def test_deterministic_across_threads(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        serial = minimize_branch(prob, Branch.PLUS, SolveOptions(starts=4, seed=1, threads=0))
        threaded = minimize_branch(prob, Branch.PLUS, SolveOptions(starts=4, seed=1, threads=3))
        assert serial.level == threaded.level
        assert np.array_equal(
            serial.minimizer.direction.values, threaded.minimizer.direction.values
        )

    def test_negated_minimizer_same_level(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        level = minimize_branch(prob, Branch.PLUS, SolveOptions(starts=3, seed=2))
        flipped = reduced_value(prob, -level.minimizer.direction, Branch.PLUS)
        assert flipped == pytest.approx(level.level, rel=1e-12)

    def test_infeasible_branch_error(self):
        prob = norm_power_problem(0.4)  # above every ray threshold
        with pytest.raises(BranchUnavailableError):
            minimize_branch(prob, Branch.PLUS, SolveOptions(starts=3, seed=0))

    def test_accepted_steps_never_increase_value(self, cc_family, cc_lambda):
        from fiberopt.nehari import BranchObjective, minimize_on_sphere

        prob = cc_family.problem(cc_lambda)
        accepted = []

        class Recording(BranchObjective):
            def value_and_covector(self, v):
                val, cov = super().value_and_covector(v)
                accepted.append(val)
                return val, cov

        objective = Recording(prob, Branch.MINUS, 1e-9)
        minimize_on_sphere(
            objective, prob.grid, 2.0, SolveOptions(starts=1, seed=0, max_iter=80)
        )
        assert all(a >= b for a, b in zip(accepted, accepted[1:]))


class TestContinuityProbe:
    def test_zero_radius(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        v = sphere_point(cc_family.grid, 2.0, np.random.default_rng(29), smooth=2)
        record = continuity_probe(prob, v, Branch.PLUS, 0.0, samples=3)
        assert record.modulus == 0.0

    def test_moduli_decrease_with_radius(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        v = sphere_point(cc_family.grid, 2.0, np.random.default_rng(31), smooth=2)
        moduli = [
            continuity_probe(prob, v, Branch.MINUS, radius, samples=6, seed=7).modulus
            for radius in (1e-2, 1e-3, 1e-4)
        ]
        assert moduli[0] > moduli[1] > moduli[2] > 0.0


class TestConditionRatios:
    def test_single_sample_equals_ratio(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        ratios = condition_ratios(prob, samples=1, seed=3)
        # reproduce the single sampled direction
        v = sphere_point(prob.grid, 2.0, np.random.default_rng(3), 2)
        hint = prob.homogeneous_hint
        coeffs = hint.coefficients(v)
        deg = hint.degrees
        assert ratios.min_growth_b == pytest.approx(
            coeffs.e ** (deg.beta / deg.eta) / coeffs.b, rel=1e-12
        )

    def test_all_ratios_finite_positive(self, cc_family, cc_lambda):
        ratios = condition_ratios(cc_family.problem(cc_lambda), samples=32, seed=4)
        for value in (
            ratios.min_growth_b,
            ratios.min_norm_e,
            ratios.min_growth_a_energy,
            ratios.min_growth_a_mass,
        ):
            assert np.isfinite(value) and value > 0.0
        for constant in ratios.constants.values():
            assert np.isfinite(constant) and constant > 0.0

    def test_stability_across_seeds(self, cc_family, cc_lambda):
        prob = cc_family.problem(cc_lambda)
        a = condition_ratios(prob, samples=100, seed=0)
        b = condition_ratios(prob, samples=100, seed=1)
        for x, y in zip(a.constants.values(), b.constants.values()):
            assert abs(x - y) <= 0.2 * max(x, y)

    def test_requires_hint(self):
        prob = norm_power_problem(0.1, with_hint=False)
        with pytest.raises(ContractViolation):
            condition_ratios(prob, samples=2)
