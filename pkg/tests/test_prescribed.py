"""Prescribed-energy tests.

The scalar oracle throughout: on a direction v with unit Dirichlet energy,
the model's H-profile is H(tv) = ((2-q)/2) t^2 - ((r-q)/r) R t^r with
R = int |v|^r, so its maximizer, maximum, and the level-crossing pair all
have closed forms (quadratic in t^2 when r = 4).  Quotient machinery is
certified by residuals and cross-checked against the H-root path.
"""

import math
import warnings

import numpy as np
import pytest

from fiberopt import prescribed as P
from fiberopt.errors import (
    ConfigError,
    ContractViolation,
    DegenerateRayError,
    EnergyLevelOutOfRange,
)
from fiberopt.fields import (
    dirichlet_energy_p,
    lp_norm_pow,
    random_field,
    unit_interval,
    unit_square,
)
from fiberopt.nehari import Branch, SolveOptions, sphere_point


@pytest.fixture(scope="module")
def cc_problem():
    return P.build_semilinear_cc(unit_interval(63), q=1.5, c=-0.01, r=4.0)


@pytest.fixture(scope="module")
def ground(cc_problem):
    return P.h_ground_level(cc_problem, SolveOptions(starts=6, tol=1e-8, seed=0))


@pytest.fixture(scope="module")
def cc_tuned(cc_problem, ground):
    """The model at a level halfway into the admissible window."""
    return cc_problem.with_c(-0.5 * ground.h0 / cc_problem.alpha)


class TestHFunctional:
    def test_h_value_matches_model_formula(self, cc_problem, rng):
        q, r = 1.5, 4.0
        for _ in range(20):
            u = random_field(cc_problem.grid, rng, smooth=1)
            direct = P.h_value(cc_problem, u)
            formula = (2.0 - q) / 2.0 * dirichlet_energy_p(u, 2.0) + (
                q / r - 1.0
            ) * lp_norm_pow(u, r)
            assert direct == pytest.approx(formula, rel=1e-10)

    def test_h_value_matches_pq_formula(self, rng):
        p, q, r1, r2 = 3.0, 2.0, 1.5, 4.0
        prob = P.build_pq_laplacian(unit_interval(31), p, q, r1, r2, c=-0.01)
        for _ in range(20):
            u = random_field(prob.grid, rng, smooth=1)
            direct = P.h_value(prob, u)
            formula = (
                (p - r1) / p * dirichlet_energy_p(u, p)
                + (q - r1) / q * dirichlet_energy_p(u, q)
                - (r2 - r1) / r2 * lp_norm_pow(u, r2)
            )
            assert direct == pytest.approx(formula, rel=1e-10)

    def test_h_vanishes_for_homogeneous_i1(self):
        # when I1 itself is alpha-homogeneous the Euler identity kills H
        prob = P.build_pq_laplacian(unit_interval(31), 3.0, 2.0, 1.5, 4.0, c=-0.01)
        u = random_field(prob.grid, np.random.default_rng(0), smooth=1)
        euler = prob.i2_grad(u).dot(u) - prob.alpha * prob.i2_value(u)
        assert abs(euler) <= 1e-12 * prob.i2_value(u)

    def test_scalar_profile_shape(self, cc_problem, rng):
        # frozen direction: H(tv) = 0.25 t^2 D2 - 0.625 R t^4 for q=1.5, r=4
        v = sphere_point(cc_problem.grid, 2.0, rng, smooth=2)
        d2 = dirichlet_energy_p(v, 2.0)
        big_r = lp_norm_pow(v, 4.0)
        value, derivative = P.h_ray(cc_problem, v, 0.7)
        assert value == pytest.approx(0.25 * 0.49 * d2 - 0.625 * big_r * 0.7**4, rel=1e-12)
        assert derivative == pytest.approx(0.5 * 0.7 * d2 - 2.5 * big_r * 0.7**3, rel=1e-12)

    def test_ray_maximum_closed_form(self, cc_problem, rng):
        v = sphere_point(cc_problem.grid, 2.0, rng, smooth=2)
        big_r = lp_norm_pow(v, 4.0)
        ray = P.h_max_on_ray(cc_problem, v)
        assert ray.s == pytest.approx(math.sqrt(0.2 / big_r), rel=1e-8)
        assert ray.h_max == pytest.approx(0.025 / big_r, rel=1e-8)


class TestRootsOfH:
    def quartic_roots(self, big_r, target):
        # 0.25 x - 0.625 R x^2 = target, x = t^2
        disc = 0.0625 - 2.5 * big_r * target
        lo = (0.25 - math.sqrt(disc)) / (1.25 * big_r)
        hi = (0.25 + math.sqrt(disc)) / (1.25 * big_r)
        return math.sqrt(lo), math.sqrt(hi)

    def test_two_roots_match_quartic(self, cc_tuned, rng):
        v = sphere_point(cc_tuned.grid, 2.0, rng, smooth=2)
        big_r = lp_norm_pow(v, 4.0)
        target = -cc_tuned.alpha * cc_tuned.c
        ray = P.roots_of_H(cc_tuned, v)
        t_lo, t_hi = self.quartic_roots(big_r, target)
        assert ray.has_roots
        assert ray.t_plus == pytest.approx(t_lo, rel=1e-8)
        assert ray.t_minus == pytest.approx(t_hi, rel=1e-8)
        assert ray.t_plus < ray.s < ray.t_minus

    def test_rootless_when_level_too_deep(self, cc_problem, rng):
        v = sphere_point(cc_problem.grid, 2.0, rng, smooth=2)
        ray = P.h_max_on_ray(cc_problem, v)
        deep = cc_problem.with_c(-1.2 * ray.h_max / cc_problem.alpha)
        assert not P.roots_of_H(deep, v).has_roots

    def test_degenerate_at_the_maximum(self, cc_problem, rng):
        v = sphere_point(cc_problem.grid, 2.0, rng, smooth=2)
        ray = P.h_max_on_ray(cc_problem, v)
        critical = cc_problem.with_c(-ray.h_max / cc_problem.alpha)
        with pytest.raises(DegenerateRayError):
            P.roots_of_H(critical, v)

    def test_quotient_stationary_at_roots(self, cc_tuned, rng):
        # independent cross-check: d/dt lam_c(tv) vanishes at the H-roots
        v = sphere_point(cc_tuned.grid, 2.0, rng, smooth=2)
        ray = P.roots_of_H(cc_tuned, v)
        prob = P.lambda_c_problem(cc_tuned)
        for t in (ray.t_plus, ray.t_minus):
            h = 1e-6 * t
            fd = (
                P.lambda_c_value(cc_tuned, (t + h) * v)
                - P.lambda_c_value(cc_tuned, (t - h) * v)
            ) / (2.0 * h)
            scale = abs(P.lambda_c_value(cc_tuned, t * v)) / t
            assert abs(fd) <= 1e-6 * max(scale, 1.0)
            _, ray_der = prob.ray_profile(v, t)
            assert abs(ray_der) <= 1e-9 * max(scale, 1.0)


class TestGroundLevel:
    def test_reproducible_across_seeds(self, cc_problem, ground):
        other = P.h_ground_level(cc_problem, SolveOptions(starts=6, tol=1e-8, seed=99))
        assert abs(other.h0 - ground.h0) <= 0.01 * ground.h0

    def test_h0_positive_and_below_sampled_rays(self, cc_problem, ground, rng):
        assert ground.h0 > 0.0
        for _ in range(10):
            v = sphere_point(cc_problem.grid, 2.0, rng, smooth=2)
            assert P.h_max_on_ray(cc_problem, v).h_max >= ground.h0 * (1.0 - 1e-9)

    def test_certifying_direction_attains_h0(self, cc_problem, ground):
        ray = P.h_max_on_ray(cc_problem, ground.direction)
        assert ray.h_max == pytest.approx(ground.h0, rel=1e-12)


class TestLambdaC:
    def test_value_with_zero_i1(self, cc_tuned):
        # lam_c = -c / I2 > 0 when I1 vanishes
        u = random_field(cc_tuned.grid, np.random.default_rng(1), smooth=1)

        def i1(t):
            return cc_tuned.i1_value(t * u)

        lo, hi = 1e-3, 50.0
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if i1(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        t_zero = math.sqrt(lo * hi)
        val = P.lambda_c_value(cc_tuned, t_zero * u)
        expected = -cc_tuned.c / cc_tuned.i2_value(t_zero * u)
        assert val == pytest.approx(expected, rel=1e-6)
        assert val > 0.0

    def test_linear_in_level(self, cc_tuned, rng):
        u = random_field(cc_tuned.grid, rng, smooth=1)
        other = cc_tuned.with_c(cc_tuned.c * 2.0)
        diff = P.lambda_c_value(cc_tuned, u) - P.lambda_c_value(other, u)
        assert diff == pytest.approx(
            (other.c - cc_tuned.c) / cc_tuned.i2_value(u), rel=1e-12
        )

    def test_gradient_finite_differences(self, cc_tuned, rng):
        for _ in range(5):
            u = random_field(cc_tuned.grid, rng, smooth=2)
            w = random_field(cc_tuned.grid, rng)
            g = P.lambda_c_grad(cc_tuned, u)
            eps = 1e-6
            fd = (
                P.lambda_c_value(cc_tuned, u + eps * w)
                - P.lambda_c_value(cc_tuned, u + (-eps) * w)
            ) / (2.0 * eps)
            assert abs(g.dot(w) - fd) <= 1e-5 * max(abs(fd), 1.0)


class TestSolvePrescribed:
    def test_certified_solution_both_branches(self, cc_tuned, ground):
        opts = SolveOptions(starts=4, tol=1e-8, max_iter=300, seed=0)
        sol_plus = P.solve_prescribed(cc_tuned, Branch.PLUS, opts, h0=ground.h0)
        sol_minus = P.solve_prescribed(cc_tuned, Branch.MINUS, opts, h0=ground.h0)
        for sol in (sol_plus, sol_minus):
            assert sol.phi_residual <= 1e-6
            assert sol.energy_error <= 1e-6
        assert sol_plus.lambda_star < sol_minus.lambda_star

    def test_negated_minimizer_certifies(self, cc_tuned, ground):
        opts = SolveOptions(starts=3, tol=1e-8, seed=1)
        sol = P.solve_prescribed(cc_tuned, Branch.PLUS, opts, h0=ground.h0)
        flipped = -1.0 * sol.u_star
        residual = cc_tuned.i1_grad(flipped) + (-sol.lambda_star) * cc_tuned.i2_grad(flipped)
        assert float(np.linalg.norm(residual.values)) <= 1e-6

    def test_out_of_range_level_rejected(self, cc_problem, ground):
        bad = cc_problem.with_c(-1.5 * ground.h0 / cc_problem.alpha)
        with pytest.raises(EnergyLevelOutOfRange) as excinfo:
            P.solve_prescribed(bad, Branch.PLUS, SolveOptions(starts=2, seed=0), h0=ground.h0)
        assert excinfo.value.h0 == ground.h0


class TestGapDiagnostics:
    def test_positive_gaps(self, cc_tuned):
        gaps = P.gap_diagnostics(cc_tuned, samples=50, seed=0)
        assert gaps.rootless == 0
        assert gaps.min_s_gap > 0.0
        assert gaps.min_quotient_gap > 0.0
        assert gaps.min_derivative_floor > 0.0
        assert gaps.min_minus_mass > 0.0

    def test_scalar_oracle_direction(self, cc_tuned, rng):
        # the quotient gap on a frozen ray, recomputed from a dense scan of
        # quotient values between the first root and the maximizer
        v = sphere_point(cc_tuned.grid, 2.0, rng, smooth=2)
        ray = P.roots_of_H(cc_tuned, v)
        gap = P.lambda_c_value(cc_tuned, ray.s * v) - P.lambda_c_value(
            cc_tuned, ray.t_plus * v
        )
        assert gap > 0.0
        ts = np.linspace(ray.t_plus, ray.s, 2001)
        scan_vals = [P.lambda_c_value(cc_tuned, float(t) * v) for t in ts]
        assert scan_vals[-1] - scan_vals[0] == pytest.approx(gap, rel=1e-6)
        assert max(scan_vals) == pytest.approx(scan_vals[-1], rel=1e-10)

    def test_sup_norm_shrinks_along_level_sweep(self, cc_problem, ground):
        sups = []
        for k in range(1, 7):
            ck = -ground.h0 * 2.0**-k / cc_problem.alpha
            gaps = P.gap_diagnostics(cc_problem.with_c(ck), samples=30, seed=0)
            sups.append(gaps.sup_plus_norm)
        assert all(a > b for a, b in zip(sups, sups[1:]))

    def test_coercivity_probe_tail_increases(self, cc_tuned):
        probe = P.coercivity_probe(cc_tuned, modes=6)
        assert len(probe.norms) >= 4
        assert probe.norms[-1] / probe.norms[0] >= 32.0
        assert probe.increasing_tail


class TestBuilders:
    def test_exponent_validation(self):
        with pytest.raises(ConfigError):
            P.build_semilinear_cc(unit_interval(15), q=2.5, c=-0.1)
        with pytest.raises(ConfigError):
            P.build_pq_laplacian(unit_interval(15), p=2.0, q=3.0, r1=1.5, r2=4.0, c=-0.1)
        with pytest.raises(ConfigError):
            # supercritical r2 on a 2-D grid with p < 2
            P.build_pq_laplacian(unit_square(5, 5), p=1.5, q=1.3, r1=1.1, r2=7.0, c=-0.1)
        with pytest.raises(ConfigError):
            P.build_semilinear_cc(unit_interval(15), q=1.5, c=0.1)

    def test_i2_homogeneity_degree(self, cc_problem, rng):
        u = random_field(cc_problem.grid, rng, smooth=1)
        base = cc_problem.i2_value(u)
        for t in (0.5, 2.0, 7.0):
            assert cc_problem.i2_value(t * u) == pytest.approx(
                t**cc_problem.alpha * base, rel=1e-10
            )

    def test_concavity_gap_clean_for_power(self):
        assert P.check_concavity_gap(P.power_fspec(4.0), 1.5) == []

    def test_concavity_gap_flags_bad_nonlinearity(self):
        # f growing too slowly: the gap map is increasing on (0, inf)
        bad = P.FSpec(
            f=lambda s: np.asarray(s, dtype=float),
            fprime=lambda s: np.ones_like(np.asarray(s, dtype=float)),
            antiderivative=lambda s: np.asarray(s, dtype=float) ** 2 / 2.0,
        )
        issues = P.check_concavity_gap(bad, 1.5)
        assert issues

    def test_builder_warns_on_bad_shape(self):
        bad = P.FSpec(
            f=lambda s: np.asarray(s, dtype=float),
            fprime=lambda s: np.ones_like(np.asarray(s, dtype=float)),
            antiderivative=lambda s: np.asarray(s, dtype=float) ** 2 / 2.0,
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            P.build_semilinear_cc(unit_interval(15), q=1.5, c=-0.1, f_spec=bad)
        assert any("shape check" in str(w.message) for w in caught)

    def test_general_f_matches_power_paths(self, rng):
        # a power nonlinearity supplied as a generic callable must reproduce
        # the closed-form profiles
        generic = P.FSpec(
            f=lambda s: np.abs(s) ** 2.0 * s,
            fprime=lambda s: 3.0 * np.abs(s) ** 2.0,
            antiderivative=lambda s: np.abs(s) ** 4.0 / 4.0,
        )
        grid = unit_interval(31)
        prob_generic = P.build_semilinear_cc(grid, q=1.5, c=-0.01, f_spec=generic)
        prob_power = P.build_semilinear_cc(grid, q=1.5, c=-0.01, r=4.0)
        v = sphere_point(grid, 2.0, rng, smooth=2)
        for t in (0.4, 1.0, 2.2):
            val_g, der_g = P.h_ray(prob_generic, v, t)
            val_p, der_p = P.h_ray(prob_power, v, t)
            assert val_g == pytest.approx(val_p, rel=1e-12)
            assert der_g == pytest.approx(der_p, rel=1e-12)
        assert P.h_value(prob_generic, 0.7 * v) == pytest.approx(
            P.h_value(prob_power, 0.7 * v), rel=1e-12
        )
