"""Command-line driver: configured runs, sweeps, reports, and figures.

Subcommands:
    fibering    single-ray analysis from explicit coefficients and degrees
    solve       branch levels for a configured model problem
    prescribed  level sweep: h0, both branch quotients, gap diagnostics
    affine      parameter sweep of the plane affine driver
    check       the oracle/invariant suite

Configs are INI-style key/value files (JSON with the same nesting is also
accepted); unknown keys are rejected with the offending line.  Every run
writes a deterministic report.json plus CSV side files into the output
directory, renders figures next to them unless --no-plots is given, and puts
wall-clock timings in a separate timing.txt so reports stay byte-identical
across machines and worker counts.

Exit status: 0 all asserted properties pass, 2 configuration error,
3 numerical failure or failed assertion.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import affine as affine_mod
from . import checks as checks_mod
from . import fibering, prescribed, reporting
from .errors import ConfigError, DomainError, NumericalError
from .fields import GridDomain, field_to_json
from .nehari import Branch, SolveOptions, condition_ratios, minimize_branch

_FLOAT_LIST = "float_list"

_SCHEMAS = {
    "fibering": {
        "fibering": {
            "e": float,
            "a": float,
            "b": float,
            "alpha": float,
            "eta": float,
            "beta": float,
            "lam": float,
            "tol": float,
            "points": int,
            "t_lo": float,
            "t_hi": float,
        }
    },
    "solve": {
        "problem": {"kind": str, "p": float, "q": float, "r": float, "r1": float, "r2": float},
        "grid": {"dim": int, "n": int, "nx": int, "ny": int, "length": float},
        "affine": {"angular_nodes": int},
        "solve": {
            "lam": float,
            "lam_fraction": float,
            "branch": str,
            "starts": int,
            "tol": float,
            "max_iter": int,
            "seed": int,
            "threshold_samples": int,
        },
    },
    "prescribed": {
        "problem": {"kind": str, "p": float, "q": float, "r": float, "r1": float, "r2": float},
        "grid": {"dim": int, "n": int, "nx": int, "ny": int, "length": float},
        "prescribed": {
            "rho_list": _FLOAT_LIST,
            "c_list": _FLOAT_LIST,
            "samples": int,
            "starts": int,
            "tol": float,
            "max_iter": int,
            "seed": int,
            "certify_tol": float,
        },
    },
    "affine": {
        "problem": {"kind": str, "p": float, "q": float, "r": float},
        "grid": {"dim": int, "n": int, "nx": int, "ny": int, "length": float},
        "affine": {"angular_nodes": int, "estimate_samples": int, "gap_samples": int},
        "sweep": {
            "fractions": _FLOAT_LIST,
            "lambdas": _FLOAT_LIST,
            "slope_points": int,
            "starts": int,
            "tol": float,
            "max_iter": int,
            "seed": int,
        },
    },
    "check": {"check": {"seed": int}},
}


def _find_line(path: Path, needle: str) -> int | None:
    try:
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.strip()
            if stripped.startswith(needle) or stripped.startswith(f"[{needle}]"):
                return lineno
    except OSError:
        pass
    return None


def load_config(path_str: str, schema: dict) -> dict:
    """Parse and validate a config file into {section: {key: value}}."""
    path = Path(path_str)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix.lower() == ".json":
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        sections = {str(k): dict(v) for k, v in raw.items()}
    else:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string(path.read_text(), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        sections = {name: dict(parser.items(name)) for name in parser.sections()}

    config: dict = {}
    for section, entries in sections.items():
        if section not in schema:
            line = _find_line(path, section)
            anchor = f"{path}:{line}: " if line else f"{path}: "
            raise ConfigError(f"{anchor}unknown section [{section}]")
        config[section] = {}
        for key, value in entries.items():
            if key not in schema[section]:
                line = _find_line(path, key)
                anchor = f"{path}:{line}: " if line else f"{path}: "
                raise ConfigError(f"{anchor}unknown key '{key}' in [{section}]")
            kind = schema[section][key]
            try:
                if kind is _FLOAT_LIST:
                    if isinstance(value, (list, tuple)):
                        config[section][key] = [float(x) for x in value]
                    else:
                        config[section][key] = [float(x) for x in str(value).split()]
                else:
                    config[section][key] = kind(value)
            except (TypeError, ValueError) as exc:
                line = _find_line(path, key)
                anchor = f"{path}:{line}: " if line else f"{path}: "
                raise ConfigError(f"{anchor}bad value for '{key}': {value!r}") from exc
    return config


def _section(config: dict, name: str) -> dict:
    return config.get(name, {})


def build_grid(config: dict) -> GridDomain:
    grid_cfg = _section(config, "grid")
    dim = grid_cfg.get("dim", 1)
    length = grid_cfg.get("length", 1.0)
    try:
        if dim == 1:
            return GridDomain(lengths=(length,), shape=(grid_cfg.get("n", 63),))
        if dim == 2:
            nx = grid_cfg.get("nx", grid_cfg.get("n", 15))
            ny = grid_cfg.get("ny", nx)
            return GridDomain(lengths=(length, length), shape=(nx, ny))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"grid dim must be 1 or 2, got {dim}")


def build_family(config: dict):
    problem = _section(config, "problem")
    kind = problem.get("kind")
    grid = build_grid(config)
    if kind == "semilinear_cc":
        return prescribed.semilinear_cc_family(
            grid, q=problem.get("q", 1.5), r=problem.get("r", 4.0)
        )
    if kind == "pq_laplacian":
        return prescribed.pq_laplacian_family(
            grid,
            p=problem.get("p", 3.0),
            q=problem.get("q", 2.0),
            r1=problem.get("r1", 1.5),
            r2=problem.get("r2", 4.0),
        )
    if kind == "affine":
        if grid.dim != 2:
            raise ConfigError("the affine problem requires a 2-D grid")
        cfg = affine_mod.AffineEnergyConfig(
            p=problem.get("p", 2.0),
            angular_nodes=_section(config, "affine").get("angular_nodes", 64),
        )
        return affine_mod.affine_family(cfg, grid, q=problem.get("q", 1.6), r=problem.get("r", 4.0))
    raise ConfigError(
        f"unknown problem kind {kind!r}; expected semilinear_cc, pq_laplacian, or affine"
    )


def build_prescribed_problem(config: dict, c: float) -> prescribed.PrescribedProblem:
    problem = _section(config, "problem")
    kind = problem.get("kind")
    grid = build_grid(config)
    if kind == "semilinear_cc":
        return prescribed.build_semilinear_cc(grid, q=problem.get("q", 1.5), c=c, r=problem.get("r", 4.0))
    if kind == "pq_laplacian":
        return prescribed.build_pq_laplacian(
            grid,
            p=problem.get("p", 3.0),
            q=problem.get("q", 2.0),
            r1=problem.get("r1", 1.5),
            r2=problem.get("r2", 4.0),
            c=c,
        )
    raise ConfigError(f"prescribed runs support semilinear_cc and pq_laplacian, got {kind!r}")


def solve_options(section: dict, seed: int, threads: int, default_tol: float = 1e-6) -> SolveOptions:
    return SolveOptions(
        starts=section.get("starts", 6),
        max_iter=section.get("max_iter", 300),
        tol=section.get("tol", default_tol),
        seed=section.get("seed", seed),
        threads=threads,
    )


# --- subcommands ----------------------------------------------------------------


def run_fibering(config: dict, out: Path, seed: int, threads: int, plots: bool) -> dict:
    params = _section(config, "fibering")
    for key in ("e", "a", "b", "alpha", "eta", "beta", "lam"):
        if key not in params:
            raise ConfigError(f"[fibering] requires key '{key}'")
    try:
        coeffs = fibering.FiberingCoefficients(params["e"], params["a"], params["b"])
        deg = fibering.HomogeneityDegrees(params["alpha"], params["eta"], params["beta"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    lam = params["lam"]
    if lam <= 0.0:
        raise ConfigError(f"lam must be positive, got {lam}")
    tol = params.get("tol", 1e-9)

    report = reporting.report_skeleton("fibering", config, seed)
    thr = fibering.lambda_threshold(coeffs, deg)
    roots = fibering.fibering_roots(coeffs, deg, lam, tol=tol)
    report["results"]["threshold"] = {
        "lambda_u": thr.lambda_u,
        "t0": thr.t0,
        "c_const": thr.c_const,
    }
    report["results"]["roots"] = {
        "kind": roots.kind.value,
        "t_plus": roots.t_plus,
        "t_minus": roots.t_minus,
    }
    expected = (
        "two_roots" if lam < thr.lambda_u * (1 - 1e-9)
        else ("no_roots" if lam > thr.lambda_u * (1 + 1e-9) else "degenerate")
    )
    reporting.add_assertion(
        report, "classification_matches_threshold", roots.kind.value == expected,
        thr.lambda_u - lam, f"kind {roots.kind.value}, lam(u) {thr.lambda_u:.6g}",
    )
    if roots.kind is fibering.RootKind.TWO_ROOTS:
        bounds = fibering.root_bounds(coeffs, deg, lam)
        report["results"]["bounds"] = reporting.jsonable(bounds)
        reporting.add_assertion(
            report, "derived_bounds_hold",
            roots.t_plus < bounds.t_plus_upper and roots.t_minus >= bounds.t_minus_lower,
            min(bounds.t_plus_upper - roots.t_plus, roots.t_minus - bounds.t_minus_lower),
        )
        for tag, root in (("plus", roots.t_plus), ("minus", roots.t_minus)):
            resid = abs(fibering.phi_prime(coeffs, deg, lam, root))
            scale = fibering.derivative_scale(coeffs, deg, lam, root)
            reporting.add_assertion(
                report, f"root_residual_{tag}", resid <= tol * scale, tol * scale - resid
            )
        kinds = (
            fibering.classify_stationary(coeffs, deg, lam, roots.t_plus).value,
            fibering.classify_stationary(coeffs, deg, lam, roots.t_minus).value,
        )
        report["results"]["classification"] = list(kinds)
        reporting.add_assertion(
            report, "min_before_max", kinds == ("local_min", "local_max"), 0.0
        )

    # default window: both critical parameters with margin, ending while the
    # tail is still above the local minimum value
    if roots.kind is fibering.RootKind.TWO_ROOTS:
        t_lo = params.get("t_lo", 0.4 * roots.t_plus)
        t_hi = params.get("t_hi", 1.3 * roots.t_minus)
    else:
        t_lo = params.get("t_lo", thr.t0 / 50.0)
        t_hi = params.get("t_hi", thr.t0 * 50.0)
    rows = reporting.fibering_series(coeffs, deg, lam, t_lo, t_hi, params.get("points", 512))
    reporting.write_series_csv(out / "fibering_series.csv", rows)
    report["results"]["series_file"] = "fibering_series.csv"
    if plots:
        reporting.render_fibering_figure(
            rows, (roots.t_plus, roots.t_minus), out / "fibering.png"
        )
        report["results"]["figure_file"] = "fibering.png"
    return report


def run_solve(config: dict, out: Path, seed: int, threads: int, plots: bool) -> dict:
    family = build_family(config)
    section = _section(config, "solve")
    opts = solve_options(section, seed, threads)
    report = reporting.report_skeleton("solve", config, opts.seed)
    if "lam" in section:
        lam = section["lam"]
    else:
        estimate = family.sampled_threshold(
            section.get("threshold_samples", 32), seed=opts.seed
        )
        lam = section.get("lam_fraction", 0.3) * estimate
        report["results"]["threshold_estimate"] = estimate
    report["results"]["lam"] = lam

    which = section.get("branch", "both")
    branches = {
        "both": (Branch.PLUS, Branch.MINUS),
        "plus": (Branch.PLUS,),
        "minus": (Branch.MINUS,),
    }.get(which)
    if branches is None:
        raise ConfigError(f"branch must be both/plus/minus, got {which!r}")
    prob = family.problem(lam)
    levels = {}
    for branch in branches:
        level = minimize_branch(prob, branch, opts)
        tag = branch.value
        levels[branch] = level
        report["results"][f"branch_{tag}"] = reporting.branch_level_entry(level, out, tag)
        if not level.converged:
            report.setdefault("warnings", []).append(
                f"{tag} branch stopped above tolerance (residual {level.tangent_residual:.2e})"
            )
    if len(levels) == 2:
        margin = levels[Branch.MINUS].level - levels[Branch.PLUS].level
        reporting.add_assertion(report, "branch_levels_ordered", margin > 0.0, margin)
    if plots and family.grid.dim == 1 and levels:
        xs = family.grid.axis_coordinates(0)
        series = {
            f"{branch.value} branch": (level.minimizer.t * level.minimizer.direction).values
            for branch, level in levels.items()
        }
        reporting.render_level_sweep_figure(xs, series, "x", out / "minimizers.png", logx=False)
        report["results"]["figure_file"] = "minimizers.png"
    return report


def run_prescribed(config: dict, out: Path, seed: int, threads: int, plots: bool) -> dict:
    section = _section(config, "prescribed")
    opts = solve_options(section, seed, threads, default_tol=1e-8)
    certify_tol = section.get("certify_tol", 1e-6)
    report = reporting.report_skeleton("prescribed", config, opts.seed)

    base = build_prescribed_problem(config, c=-1.0)
    ground = prescribed.h_ground_level(base, opts)
    report["results"]["h0"] = ground.h0
    report["results"]["h0_converged"] = ground.converged

    if "c_list" in section:
        c_values = section["c_list"]
    else:
        rhos = section.get("rho_list", [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625])
        c_values = [-rho * ground.h0 / base.alpha for rho in rhos]
    samples = section.get("samples", 100)

    rows = []
    sweep_records = []
    for c in sorted(c_values):  # most negative first
        prob = base.with_c(c)
        sol_plus = prescribed.solve_prescribed(prob, Branch.PLUS, opts, h0=ground.h0)
        sol_minus = prescribed.solve_prescribed(prob, Branch.MINUS, opts, h0=ground.h0)
        gaps = prescribed.gap_diagnostics(prob, samples=samples, seed=opts.seed)
        rows.append(
            (
                c,
                ground.h0,
                sol_plus.lambda_star,
                sol_minus.lambda_star,
                gaps.min_s_gap,
                gaps.min_quotient_gap,
                gaps.min_derivative_floor,
                gaps.sup_plus_norm,
                sol_plus.phi_residual,
                sol_minus.phi_residual,
                max(sol_plus.energy_error, sol_minus.energy_error),
            )
        )
        sweep_records.append((c, sol_plus, sol_minus, gaps))
        reporting.add_assertion(
            report,
            f"certified_residuals[c={c:.6g}]",
            max(sol_plus.phi_residual, sol_minus.phi_residual) <= certify_tol
            and max(sol_plus.energy_error, sol_minus.energy_error) <= certify_tol,
            certify_tol - max(sol_plus.phi_residual, sol_minus.phi_residual),
        )
        reporting.add_assertion(
            report,
            f"branch_ordering[c={c:.6g}]",
            sol_plus.lambda_star < sol_minus.lambda_star,
            sol_minus.lambda_star - sol_plus.lambda_star,
        )
        reporting.add_assertion(
            report,
            f"positive_gaps[c={c:.6g}]",
            gaps.rootless == 0
            and min(gaps.min_s_gap, gaps.min_quotient_gap, gaps.min_derivative_floor) > 0.0,
            min(gaps.min_s_gap, gaps.min_quotient_gap, gaps.min_derivative_floor),
        )
    sups = [record[3].sup_plus_norm for record in sweep_records]
    if len(sups) >= 3:
        reporting.add_assertion(
            report,
            "first_branch_shrinks_with_level",
            all(a > b for a, b in zip(sups, sups[1:])),
            min(a - b for a, b in zip(sups, sups[1:])),
            "sup of sampled first-branch norms decreases as c rises to zero",
        )
    header = [
        "c", "h0", "lambda_plus", "lambda_minus", "min_s_gap", "min_quotient_gap",
        "min_derivative_floor", "sup_plus_norm", "phi_residual_plus",
        "phi_residual_minus", "energy_error",
    ]
    reporting.write_csv_rows(out / "prescribed_sweep.csv", header, rows)
    report["results"]["sweep_file"] = "prescribed_sweep.csv"
    rows_json = []
    for row, (c, sol_plus, sol_minus, _) in zip(rows, sweep_records):
        entry = dict(zip(header, row))
        entry["u_plus"] = field_to_json(sol_plus.u_star)
        entry["u_minus"] = field_to_json(sol_minus.u_star)
        rows_json.append(entry)
    report["results"]["rows"] = rows_json
    if plots and rows:
        cs = [-row[0] for row in rows]
        reporting.render_level_sweep_figure(
            cs,
            {
                "lambda plus": [row[2] for row in rows],
                "lambda minus": [row[3] for row in rows],
            },
            "-c",
            out / "prescribed_levels.png",
        )
        reporting.render_level_sweep_figure(
            cs,
            {"sup first-branch norm": [row[7] for row in rows]},
            "-c",
            out / "prescribed_norms.png",
        )
        report["results"]["figure_files"] = ["prescribed_levels.png", "prescribed_norms.png"]
    return report


def run_affine(config: dict, out: Path, seed: int, threads: int, plots: bool) -> dict:
    problem = _section(config, "problem")
    if problem.get("kind", "affine") != "affine":
        raise ConfigError("the affine subcommand requires kind = affine")
    grid = build_grid(config)
    if grid.dim != 2:
        raise ConfigError("the affine problem requires a 2-D grid")
    affine_cfg = _section(config, "affine")
    cfg = affine_mod.AffineEnergyConfig(
        p=problem.get("p", 2.0), angular_nodes=affine_cfg.get("angular_nodes", 64)
    )
    family = affine_mod.affine_family(cfg, grid, q=problem.get("q", 1.6), r=problem.get("r", 4.0))
    sweep_cfg = _section(config, "sweep")
    opts = solve_options(sweep_cfg, seed, threads)
    report = reporting.report_skeleton("affine", config, opts.seed)

    estimate = affine_mod.lambda_A_estimate(
        family, affine_cfg.get("estimate_samples", 64), seed=opts.seed
    )
    if "lambdas" in sweep_cfg:
        lams = sweep_cfg["lambdas"]
    else:
        fractions = sweep_cfg.get("fractions", list(np.geomspace(0.08, 1.0, 8)))
        lams = [frac * estimate for frac in fractions]
    sweep = affine_mod.affine_sweep(
        family, lams, opts, lambda_estimate=estimate,
        slope_points=sweep_cfg.get("slope_points", 0),
    )
    report["results"]["lambda_estimate"] = estimate
    report["results"]["lambda_bar"] = sweep.lambda_bar
    report["results"]["lambda_bar_bracket"] = sweep.lambda_bar_bracket
    report["results"]["slope_fit"] = reporting.jsonable(sweep.slope_fit)
    reporting.add_assertion(
        report, "ground_level_below_zero_below_second",
        sweep.smallest_sign_ok, 0.0,
        "at the smallest sweep parameter the first level is negative, the second positive",
    )
    reporting.add_assertion(report, "levels_ordered_on_grid", sweep.ordering_ok, 0.0)

    gaps = affine_mod.ray_gap_diagnostics(
        family, 0.3 * estimate, affine_cfg.get("gap_samples", 50), seed=opts.seed
    )
    report["results"]["ray_gaps"] = reporting.jsonable(gaps)
    reporting.add_assertion(
        report, "ray_gap_floors_positive",
        min(gaps.min_h_at_max, gaps.min_phi_gap, gaps.min_s_gap) > 0.0,
        min(gaps.min_h_at_max, gaps.min_phi_gap, gaps.min_s_gap),
    )
    ratios = condition_ratios(family.problem(0.3 * estimate), samples=64, seed=opts.seed)
    report["results"]["condition_ratios"] = reporting.jsonable(ratios.constants)

    header = [
        "lam", "lambda_estimate", "feasible", "level_plus", "level_minus",
        "norm_plus", "bar_bracket", "residual_plus", "residual_minus",
    ]
    bracket = sweep.lambda_bar_bracket or (None, None)
    rows = []
    for row in sweep.rows:
        in_bracket = (
            row.feasible
            and bracket[0] is not None
            and bracket[0] <= row.lam <= bracket[1]
        )
        rows.append(
            (
                row.lam, estimate, row.feasible,
                row.level_plus if row.feasible else float("nan"),
                row.level_minus if row.feasible else float("nan"),
                row.norm_plus if row.feasible else float("nan"),
                in_bracket,
                row.residual_plus if row.feasible else float("nan"),
                row.residual_minus if row.feasible else float("nan"),
            )
        )
    reporting.write_csv_rows(out / "affine_sweep.csv", header, rows)
    report["results"]["sweep_file"] = "affine_sweep.csv"
    report["results"]["rows"] = [dict(zip(header, row)) for row in rows]
    if plots:
        feasible = [row for row in sweep.rows if row.feasible]
        if feasible:
            reporting.render_level_sweep_figure(
                [row.lam for row in feasible],
                {
                    "first level": [row.level_plus for row in feasible],
                    "second level": [row.level_minus for row in feasible],
                },
                "lam",
                out / "affine_levels.png",
            )
            report["results"]["figure_files"] = ["affine_levels.png"]
        if sweep.slope_fit.slope is not None:
            reporting.render_loglog_fit_figure(
                sweep.slope_fit.lambdas, sweep.slope_fit.norms, sweep.slope_fit.slope,
                out / "affine_norm_fit.png",
            )
            report["results"].setdefault("figure_files", []).append("affine_norm_fit.png")
    return report


def run_check(config: dict, out: Path, seed: int, threads: int, plots: bool) -> dict:
    section = _section(config, "check")
    effective_seed = section.get("seed", seed)
    report = reporting.report_skeleton("check", config, effective_seed)
    results = checks_mod.run_quick_suite(seed=effective_seed, threads=threads)
    for res in results:
        reporting.add_assertion(report, res.name, res.passed, res.margin, res.detail)
        for warning in res.warnings:
            report.setdefault("warnings", []).append(f"{res.name}: {warning}")
    report["results"]["checks"] = [
        {"name": r.name, "passed": r.passed, "margin": r.margin, "values": reporting.jsonable(r.values)}
        for r in results
    ]
    reporting.write_csv_rows(
        out / "check_results.csv",
        ["name", "passed", "margin"],
        [(r.name, r.passed, r.margin) for r in results],
    )
    report["results"]["results_file"] = "check_results.csv"
    return report


_RUNNERS = {
    "fibering": run_fibering,
    "solve": run_solve,
    "prescribed": run_prescribed,
    "affine": run_affine,
    "check": run_check,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberopt",
        description="Branch-wise ground-state solves for two-critical-point ray energies",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None, help="INI or JSON config file")
        cmd.add_argument("--out", default="fiberopt-out", help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--threads", type=int, default=0, help="worker threads (0 = auto)")
        cmd.add_argument("--strict", action="store_true", help="warnings become failures")
        cmd.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    started = time.time()
    try:
        if args.config is not None:
            config = load_config(args.config, _SCHEMAS[args.command])
        elif args.command == "check":
            config = {}
        else:
            raise ConfigError(f"the {args.command} subcommand requires --config")
        seed = args.seed
        if seed is None:
            seed = next(
                (sec.get("seed") for sec in config.values() if isinstance(sec, dict) and "seed" in sec),
                0,
            )
        threads = args.threads if args.threads > 0 else min(4, os.cpu_count() or 1)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = _RUNNERS[args.command](config, out, seed, threads, not args.no_plots)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        diagnostics = getattr(exc, "diagnostics", None)
        if diagnostics:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            reporting.write_json_report(
                out / "failure.json",
                {"error": str(exc), "diagnostics": reporting.jsonable(diagnostics)},
            )
        return 3
    if args.strict:
        for warning in report.get("warnings", []):
            reporting.add_assertion(report, f"strict:{warning[:60]}", False, 0.0, warning)
    ok = reporting.all_passed(report)
    reporting.write_json_report(out / "report.json", report)
    with open(out / "timing.txt", "w") as handle:
        handle.write(f"wall_clock_seconds {time.time() - started:.3f}\n")
        handle.write(f"threads {args.threads}\n")
    status = "ok" if ok else "FAILED ASSERTIONS"
    print(f"fiberopt {args.command}: {status}; report at {out / 'report.json'}")
    return 0 if ok else 3


if __name__ == "__main__":
    sys.exit(main())
