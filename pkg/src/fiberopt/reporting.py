"""Report documents, delimited side files, and rendered figures.

Reports are JSON documents with sorted keys and round-trip float formatting,
so identical runs produce byte-identical files.  Sweeps additionally emit
CSV side files, and the same data is rendered to PNG figures next to them
(rendering can be disabled; the delimited output is the primary interface).
Wall-clock timings never enter the report document; they go to a sidecar.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .fibering import FiberingCoefficients, HomogeneityDegrees, phi_prime, phi_value
from .fields import write_field_csv
from .nehari import BranchLevel


def jsonable(obj):
    """Recursively convert dataclasses/numpy/paths into JSON-ready values."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def report_skeleton(command: str, config_echo: dict, seed: int) -> dict:
    return {
        "tool": "fiberopt",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": jsonable(config_echo),
        "results": {},
        "assertions": [],
    }


def add_assertion(report: dict, name: str, passed: bool, margin, detail: str = "") -> None:
    """Record one asserted property with its measured margin."""
    report["assertions"].append(
        {
            "name": name,
            "passed": bool(passed),
            "margin": jsonable(margin),
            "detail": detail,
        }
    )


def all_passed(report: dict) -> bool:
    return all(entry["passed"] for entry in report["assertions"])


def write_json_report(path, report: dict) -> None:
    with open(path, "w") as handle:
        json.dump(jsonable(report), handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_csv_rows(path, header: list[str], rows) -> None:
    """CSV with round-trip float formatting."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(float(x)) if isinstance(x, (int, float, np.floating)) and not isinstance(x, bool) else str(x) for x in row]
            )


def branch_level_entry(level: BranchLevel, out_dir: Path | None, tag: str) -> dict:
    """JSON entry for a branch level; the minimizer field goes to a CSV file."""
    entry = {
        "branch": level.branch.value,
        "level": level.level,
        "t": level.minimizer.t,
        "value": level.minimizer.value,
        "full_gradient_residual": level.minimizer.residual,
        "tangent_residual": level.tangent_residual,
        "iterations": level.iterations,
        "converged": level.converged,
        "starts_used": level.starts_used,
        "resampled": level.resampled,
    }
    if out_dir is not None:
        field_file = f"minimizer_{tag}.csv"
        write_field_csv(level.minimizer.t * level.minimizer.direction, out_dir / field_file)
        entry["field_file"] = field_file
    return entry


# --- fibering series -----------------------------------------------------------


def fibering_series(
    coeffs: FiberingCoefficients,
    deg: HomogeneityDegrees,
    lam: float,
    t_lo: float,
    t_hi: float,
    points: int = 512,
):
    """(t, value, derivative) rows of the ray restriction on a log-spaced grid."""
    ts = np.geomspace(t_lo, t_hi, points)
    return [
        (float(t), phi_value(coeffs, deg, lam, float(t)), phi_prime(coeffs, deg, lam, float(t)))
        for t in ts
    ]


def write_series_csv(path, rows) -> None:
    write_csv_rows(path, ["t", "value", "derivative"], rows)


# --- figures -------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_fibering_figure(rows, roots, path) -> None:
    """Ray profile and its derivative with the critical parameters marked."""
    plt = _pyplot()
    t = [row[0] for row in rows]
    val = [row[1] for row in rows]
    der = [row[2] for row in rows]
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    ax0.plot(t, val, lw=1.2)
    ax0.set_ylabel("ray value")
    ax1.plot(t, der, lw=1.2)
    ax1.axhline(0.0, color="0.6", lw=0.6)
    ax1.set_ylabel("ray derivative")
    ax1.set_xlabel("t")
    ax0.set_xscale("log")
    for ax in (ax0, ax1):
        for root in roots:
            if root is not None:
                ax.axvline(root, color="crimson", ls="--", lw=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_level_sweep_figure(xs, series: dict, xlabel: str, path, logx: bool = True) -> None:
    """One axis per named series over a parameter grid."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, ys in series.items():
        ax.plot(xs, ys, marker="o", ms=3, lw=1.0, label=label)
    if logx:
        ax.set_xscale("log")
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.set_xlabel(xlabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_loglog_fit_figure(xs, ys, slope: float, path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.loglog(xs, ys, "o", ms=4)
    x0, y0 = xs[len(xs) // 2], ys[len(ys) // 2]
    ref = [y0 * (x / x0) ** slope for x in xs]
    ax.loglog(xs, ref, "--", lw=1.0, label=f"slope {slope:.3f}")
    ax.set_xlabel("lam")
    ax.set_ylabel("ground-state norm")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
