"""Render solver figures from run-directory artifacts.

Reads the solve CSV (``j,p,f,p_theory,f_theory,branches``) and
``report.json`` files written by the simulator CLI; no physics is
recomputed here. All functions are read-only over the run artifacts
and idempotent.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SOLVE_COLUMNS = ["j", "p", "f", "p_theory", "f_theory", "branches"]
FIGURE_KINDS = ("convergence", "scaling-N", "scaling-s-loglog")


class PlotDataError(Exception):
    """Run artifacts are unusable for the requested figure."""


class MissingColumnError(PlotDataError):
    """A referenced CSV column or report key does not exist."""


@dataclass(frozen=True)
class PlotJob:
    figure_kind: str
    input_dirs: tuple[Path, ...]
    output_path: Path

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise PlotDataError(f"unknown figure kind {self.figure_kind!r}; pick one of {FIGURE_KINDS}")


def _float_or_nan(text: str) -> float:
    return float(text) if text != "" else float("nan")


def read_solve_dir(directory: Path) -> dict:
    """Parse one solve directory into column arrays plus the report."""
    directory = Path(directory)
    csv_path = directory / "solve.csv"
    if not csv_path.exists():
        raise PlotDataError(f"no solve.csv in {directory}")
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in SOLVE_COLUMNS if c not in header]
        if missing:
            raise MissingColumnError(f"{csv_path} lacks column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise PlotDataError(f"{csv_path} has no per-step rows")
    data = {
        "j": np.array([int(r["j"]) for r in rows]),
        "p": np.array([_float_or_nan(r["p"]) for r in rows]),
        "f": np.array([_float_or_nan(r["f"]) for r in rows]),
        "p_theory": np.array([_float_or_nan(r["p_theory"]) for r in rows]),
        "f_theory": np.array([_float_or_nan(r["f_theory"]) for r in rows]),
    }
    report_path = directory / "report.json"
    data["report"] = json.loads(report_path.read_text()) if report_path.exists() else {}
    return data


def read_report(directory: Path) -> dict:
    """Load report.json and require the scaling keys."""
    path = Path(directory) / "report.json"
    if not path.exists():
        raise PlotDataError(f"no report.json in {directory}")
    report = json.loads(path.read_text())
    missing = [k for k in ("rowSize", "s", "maxBranches") if k not in report]
    if missing:
        raise MissingColumnError(f"{path} lacks key(s) {', '.join(missing)}")
    return report


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def plot_convergence(job: PlotJob) -> Path:
    """Stacked success-rate / fidelity panels, one column per run.

    Simulator values are drawn as points, theory as a line when the
    theory columns are populated; the caption reports the worst
    |f - f_theory| over all runs. Nothing is written if any input is
    unusable.
    """
    runs = [read_solve_dir(d) for d in job.input_dirs]  # validate all before drawing
    ncols = len(runs)
    fig, axes = plt.subplots(2, ncols, figsize=(6.5 * ncols, 7.0), squeeze=False, sharex="col")
    worst_gap = 0.0
    for c, (run, directory) in enumerate(zip(runs, job.input_dirs)):
        report = run["report"]
        title = Path(directory).name
        if "rowSize" in report:
            title = f"N={report['rowSize']}"
            if report.get("kappa") is not None:
                title += f", kappa={report['kappa']:.3g}"
        for row, (key, label) in enumerate((("p", "success rate p"), ("f", "fidelity F"))):
            ax = axes[row][c]
            theory = run[f"{key}_theory"]
            if not np.all(np.isnan(theory)):
                ax.plot(run["j"], theory, "-", color="tab:orange", lw=1.2, label="theory")
            ax.plot(run["j"], run[key], ".", color="tab:blue", ms=3.5, label="simulator")
            ax.set_ylabel(label)
            ax.set_ylim(-0.05, 1.05)
            ax.legend(loc="lower right", fontsize=8)
            if row == 0:
                ax.set_title(title)
            else:
                ax.set_xlabel("step j")
        gaps = np.abs(run["f"] - run["f_theory"])
        if not np.all(np.isnan(gaps)):
            worst_gap = max(worst_gap, float(np.nanmax(gaps)))
    fig.text(0.5, 0.005, f"max |F - F_theory| = {worst_gap:.3e}", ha="center", fontsize=9)
    fig.tight_layout(rect=(0, 0.02, 1, 1))
    out = Path(job.output_path)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def plot_scaling(job: PlotJob) -> Path:
    """Max branch count against N (linear axes) or against s (log-log),
    with the fitted log-log slope annotated."""
    reports = [read_report(d) for d in job.input_dirs]
    if len(reports) < 3:
        raise PlotDataError(f"scaling fit needs at least 3 runs, got {len(reports)}")
    against_s = job.figure_kind == "scaling-s-loglog"
    key = "s" if against_s else "rowSize"
    xs = np.array([r[key] for r in reports], dtype=float)
    ys = np.array([r["maxBranches"] for r in reports], dtype=float)
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    if np.unique(xs).shape[0] < 3:
        raise PlotDataError(f"scaling fit needs at least 3 distinct {key} values")
    slope = fit_loglog_slope(xs, ys)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(xs, ys, "o", color="tab:blue", label="runs")
    grid = np.linspace(xs.min(), xs.max(), 64)
    fit = np.exp(np.polyval(np.polyfit(np.log(xs), np.log(ys), 1), np.log(grid)))
    ax.plot(grid, fit, "--", color="tab:orange", label=f"slope = {slope:.2f}")
    if against_s:
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("sparsity s (log)")
    else:
        ax.set_xlabel("row count N")
    ax.set_ylabel("max branch count")
    ax.legend()
    fig.tight_layout()
    out = Path(job.output_path)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def render(job: PlotJob) -> Path:
    if job.figure_kind == "convergence":
        return plot_convergence(job)
    return plot_scaling(job)
