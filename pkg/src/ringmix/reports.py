"""Delimited outputs and the matplotlib figures rendered next to them.

Every CSV is written with 9 significant digits, LF newlines, and a header
row naming units, so identical runs produce identical bytes. Figures save as
SVG with no embedded timestamp and a fixed hash salt; they are companions to
the CSVs, never the primary record.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .landscape import LambdaLandscape  # noqa: E402
from .losses import LossReport  # noqa: E402
from .toysep import TrajectoryRecord  # noqa: E402

plt.rcParams["svg.hashsalt"] = "ringmix"

FLOAT_DIGITS = 9


def fmt(value) -> str:
    """One CSV cell; floats get 9 significant digits, None an empty cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{FLOAT_DIGITS}g}"
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def save_figure(fig, path: str | Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# Landscape outputs


def write_landscape_csv(path: str | Path, ls: LambdaLandscape) -> None:
    header = [
        "lambda (dimensionless)",
        "pair_loss (dB)",
        "sdr_term (dB)",
        "scer (dB)",
    ]
    alphas = sorted(ls.combined_db)
    header += [f"combined_alpha_{a:g} (dB)" for a in alphas]
    has_mc = ls.mc_mean_db is not None
    if has_mc:
        header += ["mc_mean (dB)", "mc_stderr (dB)", "mc_ref_term (dB)"]
    rows = []
    for i, lam in enumerate(ls.grid):
        row = [float(lam), float(ls.pair_db[i]), float(ls.sdr_term_db[i]), float(ls.scer_db[i])]
        row += [float(ls.combined_db[a][i]) for a in alphas]
        if has_mc:
            row += [
                float(ls.mc_mean_db[i]),
                float(ls.mc_stderr_db[i]),
                float(ls.mc_ref_term_db[i]),
            ]
        rows.append(row)
    write_csv(path, header, rows)


def plot_landscape(path: str | Path, ls: LambdaLandscape) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(ls.grid, ls.pair_db, label="pair loss", color="tab:blue")
    ax.plot(ls.grid, ls.scer_db, label="consistency (SCER)", color="tab:orange")
    for alpha, curve in sorted(ls.combined_db.items()):
        ax.plot(ls.grid, curve, label=f"combined, alpha={alpha:g}", linestyle="--")
    if ls.mc_mean_db is not None:
        ax.errorbar(
            ls.grid,
            ls.mc_mean_db,
            yerr=3.0 * ls.mc_stderr_db,
            label="MC single term (3 SE)",
            color="tab:green",
            linewidth=0.8,
            alpha=0.8,
        )
        ax.plot(ls.grid, ls.mc_ref_term_db, color="tab:green", linestyle=":", linewidth=0.8)
    for lam in ls.minima.get("pair", ()):
        ax.axvline(lam, color="tab:blue", linewidth=0.6, alpha=0.5)
    ax.set_xlabel("lambda (fraction of mixture noise kept)")
    ax.set_ylabel("loss (dB)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    save_figure(fig, path)


# ---------------------------------------------------------------------------
# Loss report rows

LOSS_REPORT_HEADER = [
    "source (index)",
    "mixture_prev (index)",
    "mixture_curr (index)",
    "sdr_prev (dB)",
    "sdr_curr (dB)",
    "scer (dB)",
    "beta_prev (dimensionless)",
    "beta_curr (dimensionless)",
    "batch_loss (dB)",
]


def write_loss_report_csv(path: str | Path, report: LossReport) -> None:
    """Per-source terms plus a trailing aggregate row carrying the batch loss."""
    rows = []
    for t in report.per_source:
        rows.append(
            [
                t.source,
                t.mixtures[0],
                t.mixtures[1],
                t.sdr_db[0],
                t.sdr_db[1],
                t.scer_db,
                t.betas[0],
                t.betas[1],
                None,
            ]
        )
    n = len(report.per_source)
    rows.append(
        [
            "mean",
            None,
            None,
            sum(t.sdr_db[0] for t in report.per_source) / n,
            sum(t.sdr_db[1] for t in report.per_source) / n,
            sum(t.scer_db for t in report.per_source) / n,
            None,
            None,
            report.batch_loss,
        ]
    )
    write_csv(path, LOSS_REPORT_HEADER, rows)


# ---------------------------------------------------------------------------
# Optimizer outputs


def write_trajectory_csv(path: str | Path, record: TrajectoryRecord) -> None:
    n_params = record.lambdas.shape[1]
    header = ["step", "loss (dB)", "grad_max_norm (dB per raw unit)", "lambda_mean (dimensionless)"]
    header += [f"lambda_{i} (dimensionless)" for i in range(n_params)]
    rows = []
    for t in range(record.steps_run):
        row = [
            t,
            float(record.losses[t]),
            float(record.grad_max_norms[t]),
            float(record.lambdas[t].mean()),
        ]
        row += [float(v) for v in record.lambdas[t]]
        rows.append(row)
    write_csv(path, header, rows)


def plot_trajectories(path: str | Path, records: dict[float, TrajectoryRecord]) -> None:
    fig, (ax_lam, ax_loss) = plt.subplots(1, 2, figsize=(10, 4))
    for alpha, rec in sorted(records.items()):
        steps = range(rec.steps_run)
        ax_lam.plot(steps, rec.lambdas.mean(axis=1), label=f"alpha={alpha:g}")
        ax_loss.plot(steps, rec.losses, label=f"alpha={alpha:g}")
    ax_lam.set_xlabel("step")
    ax_lam.set_ylabel("mean lambda (dimensionless)")
    ax_lam.set_ylim(-0.02, 1.0)
    ax_lam.grid(alpha=0.3)
    ax_lam.legend(fontsize=8)
    ax_loss.set_xlabel("step")
    ax_loss.set_ylabel("batch loss (dB)")
    ax_loss.grid(alpha=0.3)
    fig.tight_layout()
    save_figure(fig, path)


SWEEP_HEADER = [
    "alpha (dimensionless)",
    "final_lambda_mean (dimensionless)",
    "occ_n_self_mean (dimensionless)",
    "occ_n_other_mean (dimensionless)",
    "si_sdr_clean_mean (dB)",
    "converged (bool)",
    "diverged (bool)",
    "steps_run (count)",
]


def write_sweep_csv(path: str | Path, rows: Iterable[Sequence]) -> None:
    write_csv(path, SWEEP_HEADER, rows)


# ---------------------------------------------------------------------------
# Evaluation outputs

METRICS_HEADER = [
    "source (index)",
    "mixture (index)",
    "si_sdr_clean (dB)",
    "si_sdr_noisy (dB)",
    "occ_s_other (dimensionless)",
    "occ_n_other (dimensionless)",
    "occ_n_self (dimensionless)",
]


def write_metrics_csv(path: str | Path, rows: Iterable[Sequence], aggregate: Sequence) -> None:
    all_rows = list(rows)
    all_rows.append(aggregate)
    write_csv(path, METRICS_HEADER, all_rows)


def plot_metrics(path: str | Path, rows: Sequence[Sequence]) -> None:
    fig, (ax_occ, ax_sdr) = plt.subplots(1, 2, figsize=(10, 4))
    labels = [f"{r[0]}/{r[1]}" for r in rows]
    x = range(len(rows))
    for col, name, color in (
        (4, "s_other", "tab:blue"),
        (5, "n_other", "tab:orange"),
        (6, "n_self", "tab:red"),
    ):
        vals = [r[col] for r in rows]
        if any(v is not None for v in vals):
            ax_occ.plot(
                x,
                [float("nan") if v is None else v for v in vals],
                marker="o",
                linestyle="",
                label=name,
                color=color,
            )
    ax_occ.set_xticks(list(x), labels, rotation=90, fontsize=6)
    ax_occ.set_xlabel("source/mixture")
    ax_occ.set_ylabel("occupancy (dimensionless)")
    ax_occ.grid(alpha=0.3)
    ax_occ.legend(fontsize=8)
    ax_sdr.plot(x, [r[2] for r in rows], marker="o", linestyle="", label="vs clean")
    ax_sdr.plot(x, [r[3] for r in rows], marker="x", linestyle="", label="vs noisy")
    ax_sdr.set_xticks(list(x), labels, rotation=90, fontsize=6)
    ax_sdr.set_xlabel("source/mixture")
    ax_sdr.set_ylabel("SI-SDR (dB)")
    ax_sdr.grid(alpha=0.3)
    ax_sdr.legend(fontsize=8)
    fig.tight_layout()
    save_figure(fig, path)
