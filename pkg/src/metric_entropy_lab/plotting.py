"""Figures for risk reports and entropy profiles.

Figures are written next to the delimited outputs and carry no timestamps, so
reruns produce the same files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .entropy import EntropyEnvelope, EntropyProfile  # noqa: E402
from .risk_lab import RiskReport  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (5.0, 3.4),
    "svg.hashsalt": "metric-entropy-lab",
}


def _save(fig, path) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "png"
    meta = {"png": {"Software": None}, "svg": {"Date": None}, "pdf": {"CreationDate": None}}.get(fmt, {})
    fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_risk_report(report: RiskReport, path, title: str | None = None) -> Path:
    """Risk against sample size with 1-se bars, log-log axes."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        n = [r.n for r in report.rows]
        est = [r.estimate for r in report.rows]
        se = [r.se for r in report.rows]
        ax.errorbar(n, est, yerr=se, marker="o", ms=4, capsize=3, lw=1.2, color="C0")
        ax.set_xscale("log")
        if all(e > 0 for e in est):
            ax.set_yscale("log")
        ax.set_xlabel("sample size n")
        ax.set_ylabel("excess risk" if report.task == "classify" else "squared risk")
        ax.set_title(title or f"{report.task} (seed {report.seed})")
        ax.grid(True, which="both", alpha=0.3)
        return _save(fig, path)


def plot_entropy_profile(profile: EntropyProfile, path, envelope: EntropyEnvelope | None = None) -> Path:
    """log N(s) against s, with the fitted envelope band if given."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        s = list(profile.radii)
        logn = [math.log(c) for c in profile.counts]
        ax.plot(s, logn, "o-", ms=4, lw=1.2, label="log N(s)")
        if envelope is not None:
            grid = [x for x in s if x <= envelope.s0]
            ax.plot(grid, [envelope.c_high * x ** -envelope.gamma for x in grid], "--", lw=1, label="upper envelope")
            ax.plot(grid, [envelope.c_low * x ** -envelope.gamma for x in grid], ":", lw=1, label="lower envelope")
        ax.set_xscale("log")
        ax.set_xlabel("radius s")
        ax.set_ylabel("metric entropy")
        ax.legend(frameon=False)
        ax.grid(True, which="both", alpha=0.3)
        return _save(fig, path)
