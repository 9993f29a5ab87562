"""Matplotlib renderings written next to the CSV/JSON outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (5.0, 3.4),
    "savefig.dpi": 150,
    # keep PNG/SVG bytes stable between runs
    "svg.hashsalt": "geburst",
}


def _save(fig, path):
    meta = {"Software": None} if str(path).endswith(".png") else {}
    fig.tight_layout()
    fig.savefig(path, metadata=meta)
    plt.close(fig)


def plot_ecdf(cdfs, path, deadline=None):
    """Step plot of one or more latency-reliability curves."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for cdf in cdfs:
            x = np.concatenate(([0.0], cdf.support))
            y = np.concatenate(([0.0], cdf.cumulative))
            ax.step(x, y, where="post", label=cdf.label or None)
        if deadline is not None:
            ax.axvline(deadline, color="k", lw=0.8, ls="--")
        ax.set_xscale("symlog", linthresh=1.0)
        ax.set_xlabel("deadline [ms]")
        ax.set_ylabel("Pr(latency <= deadline)")
        if any(c.label for c in cdfs):
            ax.legend()
        _save(fig, path)


def plot_burst_curves(curves, path, metric="burst_start_rate", tolerance=None):
    """Log-scale burst curves.

    ``curves`` maps a label to a dict with ``n`` and ``metric`` arrays and an
    optional ``mc`` array drawn as markers.
    """
    ylabel = {"burst_start_rate": "bursts of length >= n per packet",
              "conditional_survival": "P(burst length >= n)"}[metric]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, c in curves.items():
            y = np.asarray(c[metric], dtype=float)
            line, = ax.semilogy(c["n"], np.where(y > 0, y, np.nan), label=label)
            if c.get("mc") is not None:
                m = np.asarray(c["mc"], dtype=float)
                ax.semilogy(c["n"], np.where(m > 0, m, np.nan), "o", ms=2.5,
                            color=line.get_color())
        if tolerance is not None:
            ax.axvline(tolerance, color="k", lw=0.8, ls="--")
        ax.set_xlabel("consecutive packet errors n")
        ax.set_ylabel(ylabel)
        ax.legend()
        _save(fig, path)
