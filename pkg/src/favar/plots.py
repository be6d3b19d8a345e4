"""Impulse-response figure rendering.

Grids of per-variable panels: posterior median with a dashed quantile band
around it, plus an overlay variant comparing several model settings. Output
is SVG with a pinned hash salt and no embedded date, written atomically, so
re-rendering identical inputs yields byte-identical files.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from ._atomic import atomic_write_bytes

# Line styles cycled across overlaid settings in comparison figures.
_OVERLAY_STYLES = ("k-", "k--", "k-.", "k:")


def _layout(variables, names, n_cols):
    index = {n: j for j, n in enumerate(names)}
    missing = [v for v in variables if v not in index]
    if missing:
        raise ValueError(f"unknown variable(s): {', '.join(missing)}")
    if not variables:
        raise ValueError("no variables selected")
    n = len(variables)
    n_cols = max(1, min(int(n_cols), n))
    return index, n_cols, math.ceil(n / n_cols)


def _save_atomic(fig, out_path):
    out_path = Path(out_path)
    fmt = out_path.suffix.lstrip(".").lower() or "svg"
    buf = io.BytesIO()
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(buf, format=fmt, metadata=meta)
    plt.close(fig)
    atomic_write_bytes(out_path, buf.getvalue())
    return out_path


def plot_irf_grid(summary, names, out_path, units, shock_size, n_cols=4,
                  variables=None):
    """Render one grid figure of impulse responses.

    Parameters
    ----------
    summary : IrfSummary
        Pointwise band summary, variables in panel order.
    names : sequence of str
        Variable names matching the summary's variable axis.
    out_path : path-like
        Target file; the suffix picks the format (SVG recommended).
    units : str
        Axis label for the response units.
    shock_size : float
        Shock magnitude, shown in the figure title.
    n_cols : int
        Panels per row.
    variables : sequence of str, optional
        Subset (and order) of variables to draw; defaults to all.

    Returns the output path.
    """
    med = summary.median
    if variables is None:
        variables = list(names)
    index, n_cols, n_rows = _layout(variables, names, n_cols)
    horizons = np.arange(med.shape[0])

    plt.rcParams["svg.hashsalt"] = "favar-irf"
    fig, axes = plt.subplots(
        n_rows, n_cols,
        figsize=(3.2 * n_cols, 2.4 * n_rows),
        squeeze=False,
        sharex=True,
    )
    lo_q, hi_q = summary.quantiles
    for slot, var in enumerate(variables):
        ax = axes[slot // n_cols][slot % n_cols]
        j = index[var]
        ax.axhline(0.0, color="0.6", linewidth=0.6)
        ax.plot(horizons, summary.lower[:, j], "k--", linewidth=0.8)
        ax.plot(horizons, summary.upper[:, j], "k--", linewidth=0.8)
        ax.plot(horizons, med[:, j], "k-", linewidth=1.3)
        ax.set_title(var, fontsize=9)
        ax.tick_params(labelsize=7)
    for slot in range(len(variables), n_rows * n_cols):
        axes[slot // n_cols][slot % n_cols].set_axis_off()
    band = int(round(100 * (hi_q - lo_q)))
    fig.suptitle(
        f"responses to a {shock_size:g} policy shock "
        f"({units} units, {band}% band)",
        fontsize=11,
    )
    fig.supxlabel("quarters", fontsize=9)
    fig.tight_layout(rect=(0, 0.02, 1, 0.97))
    return _save_atomic(fig, out_path)


def plot_sweep_grid(summaries, names, out_path, units, shock_size, n_cols=4,
                    variables=None):
    """Render a comparison grid overlaying median responses per setting.

    Parameters
    ----------
    summaries : sequence of (label, IrfSummary)
        One entry per model setting, drawn in order; labels feed the legend.
    names, out_path, units, shock_size, n_cols, variables
        As in ``plot_irf_grid``; every summary must share the variable axis.

    Returns the output path.
    """
    if not summaries:
        raise ValueError("no summaries to compare")
    if variables is None:
        variables = list(names)
    index, n_cols, n_rows = _layout(variables, names, n_cols)
    horizons = np.arange(summaries[0][1].median.shape[0])
    for _, s in summaries:
        if s.median.shape != summaries[0][1].median.shape:
            raise ValueError("summaries have mismatched shapes")

    plt.rcParams["svg.hashsalt"] = "favar-irf"
    fig, axes = plt.subplots(
        n_rows, n_cols,
        figsize=(3.2 * n_cols, 2.4 * n_rows),
        squeeze=False,
        sharex=True,
    )
    for slot, var in enumerate(variables):
        ax = axes[slot // n_cols][slot % n_cols]
        j = index[var]
        ax.axhline(0.0, color="0.6", linewidth=0.6)
        for k, (label, s) in enumerate(summaries):
            style = _OVERLAY_STYLES[k % len(_OVERLAY_STYLES)]
            ax.plot(horizons, s.median[:, j], style, linewidth=1.0,
                    label=label if slot == 0 else None)
        ax.set_title(var, fontsize=9)
        ax.tick_params(labelsize=7)
    for slot in range(len(variables), n_rows * n_cols):
        axes[slot // n_cols][slot % n_cols].set_axis_off()
    fig.suptitle(
        f"median responses to a {shock_size:g} policy shock "
        f"({units} units) across settings",
        fontsize=11,
    )
    fig.supxlabel("quarters", fontsize=9)
    fig.legend(loc="lower right", fontsize=7, ncols=min(4, len(summaries)))
    fig.tight_layout(rect=(0, 0.04, 1, 0.97))
    return _save_atomic(fig, out_path)
