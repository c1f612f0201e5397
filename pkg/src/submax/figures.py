"""Headless SVG rendering of greedy traces and grid summaries.

The Agg backend is forced so rendering works without a display; output is
SVG with stripped creation dates and a fixed hash salt, keeping reruns
byte-identical.  Each trace polyline carries the SVG group id
``trace-<label>`` so plots are machine-checkable.
"""

from __future__ import annotations

import warnings
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .errors import InputError  # noqa: E402

plt.rcParams["svg.hashsalt"] = "submax"

_LOG_FLOOR = 1e-12


def _clip_for_log(values: np.ndarray, what: str) -> np.ndarray:
    bad = values <= 0.0
    if bad.any():
        warnings.warn(
            f"{int(bad.sum())} non-positive {what} value(s) clipped to "
            f"{_LOG_FLOOR} for log axes"
        )
        values = np.where(bad, _LOG_FLOOR, values)
    return values


def save_svg(fig, path: str) -> str:
    """Write the figure as date-free SVG and release it."""
    fig.savefig(str(path), format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(path)


def plot_traces(
    traces: Mapping[str, Sequence[Sequence[float]]],
    path: str,
    loglog: bool = False,
    x_column: str = "wall_seconds",
) -> str:
    """One estimate-vs-time polyline per estimator label.

    ``traces`` maps a label (e.g. POLY2, SAMP100) to rows of
    (iteration, t, estimate, wall_seconds).  ``x_column`` picks
    "wall_seconds" or "t" for the horizontal axis.  With ``loglog`` both
    axes are log-scaled and non-positive coordinates are clipped to 1e-12
    (with a warning), since they have no log image.
    """
    if not traces:
        raise InputError("need at least one trace to plot")
    if x_column not in ("wall_seconds", "t"):
        raise InputError(f"unknown x column {x_column!r}")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, rows in traces.items():
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4 or arr.shape[0] == 0:
            raise InputError(f"trace {label!r} must be non-empty rows of 4 columns")
        xs = arr[:, 3] if x_column == "wall_seconds" else arr[:, 1]
        ys = arr[:, 2]
        if loglog:
            xs = _clip_for_log(xs, "time")
            ys = _clip_for_log(ys, "estimate")
        (line,) = ax.plot(xs, ys, marker="o", markersize=3, label=str(label))
        line.set_gid(f"trace-{label}")
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("wall-clock seconds" if x_column == "wall_seconds" else "time t")
    ax.set_ylabel("objective estimate")
    ax.legend(loc="best")
    fig.tight_layout()
    return save_svg(fig, path)


def plot_summary(summary: Mapping, path: str) -> str:
    """Final utility vs gradient seconds, one marker per grid cell."""
    runs = [r for r in summary.get("runs", []) if "error" not in r]
    if not runs:
        raise InputError("summary holds no successful runs to plot")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for run in runs:
        secs = run.get("gradient_seconds", run["seconds"])
        (pt,) = ax.plot([max(secs, _LOG_FLOOR)], [run["f"]], marker="o", ms=6,
                        label=run["estimator"])
        pt.set_gid(f"run-{run['estimator']}")
    ax.set_xscale("log")
    ax.set_xlabel("gradient seconds (log)")
    ax.set_ylabel("final utility")
    title = summary.get("instance")
    if title:
        ax.set_title(str(title))
    ax.legend(loc="best")
    fig.tight_layout()
    return save_svg(fig, path)


__all__ = ["plot_traces", "plot_summary", "save_svg"]
