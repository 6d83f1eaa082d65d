"""Convergence plot: log10 ε against truncation order, one series per frame."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from lib.starframe.models import ConvergenceRecord

# 800x600 viewBox (SVG units are points)
_FIGSIZE_IN = (800 / 72, 600 / 72)

_STYLE = {
    "lab": {"color": "tab:red", "marker": "o", "label": "laboratory frame"},
    "std": {"color": "black", "marker": "s", "label": "standard frame"},
    "std0": {"color": "tab:gray", "marker": "D", "label": "standard frame (part 0)"},
    "biframe": {"color": "tab:blue", "marker": "*", "label": "biframe"},
}


def _series(records: Sequence[ConvergenceRecord]) -> Dict[str, List[ConvergenceRecord]]:
    out: Dict[str, List[ConvergenceRecord]] = {}
    for rec in records:
        out.setdefault(rec.frame, []).append(rec)
    for rows in out.values():
        rows.sort(key=lambda r: r.m)
    return out


def write_convergence_svg(
    records: Sequence[ConvergenceRecord],
    path: Path,
    floor: Optional[float] = None,
    title: str = "Relative error vs truncation order",
) -> Path:
    """Write the plot to path; floor (if given) is drawn as a dashed line."""
    plt.rcParams["svg.hashsalt"] = "starframe"
    fig, ax = plt.subplots(1, 1, figsize=_FIGSIZE_IN)
    try:
        for frame, rows in _series(records).items():
            style = _STYLE.get(frame, {"label": frame})
            ax.plot(
                [r.m for r in rows],
                [r.log10_epsilon for r in rows],
                linestyle="-",
                linewidth=1.0,
                markersize=6,
                **style,
            )
        if floor is not None and floor > 0:
            ax.axhline(
                ConvergenceRecord(frame="floor", m=0, epsilon=floor).log10_epsilon,
                color="tab:gray",
                linestyle="--",
                linewidth=1.0,
                label="quadrature floor",
            )
        ax.set_title(title)
        ax.set_xlabel("truncation order m")
        ax.set_ylabel("log10 ε")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper right")
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return Path(path)
