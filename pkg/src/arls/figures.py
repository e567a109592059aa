"""Report figures for benchmark sweeps, written to image files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import BatchSummary  # noqa: E402

BAND_PCT = 45.0


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-comparable
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_speed_correlation(
    summaries: Sequence[BatchSummary], path: Path | str, band_pct: float = BAND_PCT
) -> Path:
    """Measured against true speed, with the equality line and a +/- band."""
    path = Path(path)
    pts = [(s.v_true, s.v_arls) for s in summaries if s.v_arls is not None]
    top = max([v for p in pts for v in p] + [s.v_true for s in summaries] + [0.5]) * 1.15

    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot([0, top], [0, top], color="k", lw=1, label="equality")
    k = band_pct / 100.0
    ax.plot([0, top], [0, top * (1 + k)], "k--", lw=0.8, label=f"$\\pm${band_pct:g}%")
    ax.plot([0, top], [0, top * (1 - k)], "k--", lw=0.8)
    if pts:
        xs, ys = zip(*pts)
        ax.scatter(xs, ys, s=28, zorder=3, label="simulated")
    ax.set_xlim(0, top)
    ax.set_ylim(0, top)
    ax.set_xlabel("true speed (m/s)")
    ax.set_ylabel("estimated speed (m/s)")
    ax.legend(loc="upper left", frameon=False)
    return _save(fig, path)


def plot_performance(summaries: Sequence[BatchSummary], path: Path | str) -> Path:
    """Performance against blurred-frame percentage, one line per speed."""
    path = Path(path)
    by_speed: dict[float, list[tuple[float, float]]] = {}
    for s in summaries:
        by_speed.setdefault(s.v_true, []).append((s.blur_pct, s.performance_pct))

    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for v, pts in sorted(by_speed.items()):
        pts.sort()
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=f"{v:g} m/s")
    ax.set_ylim(-5, 105)
    ax.set_xlabel("blurred frames (%)")
    ax.set_ylabel("performance (%)")
    ax.legend(frameon=False, fontsize="small")
    return _save(fig, path)
