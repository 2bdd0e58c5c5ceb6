"""Render a power-difference curve to an image file."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import PowerCurvePoint  # noqa: E402

SUPERIOR_COLOR = "tab:blue"
INFERIOR_COLOR = "tab:red"


def plot_power_difference(
    points: Sequence[PowerCurvePoint],
    path: str | Path,
    title: Optional[str] = None,
    null_tau: Optional[float] = None,
    dpi: int = 150,
) -> Path:
    """Save ``beta_unrestricted - beta_restricted`` against ``tau``.

    Negative differences (restricted test more powerful) are filled blue,
    positive ones red. The output format follows the file suffix.
    """
    if not points:
        raise ValueError("no points to plot")
    tau = np.array([float(p.tau) for p in points])
    diff = np.array([float(p.diff) for p in points])
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    try:
        ax.plot(tau, diff, color="black", linewidth=0.8)
        ax.fill_between(tau, diff, 0, where=diff < 0, color=SUPERIOR_COLOR, alpha=0.6, interpolate=True)
        ax.fill_between(tau, diff, 0, where=diff > 0, color=INFERIOR_COLOR, alpha=0.6, interpolate=True)
        ax.axhline(0, color="gray", linewidth=0.5)
        if null_tau is not None:
            ax.axvline(null_tau, color="gray", linestyle=":", linewidth=0.8)
        ax.set_xlim(tau.min(), tau.max())
        ax.set_xlabel(r"$\tau$")
        ax.set_ylabel("unrestricted minus restricted power")
        if title:
            ax.set_title(title, fontsize=10)
        fig.tight_layout()
        path = Path(path)
        fig.savefig(path, dpi=dpi)
    finally:
        plt.close(fig)
    return path
