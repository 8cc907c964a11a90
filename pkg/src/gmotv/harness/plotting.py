"""Matplotlib figure helpers; figures are written as standalone SVG files."""

from __future__ import annotations

from contextlib import contextmanager

import matplotlib as mpl
import numpy as np
from matplotlib.figure import Figure

STYLE = {
    "font.size": 8,
    "axes.linewidth": 0.5,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 0.9,
    "legend.frameon": False,
    "legend.fontsize": 7,
    "xtick.major.width": 0.5,
    "ytick.major.width": 0.5,
    "grid.linewidth": 0.4,
    "grid.alpha": 0.3,
    "svg.hashsalt": "gmotv",
    "svg.fonttype": "none",
}

COLORS = {"original": "0.15", "degraded": "#b0b0b0", "restored": "#c0392b"}


def figsize(width_in=6.5, ratio=0.38):
    return (width_in, width_in * ratio)


@contextmanager
def style():
    with mpl.rc_context(STYLE):
        yield


def savefig(fig: Figure, path) -> None:
    # svg.hashsalt is read at save time; without it element ids are random
    with style():
        fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})


def overlay_figure(original, degraded, restored, title="") -> Figure:
    """Original, degraded and restored signals on one axis."""
    with style():
        fig = Figure(figsize=figsize())
        ax = fig.add_subplot()
        x = np.arange(len(original))
        ax.plot(x, degraded, color=COLORS["degraded"], label="degraded")
        ax.plot(x, original, color=COLORS["original"], label="original")
        ax.plot(x, restored, color=COLORS["restored"], label="restored", linestyle="--")
        ax.set_xlim(0, len(original) - 1)
        ax.set_xlabel("sample")
        ax.set_ylabel("amplitude")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", ncol=3)
    return fig


def isnr_figure(levels, series: dict, xlabel="SNR (dB)", title="") -> Figure:
    """ISNR against noise level, one line per method."""
    with style():
        fig = Figure(figsize=figsize(4.5, 0.7))
        ax = fig.add_subplot()
        order = np.argsort(levels)
        for method, values in series.items():
            ax.plot(np.asarray(levels)[order], np.asarray(values)[order], marker="o",
                    markersize=3, label=method)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("ISNR (dB)")
        ax.grid(True)
        if title:
            ax.set_title(title)
        ax.legend(loc="best", ncol=2)
    return fig
