"""PNG figures for a sweep: PDR and throughput against simulation time, mean throughput bars."""

from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.linewidth": 0.5,
    "grid.color": "#E7E7E7",
    "xtick.direction": "in",
    "ytick.direction": "in",
    "legend.fontsize": "small",
    "figure.figsize": (5, 3.2),
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}

MARKERS = {"aodv": "o", "dsdv": "s", "dsr": "^"}

# PNG metadata without the matplotlib version keeps reruns byte-identical
_META = {"Software": None}


def _line_figure(results, column: str, ylabel: str, path: str) -> str:
    from .report import series

    times, protocols, values = series(results, column)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for p in protocols:
            ax.plot(times, values[p], marker=MARKERS.get(p, "."), label=p.upper())
        ax.set_xlabel("Simulation time (s)")
        ax.set_ylabel(ylabel)
        ax.legend()
        fig.savefig(path, metadata=_META)
        plt.close(fig)
    return path


def _bar_figure(results, path: str) -> str:
    from .report import protocol_means

    means = protocol_means(results, "throughput_Bps")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        names = [p.upper() for p in means]
        ax.bar(names, list(means.values()), color="#4C72B0", width=0.6)
        ax.set_ylabel("Average throughput (B/s)")
        fig.savefig(path, metadata=_META)
        plt.close(fig)
    return path


def render_figures(results: Sequence, out_dir: str) -> list[str]:
    return [
        _line_figure(results, "pdr", "Packet delivery ratio", os.path.join(out_dir, "pdr_vs_time.png")),
        _line_figure(results, "throughput_Bps", "Throughput (B/s)",
                     os.path.join(out_dir, "throughput_vs_time.png")),
        _bar_figure(results, os.path.join(out_dir, "average_throughput.png")),
    ]
