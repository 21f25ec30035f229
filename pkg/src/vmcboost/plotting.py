"""Static figures for the CLI reports.

Figures are drawn with the non-interactive Agg backend and saved without
creation-date metadata, so reruns produce identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["waveform_figure", "loss_share_figure", "efficiency_figure", "save"]

STYLE = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
    "svg.hashsalt": "vmcboost",
}

# panel title -> columns drawn on it
WAVEFORM_PANELS = (
    ("inductor currents [A]", ("iL1", "iL2", "iin")),
    ("switch voltages [V]", ("vsw1", "vsw2")),
    ("diode reverse voltages [V]", ("vd1", "vd2", "vd3", "vd4")),
    ("output voltage [V]", ("vout",)),
)


def save(fig, path):
    """Write ``fig`` to ``path`` (format from the suffix) and close it."""
    fig.savefig(path, metadata={"Date": None} if str(path).endswith((".svg", ".pdf")) else {"Software": None})
    plt.close(fig)


def waveform_figure(waveforms):
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(WAVEFORM_PANELS), 1, figsize=(6.5, 8), sharex=True)
        t_us = (waveforms.t - waveforms.t0) * 1e6
        for ax, (title, names) in zip(axes, WAVEFORM_PANELS):
            for name in names:
                if name in waveforms.columns:
                    ax.plot(t_us, waveforms.columns[name], label=name)
            ax.set_ylabel(title)
            ax.legend(loc="upper right", ncol=len(names), frameon=False)
        axes[-1].set_xlabel("time in period [us]")
        fig.tight_layout()
    return fig


def loss_share_figure(report):
    items = report.items()
    names = list(items)
    values = np.array([items[n] for n in names])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.2))
        ax.barh(names, values, color="tab:blue")
        total = values.sum()
        for i, v in enumerate(values):
            share = v / total if total > 0 else 0.0
            ax.text(v, i, f" {v:.2f} W ({share:.0%})", va="center")
        ax.set_xlabel("loss [W]")
        ax.set_xlim(0, max(values.max() * 1.35, 1e-3))
        ax.invert_yaxis()
        ax.set_title(f"total {total:.2f} W, efficiency {report.efficiency:.1%}")
        fig.tight_layout()
    return fig


def efficiency_figure(points):
    ok = [p for p in points if not p.warning.startswith("skipped")]
    p = np.array([pt.p_out for pt in ok])
    eta = np.array([pt.efficiency for pt in ok])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.2))
        ax.plot(p, 100 * eta, marker="o", markersize=3)
        flagged = [pt for pt in ok if pt.warning]
        if flagged:
            ax.plot([pt.p_out for pt in flagged], [100 * pt.efficiency for pt in flagged], "x",
                    color="tab:red", label="conduction pattern violated")
            ax.legend(frameon=False)
        ax.set_xlabel("output power [W]")
        ax.set_ylabel("efficiency [%]")
        fig.tight_layout()
    return fig
