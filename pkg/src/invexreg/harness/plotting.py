"""Figures written next to the CSV output (PNG, Agg backend)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.4,
}


def _positive(y):
    # log axes cannot show exact zeros reached at interpolation
    y = np.asarray(y, dtype=np.float64)
    return np.where(y > 0, y, np.nan)


def plot_panels(series, path, panels, title=None, logy=True):
    """One panel per ``(column, ylabel)`` pair; one line per labelled trace.

    ``series`` maps a legend label to a trace (anything indexable by column).
    """
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(panels), figsize=(4.2 * len(panels), 3.2), squeeze=False)
        for ax, (column, ylabel) in zip(axes[0], panels):
            for label, trace in series.items():
                y = _positive(trace[column]) if logy else trace[column]
                ax.plot(trace["t"], y, label=label)
            if logy:
                ax.set_yscale("log")
            ax.set_xlabel("iteration")
            ax.set_ylabel(ylabel)
        axes[0][0].legend(frameon=False)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
    return path
