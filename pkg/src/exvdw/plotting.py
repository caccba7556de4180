"""Static SVG rendering of scan CSVs.

Figures are rendered with the Agg backend and a fixed SVG hash salt and no
date stamp, so the same CSV always produces the same bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "exvdw",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "figure.figsize": (6.4, 4.0),
}


def read_scan(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def _linthresh(values: np.ndarray) -> float:
    mag = np.abs(values[np.isfinite(values) & (values != 0)])
    if mag.size == 0:
        return 1.0
    return float(10 ** np.floor(np.log10(mag.min())))


def plot_scan(csv_path: str | Path, svg_path: str | Path, xkey: str | None = None) -> Path:
    """Plot every force column of a scan against distance or time.

    The abscissa is ``r_m`` unless it is constant (a time scan); the force
    axis is symmetric-log because the forces change sign and span decades.
    """
    header, data = read_scan(csv_path)
    if xkey is None:
        r = data[:, header.index("r_m")]
        xkey = "r_m" if np.unique(r).size > 1 else "t_s"
    x = data[:, header.index(xkey)]
    cols = [i for i, h in enumerate(header) if h.startswith("F_")]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i in cols:
            ax.plot(x, data[:, i], label=header[i])
        ax.set_yscale("symlog", linthresh=_linthresh(data[:, cols]))
        if xkey == "r_m" and x.min() > 0 and x.max() / x.min() > 20:
            ax.set_xscale("log")
        ax.set_xlabel("separation r (m)" if xkey == "r_m" else "time t (s)")
        ax.set_ylabel("force (N), positive = repulsive" if "F_A_res_N" in header
                      else "force component (N)")
        ax.legend(fontsize=7, ncol=2)
        fig.tight_layout()
        svg_path = Path(svg_path)
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return svg_path


__all__ = ["plot_scan", "read_scan"]
