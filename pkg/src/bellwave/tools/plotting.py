"""SVG plot of the Bell correlation curve with Monte Carlo points."""

import io
import math
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .file_ops import atomic_write_text  # noqa: E402
from ..utils.logger import get_logger  # noqa: E402


logger = get_logger()


def render_correlation_svg(
    deltas: Sequence[float],
    analytic: Sequence[float],
    mc_values: Optional[Sequence[float]] = None,
    mc_errors: Optional[Sequence[float]] = None,
    title: str = "Bell correlation",
    provenance: str = "",
    hashsalt: str = "bellwave",
) -> str:
    """Render the analytic curve (and MC points with error bars) as SVG text.

    The output is byte-stable: fixed hash salt, no date metadata. ``provenance``
    is inserted as an XML comment after the declaration.
    """
    deltas_arr = np.asarray(deltas, dtype=float)
    with plt.rc_context({"svg.hashsalt": hashsalt, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        try:
            if len(deltas_arr) > 1:
                dense = np.linspace(deltas_arr.min(), deltas_arr.max(), 721)
                ax.plot(dense, -np.cos(2.0 * dense), color="0.75", linewidth=3.0, label="-cos 2Δ")
            ax.plot(deltas_arr, analytic, color="tab:blue", linewidth=1.2, label="analytic")
            if mc_values is not None:
                ax.errorbar(
                    deltas_arr,
                    mc_values,
                    yerr=None if mc_errors is None else np.asarray(mc_errors, dtype=float),
                    fmt="o",
                    markersize=3,
                    color="tab:red",
                    capsize=2,
                    label="Monte Carlo",
                )
            ax.set_xlabel("Δ = θ1 − θ2 (rad)")
            ax.set_ylabel("E(θ1, θ2)")
            ax.set_ylim(-1.1, 1.1)
            quarter = math.pi / 4
            lo = math.floor(deltas_arr.min() / quarter) * quarter
            ax.set_xticks(np.arange(lo, deltas_arr.max() + 1e-9, quarter))
            ax.axhline(0.0, color="0.5", linewidth=0.5)
            ax.set_title(title)
            ax.legend(loc="upper right", fontsize="small")
            buffer = io.StringIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)

    svg = buffer.getvalue()
    if provenance:
        comment = f"<!-- {provenance.replace('--', '- -')} -->\n"
        head, sep, rest = svg.partition("?>\n")
        svg = head + sep + comment + rest if sep else comment + svg
    return svg


def write_correlation_svg(file_path: str | Path, svg: str) -> Path:
    path = atomic_write_text(file_path, svg)
    logger.info(f"Wrote plot {path}")
    return path
