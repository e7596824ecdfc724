"""Render product graphs and witness traces to image files."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import FancyArrowPatch  # noqa: E402

from .composition import ProductSystem  # noqa: E402


def _layout(states) -> dict:
    n = len(states)
    if n == 1:
        return {states[0]: (0.0, 0.0)}
    return {s: (math.cos(2 * math.pi * k / n + math.pi / 2), math.sin(2 * math.pi * k / n + math.pi / 2))
            for k, s in enumerate(states)}


def draw_product(prod: ProductSystem, path: str, trace=None, mark=None, title: str = None) -> str:
    """Draw the reachable product on a circle and save it to ``path``.

    Steps of ``trace`` are drawn as thick red arrows; ``mark`` is a state to
    outline in red (a deadlock or a safety violation, say).  Accepting
    states are filled green, the initial state has a heavy border.
    """
    pos = _layout(prod.states)
    size = max(6.0, 0.6 * len(prod.states) ** 0.5 * 4)
    fig, ax = plt.subplots(figsize=(size, size))
    highlighted = {(pt.source, pt.target) for pt in (trace.steps if trace else ())}

    drawn = set()
    for pt in prod.transitions:
        key = (pt.source, pt.target)
        if key in drawn:
            continue
        drawn.add(key)
        hot = key in highlighted
        (x0, y0), (x1, y1) = pos[pt.source], pos[pt.target]
        if key[0] == key[1]:
            ax.add_patch(plt.Circle((x0 * 1.12, y0 * 1.12), 0.06, fill=False,
                                    color="crimson" if hot else "0.6", lw=2 if hot else 0.8))
            continue
        ax.add_patch(FancyArrowPatch((x0, y0), (x1, y1), arrowstyle="-|>", mutation_scale=10,
                                     connectionstyle="arc3,rad=0.12", shrinkA=12, shrinkB=12,
                                     color="crimson" if hot else "0.6", lw=2.2 if hot else 0.8,
                                     zorder=2 if hot else 1))
    for s in prod.states:
        x, y = pos[s]
        face = "#b7e4c7" if prod.accepting(s) else "white"
        edge = "crimson" if s == mark else "black"
        width = 2.5 if s == prod.initial or s == mark else 1.0
        ax.scatter([x], [y], s=380, c=face, edgecolors=edge, linewidths=width, zorder=3)
        ax.annotate(prod.format_state(s), (x, y), xytext=(0, 13), textcoords="offset points",
                    ha="center", fontsize=7, zorder=4)
    ax.set_title(title or " x ".join(prod.names))
    ax.set_aspect("equal")
    ax.axis("off")
    ax.set_xlim(-1.4, 1.4)
    ax.set_ylim(-1.4, 1.4)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return path
