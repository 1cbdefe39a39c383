"""Boxplot rendering for campaign summaries.

One figure per (protection mode, layer target, chained/iid) group; within a
figure, one box per (p, limit) cell, drawn from the precomputed five-number
summaries so a figure can be rebuilt from summary rows alone.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _group_key(row):
    return row["mode"], row["target"], row["chained"]


def render_boxplots(rows, out_dir):
    """Write one PNG per cell group under out_dir; returns the paths."""
    groups = {}
    for row in rows:
        groups.setdefault(_group_key(row), []).append(row)

    paths = []
    for (mode, target, chained), cells in sorted(groups.items()):
        cells = sorted(
            cells, key=lambda r: (-r["p"], r["limit"] if r["limit"] else 99))
        stats = []
        for r in cells:
            limit = "none" if r["limit"] is None else r["limit"]
            stats.append({
                "label": f"p={r['p']:g}\nlimit={limit}",
                "whislo": r["min"], "q1": r["q1"], "med": r["median"],
                "q3": r["q3"], "whishi": r["max"], "fliers": [],
            })
        fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(stats), 4.0))
        ax.bxp(stats, showfliers=False)
        ax.set_ylim(-0.02, 1.02)
        ax.set_ylabel("accuracy")
        suffix = "" if chained else " (iid)"
        ax.set_title(f"mode={mode}  target={target}{suffix}")
        ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        name = f"box_{mode}_{target}" + ("" if chained else "_iid") + ".png"
        path = out_dir / name
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
