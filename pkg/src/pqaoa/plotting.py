"""Figures for a report directory, drawn from its plot-data CSVs.

Requires matplotlib (``pip install pqaoa[plot]``); nothing else in the
package imports this module eagerly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_ORDER = ("qaoa", "pqaoa-multi", "pqaoa-single")


def _read(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def ratio_boxplot(report: Path) -> Path | None:
    """Approximation ratio distribution per algorithm and depth, with the heuristic baseline."""
    rows = _read(report / "ratios.csv")
    if not rows:
        return None
    depths = sorted({int(r["p"]) for r in rows})
    algs = [a for a in _ORDER if any(r["algorithm"] == a for r in rows)]
    fig, ax = plt.subplots(figsize=(1.6 + 1.2 * len(depths) * len(algs) / 2, 4))
    width = 0.8 / len(algs)
    for j, alg in enumerate(algs):
        data = [[float(r["ratio"]) for r in rows if r["algorithm"] == alg and int(r["p"]) == p] for p in depths]
        pos = [i + (j - (len(algs) - 1) / 2) * width for i in range(len(depths))]
        keep = [(d, x) for d, x in zip(data, pos) if d]
        box = ax.boxplot([d for d, _ in keep], positions=[x for _, x in keep], widths=width * 0.9,
                         patch_artist=True, manage_ticks=False)
        for patch in box["boxes"]:
            patch.set_facecolor(f"C{j}")
            patch.set_alpha(0.6)
        ax.plot([], [], color=f"C{j}", lw=6, alpha=0.6, label=alg)
    baseline = [float(r["heuristic_ratio"]) for r in _read(report / "baseline.csv")]
    if baseline:
        ax.axhline(sum(baseline) / len(baseline), color="k", ls="--", lw=1, label="heuristic (mean)")
    ax.set_xticks(range(len(depths)), [f"p={p}" for p in depths])
    ax.set_ylabel("approximation ratio")
    ax.set_ylim(top=1.02)
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    path = report / "ratios.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def transfer_scatter(report: Path) -> Path | None:
    """Transferred against direct ratio, one point per instance and depth."""
    rows = _read(report / "transfer_pairs.csv")
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for j, alg in enumerate(_ORDER):
        pts = [(float(r["qaoa_ratio"]), float(r["transfer_ratio"])) for r in rows if r["algorithm"] == alg]
        if pts:
            ax.scatter(*zip(*pts), s=18, color=f"C{j}", alpha=0.7, label=alg)
    ax.plot([0, 1], [0, 1], color="k", lw=0.8)
    ax.set_xlabel("direct QAOA ratio")
    ax.set_ylabel("transferred ratio")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = report / "transfer_scatter.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def transfer_trend(report: Path) -> Path | None:
    """Mean transferred and direct ratios against depth."""
    rows = _read(report / "transfer_by_p.csv")
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for j, alg in enumerate(_ORDER):
        sel = sorted((int(r["p"]), float(r["mean_transfer_ratio"])) for r in rows if r["algorithm"] == alg)
        if sel:
            ax.plot(*zip(*sel), marker="o", color=f"C{j}", label=f"{alg} transferred")
    direct = sorted({(int(r["p"]), float(r["mean_qaoa_ratio"])) for r in rows})
    ax.plot(*zip(*direct), marker="s", color="k", ls="--", label="direct QAOA")
    ax.set_xlabel("p")
    ax.set_ylabel("mean ratio")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = report / "transfer_by_p.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_all(report: Path) -> list[Path]:
    report = Path(report)
    made = [ratio_boxplot(report), transfer_scatter(report), transfer_trend(report)]
    return [p for p in made if p is not None]
