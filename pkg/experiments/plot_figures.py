"""
Картинки из CSV, которые пишет jc_cli.py.

Сначала посчитать данные (JCR_OUTPUT_DIR=experiments/output):
  py jc_cli.py aig-map
  py jc_cli.py fig2-map
  py jc_cli.py ball-image --tau-k 4 --alpha 0.2,0.4,0.6,0.8,1.0 --iters 1
Потом:
  py experiments/plot_figures.py
PNG пишутся рядом с CSV.
"""

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

OUT_DIR = Path(__file__).resolve().parent / "output"


def read_rows(path: Path) -> list[dict]:
    with path.open("r", encoding="utf-8") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def surface(rows: list[dict], column: str):
    taus = sorted({float(r["tau"]) for r in rows})
    alphas = sorted({float(r["alpha"]) for r in rows})
    zz = np.full((len(taus), len(alphas)), np.nan)
    ti = {t: i for i, t in enumerate(taus)}
    ai = {a: j for j, a in enumerate(alphas)}
    for r in rows:
        zz[ti[float(r["tau"])], ai[float(r["alpha"])]] = float(r[column])
    return np.array(taus), np.array(alphas), zz


def plot_surface(csv_path: Path, column: str, title: str, png: Path, cmap: str = "viridis") -> None:
    taus, alphas, zz = surface(read_rows(csv_path), column)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(alphas, taus, zz, shading="nearest", cmap=cmap)
    fig.colorbar(mesh, ax=ax, label="bits")
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel(r"$\tau$")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png, dpi=150)
    plt.close(fig)
    print(f"Saved: {png}")


def plot_ball(csv_path: Path, png: Path) -> None:
    clouds = defaultdict(list)
    rows = read_rows(csv_path)
    last = max(int(r["iteration"]) for r in rows)
    for r in rows:
        if int(r["iteration"]) == last:
            clouds[float(r["alpha"])].append([float(r["x"]), float(r["y"]), float(r["z"])])

    planes = [("x=0", 1, 2, "y", "z"), ("y=0", 0, 2, "x", "z"), ("z=0", 0, 1, "x", "y")]
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    circle = np.linspace(0, 2 * np.pi, 200)
    for ax, (name, i, j, xl, yl) in zip(axes, planes):
        ax.plot(np.cos(circle), np.sin(circle), color="0.7", lw=0.8)
        for alpha, pts in sorted(clouds.items()):
            pts = np.asarray(pts)
            ax.scatter(pts[:, i], pts[:, j], s=4, label=f"{alpha:g}")
        ax.set_aspect("equal")
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.set_title(name)
    axes[-1].legend(title=r"$\alpha$", fontsize=7, markerscale=3)
    fig.tight_layout()
    fig.savefig(png, dpi=150)
    plt.close(fig)
    print(f"Saved: {png}")


def main() -> int:
    ap = argparse.ArgumentParser(description="Render PNGs from jc_cli CSV output")
    ap.add_argument("--dir", default=str(OUT_DIR))
    args = ap.parse_args()
    base = Path(args.dir)

    done = 0
    if (base / "aig-map.csv").is_file():
        plot_surface(base / "aig-map.csv", "i_avg", "I_avg", base / "aig_map.png")
        done += 1
    if (base / "fig2-map.csv").is_file():
        plot_surface(
            base / "fig2-map.csv", "diff", r"I_avg - I_max <r>^2", base / "aig_minus_rsq.png", "RdBu_r"
        )
        done += 1
    if (base / "ball-image.csv").is_file():
        plot_ball(base / "ball-image.csv", base / "ball_image.png")
        done += 1

    if not done:
        print(f"ERROR: no jc_cli CSV files in {base}")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
