#!/usr/bin/env python3
"""Plots from a pegp output directory.

    python3 scripts/plot_figures.py <out_dir>

Reads whatever is present under <out_dir>:
  heatmap/kernel_{se,physics}.csv   -> kernel_heatmaps.png
  {physics,se-baseline}/trace.csv   -> training_traces.png
  extrapolate/comparison.csv        -> extrapolation.png
Needs numpy and matplotlib.
"""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def heatmaps(out: Path) -> None:
    files = [out / "heatmap" / f"kernel_{k}.csv" for k in ("se", "physics")]
    if not all(f.exists() for f in files):
        return
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, f, title in zip(axes, files, ("squared exponential", "physics-enhanced")):
        times = np.loadtxt(f, delimiter=",", max_rows=1)
        k = np.loadtxt(f, delimiter=",", skiprows=1)
        im = ax.imshow(k, cmap="RdBu_r", vmin=-1, vmax=1,
                       extent=(times[0], times[-1], times[-1], times[0]))
        ax.set_title(title)
        ax.set_xlabel("t' (us)")
        ax.set_ylabel("t (us)")
    fig.colorbar(im, ax=axes, shrink=0.8)
    fig.savefig(out / "kernel_heatmaps.png", dpi=120)


def traces(out: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    drawn = False
    for kind in ("physics", "se-baseline"):
        f = out / kind / "trace.csv"
        if not f.exists():
            continue
        data = np.genfromtxt(f, delimiter=",", names=True)
        total = np.atleast_1d(data["total"])
        window = max(1, len(total) // 100)
        smooth = np.convolve(total, np.ones(window) / window, mode="valid")
        ax.plot(np.atleast_1d(data["iteration"])[window - 1:], smooth, label=kind)
        drawn = True
    if drawn:
        ax.set_xlabel("iteration")
        ax.set_ylabel("ELBO (moving average)")
        ax.legend()
        fig.savefig(out / "training_traces.png", dpi=120)


def comparison(out: Path) -> None:
    f = out / "extrapolate" / "comparison.csv"
    if not f.exists():
        return
    rows = [r for r in csv.DictReader(f.open()) if r["sequence"] != "summary" and r["extrap_rmse"]]
    if not rows:
        return
    seqs = sorted({int(r["sequence"]) for r in rows})
    x = np.arange(len(seqs))
    fig, ax = plt.subplots(figsize=(7, 4))
    for offset, kind in ((-0.2, "physics"), (0.2, "se-baseline")):
        vals = {int(r["sequence"]): float(r["extrap_rmse"]) for r in rows if r["kernel"] == kind}
        ax.bar(x + offset, [vals.get(s, np.nan) for s in seqs], width=0.4, label=kind)
    ax.set_xticks(x, [str(s) for s in seqs])
    ax.set_xlabel("held-out sequence")
    ax.set_ylabel("aligned RMSE past the clip")
    ax.legend()
    fig.savefig(out / "extrapolation.png", dpi=120)


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    out = Path(sys.argv[1])
    heatmaps(out)
    traces(out)
    comparison(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
