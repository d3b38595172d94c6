#!/usr/bin/env python3
"""Scatter the eigenvalues from spectrum.csv with the reference half-disk.

Usage: python scripts/plot_spectrum.py out/spectrum.csv [out.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "out/spectrum.csv"
    dest = sys.argv[2] if len(sys.argv) > 2 else "spectrum.png"
    data = np.genfromtxt(path, delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(6, 6))
    for t in np.unique(data["t"]):
        sel = data["t"] == t
        ax.plot(data["re"][sel], data["im"][sel], ".", ms=4, label=f"t = {t:g}")
    theta = np.linspace(0, 2 * np.pi, 256)
    ax.plot(0.5 + 0.5 * np.cos(theta), 0.5 * np.sin(theta), "k--", lw=1)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(dest, dpi=150, bbox_inches="tight")
    print(f"wrote {dest}")


if __name__ == "__main__":
    main()
