#!/usr/bin/env python3
"""Residual vs stepsize from an analyze-sweep CSV, one curve per iteration count.

Usage: python scripts/plot_sweep.py out/sweep.csv [out.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "out/sweep.csv"
    dest = sys.argv[2] if len(sys.argv) > 2 else "sweep.png"
    data = np.genfromtxt(path, delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for n in np.unique(data["n_iters"]):
        sel = data["n_iters"] == n
        ax.loglog(data["t"][sel], data["residual"][sel], "o-", ms=3,
                  label=f"N = {int(n)}")
    ax.set_xlabel("stepsize t")
    ax.set_ylabel("residual after N iterations")
    ax.legend(fontsize=8)
    fig.savefig(dest, dpi=150, bbox_inches="tight")
    print(f"wrote {dest}")


if __name__ == "__main__":
    main()
