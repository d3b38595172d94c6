#!/usr/bin/env python3
"""Semi-log residual curves from one or more trace.csv files.

Usage: python scripts/plot_trace.py out1/trace.csv [out2/trace.csv ...] [-o out.png]
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("traces", nargs="+")
    ap.add_argument("-o", "--out", default="trace.png")
    ap.add_argument("--column", default="fp_residual",
                    help="fp_residual | lin_residual | objective | t")
    args = ap.parse_args()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in args.traces:
        data = np.genfromtxt(path, delimiter=",", names=True)
        ax.semilogy(data["n"], data[args.column], label=path)
    ax.set_xlabel("iteration")
    ax.set_ylabel(args.column)
    ax.legend(fontsize=8)
    fig.savefig(args.out, dpi=150, bbox_inches="tight")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
