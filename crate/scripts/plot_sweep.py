#!/usr/bin/env python3
"""Plot mean test AUC per method against the swept axis from a `promil sweep` CSV."""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("-o", "--out", default="sweep.png")
    args = ap.parse_args()

    df = pd.read_csv(args.csv)
    df = df[df["status"] == "ok"]
    axis = df["axis"].iloc[0]
    stats = df.groupby(["method", "value"])["auc"].agg(["mean", "std"]).reset_index()

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for method, g in stats.groupby("method"):
        ax.errorbar(g["value"], g["mean"], yerr=g["std"].fillna(0), marker="o", capsize=3, label=method)
    ax.set_xlabel(axis)
    ax.set_ylabel("test AUC")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
