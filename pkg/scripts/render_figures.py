"""Render figures from the CSV tables the CLI emits.

Looks for known filenames in the input directory and draws whatever it
finds; missing tables are skipped silently. Requires matplotlib (install
the package with the [plots] extra).

    python3 scripts/render_figures.py --in runs/ --out figures/
"""

from __future__ import annotations

import argparse
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from qlatgan.data_io import read_csv


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    print(f"wrote {path}")


def plot_ae_loss(rows, out_dir):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot([r["epoch"] for r in rows], [r["mse"] for r in rows], "o-")
    ax.set(xlabel="epoch", ylabel="reconstruction MSE", yscale="log")
    _save(fig, out_dir, "ae_loss.png")


def plot_gan_history(rows, out_dir):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    epochs = [r["epoch"] for r in rows]
    ax.plot(epochs, [r["critic_loss"] for r in rows], label="critic")
    ax.plot(epochs, [r["gen_loss"] for r in rows], label="generator")
    ax.set(xlabel="epoch", ylabel="loss")
    ax.legend()
    _save(fig, out_dir, "gan_history.png")


def plot_bp_scan(rows, out_dir):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if "sigma" in rows[0]:
        sigmas = sorted({r["sigma"] for r in rows})
        for sigma in sigmas:
            sub = [r for r in rows if r["sigma"] == sigma]
            ns = [r["n"] for r in sub]
            ax.errorbar(ns, [r["variance"] for r in sub],
                        yerr=[r["stderr"] for r in sub],
                        marker="o", label=f"MC sigma={sigma:g}")
            if "bound" in sub[0]:
                ax.plot(ns, [r["bound"] for r in sub], "--",
                        label=f"bound sigma={sigma:g}")
    else:
        ns = [r["n"] for r in rows]
        ax.errorbar(ns, [r["variance"] for r in rows],
                    yerr=[r["stderr"] for r in rows], marker="o", label="MC")
    ax.set(xlabel="qubits n", ylabel="variance", yscale="log")
    ax.legend(fontsize=7)
    _save(fig, out_dir, "bp_scan.png")


def plot_bound_table(rows, out_dir):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for sigma in sorted({r["sigma"] for r in rows}):
        sub = [r for r in rows if r["sigma"] == sigma]
        ax.plot([r["n"] for r in sub], [r["bound"] for r in sub], "o--",
                label=f"sigma={sigma:g}")
    ax.set(xlabel="qubits n", ylabel="variance lower bound", yscale="log")
    ax.legend(fontsize=7)
    _save(fig, out_dir, "bound_table.png")


def plot_shot_scans(tables, out_dir):
    fig, axes = plt.subplots(1, len(tables), figsize=(4 * len(tables), 3.2))
    if len(tables) == 1:
        axes = [axes]
    for ax, (title, rows) in zip(axes, tables.items()):
        for stat in sorted({r["statistic"] for r in rows}):
            sub = [r for r in rows if r["statistic"] == stat and r["shots"] > 0]
            if not sub:
                continue
            ax.errorbar([r["shots"] for r in sub], [r["value"] for r in sub],
                        yerr=[r["stderr"] for r in sub], marker="o",
                        label=stat)
            ref = [r for r in rows if r["statistic"] == stat and r["shots"] == 0]
            if ref and ref[0]["value"] > 0:
                ax.axhline(ref[0]["value"], ls=":", color="gray")
        ax.set(xlabel="shots", xscale="log", title=title)
        ax.set_yscale("log")
        ax.legend(fontsize=7)
    _save(fig, out_dir, "shot_scans.png")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="in_dir", default=".")
    parser.add_argument("--out", dest="out_dir", default=None)
    args = parser.parse_args()
    out_dir = args.out_dir or args.in_dir
    os.makedirs(out_dir, exist_ok=True)

    def rows_of(name):
        path = os.path.join(args.in_dir, name)
        return read_csv(path) if os.path.exists(path) else None

    made = 0
    for name, fn in (("ae_loss.csv", plot_ae_loss),
                     ("gan_history.csv", plot_gan_history),
                     ("bp_scan.csv", plot_bp_scan),
                     ("bound_table.csv", plot_bound_table)):
        rows = rows_of(name)
        if rows:
            fn(rows, out_dir)
            made += 1
    shot_tables = {}
    for name in ("shot_feature_l2.csv", "shot_histogram_kl.csv",
                 "shot_images.csv"):
        rows = rows_of(name)
        if rows:
            shot_tables[name.removesuffix(".csv")] = rows
    if shot_tables:
        plot_shot_scans(shot_tables, out_dir)
        made += 1
    if not made:
        print(f"no known CSV tables under {args.in_dir}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
