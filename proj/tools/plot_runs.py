#!/usr/bin/env python3
"""Plot closed-loop run logs produced by spinner_cli.

Reads one or more ``*_log.csv`` files and writes, per log:

  <stem>_traj.png   xy path, actual vs reference
  <stem>_error.png  tracking error norm and altitude over time
  <stem>_spin.png   body yaw rate (the self-spin) over time
  <stem>_wind.png   error components against wind speed (only when the log
                    contains nonzero wind)

Usage:
  python3 tools/plot_runs.py out/lemniscate_log.csv [more logs...] --out plots/
"""

import argparse
import csv
import math
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_log(path):
    cols = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        for name in header:
            cols[name] = []
        for row in reader:
            if row and row[0].startswith("#"):
                continue  # abort marker line
            for name, value in zip(header, row):
                cols[name].append(float(value))
    return cols


def series(cols, *names):
    return [cols[n] for n in names]


def error_norm(cols):
    ex = [p - r for p, r in zip(cols["px_m"], cols["ref_px_m"])]
    ey = [p - r for p, r in zip(cols["py_m"], cols["ref_py_m"])]
    ez = [p - r for p, r in zip(cols["pz_m"], cols["ref_pz_m"])]
    return ex, ey, ez, [math.sqrt(a * a + b * b + c * c) for a, b, c in zip(ex, ey, ez)]


def plot_log(path, out_dir):
    cols = read_log(path)
    stem = os.path.splitext(os.path.basename(path))[0]
    if stem.endswith("_log"):
        stem = stem[: -len("_log")]
    t = cols["t_s"]
    ex, ey, ez, en = error_norm(cols)

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(cols["ref_px_m"], cols["ref_py_m"], "k--", lw=1, label="reference")
    ax.plot(cols["px_m"], cols["py_m"], "C0-", lw=1.2, label="actual")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{stem}: xy path")
    ax.axis("equal")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, f"{stem}_traj.png"), dpi=130)
    plt.close(fig)

    fig, (a0, a1) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    a0.plot(t, en, "C3-", lw=1)
    a0.set_ylabel("|p - p_ref| [m]")
    a0.set_title(f"{stem}: tracking error")
    a1.plot(t, cols["pz_m"], "C0-", lw=1, label="z")
    a1.plot(t, cols["ref_pz_m"], "k--", lw=1, label="z ref")
    a1.set_xlabel("t [s]")
    a1.set_ylabel("altitude [m]")
    a1.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, f"{stem}_error.png"), dpi=130)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(t, cols["wz_radps"], "C2-", lw=1)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("yaw rate [rad/s]")
    ax.set_title(f"{stem}: self-spin")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, f"{stem}_spin.png"), dpi=130)
    plt.close(fig)

    wind = [
        math.sqrt(a * a + b * b + c * c)
        for a, b, c in zip(cols["wind_x_mps"], cols["wind_y_mps"], cols["wind_z_mps"])
    ]
    if max(wind, default=0.0) > 1e-9:
        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.plot(t, ex, "C0-", lw=1, label="error x")
        ax.plot(t, ey, "C1-", lw=1, label="error y")
        ax.plot(t, ez, "C2-", lw=1, label="error z")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("position error [m]")
        ax.legend(loc="upper left")
        ax2 = ax.twinx()
        ax2.plot(t, wind, "k--", lw=1, label="wind")
        ax2.set_ylabel("wind speed [m/s]")
        ax.set_title(f"{stem}: gust response")
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, f"{stem}_wind.png"), dpi=130)
        plt.close(fig)

    print(f"plotted {stem} -> {out_dir}")


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("logs", nargs="+", help="run log CSV files (*_log.csv)")
    ap.add_argument("--out", default="plots", help="output directory (default: plots)")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    for path in args.logs:
        if not os.path.exists(path):
            sys.exit(f"error: no such log: {path}")
        plot_log(path, args.out)


if __name__ == "__main__":
    main()
