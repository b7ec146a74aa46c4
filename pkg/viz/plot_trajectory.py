#!/usr/bin/env python3
"""Trajectories over the vorticity field.

Usage: plot_trajectory.py RUN_DIR [--steps a,b,c]

Draws the latest field snapshot's vorticity as the background (earlier
ones when --steps selects them), the cylinder, every trajectory CSV's
head-tip path, the fish outline stored in the selected snapshots, and the
target marker.  Writes RUN_DIR/figs/trajectory.png.
"""
import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))
from vswviz.runs import find_run_files, read_config, read_trajectory
from vswviz.snapshot_view import load_snapshot


def pick_snapshots(paths, steps):
    if not steps:
        return paths[-1:]
    chosen = []
    for want in steps:
        match = [p for p in paths if f"t{want:08d}" in p.name]
        if match:
            chosen.append(match[0])
        else:
            print(f"warning: no snapshot for tick {want}, skipping",
                  file=sys.stderr)
    return chosen or paths[-1:]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("run_dir")
    ap.add_argument("--steps", default="",
                    help="comma-separated snapshot ticks to overlay")
    args = ap.parse_args(argv)
    files = find_run_files(args.run_dir)
    cfg = read_config(files["config"]) if files["config"].exists() else {}

    fig, ax = plt.subplots(figsize=(9, 4.5))
    extent = None
    if files["snapshots"]:
        steps = [int(tok) for tok in args.steps.split(",") if tok.strip()]
        chosen = pick_snapshots(files["snapshots"], steps)
        base = load_snapshot(chosen[-1])
        extent = base.extent_L
        span = np.abs(base.omega_z).max() or 1.0
        ax.imshow(base.omega_z.T, origin="lower", extent=extent,
                  cmap="RdBu_r", vmin=-0.7 * span, vmax=0.7 * span,
                  interpolation="bilinear", aspect="equal")
        for path in chosen:
            snap = load_snapshot(path)
            if len(snap.outline):
                pts = snap.outline * snap.dx
                ax.fill(pts[:, 0], pts[:, 1], color="k", alpha=0.85, lw=0)
    else:
        print("warning: no field snapshots found; plotting paths only",
              file=sys.stderr)

    L = float(cfg.get("grid.cells_per_length", 1.0))
    if "flow.cylinder_x" in cfg:
        ax.add_patch(plt.Circle(
            (float(cfg["flow.cylinder_x"]), float(cfg["flow.cylinder_y"])),
            float(cfg["flow.cylinder_diameter"]) / 2.0,
            color="0.3", zorder=3))
    if "env.target_x" in cfg:
        ax.plot(float(cfg["env.target_x"]), float(cfg["env.target_y"]),
                marker="*", ms=16, color="gold", mec="k", zorder=5,
                label="target")

    for path in files["trajectories"]:
        traj = read_trajectory(path)
        if len(traj["x_tip"]):
            ax.plot(traj["x_tip"], traj["y_tip"], lw=1.2, alpha=0.9,
                    zorder=4)
            ax.plot(traj["x_tip"][0], traj["y_tip"][0], "o", ms=4,
                    color="k", zorder=4)

    if extent:
        ax.set_xlim(extent[0], extent[1])
        ax.set_ylim(extent[2], extent[3])
    ax.set_xlabel("x / L")
    ax.set_ylabel("y / L")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="upper right")
    fig.tight_layout()
    figs = files["figs"]
    figs.mkdir(parents=True, exist_ok=True)
    out = figs / "trajectory.png"
    fig.savefig(out, dpi=140)
    plt.close(fig)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
