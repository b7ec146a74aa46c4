#!/usr/bin/env python3
"""Training reward curve with a rolling-mean overlay.

Usage: plot_rewards.py RUN_DIR [--window N]
Writes RUN_DIR/figs/rewards.png.
"""
import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from vswviz.runs import find_run_files, read_rewards, rolling_mean


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("run_dir")
    ap.add_argument("--window", type=int, default=50)
    args = ap.parse_args(argv)
    files = find_run_files(args.run_dir)
    try:
        data = read_rewards(files["rewards"])
    except (FileNotFoundError, ValueError) as exc:
        print(f"cannot plot rewards: {exc}", file=sys.stderr)
        return 1
    episodes = data["episode"]
    rewards = data["cumulative_reward"]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(episodes, rewards, lw=0.7, alpha=0.5, color="tab:blue",
            marker="." if len(episodes) < 3 else None, label="episode reward")
    ax.plot(episodes, rolling_mean(rewards, args.window), lw=2.0,
            color="tab:red", label=f"rolling mean ({args.window})")
    ax.set_xlabel("episode")
    ax.set_ylabel("cumulative reward")
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    files["figs"].mkdir(parents=True, exist_ok=True)
    out = files["figs"] / "rewards.png"
    fig.savefig(out, dpi=140)
    plt.close(fig)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
