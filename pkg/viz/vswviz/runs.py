"""Readers for the CSV logs and the echoed flat config of a run directory."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def read_rewards(path) -> dict[str, np.ndarray]:
    """rewards.csv -> columns; raises on a header-only or missing file."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path} has no data rows")
    return {
        "episode": np.array([int(r["episode"]) for r in rows]),
        "steps": np.array([int(r["steps"]) for r in rows]),
        "cumulative_reward": np.array(
            [float(r["cumulative_reward"]) for r in rows]),
        "outcome": [r["outcome"] for r in rows],
    }


def read_trajectory(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    if not rows:
        return {"x_tip": np.array([]), "y_tip": np.array([])}
    for key in rows[0]:
        try:
            out[key] = np.array([float(r[key]) for r in rows])
        except ValueError:
            out[key] = [r[key] for r in rows]
    return out


def read_config(path) -> dict[str, str]:
    """Flat ``section.key = value`` lines into a dict of strings."""
    cfg = {}
    for line in Path(path).read_text().splitlines():
        stripped = line.split("#", 1)[0].strip()
        if not stripped or "=" not in stripped:
            continue
        key, value = stripped.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def rolling_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over up to ``window`` samples; same length as input."""
    out = np.empty(len(values))
    csum = np.cumsum(np.insert(values, 0, 0.0))
    for k in range(len(values)):
        lo = max(0, k - window + 1)
        out[k] = (csum[k + 1] - csum[lo]) / (k + 1 - lo)
    return out


def find_run_files(run_dir) -> dict:
    run_dir = Path(run_dir)
    return {
        "rewards": run_dir / "rewards.csv",
        "config": run_dir / "config.cfg",
        "snapshots": sorted((run_dir / "fields").glob("*.vswm"))
        if (run_dir / "fields").is_dir() else [],
        "trajectories": sorted((run_dir / "trajectories").glob("*.csv"))
        if (run_dir / "trajectories").is_dir() else [],
        "figs": run_dir / "figs",
    }
