#!/usr/bin/env python3
"""Produce the small golden run directory committed under viz/tests/data.

Runs the micro setup end to end (spin-up, a few training episodes, field
snapshots with the fish outline) so the viz package has real artifacts to
test against without importing the simulator.
"""
import shutil
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import numpy as np

from conftest import micro_config
from vortexswim import lattice as lb, snapshots
from vortexswim.cli import main
from vortexswim.environment import NavigationEnv


def run(dest: Path) -> None:
    if dest.exists():
        shutil.rmtree(dest)
    cfg = micro_config()
    cfg.env.max_steps = 6
    cfg.run.trajectory_every = 1
    cfg_path = dest.parent / "fixture.cfg"
    dest.parent.mkdir(parents=True, exist_ok=True)
    cfg_path.write_text(cfg.to_text())
    rc = main(["train", "--config", str(cfg_path), "--out", str(dest),
               "--seed", "5", "--episodes", "3"])
    if rc != 0:
        raise SystemExit(rc)
    cfg_path.unlink()

    # a few snapshots carrying the fish outline
    env = NavigationEnv(cfg, warm_state=snapshots.load_state(
        dest / "warm_start.npz")[0])
    env.reset(seed=5)
    fields = dest / "fields"
    fields.mkdir(exist_ok=True)
    for k in range(3):
        env.step(k % len(env.actions))
        macro = env.sim.macro
        snap = snapshots.Snapshot(
            nx=env.flow_cfg.nx, ny=env.flow_cfg.ny, dx=1.0 / env.L,
            t=float(env.sim.field.tick), rho=macro.rho, u_x=macro.u[0],
            u_y=macro.u[1], omega_z=lb.vorticity(macro),
            outline=env.sim.body.markers_global(),
        )
        snapshots.write_snapshot(
            fields / f"t{env.sim.field.tick:08d}.vswm", snap)
    # trim what the viz tests do not need
    for sub in ("checkpoints", "warm_start.npz"):
        p = dest / sub
        if p.is_dir():
            shutil.rmtree(p)
        elif p.exists():
            p.unlink()
    print(f"fixture written to {dest}")


if __name__ == "__main__":
    run(Path(__file__).resolve().parents[1] / "viz/tests/data/run")
