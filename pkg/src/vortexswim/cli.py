"""Command-line interface: validate | train | eval | fields.

Every command works inside one run directory (--out): the resolved config
is echoed there for provenance, artifacts accumulate under it, and a
manifest (config hash, seed, build id, timestamps, artifact list) is
written atomically at the end.  Exit codes: 0 ok, 1 test or assertion
failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import datetime
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, lattice as lb, snapshots
from .agent import (DQNAgent, EpisodeRecord, Rollout, Schedule, evaluate,
                    sweep_points, train)
from .config import ConfigError, RunConfig, load_config
from .environment import NavigationEnv, TrajectoryRow
from .network import NetSpec, QNetwork

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(RuntimeError):
    pass


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return load_config(path)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    except ConfigError as exc:
        raise UsageError(f"bad config: {exc}") from exc


class RunDir:
    """Output directory with provenance bookkeeping."""

    def __init__(self, path: str, cfg: RunConfig, seed: int):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.seed = seed
        self.started = datetime.datetime.now(datetime.timezone.utc)
        self.artifacts: list[str] = []
        self.record("config.cfg", text=cfg.to_text())

    def file(self, rel: str) -> Path:
        p = self.path / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        if rel not in self.artifacts:
            self.artifacts.append(rel)
        return p

    def record(self, rel: str, text: str | None = None) -> Path:
        p = self.file(rel)
        if text is not None:
            p.write_text(text)
        return p

    def finish(self) -> None:
        manifest = {
            "config_hash": self.cfg.digest(),
            "seed": self.seed,
            "build": f"vortexswim-{__version__}",
            "started": self.started.isoformat(),
            "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "artifacts": sorted(self.artifacts),
        }
        tmp = self.path / "manifest.json.part"
        tmp.write_text(json.dumps(manifest, indent=2) + "\n")
        tmp.replace(self.path / "manifest.json")


def _agent_from_config(cfg: RunConfig, n_actions: int, seed: int) -> DQNAgent:
    spec = NetSpec(input_dim=7, hidden_size=cfg.agent.hidden_size,
                   lstm_layers=cfg.agent.lstm_layers, n_actions=n_actions)
    sched = Schedule(eps_start=cfg.schedule.eps_start,
                     eps_floor=cfg.schedule.eps_floor,
                     eps_decay=cfg.schedule.eps_decay,
                     gamma=cfg.agent.gamma,
                     learning_rate=cfg.agent.learning_rate,
                     target_sync=cfg.agent.target_sync)
    return DQNAgent(spec, sched, buffer_capacity=cfg.agent.buffer_capacity,
                    batch_size=cfg.agent.batch_size, seed=seed)


def _warm_state(cfg: RunConfig, run: RunDir) -> np.ndarray:
    """Load the configured warm-start state or spin one up and save it."""
    if cfg.env.warm_start:
        path = Path(cfg.env.warm_start)
        if not path.exists():
            raise UsageError(f"warm-start state not found: {path}")
        f, tau, _ = snapshots.load_state(path)
        expected = cfg.flow_config().relaxation_time()
        if abs(tau - expected) > 1e-12:
            raise UsageError(
                f"warm-start tau {tau} does not match config tau {expected}")
        return f
    flow_cfg = cfg.flow_config()
    print(f"spinning up the wake for {cfg.flow.spinup_ticks} ticks "
          f"on {flow_cfg.nx}x{flow_cfg.ny} ...", flush=True)
    field = lb.uniform_field(flow_cfg)
    for _ in range(cfg.flow.spinup_ticks):
        field, _ = lb.flow_tick(field, flow_cfg)
    out = run.file("warm_start.npz")
    snapshots.save_state(out, field.f, flow_cfg.relaxation_time(), field.tick)
    return field.f


# -- validate ---------------------------------------------------------------

def cmd_validate(args) -> int:
    from . import validation
    cfg = _load_config(args.config)
    run = RunDir(args.out, cfg, args.seed)
    rows = []
    try:
        flow_cfg = cfg.flow_config()
        tau = flow_cfg.relaxation_time()
        rows.append(validation.CheckResult("config", "tau", tau, 0.5, True))
    except ValueError as exc:
        print(f"stability gate: {exc}")
        rows.append(validation.CheckResult("config", "tau", float("nan"),
                                           0.5, False))
    if rows[-1].passed:
        rows += validation.run_all(include_strouhal=not args.fast)
    lines = [validation.CheckResult.HEADER]
    ok = True
    for r in rows:
        lines.append(r.to_csv())
        status = "pass" if r.passed else "FAIL"
        print(f"{status:4s}  {r.test:18s} {r.metric:22s} "
              f"value={r.value:.6g} bound={r.bound:.3g}")
        ok &= r.passed
    run.record("validation.csv", text="\n".join(lines) + "\n")
    run.finish()
    return EXIT_OK if ok else EXIT_FAIL


# -- train ------------------------------------------------------------------

def _save_training_state(run: RunDir, agent: DQNAgent, rng_act, rng_batch):
    agent.value.save(run.file("checkpoints/latest.vswq"), agent.adam)
    agent.target.save(run.file("checkpoints/latest-target.vswq"))
    state = {
        "episodes_done": agent.episodes_done,
        "env_steps": agent.env_steps,
        "grad_steps": agent.grad_steps,
        "rng_act": rng_act.bit_generator.state,
        "rng_batch": rng_batch.bit_generator.state,
    }
    run.record("checkpoints/train_state.json", text=json.dumps(state))
    rb = agent.replay
    np.savez(run.file("checkpoints/replay.npz"), states=rb.states,
             actions=rb.actions, rewards=rb.rewards,
             next_states=rb.next_states, dones=rb.dones,
             cursor=rb.cursor, fill=rb.fill)


def _load_training_state(run: RunDir, agent: DQNAgent, rng_act, rng_batch):
    net, adam = QNetwork.load(run.path / "checkpoints/latest.vswq",
                              agent.value.spec)
    agent.value.copy_from(net)
    agent.adam = adam
    tgt, _ = QNetwork.load(run.path / "checkpoints/latest-target.vswq",
                           agent.target.spec)
    agent.target.copy_from(tgt)
    state = json.loads((run.path / "checkpoints/train_state.json").read_text())
    agent.episodes_done = state["episodes_done"]
    agent.env_steps = state["env_steps"]
    agent.grad_steps = state["grad_steps"]
    rng_act.bit_generator.state = state["rng_act"]
    rng_batch.bit_generator.state = state["rng_batch"]
    data = np.load(run.path / "checkpoints/replay.npz")
    rb = agent.replay
    rb.states[...] = data["states"]
    rb.actions[...] = data["actions"]
    rb.rewards[...] = data["rewards"]
    rb.next_states[...] = data["next_states"]
    rb.dones[...] = data["dones"]
    rb.cursor = int(data["cursor"])
    rb.fill = int(data["fill"])


def write_trajectory(path: Path, rows: list[TrajectoryRow]) -> None:
    lines = [TrajectoryRow.HEADER] + [r.to_csv() for r in rows]
    path.write_text("\n".join(lines) + "\n")


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    if args.episodes is not None:
        cfg.run.episodes = args.episodes
    cfg.run.seed = args.seed
    run = RunDir(args.out, cfg, args.seed)
    n_episodes = cfg.run.episodes
    if n_episodes >= 1000:
        est_steps = n_episodes * min(cfg.env.max_steps, 100)
        est_ticks = est_steps * cfg.swimmer_config().half_period
        print(f"NOTE: long run: {n_episodes} episodes, very roughly "
              f"{est_ticks:.2e} lattice ticks plus {est_steps:.2e} gradient "
              f"steps; expect hours at default resolution.", flush=True)

    warm = _warm_state(cfg, run)
    env = NavigationEnv(cfg, warm_state=warm)
    agent = _agent_from_config(cfg, len(env.actions), seed=args.seed)
    rng_act = np.random.default_rng([args.seed, 0xA])
    rng_batch = np.random.default_rng([args.seed, 0xB])
    if args.resume and (run.path / "checkpoints/train_state.json").exists():
        _load_training_state(run, agent, rng_act, rng_batch)
        print(f"resuming at episode {agent.episodes_done}", flush=True)

    rewards_path = run.file("rewards.csv")
    mode = "a" if args.resume and rewards_path.exists() else "w"
    rewards_fh = open(rewards_path, mode)
    if mode == "w":
        rewards_fh.write(EpisodeRecord.HEADER + "\n")

    t0 = time.time()

    def on_episode_end(rec: EpisodeRecord, env_, agent_):
        rewards_fh.write(rec.to_csv() + "\n")
        rewards_fh.flush()
        e = rec.episode
        if cfg.run.trajectory_every and e % cfg.run.trajectory_every == 0:
            write_trajectory(run.file(f"trajectories/ep{e:05d}.csv"),
                             env_.trajectory)
        if cfg.run.checkpoint_every and (e + 1) % cfg.run.checkpoint_every == 0:
            agent_.value.save(run.file(f"checkpoints/ep{e + 1:05d}.vswq"),
                              agent_.adam)
            _save_training_state(run, agent_, rng_act, rng_batch)
        if args.progress and e % 10 == 0:
            print(f"episode {e}: steps={rec.steps} reward="
                  f"{rec.cumulative_reward:.2f} outcome={rec.outcome} "
                  f"eps={agent_.epsilon():.3f} "
                  f"[{time.time() - t0:.0f}s]", flush=True)

    try:
        train(env, agent, n_episodes, master_seed=args.seed,
              on_episode_end=on_episode_end, rng_act=rng_act,
              rng_batch=rng_batch)
    finally:
        rewards_fh.close()
    agent.value.save(run.file("checkpoints/final.vswq"), agent.adam)
    _save_training_state(run, agent, rng_act, rng_batch)
    run.finish()
    print(f"training complete in {time.time() - t0:.0f}s; "
          f"artifacts in {run.path}")
    return EXIT_OK


# -- eval ---------------------------------------------------------------------

def parse_sweep(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        pts = sweep_points(float(lo), float(hi), int(n))
    except ValueError as exc:
        raise UsageError(f"bad sweep spec {text!r}; expected A:B:N") from exc
    return pts


def cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    run = RunDir(args.out, cfg, args.seed)
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise UsageError(f"checkpoint not found: {ckpt}")
    warm = _warm_state(cfg, run)
    env = NavigationEnv(cfg, warm_state=warm)
    spec = NetSpec(input_dim=7, hidden_size=cfg.agent.hidden_size,
                   lstm_layers=cfg.agent.lstm_layers,
                   n_actions=len(env.actions))
    try:
        net, _ = QNetwork.load(ckpt, spec)
    except ValueError as exc:
        print(f"checkpoint error: {exc}")
        return EXIT_FAIL
    points = parse_sweep(args.sweep)
    rollouts = evaluate(env, net, points, seed=args.seed)
    lines = ["start_x,outcome,steps_to_outcome,final_distance"]
    for k, ro in enumerate(rollouts):
        lines.append(f"{ro.start_x!r},{ro.outcome},{ro.steps},"
                     f"{ro.final_distance!r}")
        write_trajectory(run.file(f"trajectories/start_{ro.start_x:.3f}.csv"),
                         ro.trajectory)
        print(f"start x={ro.start_x:.2f}: {ro.outcome} after {ro.steps} "
              f"steps, final distance {ro.final_distance:.3f} L")
    run.record("summary.csv", text="\n".join(lines) + "\n")
    run.finish()
    return EXIT_OK


# -- fields -------------------------------------------------------------------

def _snapshot_from(sim_field, flow_cfg, L, outline) -> snapshots.Snapshot:
    macro = lb.macroscopics(sim_field, valid=flow_cfg.fluid_mask())
    return snapshots.Snapshot(
        nx=flow_cfg.nx, ny=flow_cfg.ny, dx=1.0 / L, t=float(sim_field.tick),
        rho=macro.rho, u_x=macro.u[0], u_y=macro.u[1],
        omega_z=lb.vorticity(macro), outline=outline,
    )


def cmd_fields(args) -> int:
    cfg = _load_config(args.config)
    run = RunDir(args.out, cfg, args.seed)
    flow_cfg = cfg.flow_config()
    L = cfg.length
    empty = np.zeros((0, 2))
    try:
        if args.spinup:
            field = lb.uniform_field(flow_cfg)
            for _ in range(cfg.flow.spinup_ticks):
                field, _ = lb.flow_tick(field, flow_cfg)
            snapshots.save_state(run.file("warm_start.npz"), field.f,
                                 flow_cfg.relaxation_time(), field.tick)
            snapshots.write_snapshot(run.file("spinup.vswm"),
                                     _snapshot_from(field, flow_cfg, L, empty))
            print(f"spin-up state saved after {field.tick} ticks")
            run.finish()
            return EXIT_OK

        warm = _warm_state(cfg, run)
        count = 0
        if args.checkpoint:
            # greedy policy drives the fish; snapshots carry its outline
            env = NavigationEnv(cfg, warm_state=warm)
            spec = NetSpec(input_dim=7, hidden_size=cfg.agent.hidden_size,
                           lstm_layers=cfg.agent.lstm_layers,
                           n_actions=len(env.actions))
            net, _ = QNetwork.load(args.checkpoint, spec)
            window = env.reset(seed=args.seed)
            due = args.cadence
            done = False
            while not done and env.sim.field.tick < args.ticks:
                from .agent import window_to_sequence
                q = net.forward(window_to_sequence(window[None, :]))[0]
                result = env.step(int(np.argmax(q)))
                window = result.window
                done = result.done
                if env.sim.field.tick >= due:
                    sim_field = env.sim.field
                    snap = _snapshot_from(sim_field, env.flow_cfg, L,
                                          env.sim.body.markers_global())
                    snapshots.write_snapshot(
                        run.file(f"fields/t{sim_field.tick:08d}.vswm"), snap)
                    count += 1
                    due += args.cadence
        else:
            field = lb.DistributionField(f=warm,
                                         tau=flow_cfg.relaxation_time())
            for t in range(args.ticks):
                field, _ = lb.flow_tick(field, flow_cfg)
                if (t + 1) % args.cadence == 0:
                    snap = _snapshot_from(field, flow_cfg, L, empty)
                    snapshots.write_snapshot(
                        run.file(f"fields/t{field.tick:08d}.vswm"), snap)
                    count += 1
        print(f"wrote {count} snapshots")
    except OSError as exc:
        print(f"I/O error while writing snapshots: {exc}")
        return EXIT_FAIL
    run.finish()
    return EXIT_OK


# -- entry --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vortexswim",
        description="Undulating-swimmer navigation in a cylinder wake: "
                    "solver validation, DQN training, evaluation, field export.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="run the solver validation suites")
    v.add_argument("--config", default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default="runs/validate")
    v.add_argument("--fast", action="store_true",
                   help="skip the cylinder Strouhal benchmark (minutes)")

    t = sub.add_parser("train", help="train the navigation agent")
    t.add_argument("--config", default=None)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default="runs/train")
    t.add_argument("--resume", action="store_true")
    t.add_argument("--episodes", type=int, default=None,
                   help="override run.episodes")
    t.add_argument("--progress", action="store_true")

    e = sub.add_parser("eval", help="greedy rollouts from a start sweep")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--config", default=None)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default="runs/eval")
    e.add_argument("--sweep", default="3:5:11", help="A:B:N start positions")

    f = sub.add_parser("fields", help="emit field snapshots")
    f.add_argument("--config", default=None)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", default="runs/fields")
    f.add_argument("--cadence", type=int, default=100)
    f.add_argument("--ticks", type=int, default=1000)
    f.add_argument("--checkpoint", default=None,
                   help="drive the fish with this greedy policy and append "
                        "its outline to each snapshot")
    f.add_argument("--spinup", action="store_true",
                   help="develop the wake and save a warm-start state")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "validate": cmd_validate,
        "train": cmd_train,
        "eval": cmd_eval,
        "fields": cmd_fields,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
