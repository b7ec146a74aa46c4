"""Acceptance gate: every criterion at its stated tolerance, one line each.

The flow benchmarks run at desk scale; the learning checks run against
exact oracles; the smoke-training trend is the scaled-down stand-in for a
full training curve.  Long tests print their verdicts so a plain pytest -v
run doubles as the acceptance report.
"""
import concurrent.futures
import shutil

import numpy as np
import pytest

from tests.conftest import micro_config
from tests.gridworld import Gridworld, value_iteration
from vortexswim import kinematics as km
from vortexswim import validation
from vortexswim.agent import (DQNAgent, ReplayBuffer, Schedule, Transition,
                              train)
from vortexswim.cli import main
from vortexswim.environment import EpisodeConfig, reward_for
from vortexswim.network import NetSpec, QNetwork


def report(name: str, passed: bool, detail: str) -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


def test_lbm_poiseuille():
    r = validation.poiseuille_check()
    report("poiseuille", r.passed,
           f"centerline rel err {r.value:.2e} (bound 1e-2)")


def test_lbm_taylor_green():
    r = validation.taylor_green_check()
    report("taylor_green", r.passed,
           f"decay-rate rel err {r.value:.2e} (bound 2e-2)")


def test_cylinder_strouhal():
    rows = validation.strouhal_check()
    st, signs, wake, lift = rows
    ok = all(r.passed for r in rows)
    report("cylinder_strouhal", ok,
           f"St {st.value:.4f} in [0.18, 0.21], lift rms {lift.value:.3g} "
           f"with {signs.value:.0f} sign changes, wake vorticity of both "
           f"signs {wake.passed}")


def test_body_shape_closure():
    nose = km.half_width(0.0)
    tail = abs(km.half_width(1.0))
    report("shape_closure", nose == 0.0 and tail < 1e-4,
           f"nose {nose}, |tail| {tail:.2e} (bound 1e-4)")


def test_waveform_constraints_and_c2():
    rows = validation.waveform_check(draws=1000)
    res, c2 = rows
    report("waveform", res.passed and c2.passed,
           f"worst residual {res.value:.2e} (1e-10), "
           f"C2 jump {c2.value:.2e} (1e-8)")


def test_ibm_adjointness_and_linearity():
    rows = validation.ibm_adjointness_check()
    adj, lin = rows
    report("ibm_adjointness", adj.passed and lin.passed,
           f"adjoint {adj.value:.2e} (1e-12), linear {lin.value:.2e} (1e-10)")


def test_self_propulsion():
    r = validation.self_propulsion_check()[0]
    report("self_propulsion", r.passed,
           f"mean forward speed {r.value:.4f} L/cycle (bound 0.01)")


def test_lstm_bptt_gradient():
    rng = np.random.default_rng(2024)
    spec = NetSpec(input_dim=7, hidden_size=10, lstm_layers=3, n_actions=5)
    net = QNetwork(spec, seed=11)
    B, T = 4, 9
    x = rng.normal(size=(B, T, 7))
    a = rng.integers(0, 5, size=B)
    y = rng.normal(size=B)

    def loss_at(flat):
        old = net.flat.copy()
        net.flat[:] = flat
        q = net.forward(x)
        net.flat[:] = old
        qa = q[np.arange(B), a]
        return float(np.mean((y - qa) ** 2))

    q, cache = net.forward(x, need_cache=True)
    dq = np.zeros_like(q)
    dq[np.arange(B), a] = 2.0 * (q[np.arange(B), a] - y) / B
    grad = net.backward(cache, dq)
    gmax = np.abs(grad).max()
    idx = rng.choice(net.n_params, size=150, replace=False)
    h = 1e-6
    worst = 0.0
    for k in idx:
        fp = net.flat.copy()
        fp[k] += h
        fm = net.flat.copy()
        fm[k] -= h
        num = (loss_at(fp) - loss_at(fm)) / (2 * h)
        # relative to the larger of the two, floored at the gradient's
        # scale: below that, central differences are pure cancellation
        denom = max(abs(num), abs(grad[k]), 1e-4 * gmax)
        worst = max(worst, abs(num - grad[k]) / denom)
    report("bptt_gradient", worst < 1e-5,
           f"worst rel err {worst:.2e} over {len(idx)} coordinates (1e-5)")


def test_dqn_gridworld_oracle():
    spec = NetSpec(input_dim=7, hidden_size=32, lstm_layers=2, n_actions=4)
    sched = Schedule(eps_decay=1.2e-3, learning_rate=2e-3, gamma=0.99)
    agent = DQNAgent(spec, sched, buffer_capacity=5000, batch_size=100,
                     seed=0)
    env = Gridworld()
    train(env, agent, 200, master_seed=0)
    Qstar = value_iteration(0.99)
    good = total = 0
    for x in range(5):
        for y in range(5):
            if (x, y) == (4, 4):
                continue
            total += 1
            env.reset(seed=0, state=(x, y))
            q = agent.q_values(env.window.vector())
            optimal = set(np.flatnonzero(
                Qstar[x, y] >= Qstar[x, y].max() - 1e-9))
            good += int(np.argmax(q)) in optimal
    frac = good / total
    report("dqn_gridworld", frac >= 0.95,
           f"greedy action optimal in {good}/{total} states "
           f"({frac:.0%}, bound 95%)")


def test_schedule_and_replay_exactness():
    sched = Schedule()
    eps_ok = (sched.epsilon_at(0) == 1.0
              and abs(sched.epsilon_at(20000) - 0.05) < 1e-12
              and sched.epsilon_at(10**6) == 0.05)

    # target sync exactly every 100 gradient steps
    spec = NetSpec(input_dim=7, hidden_size=8, lstm_layers=1, n_actions=3)
    agent = DQNAgent(spec, Schedule(target_sync=100), buffer_capacity=5000,
                     batch_size=10, seed=0)
    rng = np.random.default_rng(0)
    for _ in range(30):
        agent.remember(rng.normal(size=55), 0, -1.0, rng.normal(size=55),
                       False)
    syncs = []
    for step in range(1, 251):
        agent.learn(rng)
        if np.array_equal(agent.target.flat, agent.value.flat):
            syncs.append(step)
    sync_ok = syncs == [100, 200]

    # FIFO eviction and distinct indices within a batch, by enumeration
    buf = ReplayBuffer(capacity=5000, state_dim=55)
    for k in range(5000 + 123):
        s = np.full(55, float(k))
        buf.push(Transition(state=s, action=0, reward=0.0, next_state=s,
                            done=False))
    tags = buf.states[:, 0]
    fifo_ok = tags.min() == 123.0 and len(buf) == 5000
    distinct_ok = all(
        len(np.unique(buf.sample(100, rng)[0][:, 0])) == 100
        for _ in range(10)
    )
    report("schedule_replay", eps_ok and sync_ok and fifo_ok and distinct_ok,
           f"eps pins ok={eps_ok}, syncs at {syncs}, fifo ok={fifo_ok}, "
           f"distinct ok={distinct_ok}")


def test_reward_contract():
    ep = EpisodeConfig(target=(5.0, 3.0), init_x=(3.0, 5.0), init_y=1.75,
                       init_theta=np.pi, capture_radius=0.1, max_steps=450,
                       bounds=(0.0, -10.0, 20.0, 10.0))
    at_target = reward_for(np.array([5.0, 3.0]), ep)
    offset_345 = reward_for(np.array([2.0, -1.0]), ep)   # 3-4-5 triangle
    outside = reward_for(np.array([25.0, 0.0]), ep)
    ok = (at_target == 0.0 and offset_345 == pytest.approx(-5.0)
          and outside == -100.0)
    report("reward_contract", ok,
           f"r(target)={at_target}, r(3-4-5)={offset_345}, "
           f"r(outside)={outside}")


def test_determinism_bitwise(tmp_path):
    cfg = micro_config()
    cfg.env.max_steps = 4
    cfg_path = tmp_path / "micro.cfg"
    cfg_path.write_text(cfg.to_text())
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(["train", "--config", str(cfg_path), "--out", str(out),
                   "--seed", "3", "--episodes", "4"])
        assert rc == 0
        rewards = (out / "rewards.csv").read_bytes()
        trajs = b"".join(sorted(
            p.read_bytes() for p in (out / "trajectories").glob("*.csv")))
        outs.append((rewards, trajs))
    ok = outs[0] == outs[1]
    report("determinism", ok,
           "reward logs and trajectories bitwise identical across runs")


def _first_last_window_means(rewards: np.ndarray, window: int = 50):
    return rewards[:window].mean(), rewards[-window:].mean()


def test_smoke_training_trend():
    from tests.smoke_runner import run_smoke_seed
    seeds = [0, 1, 2, 3, 4]
    with concurrent.futures.ProcessPoolExecutor(max_workers=2) as pool:
        results = list(pool.map(run_smoke_seed, seeds))
    improved = 0
    details = []
    for res in results:
        first, last = _first_last_window_means(res["rewards"])
        up = last > first
        improved += up
        details.append(f"seed {res['seed']}: {first:.1f} -> {last:.1f}"
                       f" {'UP' if up else 'down'}")
    report("smoke_trend", improved >= 4,
           f"{improved}/5 seeds improved ({'; '.join(details)})")
