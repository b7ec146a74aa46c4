"""Point-to-point navigation environment over the coupled simulation.

One control step spans half an undulation period: the agent picks the
signed peak deflection of the next half cycle, the FSI advances T/2 ticks,
and a new observation is assembled.  Observations stack into a window of
the nine most recent ones plus the previous action index, 55 scalars in
all.  Rewards are the negated tip-to-target distance in body lengths, with
a flat -100 for leaving the valid region (or crashing the solver, or
touching the cylinder), so reward is never positive and peaks at zero on
the target.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import lattice as lb
from .config import RunConfig
from .ibm import MarkerEscape
from .swimmer import CoupledSim

WINDOW_OBS = 9
OBS_DIM = 6
STATE_DIM = WINDOW_OBS * OBS_DIM + 1  # 55

EXIT_PENALTY = -100.0


@dataclass(frozen=True)
class ActionSpec:
    """Discrete signed peak-deflection choices for the next half cycle."""

    values: tuple[float, ...] = (-0.5, -0.25, 0.0, 0.25, 0.5)

    def __post_init__(self):
        if len(self.values) < 2:
            raise ValueError("need at least two actions")

    def __len__(self):
        return len(self.values)

    @property
    def zero_index(self) -> int:
        return int(np.argmin(np.abs(np.asarray(self.values))))

    def normalized(self, index: int) -> float:
        """Map an action index into [-1, 1] for the state vector."""
        return 2.0 * index / (len(self.values) - 1) - 1.0


@dataclass(frozen=True)
class Observation:
    x: float        # tip minus target, units of L
    y: float
    theta: float    # orientation, radians (continuous, not wrapped)
    u_x: float      # mean COM velocity, L per half period
    u_y: float
    omega: float    # mean angular velocity, rad per half period

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta,
                         self.u_x, self.u_y, self.omega])


@dataclass
class EpisodeConfig:
    target: tuple[float, float]               # units of L
    init_x: tuple[float, float]               # uniform range, units of L
    init_y: float
    init_theta: float
    capture_radius: float                     # units of L
    max_steps: int
    bounds: tuple[float, float, float, float]  # valid rectangle, units of L

    def __post_init__(self):
        x0, y0, x1, y1 = self.bounds
        tx, ty = self.target
        if not (x0 < tx < x1 and y0 < ty < y1):
            raise ValueError("target outside the valid region")
        if self.capture_radius <= 0:
            raise ValueError("capture radius must be positive")
        if not (x0 <= self.init_x[0] <= self.init_x[1] <= x1
                and y0 <= self.init_y <= y1):
            raise ValueError("init region outside the valid region")


@dataclass
class StepResult:
    window: np.ndarray
    reward: float
    done: bool
    outcome: str          # running | captured | exited | timeout | diverged
    observation: Observation
    bootstrap: bool       # False only on true terminals (not timeouts)


class ObservationWindow:
    """The 55-entry stacked state: nine observations plus previous action.

    Slot zero holds the newest observation; each control step shifts the
    stack by one.  The trailing entry is the previous action index
    normalized into [-1, 1]."""

    def __init__(self):
        self.data = np.zeros(STATE_DIM)

    def reset(self, obs: np.ndarray, action_norm: float) -> None:
        self.data[:WINDOW_OBS * OBS_DIM] = np.tile(obs, WINDOW_OBS)
        self.data[-1] = action_norm

    def shift(self, obs: np.ndarray, action_norm: float) -> None:
        flat = self.data
        flat[OBS_DIM:WINDOW_OBS * OBS_DIM] = (
            flat[:(WINDOW_OBS - 1) * OBS_DIM].copy()
        )
        flat[:OBS_DIM] = obs
        flat[-1] = action_norm

    def vector(self) -> np.ndarray:
        return self.data.copy()


@dataclass
class TrajectoryRow:
    control_step: int
    t_ticks: int
    x_tip: float
    y_tip: float
    theta: float
    u_bar_x: float
    u_bar_y: float
    omega_bar: float
    action_index: int
    reward: float
    done: bool

    HEADER = ("control_step,t_ticks,x_tip,y_tip,theta,"
              "u_bar_x,u_bar_y,omega_bar,action_index,reward,done")

    def to_csv(self) -> str:
        return (f"{self.control_step},{self.t_ticks},{self.x_tip!r},"
                f"{self.y_tip!r},{self.theta!r},{self.u_bar_x!r},"
                f"{self.u_bar_y!r},{self.omega_bar!r},{self.action_index},"
                f"{self.reward!r},{int(self.done)}")


def reward_for(tip_L: np.ndarray, episode: EpisodeConfig) -> float:
    """Negated tip-target distance in L units; -100 outside the region."""
    x0, y0, x1, y1 = episode.bounds
    if not (x0 <= tip_L[0] <= x1 and y0 <= tip_L[1] <= y1):
        return EXIT_PENALTY
    dx = tip_L[0] - episode.target[0]
    dy = tip_L[1] - episode.target[1]
    return -float(np.hypot(dx, dy))


class NavigationEnv:
    """Episode lifecycle over warm-started wake flow."""

    def __init__(self, cfg: RunConfig, warm_state: np.ndarray | None = None):
        self.cfg = cfg
        # episodes restart the tick clock at zero on a developed flow, so
        # the inlet must run at full strength with no seeding wiggle; the
        # ramp and wiggle apply only to the spin-up
        self._spinup_cfg = cfg.flow_config()
        self.flow_cfg = replace(self._spinup_cfg, inlet_ramp_ticks=0,
                                inlet_wiggle=(0.0, 1.0, 0.0))
        self.flow_cfg._solid = self._spinup_cfg.solid_mask()
        self.swim_cfg = cfg.swimmer_config()
        self.actions = ActionSpec(tuple(cfg.action_values()))
        self.L = cfg.length
        self.episode = EpisodeConfig(
            target=(cfg.env.target_x, cfg.env.target_y),
            init_x=(cfg.env.init_x_min, cfg.env.init_x_max),
            init_y=cfg.env.init_y,
            init_theta=cfg.env.init_theta,
            capture_radius=cfg.env.capture_radius,
            max_steps=cfg.env.max_steps,
            bounds=(cfg.env.bound_x0, cfg.env.bound_y0,
                    cfg.env.bound_x1, cfg.env.bound_y1),
        )
        if warm_state is None:
            warm_state = self._spin_up()
        self.warm_f = warm_state
        self.sim: CoupledSim | None = None
        self.trajectory: list[TrajectoryRow] = []
        self._steps = 0
        self._window = None
        self._done = True
        self._tip_L = None

    def _spin_up(self) -> np.ndarray:
        """Develop the wake once; every episode restores this state."""
        field = lb.uniform_field(self._spinup_cfg)
        for _ in range(self.cfg.flow.spinup_ticks):
            field, _ = lb.flow_tick(field, self._spinup_cfg)
        return field.f

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed, init_x: float | None = None) -> np.ndarray:
        """Start an episode; ``init_x`` (units of L) overrides the random
        draw for evaluation sweeps."""
        rng = np.random.default_rng(seed)
        if init_x is None:
            x0 = rng.uniform(*self.episode.init_x) * self.L
        else:
            bx0, _, bx1, _ = self.episode.bounds
            if not bx0 <= init_x <= bx1:
                raise ValueError(f"init position {init_x} outside the valid region")
            x0 = init_x * self.L
        y0 = self.episode.init_y * self.L
        field = lb.DistributionField(
            f=self.warm_f.copy(), tau=self.flow_cfg.relaxation_time(), tick=0
        )
        self.sim = CoupledSim(self.flow_cfg, self.swim_cfg, field=field)
        self.sim.place((x0, y0), self.episode.init_theta)
        self._steps = 0
        self._done = False
        self.trajectory = []
        obs = self._observe(np.zeros(2), 0.0)
        self._window = ObservationWindow()
        self._window.reset(obs.to_array(),
                           self.actions.normalized(self.actions.zero_index))
        self._last_obs = obs
        return self._window.vector()

    def _tip(self) -> np.ndarray:
        return self.sim.body.nose_global()

    def _observe(self, com_delta: np.ndarray, theta_delta: float) -> Observation:
        tip = self._tip() / self.L
        self._tip_L = tip
        return Observation(
            x=float(tip[0] - self.episode.target[0]),
            y=float(tip[1] - self.episode.target[1]),
            theta=float(self.sim.body.theta),
            u_x=float(com_delta[0] / self.L),
            u_y=float(com_delta[1] / self.L),
            omega=float(theta_delta),
        )

    def _inside(self, tip_L: np.ndarray) -> bool:
        x0, y0, x1, y1 = self.episode.bounds
        return bool(x0 <= tip_L[0] <= x1 and y0 <= tip_L[1] <= y1)

    def _distance(self, tip_L: np.ndarray) -> float:
        return float(np.hypot(tip_L[0] - self.episode.target[0],
                              tip_L[1] - self.episode.target[1]))

    def _touches_cylinder(self) -> bool:
        if self.flow_cfg.cylinder_diameter <= 0:
            return False
        center = np.asarray(self.flow_cfg.cylinder_center)
        r = self.flow_cfg.cylinder_diameter / 2.0 + 1.0
        markers = self.sim.body.markers_global()
        d2 = ((markers - center) ** 2).sum(axis=1)
        return bool((d2 < r * r).any())

    def step(self, action_index: int) -> StepResult:
        if self._done:
            raise RuntimeError("episode is over; call reset")
        if not 0 <= action_index < len(self.actions):
            raise IndexError(f"action index {action_index} out of range")
        # capture already satisfied at entry: terminal without advancing
        if self._distance(self._tip_L) <= self.episode.capture_radius:
            self._done = True
            reward = -self._distance(self._tip_L)
            return self._finish(action_index, reward, "captured", False)

        com_before = self.sim.body.d.copy()
        theta_before = self.sim.body.theta
        self.sim.push_action(self.actions.values[action_index])
        outcome = "running"
        for _ in range(self.swim_cfg.half_period):
            try:
                self.sim.tick()
            except lb.SimulationDiverged:
                outcome = "diverged"
                break
            except MarkerEscape:
                outcome = "exited"
                break
            if not self._inside(self._tip() / self.L):
                outcome = "exited"
                break
            if self._touches_cylinder():
                outcome = "exited"
                break

        com_delta = self.sim.body.d - com_before
        theta_delta = self.sim.body.theta - theta_before
        obs = self._observe(com_delta, theta_delta)
        self._steps += 1

        if outcome in ("exited", "diverged"):
            reward = EXIT_PENALTY
            done = True
            bootstrap = False
        else:
            reward = -self._distance(self._tip_L)
            if self._distance(self._tip_L) <= self.episode.capture_radius:
                outcome = "captured"
                done = True
                bootstrap = False
            elif self._steps >= self.episode.max_steps:
                outcome = "timeout"
                done = True
                bootstrap = True  # timeout is a cap, not a true terminal
            else:
                done = False
                bootstrap = True

        self._window.shift(obs.to_array(),
                           self.actions.normalized(action_index))
        self._done = done
        self._last_obs = obs
        result = StepResult(window=self._window.vector(), reward=reward,
                            done=done, outcome=outcome, observation=obs,
                            bootstrap=bootstrap)
        self.trajectory.append(TrajectoryRow(
            control_step=self._steps,
            t_ticks=self.sim.field.tick,
            x_tip=float(self._tip_L[0]), y_tip=float(self._tip_L[1]),
            theta=obs.theta, u_bar_x=obs.u_x, u_bar_y=obs.u_y,
            omega_bar=obs.omega, action_index=action_index,
            reward=reward, done=done,
        ))
        return result

    def _finish(self, action_index: int, reward: float, outcome: str,
                bootstrap: bool) -> StepResult:
        obs = self._last_obs
        self.trajectory.append(TrajectoryRow(
            control_step=self._steps, t_ticks=self.sim.field.tick,
            x_tip=float(self._tip_L[0]), y_tip=float(self._tip_L[1]),
            theta=obs.theta, u_bar_x=obs.u_x, u_bar_y=obs.u_y,
            omega_bar=obs.omega, action_index=action_index,
            reward=reward, done=True,
        ))
        return StepResult(window=self._window.vector(), reward=reward,
                          done=True, outcome=outcome, observation=obs,
                          bootstrap=bootstrap)
