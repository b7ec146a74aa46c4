import numpy as np
import pytest

from vortexswim.config import RunConfig
from vortexswim.environment import NavigationEnv


def micro_config() -> RunConfig:
    """Tiny but complete setup: L = 10 cells, 100x50 grid, 20-tick steps."""
    cfg = RunConfig()
    cfg.grid.cells_per_length = 10
    cfg.flow.u_inlet = 0.1
    cfg.flow.reynolds = 50.0
    cfg.flow.inlet_ramp_ticks = 100
    cfg.flow.wiggle_eps = 0.05
    cfg.flow.wiggle_period = 150.0
    cfg.flow.wiggle_until = 300.0
    cfg.flow.spinup_ticks = 400
    cfg.fish.period_ticks = 40.0
    cfg.env.max_steps = 20
    cfg.run.episodes = 3
    return cfg


@pytest.fixture(scope="session")
def micro_cfg():
    return micro_config()


@pytest.fixture(scope="session")
def micro_env(micro_cfg):
    return NavigationEnv(micro_cfg)


@pytest.fixture()
def fresh_env(micro_cfg, micro_env):
    """An isolated env sharing the session's warm-start state."""
    def make(cfg=None):
        return NavigationEnv(cfg or micro_cfg, warm_state=micro_env.warm_f)
    return make
