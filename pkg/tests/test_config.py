import math

import pytest

from vortexswim.config import ConfigError, RunConfig, parse_config


def test_defaults_round_trip():
    cfg = RunConfig()
    text = cfg.to_text()
    cfg2 = parse_config(text)
    assert cfg2.to_text() == text
    assert cfg2.digest() == cfg.digest()


def test_every_key_has_a_default_and_parses():
    text = RunConfig().to_text()
    # one line per key, all of them parseable back
    n_keys = len([ln for ln in text.splitlines() if ln.strip()])
    assert n_keys > 30
    parse_config(text)


def test_overrides_and_types():
    cfg = parse_config("grid.cells_per_length = 20\n"
                       "flow.u_inlet = 0.08\n"
                       "env.actions = -0.4, 0, 0.4\n"
                       "run.episodes = 7\n")
    assert cfg.grid.cells_per_length == 20
    assert isinstance(cfg.grid.cells_per_length, int)
    assert cfg.flow.u_inlet == 0.08
    assert cfg.action_values() == [-0.4, 0.0, 0.4]
    assert cfg.run.episodes == 7


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("grid.bogus = 3")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("nope.thing = 3")
    with pytest.raises(ConfigError, match="section prefix"):
        parse_config("episodes = 3")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config("what is this")


def test_comments_and_blank_lines():
    cfg = parse_config("# comment\n\nflow.reynolds = 120  # trailing\n")
    assert cfg.flow.reynolds == 120.0


def test_derived_builders():
    cfg = parse_config("grid.cells_per_length = 20")
    flow = cfg.flow_config()
    assert flow.nx == 200 and flow.ny == 100
    assert flow.cylinder_diameter == 10.0
    # tau = 3 u D / Re + 0.5
    assert flow.relaxation_time() == pytest.approx(
        3 * 0.05 * 10.0 / 200.0 + 0.5)
    swim = cfg.swimmer_config()
    assert swim.length == 20.0
    # default period T = 0.5 L / u_in
    assert swim.period == pytest.approx(0.5 * 20.0 / 0.05)
    assert cfg.env.init_theta == pytest.approx(math.pi)


def test_action_cap_enforced():
    cfg = parse_config("env.actions = -0.9, 0, 0.9")
    with pytest.raises(ConfigError, match="amplitude cap"):
        cfg.action_values()


def test_digest_changes_with_content():
    a = RunConfig()
    b = parse_config("run.seed = 99")
    assert a.digest() != b.digest()
