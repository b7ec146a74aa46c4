"""Run configuration: flat ``section.key = value`` text files.

Every key has a default; unknown keys are rejected.  Lengths in the grid,
flow and env sections are expressed in units of the fish body length L,
and converted to cells via ``grid.cells_per_length`` when the simulation
is built.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import lattice as lb
from .swimmer import SwimmerConfig


class ConfigError(ValueError):
    pass


@dataclass
class GridSection:
    cells_per_length: int = 40   # grid resolution: cells per body length
    domain_x: float = 10.0       # domain size, units of L
    domain_y: float = 5.0


@dataclass
class FlowSection:
    u_inlet: float = 0.05
    reynolds: float = 200.0
    tau: float = 0.0                 # 0 derives tau from the cylinder scale
    cylinder_diameter: float = 0.5   # units of L
    cylinder_x: float = 1.5
    cylinder_y: float = 2.5
    inlet_ramp_ticks: int = 1500
    wiggle_eps: float = 0.05         # inlet wiggle to seed shedding
    wiggle_period: float = 400.0
    wiggle_until: float = 5000.0
    spinup_ticks: int = 20000        # flow-only ticks before any episode


@dataclass
class FishSection:
    marker_spacing: float = 0.8
    sub_iterations: int = 3
    forcing_gain: float = 3.0
    wavelength: float = 1.0          # units of L
    period_ticks: float = 0.0        # 0 derives T = 0.5 L / u_inlet
    amplitude_cap: float = 0.5


@dataclass
class EnvSection:
    target_x: float = 5.0            # units of L
    target_y: float = 3.25
    init_x_min: float = 3.0
    init_x_max: float = 5.0
    init_y: float = 1.75
    init_theta: float = math.pi      # heading into the flow
    capture_radius: float = 0.1      # units of L
    max_steps: int = 450
    bound_x0: float = 0.75           # valid-region rectangle, units of L
    bound_y0: float = 0.4
    bound_x1: float = 9.5
    bound_y1: float = 4.6
    actions: str = "-0.5,-0.25,0,0.25,0.5"
    warm_start: str = ""             # path to a saved fluid state


@dataclass
class AgentSection:
    hidden_size: int = 64
    lstm_layers: int = 3
    buffer_capacity: int = 5000
    batch_size: int = 100
    target_sync: int = 100
    gamma: float = 0.99
    learning_rate: float = 1e-3


@dataclass
class ScheduleSection:
    eps_start: float = 1.0
    eps_floor: float = 0.05
    eps_decay: float = 4.75e-5       # per gradient-eligible control step


@dataclass
class RunSection:
    seed: int = 0
    episodes: int = 3000
    checkpoint_every: int = 200      # episodes
    trajectory_every: int = 100      # dump a trajectory CSV every K episodes
    snapshot_cadence: int = 0        # field snapshots every K ticks (0 = off)


@dataclass
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    flow: FlowSection = field(default_factory=FlowSection)
    fish: FishSection = field(default_factory=FishSection)
    env: EnvSection = field(default_factory=EnvSection)
    agent: AgentSection = field(default_factory=AgentSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    run: RunSection = field(default_factory=RunSection)

    # -- derived builders -------------------------------------------------

    @property
    def length(self) -> float:
        """Fish body length in cells."""
        return float(self.grid.cells_per_length)

    def period_ticks(self) -> float:
        if self.fish.period_ticks > 0:
            return self.fish.period_ticks
        return 0.5 * self.length / self.flow.u_inlet

    def flow_config(self) -> lb.FlowConfig:
        L = self.length
        return lb.FlowConfig(
            nx=int(round(self.grid.domain_x * L)),
            ny=int(round(self.grid.domain_y * L)),
            u_inlet=self.flow.u_inlet,
            reynolds=self.flow.reynolds,
            cylinder_diameter=self.flow.cylinder_diameter * L,
            cylinder_center=(self.flow.cylinder_x * L + 0.5,
                             self.flow.cylinder_y * L + 0.5),
            x_boundary="inflow_outflow",
            y_boundary="free_slip",
            tau=self.flow.tau if self.flow.tau > 0 else None,
            inlet_ramp_ticks=self.flow.inlet_ramp_ticks,
            inlet_wiggle=(self.flow.wiggle_eps, self.flow.wiggle_period,
                          self.flow.wiggle_until),
            bounds=(self.env.bound_x0 * L, self.env.bound_y0 * L,
                    self.env.bound_x1 * L, self.env.bound_y1 * L),
        )

    def swimmer_config(self) -> SwimmerConfig:
        return SwimmerConfig(
            length=self.length,
            marker_spacing=self.fish.marker_spacing,
            sub_iterations=self.fish.sub_iterations,
            forcing_gain=self.fish.forcing_gain,
            wavelength=self.fish.wavelength,
            period=self.period_ticks(),
            amplitude_cap=self.fish.amplitude_cap,
        )

    def action_values(self) -> list[float]:
        vals = [float(tok) for tok in self.env.actions.split(",") if tok.strip()]
        if len(vals) < 2:
            raise ConfigError("need at least two actions")
        for v in vals:
            if abs(v) > self.fish.amplitude_cap + 1e-12:
                raise ConfigError(f"action {v} exceeds amplitude cap")
        return vals

    # -- text round-trip ---------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for sec_field in fields(self):
            section = getattr(self, sec_field.name)
            for f in fields(section):
                lines.append(f"{sec_field.name}.{f.name} = {getattr(section, f.name)}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def _coerce(raw: str, target_type: type):
    raw = raw.strip()
    if target_type is int:
        value = int(raw)
    elif target_type is float:
        value = float(raw)
    elif target_type is str:
        value = raw
    else:
        raise ConfigError(f"unsupported config type {target_type}")
    return value


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Apply ``section.key = value`` lines on top of defaults."""
    cfg = base if base is not None else RunConfig()
    section_map = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} lacks a section prefix")
        sec_name, field_name = key.split(".", 1)
        section = section_map.get(sec_name)
        if section is None:
            raise ConfigError(f"line {lineno}: unknown section {sec_name!r}")
        matching = {f.name: f for f in fields(section)}
        if field_name not in matching:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(section, field_name,
                _coerce(raw, matching[field_name].type_resolved
                        if hasattr(matching[field_name], "type_resolved")
                        else type(getattr(section, field_name))))
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text())
