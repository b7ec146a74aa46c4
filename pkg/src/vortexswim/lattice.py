r"""D2Q9 lattice-Boltzmann solver on a single uniform grid.

Lattice directions are numbered

    6   2   5
      \ | /
    3 - 0 - 1
      / | \
    7   4   8

Arrays are indexed ``f[i, x, y]`` with ``i`` the direction, so a population
plane ``f[i]`` has shape ``(nx, ny)``.  Collision is single-relaxation-time
BGK with Guo forcing; the macroscopic velocity carries the half-force
correction ``u = (sum_i f_i c_i + g/2) / rho``.  Streaming writes into a
fresh buffer and the post-collision populations are kept on the field so
boundary conditions (half-way bounce-back, free-slip reflection) can be
applied after streaming.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction

import numpy as np

# sound speed squared, lattice units
CS2 = 1.0 / 3.0

VELOCITIES = np.array(
    [
        [0, 0],
        [1, 0],
        [0, 1],
        [-1, 0],
        [0, -1],
        [1, 1],
        [-1, 1],
        [-1, -1],
        [1, -1],
    ],
    dtype=np.int64,
)

WEIGHTS = np.array(
    [4 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 36, 1 / 36, 1 / 36, 1 / 36]
)

# exact rational weights, for the moment-identity checks
WEIGHT_FRACTIONS = (
    Fraction(4, 9),
    Fraction(1, 9),
    Fraction(1, 9),
    Fraction(1, 9),
    Fraction(1, 9),
    Fraction(1, 36),
    Fraction(1, 36),
    Fraction(1, 36),
    Fraction(1, 36),
)

OPPOSITE = np.array([0, 3, 4, 1, 2, 7, 8, 5, 6], dtype=np.int64)

EAST_DIRS = (1, 5, 8)   # c_x > 0
WEST_DIRS = (3, 6, 7)   # c_x < 0
NORTH_DIRS = (2, 5, 6)  # c_y > 0
SOUTH_DIRS = (4, 7, 8)  # c_y < 0


class SimulationDiverged(RuntimeError):
    """Raised when populations go non-finite or density non-positive."""

    def __init__(self, message: str, tick: int):
        super().__init__(f"{message} (tick {tick})")
        self.tick = tick


@dataclass
class FlowConfig:
    """Domain geometry, flow regime and boundary selection.

    ``x_boundary`` is either ``periodic`` or ``inflow_outflow`` (Zou/He
    velocity inlet on the west face, zero-gradient outlet on the east).
    ``y_boundary`` is ``periodic``, ``free_slip`` (specular reflection) or
    ``no_slip`` (the outermost rows become bounce-back solids).
    """

    nx: int
    ny: int
    u_inlet: float = 0.05
    reynolds: float = 200.0
    cylinder_diameter: float = 0.0
    cylinder_center: tuple[float, float] = (0.0, 0.0)
    x_boundary: str = "inflow_outflow"
    y_boundary: str = "free_slip"
    tau: float | None = None
    body_force: tuple[float, float] = (0.0, 0.0)
    # inlet speed ramps linearly from rest over this many ticks
    inlet_ramp_ticks: int = 0
    # transverse inlet wiggle (fraction of u_inlet, period, last tick) to
    # seed the antisymmetric wake mode deterministically
    inlet_wiggle: tuple[float, float, float] = (0.0, 500.0, 0.0)
    # rectangle of valid fish positions, grid units (x0, y0, x1, y1)
    bounds: tuple[float, float, float, float] | None = None
    _solid: np.ndarray | None = dataclass_field(default=None, repr=False)

    def __post_init__(self):
        if self.x_boundary not in ("periodic", "inflow_outflow"):
            raise ValueError(f"unknown x_boundary {self.x_boundary!r}")
        if self.y_boundary not in ("periodic", "free_slip", "no_slip"):
            raise ValueError(f"unknown y_boundary {self.y_boundary!r}")
        if self.relaxation_time() <= 0.5:
            raise ValueError(
                f"tau = {self.relaxation_time():.4f} violates BGK stability (tau > 0.5)"
            )
        if self.cylinder_diameter > 0.0:
            cx, cy = self.cylinder_center
            r = self.cylinder_diameter / 2.0
            if not (r < cx < self.nx - 1 - r and r < cy < self.ny - 1 - r):
                raise ValueError("cylinder is not fully interior to the grid")

    def relaxation_time(self) -> float:
        if self.tau is not None:
            return self.tau
        if self.cylinder_diameter <= 0.0:
            raise ValueError("tau must be given explicitly when there is no cylinder")
        return 3.0 * self.u_inlet * self.cylinder_diameter / self.reynolds + 0.5

    def viscosity(self) -> float:
        return CS2 * (self.relaxation_time() - 0.5)

    def solid_mask(self) -> np.ndarray:
        """Boolean (nx, ny) mask of bounce-back solid cells."""
        if self._solid is None:
            solid = np.zeros((self.nx, self.ny), dtype=bool)
            if self.cylinder_diameter > 0.0:
                x = np.arange(self.nx)[:, None]
                y = np.arange(self.ny)[None, :]
                cx, cy = self.cylinder_center
                r = self.cylinder_diameter / 2.0
                solid |= (x - cx) ** 2 + (y - cy) ** 2 <= r * r
            if self.y_boundary == "no_slip":
                solid[:, 0] = True
                solid[:, -1] = True
            self._solid = solid
        return self._solid

    def bounce_links(self):
        """Cached (direction, cells) index lists for half-way bounce-back."""
        if not hasattr(self, "_links") or self._links is None:
            solid = self.solid_mask()
            fluid = ~solid
            links = []
            for i in range(1, 9):
                cx, cy = VELOCITIES[i]
                mask = fluid & np.roll(solid, (-cx, -cy), axis=(0, 1))
                xs, ys = np.nonzero(mask)
                if len(xs):
                    links.append((i, int(OPPOSITE[i]), xs, ys))
            self._links = links
        return self._links

    def fluid_mask(self) -> np.ndarray:
        return ~self.solid_mask()


@dataclass
class DistributionField:
    """Particle populations plus the post-collision scratch buffer."""

    f: np.ndarray          # (9, nx, ny)
    tau: float
    tick: int = 0
    f_post: np.ndarray | None = None  # post-collision, pre-streaming

    @property
    def shape(self) -> tuple[int, int]:
        return self.f.shape[1:]


@dataclass
class MacroField:
    rho: np.ndarray   # (nx, ny)
    u: np.ndarray     # (2, nx, ny)
    p: np.ndarray     # (nx, ny), always rho * cs^2
    g: np.ndarray     # (2, nx, ny) body-force density


def equilibrium(rho, u) -> np.ndarray:
    """Second-order BGK equilibrium populations.

    ``rho`` may be a scalar or an (nx, ny) plane; ``u`` a 2-vector or a
    (2, nx, ny) field.  Returns shape (9,) or (9, nx, ny) accordingly.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    ux, uy = u[0], u[1]
    usq = ux * ux + uy * uy
    out = np.empty((9,) + np.shape(rho), dtype=float)
    for i in range(9):
        cu = VELOCITIES[i, 0] * ux + VELOCITIES[i, 1] * uy
        out[i] = WEIGHTS[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq)
    return out


def macroscopics(
    field: DistributionField,
    g: np.ndarray | None = None,
    valid: np.ndarray | None = None,
) -> MacroField:
    """Density, pressure and half-force-corrected velocity.

    ``valid`` restricts the divergence check (solid cells carry junk
    populations by construction and are excluded by the caller).
    """
    f = field.f
    rho = f.sum(axis=0)
    check = rho if valid is None else rho[valid]
    if not np.all(check > 0.0) or not np.all(np.isfinite(check)):
        raise SimulationDiverged("non-positive or non-finite density", field.tick)
    if g is None:
        g = np.zeros((2,) + f.shape[1:])
    mom_x = f[1] + f[5] + f[8] - f[3] - f[6] - f[7]
    mom_y = f[2] + f[5] + f[6] - f[4] - f[7] - f[8]
    u = np.empty((2,) + f.shape[1:])
    u[0] = (mom_x + 0.5 * g[0]) / rho
    u[1] = (mom_y + 0.5 * g[1]) / rho
    return MacroField(rho=rho, u=u, p=rho * CS2, g=g)


def bare_velocity(field: DistributionField) -> tuple[np.ndarray, np.ndarray]:
    """(rho, u) without any force correction; used to seed the IBM loop."""
    f = field.f
    rho = f.sum(axis=0)
    u = np.empty((2,) + f.shape[1:])
    u[0] = (f[1] + f[5] + f[8] - f[3] - f[6] - f[7]) / rho
    u[1] = (f[2] + f[5] + f[6] - f[4] - f[7] - f[8]) / rho
    return rho, u


def collide_and_stream(field: DistributionField, macro: MacroField) -> DistributionField:
    """One BGK tick: collision with Guo forcing, then streaming.

    The returned field holds the streamed populations in ``f`` and the
    post-collision populations in ``f_post`` (needed by the bounce-back
    and free-slip corrections).  Streaming wraps periodically; boundary
    conditions rewrite the wrapped-in populations afterwards.
    """
    f = field.f
    tau = field.tau
    rho, u, g = macro.rho, macro.u, macro.g
    ux, uy = u[0], u[1]
    usq = ux * ux + uy * uy
    guo_pref = 1.0 - 0.5 / tau
    omega = 1.0 / tau
    post = np.empty_like(f)
    for i in range(9):
        cx, cy = VELOCITIES[i]
        cu = cx * ux + cy * uy
        feq = WEIGHTS[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq)
        # Guo: G_i = (1 - 1/2tau) w_i [ (c-u)/cs2 + (c.u) c / cs2^2 ] . g
        gx = (cx - ux) * 3.0 + 9.0 * cu * cx
        gy = (cy - uy) * 3.0 + 9.0 * cu * cy
        G = guo_pref * WEIGHTS[i] * (gx * g[0] + gy * g[1])
        post[i] = f[i] - omega * (f[i] - feq) + G
    if not np.all(np.isfinite(post)):
        raise SimulationDiverged("non-finite population after collision", field.tick)
    streamed = np.empty_like(post)
    for i in range(9):
        cx, cy = VELOCITIES[i]
        streamed[i] = np.roll(post[i], (cx, cy), axis=(0, 1))
    return DistributionField(f=streamed, tau=tau, tick=field.tick + 1, f_post=post)


def _bounce_back(field: DistributionField, cfg: FlowConfig) -> None:
    """Half-way bounce-back on the solid rim.

    A fluid cell whose neighbour in direction i is solid receives back its
    own post-collision population, reversed: f_opp(i)(x_f) = f*_i(x_f).
    """
    f, post = field.f, field.f_post
    for i, opp, xs, ys in cfg.bounce_links():
        f[opp][xs, ys] = post[i][xs, ys]


def _free_slip(field: DistributionField) -> None:
    f, post = field.f, field.f_post
    # south row: incoming directions have c_y > 0
    f[2][:, 0] = post[4][:, 0]
    f[5][:, 0] = np.roll(post[8][:, 0], 1)
    f[6][:, 0] = np.roll(post[7][:, 0], -1)
    # north row: incoming directions have c_y < 0
    f[4][:, -1] = post[2][:, -1]
    f[8][:, -1] = np.roll(post[5][:, -1], 1)
    f[7][:, -1] = np.roll(post[6][:, -1], -1)


def _zou_he_inlet(field: DistributionField, u_in: float, v_in: float = 0.0) -> None:
    """Velocity Dirichlet (u_in, v_in) on the west column.

    Implemented as non-equilibrium extrapolation: equilibrium at the
    imposed velocity with the neighbour column's density, plus the
    neighbour's non-equilibrium part.  The population-algebra (Zou/He)
    variant proved unstable where the inlet meets the free-slip walls; the
    extrapolation form imposes the same velocity without corner
    special-casing."""
    f = field.f
    nb = f[:, 1, :]
    rho = nb.sum(axis=0)
    u = np.empty((2, nb.shape[1]))
    u[0] = (nb[1] + nb[5] + nb[8] - nb[3] - nb[6] - nb[7]) / rho
    u[1] = (nb[2] + nb[5] + nb[6] - nb[4] - nb[7] - nb[8]) / rho
    feq_nb = equilibrium(rho, u)
    u_imp = np.empty((2, nb.shape[1]))
    u_imp[0] = u_in
    u_imp[1] = v_in
    f[:, 0, :] = equilibrium(rho, u_imp) + (nb - feq_nb)


def _outlet(field: DistributionField) -> None:
    """Zero-gradient outlet with the density anchored at one.

    Velocity and non-equilibrium stress are extrapolated from the neighbour
    column; the equilibrium part is rebuilt at unit density.  Without the
    anchor, a velocity inlet plus a plain population copy lets the domain
    mass drift without bound."""
    f = field.f
    nb = f[:, -2, :]
    rho = nb.sum(axis=0)
    u = np.empty((2, nb.shape[1]))
    u[0] = (nb[1] + nb[5] + nb[8] - nb[3] - nb[6] - nb[7]) / rho
    u[1] = (nb[2] + nb[5] + nb[6] - nb[4] - nb[7] - nb[8]) / rho
    feq_nb = equilibrium(rho, u)
    feq_out = equilibrium(np.ones_like(rho), u)
    f[:, -1, :] = feq_out + (nb - feq_nb)


def apply_boundaries(field: DistributionField, cfg: FlowConfig) -> DistributionField:
    """Rewrite the boundary populations after streaming.

    Order: solid bounce-back, free-slip walls, inlet, outlet (the outlet
    copies from an already-corrected column)."""
    if cfg.solid_mask().any():
        _bounce_back(field, cfg)
    if cfg.y_boundary == "free_slip":
        _free_slip(field)
    if cfg.x_boundary == "inflow_outflow":
        u_in = cfg.u_inlet
        if cfg.inlet_ramp_ticks > 0:
            u_in *= min(1.0, field.tick / cfg.inlet_ramp_ticks)
        v_in = 0.0
        eps, period, until = cfg.inlet_wiggle
        if eps != 0.0 and field.tick < until:
            v_in = eps * u_in * np.sin(2.0 * np.pi * field.tick / period)
        _zou_he_inlet(field, u_in, v_in)
        _outlet(field)
    return field


def solid_boundary_force(field: DistributionField, cfg: FlowConfig) -> np.ndarray:
    """Momentum-exchange force on the solid body over the last tick.

    Valid right after apply_boundaries; sums 2 f*_i c_i over bounce-back
    links (stationary walls)."""
    post = field.f_post
    force = np.zeros(2)
    for i, _, xs, ys in cfg.bounce_links():
        s = 2.0 * post[i][xs, ys].sum()
        force[0] += s * VELOCITIES[i, 0]
        force[1] += s * VELOCITIES[i, 1]
    return force


def vorticity(macro: MacroField) -> np.ndarray:
    """z-vorticity by central differences; the boundary ring copies its
    nearest interior value."""
    ux, uy = macro.u[0], macro.u[1]
    w = np.zeros_like(ux)
    w[1:-1, 1:-1] = 0.5 * (uy[2:, 1:-1] - uy[:-2, 1:-1]) - 0.5 * (
        ux[1:-1, 2:] - ux[1:-1, :-2]
    )
    w[0, :] = w[1, :]
    w[-1, :] = w[-2, :]
    w[:, 0] = w[:, 1]
    w[:, -1] = w[:, -2]
    return w


def uniform_field(cfg: FlowConfig, rho: float = 1.0, u=(0.0, 0.0)) -> DistributionField:
    """Equilibrium populations everywhere at the given uniform state."""
    ufield = np.zeros((2, cfg.nx, cfg.ny))
    ufield[0] = u[0]
    ufield[1] = u[1]
    f = equilibrium(np.full((cfg.nx, cfg.ny), rho), ufield)
    return DistributionField(f=f, tau=cfg.relaxation_time())


def flow_tick(field: DistributionField, cfg: FlowConfig,
              g: np.ndarray | None = None) -> tuple[DistributionField, MacroField]:
    """One fluid-only tick (no immersed body): moments, collide, stream,
    boundaries."""
    if g is None and cfg.body_force != (0.0, 0.0):
        g = np.zeros((2, cfg.nx, cfg.ny))
        g[0] = cfg.body_force[0]
        g[1] = cfg.body_force[1]
    macro = macroscopics(field, g, valid=cfg.fluid_mask())
    field = collide_and_stream(field, macro)
    apply_boundaries(field, cfg)
    return field, macro
