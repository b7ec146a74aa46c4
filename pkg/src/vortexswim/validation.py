"""Analytic and property benchmarks exposed as a user-facing gate.

Each suite returns CheckResult rows (test, metric, value, bound, pass)
that the CLI renders as CSV; the acceptance tests call the same functions
directly so the gate and the test suite cannot drift apart.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ibm, lattice as lb
from . import kinematics as km
from .swimmer import CoupledSim, SwimmerConfig


@dataclass
class CheckResult:
    test: str
    metric: str
    value: float
    bound: float
    passed: bool

    HEADER = "test,metric,value,bound,pass"

    def to_csv(self) -> str:
        return (f"{self.test},{self.metric},{self.value!r},{self.bound!r},"
                f"{int(self.passed)}")


def poiseuille_check(nx: int = 64, ny: int = 32, tau: float = 1.0,
                     gx: float = 8e-5, ticks: int = 6000) -> CheckResult:
    """Body-force-driven channel vs the analytic parabola.

    Walls are the outermost rows under half-way bounce-back, so the
    effective channel width is ny - 2."""
    cfg = lb.FlowConfig(nx=nx, ny=ny, x_boundary="periodic",
                        y_boundary="no_slip", tau=tau, body_force=(gx, 0.0))
    field = lb.uniform_field(cfg)
    macro = None
    for _ in range(ticks):
        field, macro = lb.flow_tick(field, cfg)
    H = ny - 2
    u_max_analytic = gx * H * H / (8.0 * cfg.viscosity())
    u_max = float(macro.u[0][nx // 2, :].max())
    err = abs(u_max / u_max_analytic - 1.0)
    return CheckResult("poiseuille", "centerline_rel_err", err, 0.01,
                       err < 0.01)


def taylor_green_check(n: int = 64, tau: float = 0.8, u0: float = 0.03,
                       ticks: int = 1500, sample_every: int = 50) -> CheckResult:
    """Kinetic-energy decay of the periodic vortex array.

    The velocity amplitude decays at 2 nu k^2; the fitted rate comes from
    log sqrt(KE)."""
    cfg = lb.FlowConfig(nx=n, ny=n, x_boundary="periodic",
                        y_boundary="periodic", tau=tau)
    nu = cfg.viscosity()
    k = 2.0 * np.pi / n
    x = np.arange(n)[:, None]
    y = np.arange(n)[None, :]
    u = np.zeros((2, n, n))
    u[0] = -u0 * np.cos(k * x) * np.sin(k * y)
    u[1] = u0 * np.sin(k * x) * np.cos(k * y)
    rho = 1.0 - (3.0 * u0 * u0 / 4.0) * (np.cos(2 * k * x) + np.cos(2 * k * y))
    field = lb.DistributionField(f=lb.equilibrium(rho, u), tau=tau)
    times, energies = [], []
    for t in range(ticks + 1):
        macro = lb.macroscopics(field)
        if t % sample_every == 0:
            ke = float(np.sum(macro.rho * (macro.u[0] ** 2 + macro.u[1] ** 2)))
            times.append(t)
            energies.append(ke)
        field = lb.collide_and_stream(field, macro)
    rate = -0.5 * np.polyfit(times, np.log(energies), 1)[0]
    target = 2.0 * nu * k * k
    err = abs(rate / target - 1.0)
    return CheckResult("taylor_green", "decay_rate_rel_err", err, 0.02,
                       err < 0.02)


def measure_strouhal(diameter: float = 20.0, u_in: float = 0.1,
                     reynolds: float = 200.0, nx_d: float = 18.0,
                     ny_d: float = 9.0, transient: int = 22000,
                     measure: int = 7000):
    """Shedding frequency of the cylinder wake from the lift signal.

    Returns (Strouhal number, rms lift, lift sign changes, wake vorticity
    extrema).  The run starts from rest with a ramped inlet and a short
    transverse inlet wiggle that seeds the antisymmetric mode."""
    D = diameter
    nx, ny = int(nx_d * D), int(ny_d * D)
    cfg = lb.FlowConfig(
        nx=nx, ny=ny, u_inlet=u_in, reynolds=reynolds,
        cylinder_diameter=D, cylinder_center=(4.5 * D + 0.5, ny / 2.0 + 0.5),
        inlet_ramp_ticks=1500, inlet_wiggle=(0.05, 400.0, 5000.0),
    )
    field = lb.uniform_field(cfg)
    fluid = cfg.fluid_mask()
    lift = np.empty(measure)
    macro = None
    for t in range(transient + measure):
        macro = lb.macroscopics(field, valid=fluid)
        field = lb.collide_and_stream(field, macro)
        lb.apply_boundaries(field, cfg)
        if t >= transient:
            lift[t - transient] = lb.solid_boundary_force(field, cfg)[1]
    lift -= lift.mean()
    spectrum = np.abs(np.fft.rfft(lift * np.hanning(len(lift))))
    freqs = np.fft.rfftfreq(len(lift), 1.0)
    f_peak = freqs[int(np.argmax(spectrum[1:])) + 1]
    sign_changes = int(np.sum(np.diff(np.sign(lift)) != 0))
    # vorticity in the wake, a few diameters downstream of the cylinder
    wz = lb.vorticity(macro)
    x0 = int(6.0 * D)
    wake = wz[x0:int(nx_d * D) - 4, :]
    return (float(f_peak * D / u_in), float(lift.std()), sign_changes,
            (float(wake.min()), float(wake.max())))


def strouhal_check(**kwargs) -> list[CheckResult]:
    st, lift_rms, sign_changes, (w_min, w_max) = measure_strouhal(**kwargs)
    scale = 1e-3  # developed shedding carries O(u/D) vorticity, far above this
    return [
        CheckResult("cylinder_shedding", "strouhal", st, 0.21,
                    0.18 <= st <= 0.21),
        CheckResult("cylinder_shedding", "lift_sign_changes",
                    float(sign_changes), 4.0, sign_changes >= 4),
        CheckResult("cylinder_shedding", "wake_vorticity_both_signs",
                    min(-w_min, w_max), scale,
                    w_min < -scale and w_max > scale),
        CheckResult("cylinder_shedding", "lift_rms", lift_rms, 0.0,
                    lift_rms > 0.0),
    ]


def ibm_adjointness_check(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    nx, ny = 48, 36
    pos = rng.uniform(6.0, 30.0, size=(40, 2))
    st = ibm.kernel_stencil(pos, nx, ny)
    w = rng.uniform(0.5, 1.5, len(pos))
    F = rng.normal(size=(len(pos), 2))
    u = rng.normal(size=(2, nx, ny))
    g = np.zeros((2, nx, ny))
    ibm.spread_force(F, w, st, g)
    lhs = float((g * u).sum())
    rhs = float((ibm.interpolate_velocity(u, st) * F * w[:, None]).sum())
    adj_err = abs(lhs - rhs) / max(1.0, abs(lhs))
    gamma = 0.37
    shear = np.broadcast_to(gamma * np.arange(ny)[None, :], (nx, ny)).copy()
    lin_err = float(np.abs(ibm.interpolate(shear, st) - gamma * pos[:, 1]).max())
    return [
        CheckResult("ibm", "adjointness_err", adj_err, 1e-12, adj_err < 1e-12),
        CheckResult("ibm", "linear_field_err", lin_err, 1e-10, lin_err < 1e-10),
    ]


def waveform_check(draws: int = 1000, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        tp, tn = rng.uniform(-0.5, 0.5, 2)
        lp, ln = rng.uniform(0.5, 2.0, 2)
        c = km.solve_wave_coeffs(tp, tn, lp, ln)
        worst = max(worst, float(km.wave_constraint_residuals(c, tp, tn, lp, ln).max()))
    # C2 continuity of the deflection across half-cycle switches
    hist = km.WaveHistory()
    amps = rng.uniform(-0.5, 0.5, 12)
    for a in amps:
        hist.push_plan(float(a), 1.0, 100.0)
    stations = np.linspace(0.0, 1.0, 21)
    jump = 0.0
    eps = 1e-9
    for plan in hist.plans[2:-2]:
        tb = plan.t_start
        for d in range(3):
            lo = hist.deflection(stations, tb - eps, derivative=d)
            hi = hist.deflection(stations, tb + eps, derivative=d)
            scale = max(1.0, float(np.abs(lo).max()))
            jump = max(jump, float(np.abs(hi - lo).max()) / scale)
    return [
        CheckResult("waveform", "constraint_residual", worst, 1e-10,
                    worst < 1e-10),
        CheckResult("waveform", "c2_jump", jump, 1e-8, jump < 1e-8),
    ]


def self_propulsion_check(length: float = 20.0, tau: float = 0.55,
                          period: float = 64.0, amplitude: float = 0.5,
                          cycles: int = 10) -> list[CheckResult]:
    """Steady alternating wave in quiescent fluid must push the swimmer
    forward (opposite the tailward wave) by > 0.01 L per cycle."""
    box_x, box_y = int(6 * length), int(3 * length)
    cfg = lb.FlowConfig(nx=box_x, ny=box_y, x_boundary="periodic",
                        y_boundary="periodic", tau=tau)
    scfg = SwimmerConfig(length=length, period=period, wavelength=1.0)
    sim = CoupledSim(cfg, scfg)
    sim.place((box_x / 3.0, box_y / 2.0), 0.0)
    d0 = sim.body.d.copy()
    for k in range(2 * cycles):
        sim.push_action(amplitude if k % 2 == 0 else -amplitude)
        sim.advance(scfg.half_period)
    disp = sim.body.d - d0
    speed = float(disp[0]) / length / cycles   # nose points +x at theta=0
    return [
        CheckResult("self_propulsion", "speed_L_per_cycle", speed, 0.01,
                    speed > 0.01),
    ]


def run_all(include_strouhal: bool = True) -> list[CheckResult]:
    results = [poiseuille_check(), taylor_green_check()]
    results += ibm_adjointness_check()
    results += waveform_check()
    results += self_propulsion_check()
    if include_strouhal:
        results += strouhal_check()
    return results
