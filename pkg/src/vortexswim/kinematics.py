"""Swimmer body shape and prescribed midline undulation.

The midline deflection angle at arc length ``l`` from the nose is

    theta_l(l, t) = (l / L) * p(zeta)

where ``p`` is a quintic waveform rebuilt every half cycle and ``zeta`` is a
travelling phase.  The phase convention used throughout: a global phase
clock ``s(t)`` advances at rate ``lam_n / T_n`` during half cycle n and a
station at arc length ``l`` lags the clock by ``l / L``.  Half cycle n owns
the phase interval ``[S_n, S_n + lam_n / 2)``, so each station replays the
sequence of half-cycle waveforms with a delay -- a backward-travelling wave
of wavelength ``lam_n * L`` and period ``T_n``.

Consecutive waveforms are joined with matched value, slope and curvature
(six constraints on the quintic), which makes the deflection angle C^2 in
phase at every junction, and C^2 in time as long as ``lam / T`` is held
fixed, which it is here: the control action changes only the target
deflection amplitude.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Eq-style half-width profile: w/L as a function of l/L
_SHAPE_COEFFS = (0.2610, -0.3112, 0.1371, -0.0791, -0.0078)


def half_width(l_over_L):
    """Half-width of the body, as a fraction of body length.

    Accepts a scalar or array in [0, 1]; clamped below at zero (the raw
    polynomial dips microscopically negative near the tail in floating
    point)."""
    s = np.asarray(l_over_L, dtype=float)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError("arc-length fraction outside [0, 1]")
    a, b, c, d, e = _SHAPE_COEFFS
    w = a * np.sqrt(s) + b * s + c * s**2 + d * s**3 + e * s**4
    w = np.maximum(w, 0.0)
    return float(w) if np.isscalar(l_over_L) else w


def solve_wave_coeffs(theta_prev: float, theta_next: float,
                      lam_prev: float, lam_next: float) -> np.ndarray:
    """Quintic waveform coefficients for one half cycle.

    The six conditions: p(0) and p(lam/2) hit the previous and next peak
    deflections with zero slope, and the end curvatures match those of pure
    sinusoids of the adjacent wavelengths."""
    if lam_prev <= 0.0 or lam_next <= 0.0:
        raise ValueError("wavelengths must be positive")
    h = lam_next / 2.0
    A = np.array(
        [
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, h, h**2, h**3, h**4, h**5],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 2 * h, 3 * h**2, 4 * h**3, 5 * h**4],
            [0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 6 * h, 12 * h**2, 20 * h**3],
        ]
    )
    rhs = np.array(
        [
            theta_prev,
            theta_next,
            0.0,
            0.0,
            -theta_prev * (2 * np.pi / lam_prev) ** 2,
            -theta_next * (2 * np.pi / lam_next) ** 2,
        ]
    )
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:  # unreachable for lam > 0
        raise ValueError("singular waveform constraint system") from exc


def wave_constraint_residuals(coeffs: np.ndarray, theta_prev: float,
                              theta_next: float, lam_prev: float,
                              lam_next: float) -> np.ndarray:
    """The six constraint residuals, scaled by max(1, |theta|)."""
    p = np.polynomial.Polynomial(coeffs)
    dp = p.deriv()
    ddp = p.deriv(2)
    h = lam_next / 2.0
    res = np.array(
        [
            p(0.0) - theta_prev,
            p(h) - theta_next,
            dp(0.0),
            dp(h),
            ddp(0.0) + theta_prev * (2 * np.pi / lam_prev) ** 2,
            ddp(h) + theta_next * (2 * np.pi / lam_next) ** 2,
        ]
    )
    return np.abs(res) / max(1.0, abs(theta_prev), abs(theta_next))


@dataclass(frozen=True)
class WavePlan:
    """One half cycle of the undulation schedule."""

    index: int            # half-cycle counter n, starting at 1
    theta_prev: float     # peak deflection closing the previous half cycle
    theta_next: float     # peak deflection this half cycle steers toward
    lam_prev: float       # wavelength of the previous half cycle (units of L)
    lam: float            # wavelength of this half cycle (units of L)
    period: float         # full undulation period T_n, in ticks
    t_start: float        # start tick of this half cycle
    phase_start: float    # global phase at which this half cycle begins
    coeffs: np.ndarray    # quintic coefficients c_0..c_5

    @property
    def phase_span(self) -> float:
        return self.lam / 2.0

    @property
    def duration(self) -> float:
        return self.period / 2.0

    @property
    def rate(self) -> float:
        """Phase advance per tick."""
        return self.lam / self.period


class WaveHistory:
    """Schedule of half-cycle waveforms.

    Stations lag the head by up to one body length of phase, so evaluating
    the deflection at time t may reach back across several plans.  Before
    the first plan the body is flat: both the value and the two matched
    derivatives of the first waveform vanish at its start, so startup is
    C^2 as well.  One plan is appended per control step; an episode keeps
    at most a few hundred.
    """

    def __init__(self):
        self.plans: list[WavePlan] = []
        self._phase_starts: list[float] = []

    def push_plan(self, theta_next: float, lam: float, period: float,
                  t_start: float | None = None) -> WavePlan:
        """Append the next half cycle, C^2-joined to the current one."""
        if lam <= 0.0 or period <= 0.0:
            raise ValueError("wavelength and period must be positive")
        if not self.plans:
            prev_theta, prev_lam = 0.0, lam
            index, start, phase0 = 1, 0.0 if t_start is None else t_start, 0.0
        else:
            last = self.plans[-1]
            prev_theta, prev_lam = last.theta_next, last.lam
            index = last.index + 1
            start = last.t_start + last.duration
            phase0 = last.phase_start + last.phase_span
            if t_start is not None and abs(t_start - start) > 1e-9:
                raise ValueError("half cycles must be contiguous in time")
        coeffs = solve_wave_coeffs(prev_theta, theta_next, prev_lam, lam)
        plan = WavePlan(index=index, theta_prev=prev_theta,
                        theta_next=theta_next, lam_prev=prev_lam, lam=lam,
                        period=period, t_start=start, phase_start=phase0,
                        coeffs=coeffs)
        self.plans.append(plan)
        self._phase_starts.append(phase0)
        return plan

    def active_plan(self, t: float) -> WavePlan:
        for plan in reversed(self.plans):
            if plan.t_start <= t < plan.t_start + plan.duration + 1e-9:
                return plan
        raise ValueError(f"tick {t} outside the scheduled half cycles")

    def _clock(self, t: float) -> tuple[float, float]:
        plan = self.active_plan(t)
        return plan.phase_start + plan.rate * (t - plan.t_start), plan.rate

    def deflection(self, l_over_L, t: float, derivative: int = 0):
        """theta_l (or its first or second time derivative) at stations.

        ``l_over_L`` may be scalar or array.  Stations whose phase predates
        the first plan are flat (zero)."""
        s_head, rate = self._clock(t)
        frac = np.atleast_1d(np.asarray(l_over_L, dtype=float))
        phases = s_head - frac
        # plans tile the phase axis contiguously from zero
        idx = np.searchsorted(self._phase_starts, phases, side="right") - 1
        out = np.zeros_like(phases)
        live = idx >= 0
        for k in np.unique(idx[live]):
            plan = self.plans[k]
            sel = live & (idx == k)
            zeta = np.minimum(phases[sel] - plan.phase_start, plan.phase_span)
            p = np.polynomial.Polynomial(plan.coeffs).deriv(derivative)
            out[sel] = frac[sel] * p(zeta) * rate**derivative
        if np.isscalar(l_over_L):
            return float(out[0])
        return out


def deflection_angle(l_over_L, t: float, plan: WavePlan):
    """Deflection angle under a single half-cycle plan.

    Only meaningful while the station's phase lies in this plan's own
    interval; WaveHistory routes stations across plans in the general
    case."""
    zeta = plan.phase_start + plan.rate * (t - plan.t_start) - np.asarray(l_over_L)
    p = np.polynomial.Polynomial(plan.coeffs)
    return np.asarray(l_over_L) * p(zeta - plan.phase_start)


@dataclass
class MidlineState:
    """Midline geometry at one instant, in the undulation frame.

    ``x`` runs nose (0) to tail (+) and ``y`` is the lateral displacement;
    consecutive points are exactly ``dl`` apart so the polyline preserves
    arc length to round-off."""

    stations: np.ndarray  # arc length values in [0, L]
    theta: np.ndarray     # deflection angle at the stations
    x: np.ndarray
    y: np.ndarray

    @property
    def length(self) -> float:
        return float(
            np.sum(np.hypot(np.diff(self.x), np.diff(self.y)))
        )


def midline(t: float, history: WaveHistory, stations: np.ndarray,
            length: float) -> MidlineState:
    """Reconstruct the midline by marching unit-speed segments.

    Each segment advances by its exact length along the direction of the
    deflection angle sampled at the segment midpoint, so the total polyline
    length equals the body length identically."""
    stations = np.asarray(stations, dtype=float)
    theta = history.deflection(stations / length, t)
    mids = 0.5 * (stations[:-1] + stations[1:])
    theta_mid = history.deflection(mids / length, t)
    dl = np.diff(stations)
    x = np.empty_like(stations)
    y = np.empty_like(stations)
    x[0] = 0.0
    y[0] = 0.0
    x[1:] = np.cumsum(dl * np.cos(theta_mid))
    y[1:] = np.cumsum(dl * np.sin(theta_mid))
    return MidlineState(stations=stations, theta=theta, x=x, y=y)
