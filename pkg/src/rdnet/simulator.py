"""Time integration of the delayed system with state-dependent switching.

First-order IMEX stepping: diffusion backward-Euler (unconditionally stable
against the D/h^2 stiffness), reaction and delay terms forward. Delay lookup
interpolates linearly in a ring buffer spanning the delay window, matching
the scheme order. A simulation run is single-threaded and deterministic.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .certificates import mode_margin_matrix
from .geometry import Grid, first_eigenvalue, helmholtz_solve, l2_inner
from .model import CGSystem, Mode, SwitchedNetwork

BLOWUP_FACTOR = 1e6


class BlowUpError(RuntimeError):
    """State norm exceeded the blow-up guard."""


class HistoryUnderrunError(RuntimeError):
    """Delay lookup requested a time before the stored window."""


class History:
    """Ring buffer of (time, state) snapshots spanning at least the delay."""

    def __init__(self, tau: float):
        if tau < 0:
            raise ValueError("delay bound must be nonnegative")
        self.tau = tau
        self._buf: deque[tuple[float, np.ndarray]] = deque()

    @classmethod
    def from_sampler(cls, sampler: Callable[[float], np.ndarray], tau: float,
                     dt: float, t0: float = 0.0) -> "History":
        """Seed the window [t0 - tau, t0] by sampling the initial function."""
        hist = cls(tau)
        steps = max(1, int(round(tau / dt))) if tau > 0 else 0
        for k in range(steps, -1, -1):
            s = -k * tau / steps if steps else 0.0
            hist.push(t0 + s, np.array(sampler(s), dtype=float))
        return hist

    def push(self, t: float, u: np.ndarray) -> None:
        if self._buf and t <= self._buf[-1][0]:
            raise ValueError("history times must be strictly increasing")
        self._buf.append((t, u.copy()))
        # trim entries no longer reachable by a delay lookup
        while len(self._buf) > 2 and self._buf[1][0] <= t - self.tau:
            self._buf.popleft()

    @property
    def latest_time(self) -> float:
        return self._buf[-1][0]

    def value(self, t: float) -> np.ndarray:
        """Linear interpolation between stored snapshots."""
        if not self._buf:
            raise HistoryUnderrunError("history is empty")
        if t < self._buf[0][0] - 1e-12:
            raise HistoryUnderrunError(
                f"requested t={t} before stored window start {self._buf[0][0]}")
        if t >= self._buf[-1][0]:
            return self._buf[-1][1]
        times = [entry[0] for entry in self._buf]
        j = int(np.searchsorted(times, t, side="right"))
        t0, u0 = self._buf[j - 1]
        t1, u1 = self._buf[j]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * u0 + w * u1


@dataclass(frozen=True)
class ImpulseSchedule:
    """Scheduled jumps u(t+) = M u(t-) + N h(u(t- - tau))."""

    times: tuple[float, ...]
    M: np.ndarray
    N: np.ndarray
    h: Callable[[np.ndarray], np.ndarray] | None = None
    tau: float = 0.0


@dataclass
class SimConfig:
    dt: float
    horizon: float
    switching: bool = False
    switching_cadence: int = 1
    hysteresis: float = 0.0
    switching_form: str = "integrated"
    impulses: ImpulseSchedule | None = None
    stationary: Sequence[np.ndarray] | None = None
    initial_mode: int = 0
    snapshot_stride: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= 0:
            raise ValueError("dt and horizon must be positive")
        if self.switching_cadence < 1:
            raise ValueError("switching cadence must be >= 1")
        if self.hysteresis < 0:
            raise ValueError("hysteresis slack must be nonnegative")
        if self.switching_form not in ("integrated", "pointwise"):
            raise ValueError("switching_form must be 'integrated' or 'pointwise'")


@dataclass
class Trajectory:
    times: np.ndarray
    V: np.ndarray
    modes: np.ndarray
    switch_count: int
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)

    @property
    def norm(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.V, 0.0))


@dataclass(frozen=True)
class DecayEstimate:
    """Fitted norm decay ||u(t)|| ~ prefactor * exp(-rate * t)."""

    rate: float
    prefactor: float
    window: tuple[float, float]
    r_squared: float


def switching_decide(u: np.ndarray, grid: Grid | None, Q: Sequence[np.ndarray],
                     current: int, hysteresis: float = 0.0,
                     form: str = "integrated") -> int:
    """Pick the active mode from the per-mode quadratic forms.

    Integrated form scores each mode by the spatial integral of u^T Q u;
    the current mode is kept while its score stays below -hysteresis,
    otherwise the argmin wins (ties to the lowest index). The pointwise form
    scores by the worst node instead of the integral.
    """
    if len(Q) == 1:
        return 0
    scores = []
    for Qs in Q:
        if grid is None:
            quad = float(u @ Qs @ u)
        else:
            flat = u.reshape(u.shape[0], -1)
            node_scores = np.einsum("ik,ij,jk->k", flat, Qs, flat)
            if form == "pointwise":
                quad = float(node_scores.max(initial=0.0))
            else:
                quad = float(node_scores.sum()) * grid.cell_volume
        scores.append(quad)
    if scores[current] < -hysteresis:
        return current
    return int(np.argmin(scores))


def apply_impulse(u: np.ndarray, M: np.ndarray, N: np.ndarray,
                  h: Callable[[np.ndarray], np.ndarray] | None,
                  history: History, t: float, tau: float) -> np.ndarray:
    """Pointwise-in-x affine jump with a delayed argument from the history."""
    u_delay = history.value(t - tau)
    hval = u_delay if h is None else h(u_delay)
    flat = u.reshape(u.shape[0], -1) if u.ndim > 1 else u[:, None]
    hflat = hval.reshape(hval.shape[0], -1) if hval.ndim > 1 else hval[:, None]
    out = M @ flat + N @ hflat
    return out.reshape(u.shape)


def _mode_rhs(mode: Mode, activation, stationary_flat: np.ndarray | None):
    """Reaction term of the deviation system for one mode.

    With stationary profile y*, f(u) = g(y* + u) - g(y*); with the default
    zero profile, f(u) = g(u) - g(0) so u = 0 stays exactly invariant.
    """
    if stationary_flat is None:
        g0 = None

        def f(flat):
            nonlocal g0
            if g0 is None:
                g0 = activation(np.zeros((mode.n, 1)))
            return activation(flat) - g0
    else:
        gstar = activation(stationary_flat)

        def f(flat):
            return activation(stationary_flat + flat) - gstar

    def rhs(flat, flat_delay):
        return -mode.C @ flat + mode.A @ f(flat) + mode.B @ f(flat_delay)

    return rhs


def simulate(network: SwitchedNetwork, grid: Grid, config: SimConfig,
             phi: Callable[[float], np.ndarray]) -> Trajectory:
    """Integrate the deviation system u_t = D Lap u - C u + A f(u) + B f(u_tau).

    All modes share the given grid; the switching matrices are rebuilt with
    the shared domain's first eigenvalue. phi(s) supplies the initial field
    for s in [-tau, 0] with shape (n, *grid.shape).
    """
    n = network.n
    dt, tau = config.dt, network.tau_max
    if tau > 0 and dt > tau:
        raise ValueError("dt must not exceed the delay bound")
    hist = History.from_sampler(phi, tau, dt)
    u = hist.value(0.0).copy()
    if u.shape != (n,) + grid.shape:
        raise ValueError("initial field shape does not match the grid")

    stationary = config.stationary
    if stationary is not None and len(stationary) != network.N:
        raise ValueError("need one stationary profile per mode")
    lam_shared = first_eigenvalue(grid.domain)
    shared_modes = [
        Mode(m.D, m.C, m.A, m.B, m.J, grid.domain, lam_shared) for m in network.modes
    ]
    Q = [mode_margin_matrix(m, network.activation.G, network.gamma, network.q,
                            tau, network.Psi) for m in shared_modes]
    rhs_fns = []
    for k, m in enumerate(shared_modes):
        st = None
        if stationary is not None:
            st = np.asarray(stationary[k], float).reshape(n, -1)
        rhs_fns.append(_mode_rhs(m, network.activation, st))

    if tau > 0:
        phi_sup2 = max(l2_inner(grid, hist.value(s), hist.value(s))
                       for s in np.linspace(-tau, 0, 5))
    else:
        phi_sup2 = l2_inner(grid, u, u)
    guard = BLOWUP_FACTOR * max(phi_sup2, 1e-300)

    mode_idx = config.initial_mode
    steps = int(round(config.horizon / dt))
    times = np.empty(steps + 1)
    V = np.empty(steps + 1)
    modes_rec = np.empty(steps + 1, dtype=int)
    switch_count = 0
    snapshots: list[tuple[float, np.ndarray]] = []

    d_diag = [np.diag(m.D) for m in shared_modes]
    imp = config.impulses
    imp_times = sorted(imp.times) if imp is not None else []
    imp_ptr = 0

    t = 0.0
    times[0], V[0], modes_rec[0] = t, l2_inner(grid, u, u), mode_idx
    if config.snapshot_stride:
        snapshots.append((t, u.copy()))
    for k in range(1, steps + 1):
        if config.switching and (k - 1) % config.switching_cadence == 0:
            new_mode = switching_decide(u, grid, Q, mode_idx, config.hysteresis,
                                        config.switching_form)
            if new_mode != mode_idx:
                if stationary is not None:
                    delta = (np.asarray(stationary[mode_idx], float)
                             - np.asarray(stationary[new_mode], float))
                    u = u + delta.reshape(u.shape)
                mode_idx = new_mode
                switch_count += 1
        u_delay = hist.value(t - network.delay(t)) if tau > 0 else u
        flat = u.reshape(n, -1)
        react = rhs_fns[mode_idx](flat, u_delay.reshape(n, -1))
        rhs_field = flat + dt * react
        new = np.empty_like(u)
        for i in range(n):
            c = 1.0 / (dt * d_diag[mode_idx][i])
            new[i] = helmholtz_solve(grid, c, c * rhs_field[i].reshape(grid.shape))
        t = k * dt
        u = new
        while imp_ptr < len(imp_times) and imp_times[imp_ptr] <= t + 1e-12:
            u = apply_impulse(u, imp.M, imp.N, imp.h, hist, imp_times[imp_ptr],
                              imp.tau)
            imp_ptr += 1
        hist.push(t, u)
        v = l2_inner(grid, u, u)
        if not math.isfinite(v) or v > guard:
            raise BlowUpError(f"norm blew up at t={t:.4g} (V={v:.3e})")
        times[k], V[k], modes_rec[k] = t, v, mode_idx
        if config.snapshot_stride and k % config.snapshot_stride == 0:
            snapshots.append((t, u.copy()))
    return Trajectory(times, V, modes_rec, switch_count, snapshots)


def ode_from_mode(mode: Mode, activation, deviation: bool = False):
    """Right-hand side du/dt = -C u + A g(u) + B g(u_tau) + J as n coupled ODEs.

    deviation=True drops J and recenters g at 0 (the zero solution is then
    exactly invariant).
    """
    if deviation:
        g0 = activation(np.zeros((mode.n, 1)))[:, 0]

        def rhs(t, u, u_delay):
            return (-mode.C @ u + mode.A @ (activation(u[:, None])[:, 0] - g0)
                    + mode.B @ (activation(u_delay[:, None])[:, 0] - g0))
    else:
        def rhs(t, u, u_delay):
            return (-mode.C @ u + mode.A @ activation(u[:, None])[:, 0]
                    + mode.B @ activation(u_delay[:, None])[:, 0] + mode.J)
    return rhs


def ode_from_cg(cg: CGSystem):
    """Cohen-Grossberg right-hand side; defaults give the cellular form.

    du_i/dt = -a_i(u_i) [ b_i(u_i) - sum_j c_ij f_j(u_j)
                          - sum_j d_ij g_j(u_j(t - tau)) + I_i ].
    """
    ident = lambda v: np.asarray(v, dtype=float)
    f = cg.f or ident
    g = cg.g or ident

    def rhs(t, u, u_delay):
        if cg.a_funcs is None:
            a = np.ones_like(u)
        else:
            a = np.array([fn(ui) for fn, ui in zip(cg.a_funcs, u)])
        if cg.b_funcs is None:
            b = cg.B * u
        else:
            b = np.array([fn(ui) for fn, ui in zip(cg.b_funcs, u)])
        inner = b - cg.C @ f(u) - cg.D @ g(u_delay) + cg.inputs
        return -a * inner

    return rhs


def simulate_ode(rhs, n: int, tau: float, config: SimConfig,
                 phi: Callable[[float], np.ndarray],
                 delay: Callable[[float], float] | None = None) -> Trajectory:
    """Forward-Euler integration of n delayed ODEs with the shared machinery.

    rhs(t, u, u_delay) -> du/dt. V records the squared Euclidean norm, so
    the decay-rate estimator applies unchanged.
    """
    dt = config.dt
    if tau > 0 and dt > tau:
        raise ValueError("dt must not exceed the delay bound")
    delay = delay or (lambda t: tau)
    hist = History.from_sampler(phi, tau, dt)
    u = np.array(hist.value(0.0), dtype=float)
    if u.shape != (n,):
        raise ValueError("initial state must have shape (n,)")
    guard = BLOWUP_FACTOR * max(float(u @ u), 1.0)
    steps = int(round(config.horizon / dt))
    times = np.empty(steps + 1)
    V = np.empty(steps + 1)
    imp = config.impulses
    imp_times = sorted(imp.times) if imp is not None else []
    imp_ptr = 0
    t = 0.0
    times[0], V[0] = t, float(u @ u)
    for k in range(1, steps + 1):
        u_delay = hist.value(t - delay(t)) if tau > 0 else u
        u = u + dt * rhs(t, u, u_delay)
        t = k * dt
        while imp_ptr < len(imp_times) and imp_times[imp_ptr] <= t + 1e-12:
            u = apply_impulse(u, imp.M, imp.N, imp.h, hist, imp_times[imp_ptr],
                              imp.tau)
            imp_ptr += 1
        hist.push(t, u)
        v = float(u @ u)
        if not math.isfinite(v) or v > guard:
            raise BlowUpError(f"norm blew up at t={t:.4g} (V={v:.3e})")
        times[k], V[k] = t, v
    return Trajectory(times, V, np.zeros(steps + 1, dtype=int), 0)


def estimate_decay_rate(trajectory: Trajectory, window_fraction: float = 0.5
                        ) -> DecayEstimate:
    """Least-squares fit of ln ||u(t)|| over the trailing window.

    The rate is minus the slope (half the decay rate of V). An identically
    zero tail returns the +inf sentinel.
    """
    if not 0 < window_fraction <= 1:
        raise ValueError("window fraction must lie in (0, 1]")
    t, V = trajectory.times, trajectory.V
    start = int(len(t) * (1.0 - window_fraction))
    tw, Vw = t[start:], V[start:]
    if len(tw) < 10:
        raise ValueError("fewer than 10 samples in the fit window")
    if np.all(Vw <= 0.0):
        return DecayEstimate(math.inf, 0.0, (float(tw[0]), float(tw[-1])), 1.0)
    if np.any(Vw <= 0.0):
        raise ValueError("V must stay positive on the fit window")
    y = 0.5 * np.log(Vw)
    slope, intercept = np.polyfit(tw, y, 1)
    pred = slope * tw + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayEstimate(rate=float(-slope), prefactor=float(np.exp(intercept)),
                         window=(float(tw[0]), float(tw[-1])), r_squared=r2)
