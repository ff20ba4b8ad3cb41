"""Fixed-step RK4 integration of closed loops with trajectory recording."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .certificates import detectability_output
from .closed_loop import ClosedLoopSystem, direct_parts, storage, to_w
from .controllers import ControllerState
from .errors import ConfigError, DimensionError, DivergenceError, NumericError
from .ph import PhPlant, PlantState, plant_vector_field

log = logging.getLogger(__name__)

GRID_TOL = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    """Classical RK4 with step ``h`` up to ``t_end``.

    ``t_end = 0`` is allowed and yields a trajectory holding only the
    initial sample.
    """

    h: float = 1e-3
    t_end: float = 30.0

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError("step must be positive")
        if self.t_end < 0 or (self.t_end > 0 and self.h > self.t_end):
            raise ConfigError("need 0 < h <= t_end (or t_end = 0)")
        if not self.on_grid(self.t_end):
            raise ConfigError(f"t_end={self.t_end} is not an integer multiple of h={self.h}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.h))

    def on_grid(self, t: float) -> bool:
        k = t / self.h
        return abs(k - round(k)) <= GRID_TOL * max(1.0, abs(k))


def rk4_step(f: Callable, t: float, z: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, z)
    k2 = f(t + 0.5 * h, z + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, z + 0.5 * h * k2)
    k4 = f(t + h, z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4(f: Callable, z0, h: float, n_steps: int, t0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Integrate z' = f(t, z); return (times, states) including the initial point."""
    z = np.array(z0, dtype=float)
    out = np.empty((n_steps + 1, z.size))
    out[0] = z
    for k in range(n_steps):
        z = rk4_step(f, t0 + k * h, z, h)
        if not np.all(np.isfinite(z)):
            raise DivergenceError(f"non-finite state at step {k + 1}", t0 + k * h)
        out[k + 1] = z
    return t0 + h * np.arange(n_steps + 1), out


@dataclass
class Trajectory:
    """Per-sample records on a uniform time grid (row k is time ``t[k]``)."""

    t: np.ndarray
    x_a: np.ndarray
    x_u: np.ndarray
    x_c: np.ndarray
    u: np.ndarray
    d: np.ndarray
    y: np.ndarray
    y_d: np.ndarray
    W: np.ndarray
    H: np.ndarray

    def __len__(self):
        return len(self.t)

    @property
    def h(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0


def _check_schedule(sys: ClosedLoopSystem, cfg: IntegratorConfig):
    for ts in sys.disturbance.times:
        if np.isfinite(ts) and 0 < ts < cfg.t_end and not cfg.on_grid(ts):
            raise ConfigError(f"disturbance switch at t={ts} is not a multiple of the step h={cfg.h}")


def integrate(sys: ClosedLoopSystem, x0: PlantState, xc0: ControllerState, cfg: IntegratorConfig) -> Trajectory:
    """Simulate the closed loop from (x0, xc0).

    Each step holds the disturbance at its right limit at the step start, so
    switches fall exactly between steps.  Recorded ``d`` is left-continuous
    (the pre-switch value at a switch instant), except at the initial sample.
    """
    m, s = sys.m, sys.s
    if np.shape(x0.x_a) != (m,) or np.shape(x0.x_u) != (s,) or np.shape(xc0.x_c) != (m,):
        raise DimensionError("initial state does not match system dimensions")
    _check_schedule(sys, cfg)
    h, N = cfg.h, cfg.n_steps

    def split(z):
        return PlantState(z[:m], z[m:m + s]), ControllerState(z[m + s:])

    z = np.concatenate([x0.x_a, x0.x_u, xc0.x_c]).astype(float)
    Z = np.empty((N + 1, z.size))
    Z[0] = z
    log.debug("integrating %d steps of h=%g", N, h)
    for k in range(N):
        t = k * h
        d_step = sys.disturbance.after(t)

        def f(_t, zz, d_step=d_step):
            x, xc = split(zz)
            xa_dot, xu_dot, xc_dot, _ = direct_parts(sys, x, xc, d_step)
            return np.concatenate([xa_dot, xu_dot, xc_dot])

        try:
            z = rk4_step(f, t, z, h)
        except NumericError as exc:
            raise DivergenceError(f"step from t={t:g} failed: {exc}", t) from exc
        if not np.all(np.isfinite(z)):
            raise DivergenceError(f"non-finite state at t={(k + 1) * h:g}", t)
        Z[k + 1] = z

    times = h * np.arange(N + 1)
    return _record(sys, times, Z)


def _record(sys: ClosedLoopSystem, times, Z) -> Trajectory:
    m, s = sys.m, sys.s
    N1 = len(times)
    u = np.empty((N1, m))
    d = np.empty((N1, m))
    y = np.empty((N1, m))
    y_d = np.empty((N1, 2 * m))
    W = np.empty(N1)
    H = np.empty(N1)
    for k, t in enumerate(times):
        x = PlantState(Z[k, :m], Z[k, m:m + s])
        xc = ControllerState(Z[k, m + s:])
        dk = sys.disturbance.after(t) if k == 0 else sys.disturbance(t)
        _, _, _, u[k] = direct_parts(sys, x, xc, dk)
        d[k] = dk
        y[k] = sys.plant.gradient(x)[0]
        if sys.robust:
            y_d[k] = detectability_output(sys.plant, sys.gains, x, xc, dk)
        else:
            y_d[k] = np.concatenate([y[k], sys.gains.K_i @ (x.x_a - xc.x_c) - np.linalg.solve(sys.gains.R_c1, dk)])
        W[k] = storage(sys, to_w(x, xc), dk)
        H[k] = sys.plant.hamiltonian(x)
    return Trajectory(
        t=np.asarray(times, dtype=float),
        x_a=Z[:, :m].copy(),
        x_u=Z[:, m:m + s].copy(),
        x_c=Z[:, m + s:].copy(),
        u=u, d=d, y=y, y_d=y_d, W=W, H=H,
    )


def integrate_plant(p: PhPlant, x0: PlantState, cfg: IntegratorConfig, u=None, d=None):
    """Open-loop simulation with constant input and disturbance; returns (times, states)."""
    m = p.dims.m
    u = np.zeros(m) if u is None else np.asarray(u, dtype=float)
    d = np.zeros(m) if d is None else np.asarray(d, dtype=float)

    def f(_t, z):
        xa_dot, xu_dot = plant_vector_field(p, PlantState.from_vector(z, p.dims), u, d)
        return np.concatenate([xa_dot, xu_dot])

    return rk4(f, x0.vector(), cfg.h, cfg.n_steps)


def steady_state_error(traj: Trajectory, target, window: float) -> float:
    """max over the final ``window`` seconds of |x_u - target|_inf."""
    mask = traj.t >= traj.t[-1] - window - 1e-12
    return float(np.max(np.abs(traj.x_u[mask] - np.asarray(target, dtype=float))))


def numerical_wdot(traj: Trajectory, sys: ClosedLoopSystem) -> np.ndarray:
    """Central-difference dW/dt at interior samples (NaN at both ends).

    The neighbours are re-evaluated with the centre sample's disturbance so
    that the switch only shows up where the dynamics actually change.
    """
    N = len(traj.t)
    out = np.full(N, np.nan)
    h = traj.h
    for k in range(1, N - 1):
        dk = traj.d[k]
        wp = to_w(PlantState(traj.x_a[k + 1], traj.x_u[k + 1]), ControllerState(traj.x_c[k + 1]))
        wm = to_w(PlantState(traj.x_a[k - 1], traj.x_u[k - 1]), ControllerState(traj.x_c[k - 1]))
        out[k] = (storage(sys, wp, dk) - storage(sys, wm, dk)) / (2.0 * h)
    return out
