"""Closed-loop plant + integral controller in shifted coordinates.

With ``w = (x_a, x_u, x_a - x_c)`` the closed loop under either control law
is again port-Hamiltonian.  Two evaluation routes are exposed:
:func:`field_direct` substitutes the control law into the plant, while
:func:`field_structured` evaluates the assembled interconnection and
dissipation matrices against the gradient of the storage function.  They
must agree; the test-suite checks that they do.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controllers import (
    ControllerState,
    LegacyIAGains,
    RobustIAGains,
    legacy_u,
    legacy_xc_dot,
    robust_u,
    robust_xc_dot,
)
from .errors import DimensionError
from .ph import DisturbanceSignal, PhPlant, PlantState, StructureMatrices, plant_rhs


@dataclass(frozen=True)
class AugmentedState:
    w_a: np.ndarray
    w_u: np.ndarray
    w_c: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.w_a, self.w_u, self.w_c])

    @classmethod
    def from_vector(cls, w, m: int, s: int) -> "AugmentedState":
        w = np.asarray(w, dtype=float)
        if w.shape != (2 * m + s,):
            raise DimensionError(f"augmented state has shape {w.shape}, expected ({2 * m + s},)")
        return cls(w[:m], w[m:m + s], w[m + s:])


def to_w(x: PlantState, xc: ControllerState) -> AugmentedState:
    return AugmentedState(x.x_a, x.x_u, x.x_a - xc.x_c)


def from_w(w: AugmentedState) -> tuple[PlantState, ControllerState]:
    return PlantState(w.w_a, w.w_u), ControllerState(w.w_a - w.w_c)


@dataclass(frozen=True)
class ClosedLoopSystem:
    plant: PhPlant
    gains: RobustIAGains | LegacyIAGains
    disturbance: DisturbanceSignal = field(default=None)

    def __post_init__(self):
        if self.gains.m != self.plant.dims.m:
            raise DimensionError(f"gains are {self.gains.m}x{self.gains.m} but plant has m={self.plant.dims.m}")
        if self.disturbance is None:
            object.__setattr__(self, "disturbance", DisturbanceSignal(m=self.plant.dims.m))
        elif self.disturbance.m != self.plant.dims.m:
            raise DimensionError("disturbance dimension does not match plant")

    @property
    def robust(self) -> bool:
        return isinstance(self.gains, RobustIAGains)

    @property
    def m(self) -> int:
        return self.plant.dims.m

    @property
    def s(self) -> int:
        return self.plant.dims.s

    def d_at(self, t: float, d=None) -> np.ndarray:
        return self.disturbance(t) if d is None else np.asarray(d, dtype=float)


def direct_parts(sys: ClosedLoopSystem, x: PlantState, xc: ControllerState, d):
    g_a, g_u = sys.plant.gradient(x)
    S = sys.plant.structure(x)
    w_c = x.x_a - xc.x_c
    g = sys.gains
    if sys.robust:
        u = robust_u(g, S.J_aa, g_a, w_c)
        xc_dot = robust_xc_dot(g, S.J_au, g_a, g_u)
    else:
        u = legacy_u(g, S, g_a, g_u, w_c)
        xc_dot = legacy_xc_dot(g, S, g_a, g_u)
    xa_dot, xu_dot = plant_rhs(S, g_a, g_u, u - d)
    return xa_dot, xu_dot, xc_dot, u


def field_direct(sys: ClosedLoopSystem, x: PlantState, xc: ControllerState, t: float = 0.0, d=None):
    """Plant vector field under the active law, stacked with the controller state derivative.

    ``d`` overrides the scheduled disturbance when given.
    """
    if np.shape(xc.x_c) != (sys.m,):
        raise DimensionError(f"controller state must have length {sys.m}")
    xa_dot, xu_dot, xc_dot, _ = direct_parts(sys, x, xc, sys.d_at(t, d))
    return xa_dot, xu_dot, xc_dot


# Robust law matrices


def robust_interconnection(S: StructureMatrices) -> np.ndarray:
    m, s = S.m, S.s
    Zmm, Zms = np.zeros((m, m)), np.zeros((m, s))
    return np.block([
        [Zmm, S.J_au, Zmm],
        [-S.J_au.T, S.J_uu, Zms.T],
        [Zmm, Zms, Zmm],
    ])


def robust_dissipation(S: StructureMatrices, g: RobustIAGains) -> np.ndarray:
    """Closed-loop dissipation matrix; not symmetric."""
    s = S.s
    m = S.m
    D13 = g.D_c1 + g.D_c3
    return np.block([
        [(S.R_aa + g.D_c3) + (g.D_c1 + g.D_c2), S.R_au, D13],
        [S.R_au.T, S.R_uu, np.zeros((s, m))],
        [S.R_aa + g.D_c1, S.R_au, D13],
    ])


# Legacy law matrices


def legacy_interconnection(S: StructureMatrices, g: LegacyIAGains) -> np.ndarray:
    m, s = S.m, S.s
    Jau = S.J_au + S.R_au
    return np.block([
        [g.J_c1, Jau, g.J_c1],
        [-Jau.T, S.J_uu, np.zeros((s, m))],
        [g.J_c1, np.zeros((m, s)), g.J_c1],
    ])


def legacy_dissipation(S: StructureMatrices, g: LegacyIAGains) -> np.ndarray:
    m, s = S.m, S.s
    return np.block([
        [g.R_c1 + g.R_c2, np.zeros((m, s)), g.R_c1],
        [np.zeros((s, m)), S.R_uu, np.zeros((s, m))],
        [g.R_c1, np.zeros((m, s)), g.R_c1],
    ])


# Storage functions


def _weighted(v, K) -> float:
    return float(v @ K @ v)


def hamiltonian_cl(p: PhPlant, g, w: AugmentedState) -> float:
    return p.hamiltonian(PlantState(w.w_a, w.w_u)) + 0.5 * _weighted(w.w_c, g.K_i)


def integrator_shift(g: RobustIAGains, d) -> np.ndarray:
    """K_i^{-1} (D_c1 + D_c3)^{-1} d, by two linear solves."""
    return np.linalg.solve(g.K_i, np.linalg.solve(g.D_c1 + g.D_c3, np.asarray(d, dtype=float)))


def legacy_shift(g: LegacyIAGains, d) -> np.ndarray:
    return np.linalg.solve(g.K_i, np.linalg.solve(g.R_c1, np.asarray(d, dtype=float)))


def lyapunov_W(p: PhPlant, g: RobustIAGains, w: AugmentedState, d) -> float:
    e = w.w_c + integrator_shift(g, d)
    return p.hamiltonian(PlantState(w.w_a, w.w_u)) + 0.5 * _weighted(e, g.K_i)


def lyapunov_Wl(p: PhPlant, g: LegacyIAGains, w: AugmentedState, d) -> float:
    e = w.w_c - legacy_shift(g, d)
    return p.hamiltonian(PlantState(w.w_a, w.w_u)) + 0.5 * _weighted(e, g.K_i)


def grad_W(p: PhPlant, g: RobustIAGains, w: AugmentedState, d) -> np.ndarray:
    g_a, g_u = p.gradient(PlantState(w.w_a, w.w_u))
    g_c = g.K_i @ w.w_c + np.linalg.solve(g.D_c1 + g.D_c3, np.asarray(d, dtype=float))
    return np.concatenate([g_a, g_u, g_c])


def grad_hamiltonian_cl(p: PhPlant, g, w: AugmentedState) -> np.ndarray:
    g_a, g_u = p.gradient(PlantState(w.w_a, w.w_u))
    return np.concatenate([g_a, g_u, g.K_i @ w.w_c])


def storage(sys: ClosedLoopSystem, w: AugmentedState, d) -> float:
    """The law's Lyapunov function: W for the robust law, W_l for the legacy law."""
    if sys.robust:
        return lyapunov_W(sys.plant, sys.gains, w, d)
    return lyapunov_Wl(sys.plant, sys.gains, w, d)


def field_structured(sys: ClosedLoopSystem, w: AugmentedState, t: float = 0.0, d=None) -> np.ndarray:
    """Closed-loop derivative of ``w`` from the assembled port-Hamiltonian form.

    Robust law: (Jcal - Rcal) grad W.  Legacy law: (J_cl - R_cl) grad H_cl
    minus the explicit disturbance column (d, 0, d).
    """
    d = sys.d_at(t, d)
    S = sys.plant.structure(PlantState(w.w_a, w.w_u))
    if sys.robust:
        F = robust_interconnection(S) - robust_dissipation(S, sys.gains)
        return F @ grad_W(sys.plant, sys.gains, w, d)
    F = legacy_interconnection(S, sys.gains) - legacy_dissipation(S, sys.gains)
    return F @ grad_hamiltonian_cl(sys.plant, sys.gains, w) - np.concatenate([d, np.zeros(sys.s), d])


def direct_in_w(sys: ClosedLoopSystem, w: AugmentedState, t: float = 0.0, d=None) -> np.ndarray:
    """:func:`field_direct` mapped into w-coordinates."""
    x, xc = from_w(w)
    xa_dot, xu_dot, xc_dot = field_direct(sys, x, xc, t, d)
    return np.concatenate([xa_dot, xu_dot, xa_dot - xc_dot])


def equilibrium(p: PhPlant, g: RobustIAGains, d) -> AugmentedState:
    """Closed-loop equilibrium under constant d: the integrator absorbs the disturbance."""
    return AugmentedState(
        np.array(p.x_star.x_a, dtype=float),
        np.array(p.x_star.x_u, dtype=float),
        -integrator_shift(g, d),
    )
