"""Integral-action control laws for port-Hamiltonian plants.

Two laws are provided.  The robust law needs only ``J_aa`` and ``J_au`` from
the plant and never reads a damping block.  The legacy law requires the
actuated damping blocks ``R_aa`` and ``R_au`` and serves as a baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GainError
from .ph import Check, PhPlant, PlantState, ValidationReport, sym_min_eig

STRICT_TOL = 1e-10
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class ControllerState:
    x_c: np.ndarray


def _square(name, A, m=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if m is not None and A.shape[0] != m:
        raise DimensionError(f"{name} is {A.shape[0]}x{A.shape[0]}, expected {m}x{m}")
    return A


def _asym(A) -> float:
    return float(np.max(np.abs(A - A.T)))


def _pd_check(A) -> Check:
    margin = sym_min_eig(A)
    return Check(margin, margin > STRICT_TOL)


def _symmetric_check(A) -> Check:
    res = _asym(A)
    return Check(res, res <= SYMMETRY_TOL * max(1.0, float(np.max(np.abs(A)))))


@dataclass(frozen=True)
class RobustIAGains:
    """Tuning of the damping-robust law.

    All four matrices must be symmetric positive definite.  Validation runs
    at construction unless ``validate=False``.
    """

    K_i: np.ndarray
    D_c1: np.ndarray
    D_c2: np.ndarray
    D_c3: np.ndarray
    validate: bool = True

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.K_i)).shape[0]
        for name in ("K_i", "D_c1", "D_c2", "D_c3"):
            object.__setattr__(self, name, _square(name, getattr(self, name), m))
        if self.validate:
            report = validate_gains(self)
            if not report.ok:
                raise GainError(f"invalid robust gains: {', '.join(report.failures())}")

    @property
    def m(self) -> int:
        return self.K_i.shape[0]

    @classmethod
    def identity(cls, m: int) -> "RobustIAGains":
        I = np.eye(m)
        return cls(I, I, I, I)


@dataclass(frozen=True)
class LegacyIAGains:
    """Tuning of the damping-dependent law: K_i > 0, J_c1 skew, R_c1 > 0, R_c2 >= 0."""

    K_i: np.ndarray
    J_c1: np.ndarray
    R_c1: np.ndarray
    R_c2: np.ndarray
    validate: bool = True

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.K_i)).shape[0]
        for name in ("K_i", "J_c1", "R_c1", "R_c2"):
            object.__setattr__(self, name, _square(name, getattr(self, name), m))
        if self.validate:
            report = validate_gains(self)
            if not report.ok:
                raise GainError(f"invalid legacy gains: {', '.join(report.failures())}")

    @property
    def m(self) -> int:
        return self.K_i.shape[0]


def validate_gains(g) -> ValidationReport:
    """Check the gain inequalities and return per-condition margins.

    Definiteness margins are minimum eigenvalues of the symmetric part;
    symmetry and skew-symmetry margins are the largest residual entry.
    """
    report = ValidationReport()
    report.checks["K_i_symmetric"] = _symmetric_check(g.K_i)
    report.checks["K_i_pd"] = _pd_check(g.K_i)
    if isinstance(g, RobustIAGains):
        for name in ("D_c1", "D_c2", "D_c3"):
            A = getattr(g, name)
            report.checks[f"{name}_symmetric"] = _symmetric_check(A)
            report.checks[f"{name}_pd"] = _pd_check(A)
    elif isinstance(g, LegacyIAGains):
        res = float(np.max(np.abs(g.J_c1 + g.J_c1.T)))
        report.checks["J_c1_skew"] = Check(res, res <= SYMMETRY_TOL * max(1.0, float(np.max(np.abs(g.J_c1)))))
        report.checks["R_c1_pd"] = _pd_check(g.R_c1)
        margin = sym_min_eig(g.R_c2)
        report.checks["R_c2_psd"] = Check(margin, margin >= -STRICT_TOL)
    else:
        raise TypeError(f"unknown gain type {type(g).__name__}")
    return report


def _check_dims(p: PhPlant, g, xc: ControllerState):
    if g.m != p.dims.m or np.shape(xc.x_c) != (p.dims.m,):
        raise DimensionError(f"controller dimension does not match plant (m={p.dims.m})")


# Array kernels shared with the closed-loop evaluation.


def robust_u(g: RobustIAGains, J_aa, g_a, w_c) -> np.ndarray:
    return -(J_aa + g.D_c1 + g.D_c2 + g.D_c3) @ g_a - (g.D_c1 + g.D_c3) @ (g.K_i @ w_c)


def robust_xc_dot(g: RobustIAGains, J_au, g_a, g_u) -> np.ndarray:
    return -(g.D_c2 + g.D_c3) @ g_a + J_au @ g_u


def legacy_u(g: LegacyIAGains, S, g_a, g_u, w_c) -> np.ndarray:
    return (
        (-S.J_aa + S.R_aa + g.J_c1 - g.R_c1 - g.R_c2) @ g_a
        + (g.J_c1 - g.R_c1) @ (g.K_i @ w_c)
        + 2.0 * S.R_au @ g_u
    )


def legacy_xc_dot(g: LegacyIAGains, S, g_a, g_u) -> np.ndarray:
    return -g.R_c2 @ g_a + (S.J_au + S.R_au) @ g_u


def robust_ia_control(p: PhPlant, g: RobustIAGains, x: PlantState, xc: ControllerState) -> np.ndarray:
    """u = -(J_aa + D_c1 + D_c2 + D_c3) dH/dx_a - (D_c1 + D_c3) K_i (x_a - x_c).

    Only J_aa is read from the plant structure.
    """
    _check_dims(p, g, xc)
    g_a, _ = p.gradient(x)
    return robust_u(g, p.structure(x).J_aa, g_a, x.x_a - xc.x_c)


def robust_ia_controller_dynamics(p: PhPlant, g: RobustIAGains, x: PlantState, xc: ControllerState) -> np.ndarray:
    _check_dims(p, g, xc)
    g_a, g_u = p.gradient(x)
    return robust_xc_dot(g, p.structure(x).J_au, g_a, g_u)


def legacy_ia_control(p: PhPlant, g: LegacyIAGains, x: PlantState, xc: ControllerState) -> np.ndarray:
    _check_dims(p, g, xc)
    g_a, g_u = p.gradient(x)
    return legacy_u(g, p.structure(x), g_a, g_u, x.x_a - xc.x_c)


def legacy_ia_controller_dynamics(p: PhPlant, g: LegacyIAGains, x: PlantState, xc: ControllerState) -> np.ndarray:
    _check_dims(p, g, xc)
    g_a, g_u = p.gradient(x)
    return legacy_xc_dot(g, p.structure(x), g_a, g_u)


def control(p: PhPlant, g, x: PlantState, xc: ControllerState) -> np.ndarray:
    if isinstance(g, RobustIAGains):
        return robust_ia_control(p, g, x, xc)
    return legacy_ia_control(p, g, x, xc)
