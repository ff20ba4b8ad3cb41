"""Partitioned port-Hamiltonian plants.

A plant is described by evaluator callbacks for the Hamiltonian, its
gradient and the interconnection/damping blocks.  The state is split into
an actuated part ``x_a`` (length m) and an unactuated part ``x_u``
(length s); inputs and matched disturbances enter only the actuated rows:

    [x_a']   [J_aa - R_aa    J_au - R_au] [dH/dx_a]   [I]
    [x_u'] = [-J_au' - R_au' J_uu - R_uu] [dH/dx_u] + [0] (u - d)

    y = dH/dx_a
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, NumericError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Dimensions:
    m: int
    s: int

    def __post_init__(self):
        if self.m < 1 or self.s < 0:
            raise DimensionError(f"need m >= 1 and s >= 0, got m={self.m}, s={self.s}")

    @property
    def n(self) -> int:
        return self.m + self.s


@dataclass(frozen=True)
class PlantState:
    x_a: np.ndarray
    x_u: np.ndarray

    @classmethod
    def from_vector(cls, x, dims: Dimensions) -> "PlantState":
        x = np.asarray(x, dtype=float)
        if x.shape != (dims.n,):
            raise DimensionError(f"state has shape {x.shape}, expected ({dims.n},)")
        return cls(x[: dims.m], x[dims.m:])

    def vector(self) -> np.ndarray:
        return np.concatenate([self.x_a, self.x_u])


@dataclass(frozen=True)
class StructureMatrices:
    """The six blocks of J(x) and R(x) evaluated at one state."""

    J_aa: np.ndarray
    J_au: np.ndarray
    J_uu: np.ndarray
    R_aa: np.ndarray
    R_au: np.ndarray
    R_uu: np.ndarray

    @property
    def m(self) -> int:
        return self.J_aa.shape[0]

    @property
    def s(self) -> int:
        return self.J_uu.shape[0]

    def check_shapes(self):
        m, s = self.m, self.s
        expected = {
            "J_aa": (m, m), "J_au": (m, s), "J_uu": (s, s),
            "R_aa": (m, m), "R_au": (m, s), "R_uu": (s, s),
        }
        for name, shape in expected.items():
            got = np.shape(getattr(self, name))
            if got != shape:
                raise DimensionError(f"{name} has shape {got}, expected {shape}")

    def J(self) -> np.ndarray:
        return np.block([[self.J_aa, self.J_au], [-self.J_au.T, self.J_uu]])

    def R(self) -> np.ndarray:
        return np.block([[self.R_aa, self.R_au], [self.R_au.T, self.R_uu]])

    @classmethod
    def from_full(cls, J, R, m: int) -> "StructureMatrices":
        """Split full n x n matrices into blocks.

        The lower-left blocks of ``J`` and ``R`` are discarded; they are implied
        by skew-symmetry and symmetry respectively.
        """
        J = np.asarray(J, dtype=float)
        R = np.asarray(R, dtype=float)
        return cls(J[:m, :m], J[:m, m:], J[m:, m:], R[:m, :m], R[:m, m:], R[m:, m:])


@dataclass(frozen=True)
class PhPlant:
    """A port-Hamiltonian plant given by evaluator callbacks.

    ``grad_hamiltonian`` returns the pair ``(dH/dx_a, dH/dx_u)``.  ``x_star``
    is the open-loop equilibrium, a minimiser of the Hamiltonian.
    """

    dims: Dimensions
    hamiltonian: Callable[[PlantState], float]
    grad_hamiltonian: Callable[[PlantState], tuple[np.ndarray, np.ndarray]]
    structure: Callable[[PlantState], StructureMatrices]
    x_star: PlantState
    name: str = "plant"

    def gradient(self, x: PlantState) -> tuple[np.ndarray, np.ndarray]:
        g_a, g_u = self.grad_hamiltonian(x)
        g_a = np.asarray(g_a, dtype=float)
        g_u = np.asarray(g_u, dtype=float)
        if not (np.all(np.isfinite(g_a)) and np.all(np.isfinite(g_u))):
            raise NumericError(f"non-finite Hamiltonian gradient in {self.name}")
        return g_a, g_u


@dataclass(frozen=True)
class DisturbanceSignal:
    """Piecewise-constant matched disturbance.

    ``times[i]`` is the instant the disturbance switches to ``values[i]``.  The
    disturbance is zero before the first switch.  Point evaluation is
    left-continuous: at a switch instant the previous value is returned, and
    :meth:`after` gives the value held on the following open interval.
    """

    times: tuple[float, ...] = ()
    values: tuple[np.ndarray, ...] = ()
    m: int = 1

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise DimensionError("times and values must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("switch times must be strictly increasing")
        for v in self.values:
            if np.shape(v) != (self.m,):
                raise DimensionError(f"disturbance value has shape {np.shape(v)}, expected ({self.m},)")
            if not np.all(np.isfinite(v)):
                raise NumericError("disturbance values must be finite")

    @classmethod
    def from_schedule(cls, schedule: Sequence[tuple[float, Sequence[float]]], m: int):
        times = tuple(float(t) for t, _ in schedule)
        values = tuple(np.asarray(v, dtype=float) for _, v in schedule)
        return cls(times, values, m)

    @classmethod
    def constant(cls, d) -> "DisturbanceSignal":
        d = np.asarray(d, dtype=float)
        return cls((-np.inf,), (d,), d.shape[0])

    def _value_at_index(self, i: int) -> np.ndarray:
        if i < 0:
            return np.zeros(self.m)
        return self.values[i]

    def __call__(self, t: float) -> np.ndarray:
        return self._value_at_index(bisect_left(self.times, t) - 1)

    def after(self, t: float) -> np.ndarray:
        """Right limit d(t+)."""
        i = bisect_left(self.times, t)
        if i < len(self.times) and self.times[i] == t:
            return self.values[i]
        return self._value_at_index(i - 1)


@dataclass
class Check:
    margin: float
    passed: bool


@dataclass
class ValidationReport:
    checks: dict[str, Check] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, c in self.checks.items() if not c.passed]

    def to_dict(self) -> dict:
        return {name: {"margin": c.margin, "passed": c.passed} for name, c in self.checks.items()}


def sym_min_eig(A) -> float:
    """Smallest eigenvalue of the symmetric part of ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])


def scaled_tol(A, tol: float = DEFAULT_TOL) -> float:
    A = np.asarray(A, dtype=float)
    return tol * float(np.max(np.abs(A))) if A.size else 0.0


def validate_structure(S: StructureMatrices, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check skew-symmetry of J, symmetry of R and R >= 0.

    Residual margins are the largest offending entry; the PSD margin is the
    smallest eigenvalue of the symmetrised assembled R.
    """
    S.check_shapes()
    report = ValidationReport()
    for name in ("J_aa", "J_uu"):
        A = getattr(S, name)
        res = float(np.max(np.abs(A + A.T))) if A.size else 0.0
        report.checks[f"{name}_skew"] = Check(res, res <= scaled_tol(A, tol))
    for name in ("R_aa", "R_uu"):
        A = getattr(S, name)
        res = float(np.max(np.abs(A - A.T))) if A.size else 0.0
        report.checks[f"{name}_symmetric"] = Check(res, res <= scaled_tol(A, tol))
    R = S.R()
    margin = sym_min_eig(R)
    report.checks["R_psd"] = Check(margin, margin >= -scaled_tol(R, tol))
    return report


def plant_rhs(S: StructureMatrices, g_a: np.ndarray, g_u: np.ndarray, v: np.ndarray):
    """Blockwise [J - R] grad H + [I; 0] v."""
    xa_dot = (S.J_aa - S.R_aa) @ g_a + (S.J_au - S.R_au) @ g_u + v
    xu_dot = -(S.J_au.T + S.R_au.T) @ g_a + (S.J_uu - S.R_uu) @ g_u
    return xa_dot, xu_dot


def plant_vector_field(p: PhPlant, x: PlantState, u, d) -> tuple[np.ndarray, np.ndarray]:
    g_a, g_u = p.gradient(x)
    v = np.asarray(u, dtype=float) - np.asarray(d, dtype=float)
    return plant_rhs(p.structure(x), g_a, g_u, v)


def plant_output(p: PhPlant, x: PlantState) -> np.ndarray:
    return p.gradient(x)[0]


def quadratic_plant(Q, J, R, m: int, x_star=None, name: str = "custom-quadratic") -> PhPlant:
    """Plant with H(x) = 1/2 (x - x*)' Q (x - x*) and constant J, R."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    dims = Dimensions(m, n - m)
    xs = np.zeros(n) if x_star is None else np.asarray(x_star, dtype=float)
    S = StructureMatrices.from_full(J, R, m)
    S.check_shapes()
    Qs = 0.5 * (Q + Q.T)

    def H(x: PlantState) -> float:
        e = x.vector() - xs
        return 0.5 * float(e @ Qs @ e)

    def grad(x: PlantState):
        g = Qs @ (x.vector() - xs)
        return g[:m], g[m:]

    return PhPlant(dims, H, grad, lambda x: S, PlantState.from_vector(xs, dims), name)
