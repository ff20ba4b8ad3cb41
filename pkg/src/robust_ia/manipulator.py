"""Two-link planar manipulator under energy shaping, as a port-Hamiltonian plant.

State ordering follows the plant convention: the actuated coordinates are
the momenta ``p`` and the unactuated ones are the joint angles ``q``.  The
shaped Hamiltonian is

    H_d(q, p) = 1/2 p' M(q)^{-1} p + 1/2 (q - q_d)' K_p (q - q_d)

and the dynamics are p' = -(K_d + D_p) dH/dp - dH/dq + u - d, q' = dH/dp.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .controllers import RobustIAGains
from .errors import DimensionError
from .ph import Dimensions, PhPlant, PlantState, StructureMatrices

_DM_PATTERN = np.array([[2.0, 1.0], [1.0, 0.0]])
_I2 = np.eye(2)
_Z2 = np.zeros((2, 2))


def _diag(*v):
    return np.diag(np.asarray(v, dtype=float))


@dataclass(frozen=True)
class ManipulatorParams:
    a1: float = 0.1476
    a2: float = 0.0725
    b: float = 0.0858
    alpha: tuple[float, float] = (0.1, 0.1)
    beta: tuple[float, float] = (2.0, 2.0)
    K_d: np.ndarray = field(default_factory=lambda: _diag(5.0, 5.0))
    K_p: np.ndarray = field(default_factory=lambda: _diag(30.0, 20.0))
    q_d: np.ndarray = field(default_factory=lambda: np.array([20.0, 20.0]))

    def __post_init__(self):
        for name in ("K_d", "K_p"):
            A = np.asarray(getattr(self, name), dtype=float)
            if A.shape != (2, 2):
                raise DimensionError(f"{name} must be 2x2")
            if np.max(np.abs(A - A.T)) > 1e-12 or np.linalg.eigvalsh(A)[0] <= 0:
                raise ValueError(f"{name} must be symmetric positive definite")
            object.__setattr__(self, name, A)
        q_d = np.asarray(self.q_d, dtype=float)
        if q_d.shape != (2,):
            raise DimensionError("q_d must have length 2")
        object.__setattr__(self, "q_d", q_d)
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        if self.a1 <= 0 or self.a2 <= 0 or self.a1 * self.a2 <= self.b ** 2:
            raise ValueError("need a1 > 0, a2 > 0 and a1*a2 > b^2 for M(q) > 0")
        if min(self.alpha) <= 0 or min(self.beta) < 0:
            raise ValueError("need alpha_i > 0 and beta_i >= 0")


def mass_matrix(q, params: ManipulatorParams) -> np.ndarray:
    c = np.cos(q[1])
    a1, a2, b = params.a1, params.a2, params.b
    off = a2 + b * c
    return np.array([[a1 + a2 + 2.0 * b * c, off], [off, a2]])


def joint_velocity(q, p, params: ManipulatorParams) -> np.ndarray:
    """M(q)^{-1} p by Cramer's rule; det M >= a1 a2 - b^2 > 0."""
    M = mass_matrix(q, params)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return np.array([M[1, 1] * p[0] - M[0, 1] * p[1], M[0, 0] * p[1] - M[1, 0] * p[0]]) / det


def hamiltonian(q, p, params: ManipulatorParams) -> float:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    e = q - params.q_d
    return 0.5 * float(p @ joint_velocity(q, p, params)) + 0.5 * float(e @ params.K_p @ e)


def grad_hamiltonian(q, p, params: ManipulatorParams) -> tuple[np.ndarray, np.ndarray]:
    """Return (dH/dp, dH/dq).

    dH/dp = M^{-1} p is the joint velocity.  Only theta_2 enters M, so the
    kinetic part of dH/dq is -1/2 v' (dM/dtheta_2) v in its second entry.
    """
    q = np.asarray(q, dtype=float)
    v = joint_velocity(q, np.asarray(p, dtype=float), params)
    dM = -params.b * np.sin(q[1]) * _DM_PATTERN
    g_q = params.K_p @ (q - params.q_d)
    g_q[1] -= 0.5 * float(v @ dM @ v)
    return v, g_q


def friction_coefficients(qdot, params: ManipulatorParams) -> tuple[float, float]:
    a1, a2 = params.alpha
    b1, b2 = params.beta
    d1 = b1 / np.sqrt(a1 + qdot[0] ** 2)
    d2 = b2 / np.sqrt(a2 + (qdot[0] - qdot[1]) ** 2)
    return d1, d2


def _joint_pattern(d1, d2) -> np.ndarray:
    return np.array([[d1 + d2, -d2], [-d2, d2]])


def friction_matrix(qdot, params: ManipulatorParams, sign: str = "psd") -> np.ndarray:
    """Joint friction damping D_p.

    ``sign="psd"`` gives the dissipative matrix [[d1+d2, -d2], [-d2, d2]];
    ``sign="literal"`` gives its negation, kept for comparison runs; it is
    indefinite at low joint speed.
    """
    D = _joint_pattern(*friction_coefficients(qdot, params))
    if sign == "psd":
        return D
    if sign == "literal":
        return -D
    raise ValueError(f"unknown friction sign convention {sign!r}")


@dataclass(frozen=True)
class FrictionBounds:
    """Constant friction bounds used to tune D_c3.

    ``literal`` uses d_i = alpha_i / beta_i with the negated joint pattern;
    it does not bound the friction.  ``supremum`` uses d_i = beta_i / sqrt(alpha_i), the
    supremum of the friction coefficients, in the dissipative pattern; it
    dominates :func:`friction_matrix` for every joint velocity.
    """

    params: ManipulatorParams

    @cached_property
    def literal(self) -> np.ndarray:
        (a1, a2), (b1, b2) = self.params.alpha, self.params.beta
        if b1 == 0 or b2 == 0:
            raise ZeroDivisionError("literal friction bound alpha_i/beta_i needs beta_i != 0")
        return -_joint_pattern(a1 / b1, a2 / b2)

    @cached_property
    def supremum(self) -> np.ndarray:
        (a1, a2), (b1, b2) = self.params.alpha, self.params.beta
        return _joint_pattern(b1 / np.sqrt(a1), b2 / np.sqrt(a2))

    def get(self, variant: str) -> np.ndarray:
        if variant not in ("literal", "supremum"):
            raise ValueError(f"unknown friction bound variant {variant!r}")
        return getattr(self, variant)


def friction_bound(params: ManipulatorParams) -> FrictionBounds:
    return FrictionBounds(params)


def build_plant(params: ManipulatorParams | None = None, friction_sign: str = "psd") -> PhPlant:
    """Manipulator as a plant with x_a = p, x_u = q.

    J_aa = 0, J_au = -I, J_uu = 0, R_aa = K_d + D_p(qdot), R_au = R_uu = 0.
    """
    params = ManipulatorParams() if params is None else params
    friction_matrix(np.zeros(2), params, friction_sign)
    dims = Dimensions(2, 2)

    def H(x: PlantState) -> float:
        return hamiltonian(x.x_u, x.x_a, params)

    def grad(x: PlantState):
        return grad_hamiltonian(x.x_u, x.x_a, params)

    def structure(x: PlantState) -> StructureMatrices:
        qdot = joint_velocity(x.x_u, x.x_a, params)
        R_aa = params.K_d + friction_matrix(qdot, params, friction_sign)
        return StructureMatrices(_Z2, -_I2, _Z2, R_aa, _Z2, _Z2)

    x_star = PlantState(np.zeros(2), params.q_d.copy())
    return PhPlant(dims, H, grad, structure, x_star, name="manipulator-2dof")


def default_gains(params: ManipulatorParams | None = None, bound: str = "supremum") -> RobustIAGains:
    """K_i = D_c1 = D_c2 = I and D_c3 = (K_d + friction bound) / 2."""
    params = ManipulatorParams() if params is None else params
    D_c3 = 0.5 * (params.K_d + friction_bound(params).get(bound))
    return RobustIAGains(_I2.copy(), _I2.copy(), _I2.copy(), D_c3)


def state_from_velocity(q, qdot, params: ManipulatorParams) -> PlantState:
    q = np.asarray(q, dtype=float)
    return PlantState(mass_matrix(q, params) @ np.asarray(qdot, dtype=float), q)


def damping_samples(plant: PhPlant, params: ManipulatorParams, lo: float = -10.0, hi: float = 10.0,
                    n: int = 50) -> list[StructureMatrices]:
    """Structure evaluated on an n x n joint-velocity grid over [lo, hi]^2.

    The damping depends on the state only through the joint velocity, so
    the configuration is held at q_d.  Friction peaks at zero velocity, so
    that point is appended whenever the box contains it.
    """
    grid = np.linspace(lo, hi, n)
    points = [(v1, v2) for v1 in grid for v2 in grid]
    if lo <= 0.0 <= hi and (0.0, 0.0) not in points:
        points.append((0.0, 0.0))
    return [plant.structure(state_from_velocity(params.q_d, v, params)) for v in points]
