"""Numerical checks of the stability argument for the robust law.

The dissipation matrix of the robust closed loop is split into a part that
carries the plant damping (``R1``) and a part built only from controller
gains (``R2``).  ``R1`` is shown PSD through a Schur complement, which
reduces to two blocks: ``D1 = R_uu - R_au' (R_aa + D_c3)^{-1} R_au`` and
``D2 = D_c3 - (R_aa + D_c3)/4``.  The helpers here evaluate every one of
those quantities so each step can be checked independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .closed_loop import (
    ClosedLoopSystem,
    grad_W,
    robust_dissipation,
    robust_interconnection,
    to_w,
)
from .controllers import ControllerState, RobustIAGains
from .errors import DimensionError
from .ph import DEFAULT_TOL, PhPlant, PlantState, StructureMatrices, scaled_tol, sym_min_eig

STRICT_TOL = 1e-10
WDOT_TOL = 1e-8


def assumption1_margin(R_aa, D_c3) -> float:
    return sym_min_eig(3.0 * np.asarray(D_c3) - np.asarray(R_aa))


def check_assumption1(Raa_samples: Iterable[np.ndarray], D_c3) -> float:
    """Worst-case min eigenvalue of 3 D_c3 - R_aa over the samples.

    The bound must hold uniformly, so the caller samples R_aa over the
    operating region of interest.  Pass iff the result exceeds ``STRICT_TOL``.
    """
    return min(assumption1_margin(R, D_c3) for R in Raa_samples)


def split_R(S: StructureMatrices, g: RobustIAGains) -> tuple[np.ndarray, np.ndarray]:
    """(R1, R2) with R1 + R2 equal to the closed-loop dissipation matrix."""
    m, s = S.m, S.s
    Zms = np.zeros((m, s))
    R2 = np.block([
        [g.D_c1 + g.D_c2, Zms, g.D_c1],
        [Zms.T, np.zeros((s, s)), Zms.T],
        [g.D_c1, Zms, g.D_c1],
    ])
    return R1_from_blocks(S, g.D_c3), R2


def R1_from_blocks(S: StructureMatrices, D_c3) -> np.ndarray:
    m, s = S.m, S.s
    return np.block([
        [S.R_aa + D_c3, S.R_au, D_c3],
        [S.R_au.T, S.R_uu, np.zeros((s, m))],
        [S.R_aa, S.R_au, D_c3],
    ])


def schur_blocks(S: StructureMatrices, D_c3) -> tuple[np.ndarray, np.ndarray]:
    """Return (D1, D2).

    Raises ``ValueError`` if ``R_aa + D_c3`` is not positive definite, which
    cannot happen when R >= 0 and D_c3 > 0.
    """
    A = S.R_aa + np.asarray(D_c3, dtype=float)
    try:
        np.linalg.cholesky(0.5 * (A + A.T))
    except np.linalg.LinAlgError:
        raise ValueError("R_aa + D_c3 is not positive definite; need R >= 0 and D_c3 > 0") from None
    D1 = S.R_uu - S.R_au.T @ np.linalg.solve(A, S.R_au)
    D2 = np.asarray(D_c3, dtype=float) - 0.25 * A
    return D1, D2


@dataclass
class R1PsdReport:
    D1_margin: float
    D2_margin: float
    sym_margin: float
    schur_psd: bool
    eig_psd: bool

    @property
    def agree(self) -> bool:
        return self.schur_psd == self.eig_psd


def check_R1_psd(S: StructureMatrices, D_c3, tol: float = DEFAULT_TOL) -> R1PsdReport:
    """Decide sym(R1) >= 0 by the Schur route and, independently, by eigensolve."""
    D1, D2 = schur_blocks(S, D_c3)
    R1 = R1_from_blocks(S, D_c3)
    sym = 0.5 * (R1 + R1.T)
    t = scaled_tol(sym, tol)
    d1 = sym_min_eig(D1) if D1.size else np.inf
    d2 = sym_min_eig(D2)
    eig = sym_min_eig(sym)
    return R1PsdReport(d1, d2, eig, bool(d1 >= -t and d2 >= -t), bool(eig >= -t))


def wdot_bound(grad: np.ndarray, g: RobustIAGains, m: int, s: int) -> float:
    """-|grad_a|^2_{D_c2} - |grad_a + grad_c|^2_{D_c1}."""
    ga = grad[:m]
    gc = grad[m + s:]
    e = ga + gc
    return -float(ga @ g.D_c2 @ ga) - float(e @ g.D_c1 @ e)


def wdot_analytic(S: StructureMatrices, g: RobustIAGains, grad: np.ndarray) -> float:
    """grad' (Jcal - Rcal) grad, with the skew part kept separate to limit rounding."""
    return float(grad @ robust_interconnection(S) @ grad) - float(grad @ robust_dissipation(S, g) @ grad)


@dataclass
class WdotReport:
    t: np.ndarray
    wdot: np.ndarray
    bound: np.ndarray
    assumption1_margin: np.ndarray
    checked: np.ndarray
    violations: np.ndarray

    @property
    def n_violations(self) -> int:
        return int(np.count_nonzero(self.violations))

    @property
    def worst_gap(self) -> float:
        """max(wdot - bound) over checked samples; <= 0 means the bound held everywhere."""
        if not np.any(self.checked):
            return -np.inf
        return float(np.max((self.wdot - self.bound)[self.checked]))


def wdot_along(traj, sys: ClosedLoopSystem, exclude_switches: bool = True, tol: float = WDOT_TOL) -> WdotReport:
    """Evaluate dW/dt and its dissipation bound at every trajectory sample.

    A sample violates the bound if dW/dt > bound + tol while the damping
    bound 3 D_c3 > R_aa holds at that state.  Samples sitting exactly on a disturbance switch are
    skipped when ``exclude_switches`` is set.
    """
    if not sys.robust:
        raise TypeError("wdot_along applies to the robust law only")
    g, p = sys.gains, sys.plant
    m, s = sys.m, sys.s
    N = len(traj.t)
    wdot = np.empty(N)
    bound = np.empty(N)
    a1 = np.empty(N)
    for k in range(N):
        x = PlantState(traj.x_a[k], traj.x_u[k])
        w = to_w(x, ControllerState(traj.x_c[k]))
        S = p.structure(x)
        grad = grad_W(p, g, w, traj.d[k])
        wdot[k] = wdot_analytic(S, g, grad)
        bound[k] = wdot_bound(grad, g, m, s)
        a1[k] = assumption1_margin(S.R_aa, g.D_c3)
    checked = a1 > STRICT_TOL
    if exclude_switches:
        for ts in sys.disturbance.times:
            checked &= ~np.isclose(traj.t, ts, rtol=0.0, atol=1e-12)
    violations = checked & (wdot > bound + tol)
    return WdotReport(np.asarray(traj.t), wdot, bound, a1, checked, violations)


def detectability_output(p: PhPlant, g: RobustIAGains, x: PlantState, xc: ControllerState, d) -> np.ndarray:
    g_a, _ = p.gradient(x)
    tail = g.K_i @ (x.x_a - xc.x_c) + np.linalg.solve(g.D_c1 + g.D_c3, np.asarray(d, dtype=float))
    return np.concatenate([g_a, tail])


def restricted_control_on_yd_zero(p: PhPlant, g: RobustIAGains, x: PlantState, xc: ControllerState, d):
    """Control and integrator rate on the set y_d = 0: (d, J_au dH/dx_u).

    The caller guarantees y_d = 0 at the given point.
    """
    _, g_u = p.gradient(x)
    return np.array(d, dtype=float), p.structure(x).J_au @ g_u


@dataclass
class CertificateReport:
    assumption1_margin: float
    D1_margin: float
    D2_margin: float
    R1_sym_margin: float
    schur_eig_agree: bool
    n_samples: int
    wdot_violations: int | None = None
    wdot_worst_gap: float | None = None
    tol: float = DEFAULT_TOL
    verdicts: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        self.verdicts = {
            "assumption1": bool(self.assumption1_margin > STRICT_TOL),
            "D1_psd": bool(self.D1_margin >= -self.tol),
            "D2_psd": bool(self.D2_margin >= -self.tol),
            "R1_sym_psd": bool(self.R1_sym_margin >= -self.tol),
        }
        if self.wdot_violations is not None:
            self.verdicts["wdot_bound"] = self.wdot_violations == 0

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        def num(v):
            if v is None:
                return None
            v = float(v)
            return v if np.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {
            "assumption1_margin": num(self.assumption1_margin),
            "D1_margin": num(self.D1_margin),
            "D2_margin": num(self.D2_margin),
            "R1_sym_margin": num(self.R1_sym_margin),
            "schur_eig_agree": self.schur_eig_agree,
            "n_samples": self.n_samples,
            "wdot_violations": self.wdot_violations,
            "wdot_worst_gap": num(self.wdot_worst_gap),
            "verdicts": dict(self.verdicts),
            "ok": self.ok,
        }


def certify_samples(samples: Sequence[StructureMatrices], g: RobustIAGains, wdot: WdotReport | None = None,
                    tol: float = DEFAULT_TOL) -> CertificateReport:
    """Aggregate worst-case margins over structure samples into a report."""
    if not samples:
        raise ValueError("need at least one structure sample")
    if samples[0].m != g.m:
        raise DimensionError("structure samples do not match gain dimension")
    a1 = check_assumption1((S.R_aa for S in samples), g.D_c3)
    d1 = d2 = sym = np.inf
    agree = True
    for S in samples:
        r = check_R1_psd(S, g.D_c3, tol)
        d1, d2, sym = min(d1, r.D1_margin), min(d2, r.D2_margin), min(sym, r.sym_margin)
        agree &= r.agree
    return CertificateReport(
        assumption1_margin=a1,
        D1_margin=d1,
        D2_margin=d2,
        R1_sym_margin=sym,
        schur_eig_agree=bool(agree),
        n_samples=len(samples),
        wdot_violations=None if wdot is None else wdot.n_violations,
        wdot_worst_gap=None if wdot is None else wdot.worst_gap,
        tol=tol,
    )
