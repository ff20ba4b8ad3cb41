"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test prints a single ``[PASS]``/``[FAIL]`` line (collected again in the
terminal summary) before asserting.
"""

import dataclasses
import time
from pathlib import Path

import numpy as np
import pytest

from robust_ia.certificates import check_R1_psd, detectability_output, restricted_control_on_yd_zero, schur_blocks, wdot_along
from robust_ia.cli import certify_scenario
from robust_ia.closed_loop import (
    AugmentedState,
    ClosedLoopSystem,
    direct_in_w,
    equilibrium,
    field_structured,
    grad_W,
    lyapunov_W,
)
from robust_ia.controllers import ControllerState, RobustIAGains, legacy_ia_control, robust_ia_control
from robust_ia.manipulator import ManipulatorParams, build_plant, default_gains, grad_hamiltonian, hamiltonian
from robust_ia.ph import DisturbanceSignal, PlantState, StructureMatrices, quadratic_plant
from robust_ia.scenario import load_scenario
from robust_ia.sim import IntegratorConfig, integrate, integrate_plant, rk4, steady_state_error

from plants import central_gradient, psd, random_legacy_gains, random_plant, random_robust_gains, rel_err, skew, spd

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
D_STEP = np.array([50.0, 30.0])


@pytest.fixture(scope="module")
def experiment():
    sc = load_scenario(SCENARIOS / "manipulator.json")
    t0 = time.perf_counter()
    traj = integrate(sc.system, sc.x0, sc.xc0, sc.integrator)
    return sc, traj, time.perf_counter() - t0


def test_c1_experiment_reproduction(experiment, acceptance_record):
    sc, traj, runtime = experiment
    err = np.max(np.abs(traj.x_u - sc.target), axis=1)
    before = traj.t < 4.0
    first = float(traj.t[before][np.argmax(err[before] <= 0.05)]) if np.any(err[before] <= 0.05) else None
    sse = steady_state_error(traj, sc.target, 5.0)
    ok = first is not None and sse <= 1e-3 and runtime <= 30.0
    acceptance_record(
        "C1 experiment reproduction", ok,
        f"|q-q_d|<=0.05 first at t={first}, steady-state error on [25,30]={sse:.3e} (<=1e-3), "
        f"runtime={runtime:.1f}s (<=30s)",
    )
    assert ok


def test_c2_equilibrium(rng, acceptance_record):
    worst = 0.0
    for _ in range(100):
        m, s = int(rng.integers(1, 5)), int(rng.integers(0, 5))
        p = random_plant(rng, m, s)
        g = random_robust_gains(rng, m)
        d = 10 * rng.normal(size=m)
        sys = ClosedLoopSystem(p, g, DisturbanceSignal.constant(d))
        worst = max(worst, np.max(np.abs(field_structured(sys, equilibrium(p, g, d)))))
    params = ManipulatorParams()
    p, g = build_plant(params), default_gains(params)
    sys = ClosedLoopSystem(p, g, DisturbanceSignal.constant(D_STEP))
    manip = np.max(np.abs(field_structured(sys, equilibrium(p, g, D_STEP))))
    ok = worst <= 1e-9 and manip <= 1e-9
    acceptance_record("C2 equilibrium", ok, f"max |field| random={worst:.2e}, manipulator={manip:.2e} (<=1e-9)")
    assert ok


def test_c3_route_equivalence(rng, acceptance_record):
    worst = {"robust": 0.0, "legacy": 0.0}
    for law in worst:
        for _ in range(1000):
            m, s = int(rng.integers(1, 4)), int(rng.integers(0, 4))
            p = random_plant(rng, m, s)
            g = random_robust_gains(rng, m) if law == "robust" else random_legacy_gains(rng, m)
            sys = ClosedLoopSystem(p, g)
            w = AugmentedState(rng.normal(size=m), rng.normal(size=s), rng.normal(size=m))
            d = rng.normal(size=m)
            diff = np.max(np.abs(field_structured(sys, w, d=d) - direct_in_w(sys, w, d=d)))
            worst[law] = max(worst[law], diff)
    ok = max(worst.values()) <= 1e-10
    acceptance_record("C3 route equivalence", ok,
                      f"max diff robust={worst['robust']:.2e}, legacy={worst['legacy']:.2e} (<=1e-10, 1000 states each)")
    assert ok


def test_c4_lyapunov_decrease(experiment, acceptance_record):
    sc, traj, _ = experiment
    rep = wdot_along(traj, sc.system, tol=1e-8)
    switch = np.isclose(traj.t, 4.0, rtol=0, atol=1e-12)
    positive = rep.assumption1_margin > 0
    ok = rep.n_violations == 0 and not np.any(rep.checked & switch) and np.all(rep.checked[positive & ~switch])
    acceptance_record("C4 Lyapunov decrease", ok,
                      f"violations={rep.n_violations} over {int(rep.checked.sum())} samples, "
                      f"worst gap={rep.worst_gap:.2e} (<=1e-8), min assumption margin={rep.assumption1_margin.min():.3f}")
    assert ok


def test_c5_schur_chain(rng, acceptance_record):
    n, d1_min, d2_min, sym_min, disagree = 0, np.inf, np.inf, np.inf, 0
    for _ in range(1200):
        m, s = int(rng.integers(1, 5)), int(rng.integers(0, 5))
        R = psd(rng, m + s, rank=int(rng.integers(0, m + s + 1)))
        S = StructureMatrices.from_full(np.zeros((m + s, m + s)), R, m)
        D_c3 = S.R_aa / 3.0 + spd(rng, m, 1e-2)
        D_c3 = 0.5 * (D_c3 + D_c3.T)
        rep = check_R1_psd(S, D_c3)
        D1, D2 = schur_blocks(S, D_c3)
        scale = max(1.0, np.max(np.abs(R)), np.max(np.abs(D_c3)))
        if D1.size:
            d1_min = min(d1_min, np.linalg.eigvalsh(0.5 * (D1 + D1.T))[0] / scale)
        d2_min = min(d2_min, np.linalg.eigvalsh(0.5 * (D2 + D2.T))[0] / scale)
        sym_min = min(sym_min, rep.sym_margin)
        disagree += not rep.agree
        n += 1
    ok = d1_min >= -1e-9 and d2_min >= -1e-9 and sym_min >= -1e-9 and disagree == 0
    acceptance_record("C5 Schur chain", ok,
                      f"{n} instances, min eig D1={d1_min:.2e}, D2={d2_min:.2e}, sym(R1)={sym_min:.2e} (>=-1e-9), "
                      f"route disagreements={disagree}")
    assert ok


def test_c6_damping_independence(rng, acceptance_record):
    identical, legacy_changed = 0, 0
    for _ in range(100):
        m, s = 2, 2
        p = random_plant(rng, m, s)
        noise = [psd(rng, m + s), rng.normal(size=(m + s, m + s))]

        def mutated(x, p=p, noise=noise):
            S = p.structure(x)
            R = S.R() + noise[0] + np.sin(x.vector().sum()) * (noise[1] @ noise[1].T)
            return StructureMatrices.from_full(S.J(), R, m)

        q = dataclasses.replace(p, structure=mutated)
        x = PlantState(rng.normal(size=m), rng.normal(size=s))
        xc = ControllerState(rng.normal(size=m))
        g = random_robust_gains(rng, m)
        identical += np.array_equal(robust_ia_control(p, g, x, xc), robust_ia_control(q, g, x, xc))
        gl = random_legacy_gains(rng, m)
        legacy_changed += not np.array_equal(legacy_ia_control(p, gl, x, xc), legacy_ia_control(q, gl, x, xc))
    ok = identical == 100 and legacy_changed == 100
    acceptance_record("C6 damping independence", ok,
                      f"robust bit-identical {identical}/100, legacy changed {legacy_changed}/100")
    assert ok


def undamped_manipulator(params):
    base = build_plant(params)
    zero = np.zeros((2, 2))

    def structure(x):
        return StructureMatrices(zero, -np.eye(2), zero, zero, zero, zero)

    return dataclasses.replace(base, structure=structure, name="manipulator-undamped")


def test_c7_numerics(rng, acceptance_record):
    params = ManipulatorParams()
    fd_H = 0.0
    for _ in range(100):
        q, p = params.q_d + rng.uniform(-np.pi, np.pi, 2), rng.normal(size=2)
        z = np.concatenate([p, q])
        fd = central_gradient(lambda v: hamiltonian(v[2:], v[:2], params), z)
        fd_H = max(fd_H, rel_err(np.concatenate(grad_hamiltonian(q, p, params)), fd))
    fd_W = 0.0
    plant, g = build_plant(params), default_gains(params)
    for _ in range(100):
        w = AugmentedState(rng.normal(size=2), params.q_d + rng.normal(size=2), rng.normal(size=2))
        d = D_STEP * rng.uniform()
        fd = central_gradient(lambda v: lyapunov_W(plant, g, AugmentedState.from_vector(v, 2, 2), d), w.vector())
        fd_W = max(fd_W, rel_err(grad_W(plant, g, w, d), fd))

    def osc(_t, z):
        return np.array([z[1], -z[0]])

    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        _, Z = rk4(osc, [1.0, 0.0], h, int(round(2.0 / h)))
        errs.append(np.max(np.abs(Z[-1] - [np.cos(2.0), -np.sin(2.0)])))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    order_ok = all(4.0 <= r <= 64.0 for r in ratios)

    drift = 0.0
    for p in (undamped_manipulator(params), random_plant(rng, 2, 2, damping=False)):
        x0 = PlantState.from_vector(p.x_star.vector() + 0.5 * rng.normal(size=4), p.dims)
        _, X = integrate_plant(p, x0, IntegratorConfig(1e-3, 10.0))
        H = np.array([p.hamiltonian(PlantState.from_vector(x, p.dims)) for x in X])
        drift = max(drift, np.max(np.abs(H - H[0])) / abs(H[0]))

    ok = fd_H <= 1e-5 and fd_W <= 1e-5 and order_ok and drift <= 1e-6
    acceptance_record("C7 numerics", ok,
                      f"FD rel err H={fd_H:.1e}, W={fd_W:.1e} (<=1e-5); RK4 halving ratios "
                      f"{', '.join(f'{r:.2f}' for r in ratios)} (16 within x4); energy drift={drift:.1e} (<=1e-6)")
    assert ok


def test_c8_detectability(experiment, rng, acceptance_record):
    sc, traj, _ = experiment
    tail = traj.t >= 25.0 - 1e-12
    yd_max = float(np.max(np.abs(traj.y_d[tail])))
    exact = 0
    for _ in range(100):
        p = quadratic_plant(np.eye(4), skew(rng, 4), psd(rng, 4), 2)
        g = RobustIAGains(*(np.eye(2) * k for k in (2.0, 1.0, 0.5, 3.0)))
        x = PlantState(np.zeros(2), rng.normal(size=2))
        d = rng.normal(size=2)
        xc = ControllerState(x.x_a + np.linalg.solve(g.K_i, np.linalg.solve(g.D_c1 + g.D_c3, d)))
        assert np.array_equal(detectability_output(p, g, x, xc, d), np.zeros(4))
        u_restricted, _ = restricted_control_on_yd_zero(p, g, x, xc, d)
        u = robust_ia_control(p, g, x, xc)
        exact += np.array_equal(u, d) and np.array_equal(u_restricted, d)
    ok = yd_max <= 1e-3 and exact == 100
    acceptance_record("C8 detectability residual", ok,
                      f"max |y_d| on [25,30]={yd_max:.2e} (<=1e-3); restricted control == d exactly {exact}/100")
    assert ok


def test_c9_discrepancy_report(acceptance_record):
    lit = certify_scenario(SCENARIOS / "manipulator_literal_bound.json", wdot=False)
    sup = certify_scenario(SCENARIOS / "manipulator.json", wdot=False)
    half_kd = 0.5 * np.linalg.eigvalsh(ManipulatorParams().K_d)[0]
    ok = lit["assumption1_margin"] < 0 and sup["assumption1_margin"] >= half_kd
    acceptance_record("C9 discrepancy report", ok,
                      f"literal-bound margin={lit['assumption1_margin']:.3f} (<0), "
                      f"supremum-bound margin={sup['assumption1_margin']:.3f} (>={half_kd})")
    assert ok
