import numpy as np
import pytest

from robust_ia.certificates import wdot_along
from robust_ia.closed_loop import ClosedLoopSystem
from robust_ia.controllers import ControllerState, RobustIAGains
from robust_ia.errors import ConfigError, DivergenceError
from robust_ia.ph import DisturbanceSignal, PlantState, quadratic_plant
from robust_ia.sim import (
    IntegratorConfig,
    Trajectory,
    integrate,
    integrate_plant,
    numerical_wdot,
    rk4,
    steady_state_error,
)


def decay(_t, z):
    return -z


class TestConfig:
    def test_defaults(self):
        cfg = IntegratorConfig()
        assert cfg.h == 1e-3 and cfg.t_end == 30.0 and cfg.n_steps == 30000

    @pytest.mark.parametrize("h,t_end", [(0.0, 1.0), (-1e-3, 1.0), (2.0, 1.0), (0.3, 1.0)])
    def test_rejects(self, h, t_end):
        with pytest.raises(ConfigError):
            IntegratorConfig(h, t_end)

    def test_zero_duration(self):
        assert IntegratorConfig(1e-3, 0.0).n_steps == 0

    def test_off_grid_switch_rejected(self):
        p = quadratic_plant(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)), m=1)
        sys = ClosedLoopSystem(p, RobustIAGains.identity(1), DisturbanceSignal.from_schedule([(0.0105, [1.0])], 1))
        with pytest.raises(ConfigError):
            integrate(sys, p.x_star, ControllerState(np.zeros(1)), IntegratorConfig(1e-2, 1.0))


class TestRK4:
    def test_exponential(self):
        x0 = np.array([1.0, -2.0])
        _, Z = rk4(decay, x0, 1e-3, 1000)
        assert np.max(np.abs(Z[-1] - np.exp(-1.0) * x0)) <= 1e-10

    def test_zero_field(self):
        _, Z = rk4(lambda t, z: np.zeros_like(z), [1.0, 2.0], 0.1, 10)
        assert np.array_equal(Z, np.tile([1.0, 2.0], (11, 1)))

    def test_fourth_order(self):
        # Oracle: harmonic oscillator, exact solution (cos t, -sin t).
        def f(_t, z):
            return np.array([z[1], -z[0]])

        errs = []
        for h in (1e-2, 5e-3, 2.5e-3):
            n = int(round(2.0 / h))
            _, Z = rk4(f, [1.0, 0.0], h, n)
            errs.append(np.max(np.abs(Z[-1] - [np.cos(2.0), -np.sin(2.0)])))
        for a, b in zip(errs, errs[1:]):
            assert 16 / 4 <= a / b <= 16 * 4

    def test_halving_exponential(self):
        e = []
        for h in (0.1, 0.05):
            _, Z = rk4(decay, [1.0], h, int(round(1.0 / h)))
            e.append(abs(Z[-1, 0] - np.exp(-1.0)))
        assert 12 <= e[0] / e[1] <= 20

    def test_divergence(self):
        with pytest.raises(DivergenceError) as exc, np.errstate(over="ignore", invalid="ignore"):
            rk4(lambda t, z: z ** 2, [1e200], 1.0, 5)
        assert exc.value.last_good_time is not None


def small_system(schedule=()):
    p = quadratic_plant(np.diag([1.0, 2.0]), np.array([[0.0, 1.0], [-1.0, 0.0]]), np.zeros((2, 2)), m=1,
                        x_star=[0.0, 1.0])
    return ClosedLoopSystem(p, RobustIAGains.identity(1), DisturbanceSignal.from_schedule(list(schedule), 1))


class TestIntegrate:
    def test_records_shape_and_finiteness(self):
        sys = small_system([(2.0, [0.5])])
        traj = integrate(sys, PlantState(np.ones(1), np.zeros(1)), ControllerState(np.zeros(1)), IntegratorConfig(1e-2, 5.0))
        assert len(traj) == 501
        assert traj.y_d.shape == (501, 2)
        assert np.allclose(np.diff(traj.t), 1e-2)
        for f in ("x_a", "x_u", "x_c", "u", "d", "y", "y_d", "W", "H"):
            assert np.all(np.isfinite(getattr(traj, f)))

    def test_disturbance_left_continuous(self):
        sys = small_system([(2.0, [0.5])])
        traj = integrate(sys, PlantState(np.ones(1), np.zeros(1)), ControllerState(np.zeros(1)), IntegratorConfig(1e-2, 3.0))
        assert traj.d[200, 0] == 0.0 and traj.d[201, 0] == 0.5

    def test_rest_is_constant(self):
        sys = small_system()
        p = sys.plant
        traj = integrate(sys, p.x_star, ControllerState(p.x_star.x_a.copy()), IntegratorConfig(1e-2, 1.0))
        assert np.array_equal(traj.x_u, np.tile(p.x_star.x_u, (101, 1)))

    def test_deterministic(self):
        sys = small_system([(1.0, [0.5])])
        args = (PlantState(np.ones(1), np.zeros(1)), ControllerState(np.zeros(1)), IntegratorConfig(1e-2, 2.0))
        a, b = integrate(sys, *args), integrate(sys, *args)
        assert np.array_equal(a.x_a, b.x_a) and np.array_equal(a.W, b.W)

    def test_rejects_disturbance_through_integrator(self):
        sys = small_system([(2.0, [0.5])])
        traj = integrate(sys, PlantState(np.ones(1), np.zeros(1)), ControllerState(np.zeros(1)), IntegratorConfig(1e-2, 20.0))
        assert steady_state_error(traj, [1.0], 2.0) <= 1e-3

    def test_zero_duration(self):
        sys = small_system()
        traj = integrate(sys, PlantState(np.ones(1), np.zeros(1)), ControllerState(np.zeros(1)), IntegratorConfig(1e-3, 0.0))
        assert len(traj) == 1 and traj.h == 0.0


def test_open_loop_matches_exponential():
    p = quadratic_plant(np.eye(1), np.zeros((1, 1)), np.eye(1), m=1)
    t, X = integrate_plant(p, PlantState(np.array([2.0]), np.zeros(0)), IntegratorConfig(1e-3, 1.0))
    assert abs(X[-1, 0] - 2.0 * np.exp(-1.0)) <= 1e-10


def constant_traj(x_u):
    n = len(x_u)
    z = np.zeros((n, 1))
    return Trajectory(np.arange(n, dtype=float), z, np.asarray(x_u, float).reshape(n, -1), z, z, z, z,
                      np.zeros((n, 2)), np.zeros(n), np.zeros(n))


class TestSteadyState:
    def test_at_target(self):
        assert steady_state_error(constant_traj([1.0] * 10), [1.0], 3.0) == 0.0

    def test_offset(self):
        assert steady_state_error(constant_traj([1.5] * 10), [1.0], 3.0) == 0.5

    def test_window(self):
        assert steady_state_error(constant_traj([9.0] * 5 + [1.0] * 5), [1.0], 3.0) == 0.0


class TestNumericalWdot:
    @staticmethod
    def gaps(h):
        p = quadratic_plant(np.diag([1.0, 2.0]), np.array([[0.0, 1.0], [-1.0, 0.0]]), 0.1 * np.eye(2), m=1)
        sys = ClosedLoopSystem(p, RobustIAGains.identity(1), DisturbanceSignal.from_schedule([(1.0, [0.5])], 1))
        traj = integrate(sys, PlantState(np.ones(1), np.zeros(1)), ControllerState(np.zeros(1)), IntegratorConfig(h, 2.0))
        gap = np.abs(numerical_wdot(traj, sys) - wdot_along(traj, sys).wdot)
        k = int(round(1.0 / h))
        return np.nanmax(np.delete(gap, k)), gap[k]

    def test_second_order_agreement(self):
        (e1, _), (e2, _) = self.gaps(1e-3), self.gaps(5e-4)
        assert e1 <= 1e-4
        assert 3.5 <= e1 / e2 <= 4.5

    def test_switch_sample_flagged(self):
        smooth, switch = self.gaps(1e-3)
        assert switch > 5 * smooth

    def test_constant_trajectory(self):
        sys = small_system()
        p = sys.plant
        traj = integrate(sys, p.x_star, ControllerState(p.x_star.x_a.copy()), IntegratorConfig(1e-2, 1.0))
        assert np.all(numerical_wdot(traj, sys)[1:-1] == 0.0)
