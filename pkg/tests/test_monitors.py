import numpy as np
import pytest

import gvfnav as g
from gvfnav import PreconditionError
from conftest import fake_trajectory


@pytest.fixture
def round_obstacle():
    return g.Obstacle(g.make_shape("circle", {"center": [0, 0], "radius": 1.0}),
                      c=-0.5, k_r=1.0)


class TestSafety:
    def test_exterior_run_passes(self, round_obstacle):
        states = np.array([[2.0, 0.0], [1.5, 0.0], [1.4, 0.1], [2.0, 1.0]])
        rep = g.check_safety(fake_trajectory(states), [round_obstacle])
        assert rep.passed is True and rep.margin > 0

    def test_teleported_run_fails_with_time(self, round_obstacle):
        # phi at (0.2, 0) is -0.96 <= c: a constructed violation at t = 0.2
        states = np.array([[2.0, 0.0], [1.5, 0.0], [0.2, 0.0], [2.0, 0.0]])
        rep = g.check_safety(fake_trajectory(states, dt=0.1), [round_obstacle])
        assert rep.passed is False
        assert rep.t_violation == pytest.approx(0.2)

    def test_interior_start_checked_for_exit(self, round_obstacle):
        inside = [0.1, 0.0]
        out = [2.0, 0.0]
        rep = g.check_safety(fake_trajectory([inside, inside, out, out]),
                             [round_obstacle])
        assert rep.passed is True and rep.params["start_inside"]
        rep = g.check_safety(fake_trajectory([inside, out, inside, out]),
                             [round_obstacle])
        assert rep.passed is False  # re-entered after exiting
        rep = g.check_safety(fake_trajectory([inside, inside, inside]),
                             [round_obstacle])
        assert rep.passed is False  # never left


class TestErrorBound:
    def test_max_selection(self):
        path = g.PathSpec(
            (g.make_shape("circle", {"center": [0, 0], "radius": 1.0}),),
            (1.0,))
        near = g.Obstacle(g.make_shape("circle",
                                       {"center": [1.2, 0.0], "radius": 0.3}),
                          c=-0.05, k_r=1.0)
        stack = g.FieldStack(path, [near])
        # |phi| over the obstacle's reactive area stays below |1.5^2-1|,
        # while the start error is 3, so the start dominates
        M = g.estimate_error_bound(stack, [2.0, 0.0])
        assert M == pytest.approx(1.05 * 3.0, rel=1e-9)

    def test_no_obstacles(self):
        path = g.PathSpec(
            (g.make_shape("circle", {"center": [0, 0], "radius": 1.0}),),
            (1.0,))
        stack = g.FieldStack(path, [])
        assert g.estimate_error_bound(stack, [2.0, 0.0]) == pytest.approx(3.15)

    def test_check_against_bound(self):
        traj = fake_trajectory(np.zeros((4, 2)), phi=[0.5, 1.0, 2.0, 0.1])
        assert g.check_error_bound(traj, 2.5).passed is True
        rep = g.check_error_bound(traj, 1.5)
        assert rep.passed is False and rep.t_violation == pytest.approx(0.2)


class TestMonotoneOutside:
    def test_decreasing_passes(self):
        traj = fake_trajectory(np.zeros((5, 2)),
                               phi=[2.0, 1.5, 1.0, 0.5, 0.25])
        assert g.check_monotone_outside(traj).passed is True

    def test_increase_fails_only_outside(self):
        phi = [2.0, 1.5, 1.8, 1.0]
        traj = fake_trajectory(np.zeros((4, 2)), phi=phi)
        assert g.check_monotone_outside(traj).passed is False
        # same rise inside a mixed region is not judged
        traj = fake_trajectory(np.zeros((4, 2)), phi=phi,
                               regions=[0, 1, 1, 0])
        assert g.check_monotone_outside(traj).passed is True

    def test_converged_samples_skipped(self):
        traj = fake_trajectory(np.zeros((4, 2)),
                               phi=[1e-7, 5e-7, 2e-7, 9e-7])
        assert g.check_monotone_outside(traj).passed is True

    def test_only_composite_mode_judged(self):
        traj = fake_trajectory(np.zeros((4, 2)), phi=[2.0, 1.5, 1.8, 1.0],
                               sigma=[1, 2, 2, 1])
        assert g.check_monotone_outside(traj).passed is True

    def test_dubins_not_claimed(self):
        traj = fake_trajectory(np.zeros((3, 3)), model_kind="dubins-2d",
                               phi=[2.0, 3.0, 4.0])
        assert g.check_monotone_outside(traj).passed is None


class TestPenetrability:
    def test_pass_and_indeterminate(self, round_obstacle):
        inside = [0.8, 0.0]
        out = [2.0, 0.0]
        rep = g.check_penetrability(
            fake_trajectory([out, inside, inside, out]), [round_obstacle])
        assert rep.passed is True
        rep = g.check_penetrability(
            fake_trajectory([out, inside, inside]), [round_obstacle])
        assert rep.passed is None  # horizon-truncated stay

    def test_no_entry_trivially_passes(self, round_obstacle):
        rep = g.check_penetrability(
            fake_trajectory([[2.0, 0.0], [2.0, 1.0]]), [round_obstacle])
        assert rep.passed is True


class TestDwell:
    def test_zero_switches_pass(self):
        traj = fake_trajectory(np.zeros((3, 2)))
        assert g.check_dwell(traj, d=0.5, v_m=2.0).passed is True

    def test_gap_versus_bound(self):
        log = [(0.0, 2, np.zeros(2)), (1.0, 1, np.zeros(2)),
               (1.05, 2, np.zeros(2))]
        traj = fake_trajectory(np.zeros((201, 2)), dt=0.01, switch_log=log)
        assert g.check_dwell(traj, d=0.5, v_m=2.0).passed is False
        assert g.check_dwell(traj, d=0.1, v_m=2.0).passed is True


class TestErrorBoundSoundness:
    @pytest.mark.parametrize("name", ["sim2_composite", "sim2_switching",
                                      "enlarged_reactive"])
    def test_shipped_scenarios_respect_their_bound(self, name):
        from conftest import scenario_path
        scen = g.load_scenario(scenario_path(name))
        plan = scen.switching_plan()
        level = plan.delta if plan is not None else 0.0
        for x0 in scen.starts():
            traj = g.integrate(scen.model(), scen.stack(), x0, scen.dt,
                               scen.T, switching=plan)
            M = g.estimate_error_bound(scen.stack(), x0, level=level)
            assert g.check_error_bound(traj, M).passed is True, (name, x0)


class TestEscapeFraction:
    def test_deadlock_scenario_traps_the_grid(self, sim2_scenario):
        rep = g.monitors.escape_fraction(
            sim2_scenario.stack(), sim2_scenario.model(),
            (-2.0, 2.0, -2.8, 0.4), dt=2e-3, T=25.0, grid=(4, 4))
        assert rep.margin == 0.0
        assert rep.params["total"] == 16

    def test_obstacle_free_grid_escapes(self):
        path = g.PathSpec(
            (g.make_shape("circle", {"center": [0, 0], "radius": 1.0}),),
            (1.0,))
        stack = g.FieldStack(path, [])
        rep = g.monitors.escape_fraction(
            stack, g.RobotModel("single-integrator-2d"),
            (0.5, 2.0, 0.5, 2.0), dt=1e-2, T=2.0, grid=(3, 3))
        assert rep.margin == 1.0


class TestLyapunovMonitor:
    def test_wrong_flow_kind_rejected(self, round_obstacle):
        traj = g.reactive_flow(round_obstacle, [2.0, 0.0], 1e-3, 0.5,
                               law="static")
        with pytest.raises(PreconditionError):
            g.check_lyapunov(traj, "moving")

    def test_noisy_requires_epsilon_and_margin(self):
        me = g.make_shape("rotated-ellipse", {"center": [-5, 0], "a": 2,
                                              "b": 1}, velocity=[0.5, 0])
        obs = g.Obstacle(me, c=-0.5, k_r=1.0, l=2.0)
        traj = g.reactive_flow(obs, [0.8, -0.6], 1e-3, 15.0, law="noisy",
                               noise=(0.1, 3.0, 0.0))
        with pytest.raises(PreconditionError):
            g.check_lyapunov(traj, "noisy")
        rep = g.check_lyapunov(traj, "noisy", epsilon=0.5)
        assert rep.passed is True
        assert rep.params["V_end"] <= rep.params["bound"]

    def test_report_serializes(self, round_obstacle):
        traj = g.reactive_flow(round_obstacle, [2.0, 0.0], 1e-4, 0.2,
                               law="static")
        rep = g.check_lyapunov(traj, "static")
        d = rep.to_dict()
        assert set(d) == {"objective", "pass", "margin", "t_violation",
                          "params", "detail"}
