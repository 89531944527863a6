import numpy as np
import pytest

import gvfnav as g
from gvfnav import PreconditionError, RobotModel, SingularFieldError


class TestModelDerivative:
    def test_single_integrator_passthrough(self):
        m = RobotModel("single-integrator-2d")
        assert np.array_equal(
            g.model_derivative(m, [0.0, 0.0], [-12.0, 4.0]), [-12.0, 4.0])

    def test_dubins_aligned_goes_straight(self):
        m = RobotModel("dubins-2d", s=1.0, k_theta=5.0)
        d = g.model_derivative(m, [0.0, 0.0, 0.0], [2.0, 0.0])
        assert np.allclose(d, [1.0, 0.0, 0.0], atol=1e-15)

    def test_dubins_quarter_turn_error(self):
        m = RobotModel("dubins-2d", s=1.0, k_theta=5.0)
        d = g.model_derivative(m, [0.0, 0.0, 0.0], [0.0, 1.0])
        assert d[2] == pytest.approx(5.0 * np.pi / 2, abs=1e-12)

    def test_dubins_zero_guidance(self):
        m = RobotModel("dubins-2d")
        with pytest.raises(SingularFieldError):
            g.model_derivative(m, [0.0, 0.0, 0.0], [0.0, 0.0])

    def test_dubins3_climb_saturation(self):
        m = RobotModel("dubins-3d", s=1.0, k_theta=5.0)
        d = g.model_derivative(m, [0, 0, 0, 0.0], [0.1, 0.0, 5.0])
        assert d[2] == pytest.approx(1.0)  # saturated at s
        d = g.model_derivative(m, [0, 0, 0, 0.0], [1.0, 0.0, 0.5])
        assert d[2] == pytest.approx(0.5)


class TestIntegrate:
    def test_zero_field_constant(self):
        traj = g.integrate("single-integrator-2d",
                           lambda t, p: np.zeros(2), [1.5, -2.0], 0.1, 1.0)
        assert np.all(traj.states == [1.5, -2.0])
        assert len(traj.t) == 11  # floor(T/dt) + 1
        assert traj.termination == "horizon"

    def test_constant_field_exact(self):
        traj = g.integrate("single-integrator-2d",
                           lambda t, p: np.array([1.0, 0.0]),
                           [0.0, 0.0], 0.125, 1.0)
        assert traj.states[-1, 0] == 1.0  # RK4 is exact on constants
        assert traj.states[-1, 1] == 0.0

    def test_divergence_termination(self):
        traj = g.integrate("single-integrator-2d",
                           lambda t, p: 10.0 * p, [1.0, 0.0], 0.1, 10.0)
        assert traj.termination == "divergence"
        assert len(traj.t) < 101

    def test_singularity_recorded_not_raised(self):
        def spiky(t, p):
            if t > 0.5:
                raise SingularFieldError("loss of guidance")
            return np.array([1.0, 0.0])

        traj = g.integrate("single-integrator-2d", spiky, [0, 0], 0.1, 2.0)
        assert traj.termination == "singularity"

    def test_determinism(self, sim2_stack):
        a = g.integrate("single-integrator-2d", sim2_stack, [2, 0], 1e-3, 2.0)
        b = g.integrate("single-integrator-2d", sim2_stack, [2, 0], 1e-3, 2.0)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.phi, b.phi)

    def test_bad_inputs(self):
        with pytest.raises(PreconditionError):
            g.integrate("single-integrator-2d", lambda t, p: p, [0, 0], 0.0, 1.0)
        with pytest.raises(PreconditionError):
            g.integrate("single-integrator-2d", lambda t, p: p, [0, 0, 0], 0.1, 1.0)

    def test_dubins_speed_invariant(self, sim2_stack):
        traj = g.integrate(RobotModel("dubins-2d", s=1.0, k_theta=5.0),
                           sim2_stack, [2.0, 0.0, 1.0], 1e-3, 3.0)
        speeds = np.linalg.norm(np.diff(traj.positions(), axis=0),
                                axis=1) / traj.dt
        assert np.abs(speeds - 1.0).max() < 1e-3

    def test_region_and_phi_columns(self, sim2_stack):
        traj = g.integrate("single-integrator-2d", sim2_stack,
                           [0.3, -1.1], 1e-2, 0.1)
        assert traj.regions[0] == -1  # starts inside the repulsive area
        labels = traj.region_labels()
        assert labels[0] == "R0"
        phi0 = float(sim2_stack.path.surfaces[0].eval([0.3, -1.1]))
        assert traj.phi[0] == pytest.approx(phi0, abs=0)


class TestCsv:
    def test_header_and_rows(self, tmp_path, sim2_stack):
        traj = g.integrate(RobotModel("dubins-2d"), sim2_stack,
                           [2.0, 0.0, 0.5], 1e-2, 0.5)
        out = tmp_path / "traj.csv"
        traj.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,x,y,theta,sigma,region,phi,field_norm"
        assert len(lines) == 52  # header + floor(T/dt) + 1 samples

    def test_csv_deterministic(self, tmp_path, sim2_stack):
        traj = g.integrate("single-integrator-2d", sim2_stack, [2, 0],
                           1e-2, 0.5)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        traj.to_csv(a)
        traj.to_csv(b)
        assert a.read_bytes() == b.read_bytes()
