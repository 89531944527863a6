"""Cross-checks between the compiled kernels and the pure numpy path.

The kernels mirror the object layer operation for operation; trajectories
from both backends must agree to float round-off.  The pure path is also
exercised in a subprocess with the GVF_PURE_NUMPY flag set, which is how
the fallback is selected in production.
"""

import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import gvfnav as g
from gvfnav._accel import ENV_FLAG, NUMBA_ENABLED
from conftest import scenario_path

needs_numba = pytest.mark.skipif(not NUMBA_ENABLED,
                                 reason="numba disabled or unavailable")


def _pair(scenario_name, x0, T, model=None, switching=False):
    scen = g.load_scenario(scenario_path(scenario_name))
    plan = scen.switching_plan() if switching else None
    model = model or scen.model()
    a = g.integrate(model, scen.stack(), x0, scen.dt, T, switching=plan,
                    backend="python")
    b = g.integrate(model, scen.stack(), x0, scen.dt, T, switching=plan,
                    backend="kernel")
    return a, b


@needs_numba
class TestBackendAgreement:
    def test_composite_2d(self):
        a, b = _pair("sim2_composite", [2.0, 0.0], 2.0)
        assert np.abs(a.states - b.states).max() < 1e-12
        assert np.abs(a.phi - b.phi).max() < 1e-12
        assert np.array_equal(a.regions, b.regions)

    def test_switching(self):
        a, b = _pair("sim2_switching", [2.0, 0.0], 10.0, switching=True)
        assert np.abs(a.states - b.states).max() < 1e-9
        assert np.array_equal(a.sigma, b.sigma)
        assert len(a.switch_log) == len(b.switch_log)
        for ea, eb in zip(a.switch_log, b.switch_log):
            assert ea[0] == eb[0] and ea[1] == eb[1]

    def test_moving_composite(self):
        a, b = _pair("sim3", [0.8, -0.6], 2.0)
        assert np.abs(a.states - b.states).max() < 1e-12

    def test_dubins_2d(self):
        a, b = _pair("sim3_dubins", [0.8, -0.6, 0.0], 2.0,
                     model=g.RobotModel("dubins-2d", s=1.0, k_theta=10.0))
        assert np.abs(a.states - b.states).max() < 1e-12

    def test_composite_3d(self):
        a, b = _pair("sim4", [2.0, 1.0, 1.0], 1.0)
        assert np.abs(a.states - b.states).max() < 1e-12

    def test_dubins_3d(self):
        a, b = _pair("sim4_dubins", [0.5, -1.0, 0.3, -np.pi / 2], 1.0,
                     model=g.RobotModel("dubins-3d", s=1.0, k_theta=5.0))
        assert np.abs(a.states - b.states).max() < 1e-12

    def test_reactive_flows(self):
        me = g.make_shape("rotated-ellipse", {"center": [-5, 0], "a": 2,
                                              "b": 1}, velocity=[0.5, 0])
        obs = g.Obstacle(me, c=-0.5, k_r=1.0, l=1.0)
        for law, noise in (("static", None), ("moving", None),
                           ("noisy", (0.1, 3.0, 0.2)),
                           ("noisy", (0.5, 2.0, 0.0, "vanishing"))):
            a = g.reactive_flow(obs, [0.8, -0.6], 1e-3, 2.0, law=law,
                                noise=noise, backend="python")
            b = g.reactive_flow(obs, [0.8, -0.6], 1e-3, 2.0, law=law,
                                noise=noise, backend="kernel")
            assert np.abs(a.states - b.states).max() < 1e-12, law

    def test_custom_shape_forces_python(self):
        fn = lambda xi: xi[..., 0] ** 2 + xi[..., 1] ** 2 - 1.0
        path = g.PathSpec((g.make_shape("custom", {}, dimension=2, fn=fn),),
                          (1.0,))
        stack = g.FieldStack(path, [])
        traj = g.integrate("single-integrator-2d", stack, [2.0, 0.0],
                           1e-2, 0.5, backend="auto")
        assert traj.meta["backend"] == "python"
        with pytest.raises(g.PreconditionError):
            g.integrate("single-integrator-2d", stack, [2.0, 0.0], 1e-2,
                        0.5, backend="kernel")


SUBPROCESS_SNIPPET = """
import json, numpy as np
import gvfnav as g
from gvfnav._accel import NUMBA_ENABLED
scen = g.load_scenario(r"{scenario}")
traj = g.integrate(scen.model(), scen.stack(), [2.0, 0.0], scen.dt, 1.0)
print(json.dumps({{"numba": NUMBA_ENABLED,
                   "backend": traj.meta["backend"],
                   "final": traj.states[-1].tolist()}}))
"""


def test_pure_numpy_env_flag_selects_fallback():
    env = dict(os.environ)
    env[ENV_FLAG] = "1"
    code = SUBPROCESS_SNIPPET.format(scenario=scenario_path("sim2_composite"))
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True,
                         cwd=Path(__file__).parent)
    import json
    payload = json.loads(out.stdout.strip().splitlines()[-1])
    assert payload["numba"] is False
    assert payload["backend"] == "python"
    scen = g.load_scenario(scenario_path("sim2_composite"))
    here = g.integrate(scen.model(), scen.stack(), [2.0, 0.0], scen.dt, 1.0,
                       backend="python")
    assert np.allclose(here.states[-1], payload["final"], atol=1e-12)
