from pathlib import Path

import numpy as np
import pytest

import gvfnav as g

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def scenario_path(name):
    return SCENARIOS / f"{name}.json"


@pytest.fixture(scope="session")
def sim2_scenario():
    return g.load_scenario(scenario_path("sim2_composite"))


@pytest.fixture(scope="session")
def sim2_stack(sim2_scenario):
    return sim2_scenario.stack()


@pytest.fixture(scope="session")
def sim2_census(sim2_stack):
    return g.mixed_area_equilibria(sim2_stack, 0, grid_n=128)


@pytest.fixture(scope="session")
def sim1_scenario():
    return g.load_scenario(scenario_path("sim1"))


def fake_trajectory(states, dt=0.1, model_kind="single-integrator-2d",
                    phi=None, regions=None, sigma=None, switch_log=(),
                    meta=None):
    """Hand-built trajectory for monitor tests."""
    states = np.asarray(states, float)
    n = len(states)
    model = g.RobotModel(model_kind)
    dim = model.dimension
    return g.Trajectory(
        t=np.arange(n) * dt,
        states=states,
        sigma=np.ones(n, np.int64) if sigma is None else np.asarray(sigma),
        regions=np.zeros(n, np.int64) if regions is None else np.asarray(regions),
        phi=np.full(n, np.nan) if phi is None else np.asarray(phi, float),
        field_norm=np.zeros(n),
        switch_log=list(switch_log),
        termination="horizon",
        dt=dt,
        model=model,
        dimension=dim,
        meta=dict(meta or {}),
    )
