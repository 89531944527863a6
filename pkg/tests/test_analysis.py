import numpy as np
import pytest

import gvfnav as g
from gvfnav import IndexUndefinedError, PreconditionError
from gvfnav.analysis import boundary_polyline

node_field = lambda p: -p
saddle_field = lambda p: np.stack([p[..., 0], -p[..., 1]], axis=-1)
center_field = lambda p: np.stack([-p[..., 1], p[..., 0]], axis=-1)
source_field = lambda p: p


def unit_circle(t):
    a = 2 * np.pi * t
    return np.array([np.cos(a), np.sin(a)])


class TestClassification:
    def test_linear_fields(self):
        eq = g.classify_equilibrium(node_field, [0.0, 0.0])
        assert eq.kind == "node" and eq.index == +1 and eq.stable
        eq = g.classify_equilibrium(saddle_field, [0.0, 0.0])
        assert eq.kind == "saddle" and eq.index == -1
        eq = g.classify_equilibrium(center_field, [0.0, 0.0])
        assert eq.kind == "center" and eq.index == +1

    def test_focus_and_degenerate(self):
        spiral = lambda p: np.stack([-p[..., 0] - p[..., 1],
                                     p[..., 0] - p[..., 1]], axis=-1)
        eq = g.classify_equilibrium(spiral, [0.0, 0.0])
        assert eq.kind == "focus" and eq.index == +1 and eq.stable
        flat = lambda p: np.stack([p[..., 0] ** 3, p[..., 1] ** 3], axis=-1)
        eq = g.classify_equilibrium(flat, [0.0, 0.0])
        assert eq.kind == "degenerate" and eq.index is None

    def test_non_equilibrium_rejected(self):
        with pytest.raises(PreconditionError):
            g.classify_equilibrium(node_field, [1.0, 0.0])


class TestFindEquilibria:
    def test_circle_path_field(self):
        c = g.make_shape("circle", {"center": [0, 0], "radius": 1.0})
        path = g.PathSpec((c,), (1.0,))
        field = lambda pts: g.path_field_2d(path, pts)
        eqs = g.find_equilibria(field, (-2, 2, -2, 2), grid_n=32)
        assert len(eqs) == 1
        assert np.allclose(eqs[0].location, [0.0, 0.0], atol=1e-10)

    def test_grid_n_floor(self):
        with pytest.raises(PreconditionError):
            g.find_equilibria(node_field, (-1, 1, -1, 1), grid_n=8)

    def test_jacobian_matches_richer_stencil(self, sim2_stack, sim2_census):
        field = lambda pts: g.composite_many(sim2_stack, pts)
        for eq in sim2_census:
            J2 = g.field_jacobian(field, eq.location, order=2)
            J4 = g.field_jacobian(field, eq.location, order=4)
            assert np.abs(J2 - J4).max() / np.abs(J4).max() < 1e-4

    def test_matches_brute_force_oracle(self):
        c = g.make_shape("circle", {"center": [0.3, -0.1], "radius": 1.0})
        path = g.PathSpec((c,), (1.0,))
        field = lambda pts: g.path_field_2d(path, pts)
        newton = g.find_equilibria(field, (-1, 1, -1, 1), grid_n=32)
        brute = g.grid_minima_equilibria(field, (-1, 1, -1, 1), grid_n=128)
        assert len(newton) == len(brute) == 1
        assert np.linalg.norm(newton[0].location - brute[0]) < 1e-4


class TestPoincareIndex:
    def test_oracle_fields(self):
        assert g.poincare_index(source_field, unit_circle) == +1
        assert g.poincare_index(saddle_field, unit_circle) == -1
        off = lambda p: np.stack([p[..., 0] - 3.0, p[..., 1]], axis=-1)
        assert g.poincare_index(off, unit_circle) == 0

    def test_polyline_input_any_orientation(self):
        th = np.linspace(0, 2 * np.pi, 200, endpoint=False)
        loop = np.stack([np.cos(th), np.sin(th)], axis=-1)
        assert g.poincare_index(source_field, loop) == +1
        assert g.poincare_index(source_field, loop[::-1]) == +1

    def test_vanishing_field_rejected(self):
        curve = lambda t: np.array([np.cos(2 * np.pi * t) - 1.0,
                                    np.sin(2 * np.pi * t)])
        with pytest.raises(IndexUndefinedError):
            g.poincare_index(source_field, curve)  # passes through the zero

    def test_composite_boundary_indices(self, sim2_stack):
        field = lambda pts: g.composite_many(sim2_stack, pts)
        obs = sim2_stack.obstacles[0]
        assert g.poincare_index(field, boundary_polyline(obs, obs.c)) == +1
        assert g.poincare_index(field, boundary_polyline(obs, 0.0)) == 0

    def test_additivity_inside_reactive_boundary(self, sim2_stack, sim2_census):
        field = lambda pts: g.composite_many(sim2_stack, pts)
        obs = sim2_stack.obstacles[0]
        inner = g.poincare_index(field, boundary_polyline(obs, obs.c))
        outer = g.poincare_index(field, boundary_polyline(obs, 0.0))
        assert outer == inner + sum(e.index for e in sim2_census)


class TestHessianSigns:
    def test_circle(self):
        c = g.make_shape("circle", {"center": [0, 0], "radius": 1.5})
        rows = g.hessian_sign_report(c, c.singular_points())
        assert rows[0]["verdict"] == "all-negative"
        assert np.allclose(rows[0]["eigenvalues"], [-4.5, -4.5], atol=1e-12)

    def test_indefinite(self):
        f = g.make_shape("custom", {}, dimension=2,
                         fn=lambda p: p[..., 0] ** 2 - p[..., 1] ** 2 - 1.0)
        rows = g.hessian_sign_report(f, [[0.0, 0.0]])
        assert rows[0]["verdict"] == "at-least-one-negative"

    def test_cassini_critical_points(self):
        cas = g.make_shape("cassini", {"foci": [[0.9, 2], [-0.9, 2]],
                                       "b4": 0.9})
        pts = cas.singular_points()
        assert len(pts) == 3
        rows = g.hessian_sign_report(cas, pts)
        by_point = {tuple(np.round(r["point"], 6)): r for r in rows}
        # foci: phi = -0.9 and H = 6.48 I, eigenvalues -5.832 twice
        for focus in ((0.9, 2.0), (-0.9, 2.0)):
            r = by_point[focus]
            assert r["verdict"] == "all-negative"
            assert np.allclose(r["eigenvalues"], [-5.832, -5.832], atol=1e-9)
        # midpoint saddle of phi: indefinite
        mid = by_point[(0.0, 2.0)]
        assert mid["verdict"] == "at-least-one-negative"
        assert np.allclose(np.abs(mid["eigenvalues"]),
                           [0.790236, 0.790236], atol=1e-6)


class TestScalingEquivalence:
    def test_equal_census_between_normalized_and_raw(self, sim2_stack,
                                                     sim2_census):
        # the raw-weighted composite relocates the blended zeros along the
        # anti-parallel locus, but their count (and index sum) must match
        raw = g.FieldStack(sim2_stack.path, sim2_stack.obstacles,
                           "normalized-static")
        obs = sim2_stack.obstacles[0]

        def raw_field(pts):
            S, Z = g.bump_values(obs.bump, obs.surface.eval(pts))
            p = g.path_field_2d(raw.path, pts)
            r = g.reactive_field_2d(obs, pts)
            return S[..., None] * p + Z[..., None] * r

        window = g.analysis.mixed_area_window(obs)
        eqs = g.find_equilibria(raw_field, window, grid_n=128)
        phi = obs.surface.eval(np.array([e.location for e in eqs]))
        eqs = [e for e, ph in zip(eqs, phi) if obs.c < ph < 0]
        assert len(eqs) == len(sim2_census) == 3
        assert (sum(e.index for e in eqs)
                == sum(e.index for e in sim2_census) == -1)


class TestConditionReport:
    def test_sim2_composite_report(self, sim2_scenario):
        rep = g.condition_report(sim2_scenario)
        # the quartic's critical point has a vanishing Hessian, so the
        # eigen-sign certificate cannot fire
        assert rep["composite.C1"].verdict == "indeterminate"
        c2 = rep["composite.C2.obstacle0"]
        assert c2.verdict == "fail"
        assert len(c2.evidence["mixed_equilibria"]) == 3
        # the seeded escape run is attracted to the stable equilibrium
        assert rep["composite.C3.obstacle0"].verdict == "indeterminate"

    def test_circle_and_ellipses_scenario_passes_c1(self):
        raw = {
            "path": {"surfaces": [{"kind": "circle",
                                   "params": {"center": [0, 0], "radius": 2.0}}],
                     "gains": [1.0]},
            "obstacles": [
                {"surface": {"kind": "rotated-ellipse",
                             "params": {"center": [0.0, 2.0], "a": 0.8,
                                        "b": 0.4}},
                 "c": -0.5, "k_r": 1.0},
                {"surface": {"kind": "rotated-ellipse",
                             "params": {"center": [2.0, 0.0], "a": 0.5,
                                        "b": 0.9, "beta": 0.3}},
                 "c": -0.5, "k_r": 1.0},
            ],
            "sim": {"x0": [[2.5, 2.5]], "dt": 0.001, "T": 1.0},
        }
        scen = g.build_scenario(raw)
        rep = g.condition_report(scen, horizon=10.0)
        c1 = rep["composite.C1"]
        assert c1.verdict == "pass"
        verdicts = {r["verdict"] for r in c1.evidence["obstacle_singular_points"]}
        assert verdicts == {"all-negative"}

    def test_switching_conditions(self):
        scen = g.load_scenario(
            __import__("conftest").scenario_path("sim2_switching"))
        rep = g.condition_report(scen)
        assert rep["switched.C3"].verdict == "pass"
        # degenerate quartic Hessian: the shifted eigen certificate is
        # indeterminate rather than silently passed
        assert rep["switched.C2"].verdict == "indeterminate"
