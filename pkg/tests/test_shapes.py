import numpy as np
import pytest

import gvfnav as g
from gvfnav import FitError, Region, ShapeError


def fd_gradient(shape, xi, t=0.0, h=None):
    xi = np.asarray(xi, float)
    if h is None:
        h = 1e-6 * max(1.0, np.linalg.norm(xi))
    out = np.zeros_like(xi)
    for i in range(xi.size):
        e = np.zeros(xi.size)
        e[i] = h
        out[i] = (shape.eval(xi + e, t) - shape.eval(xi - e, t)) / (2 * h)
    return out


def sample_shapes():
    rng = np.random.default_rng(7)
    pts6 = [[1.5, 0], [1.5, 2.6], [-0.75, 1.3], [-3, 0], [-0.75, -1.3],
            [1.5, -2.6]]
    return [
        (g.make_shape("circle", {"center": [0.3, -0.2], "radius": 1.4}), 2),
        (g.make_shape("rotated-ellipse",
                      {"center": [1.0, 2.0], "a": 2.0, "b": 0.7,
                       "beta": 0.6}), 2),
        (g.make_shape("cassini", {"foci": [[0.9, 2], [-0.9, 2]], "b4": 0.9}), 2),
        (g.make_shape("sinusoid-curve", {"amplitude": 1.3, "frequency": 0.8,
                                         "phase": 0.2, "offset": -0.5}), 2),
        (g.make_shape("quartic-blob", {"center": [0.0, -1.0], "level": 2.0}), 2),
        (g.make_shape("plane", {"normal": [0.4, -1.2], "offset": 0.7}), 2),
        (g.make_shape("sphere", {"center": [-2.8, 0, 0], "radius": 1.0}), 3),
        (g.fit_rbf_surface(pts6), 3),
    ], rng


class TestMakeShape:
    def test_circle_eval_and_gradient(self):
        c = g.make_shape("circle", {"center": [0, 0], "radius": 1.0})
        assert c.eval([2.0, 0.0]) == pytest.approx(3.0, abs=0)
        assert np.allclose(c.gradient([2.0, 0.0]), [4.0, 0.0], atol=0)

    def test_cassini_value_at_focus(self):
        cas = g.make_shape("cassini", {"foci": [[0.9, 2], [-0.9, 2]],
                                       "b4": 0.9})
        assert cas.eval([0.9, 2.0]) == pytest.approx(-0.9, abs=1e-15)

    def test_moving_ellipse_center_value(self):
        me = g.make_shape("rotated-ellipse",
                          {"center": [-5, 0], "a": 2, "b": 1},
                          velocity=[0.5, 0])
        for t in (0.0, 1.7, 12.0):
            assert me.eval([-5 + 0.5 * t, 0.0], t) == pytest.approx(-1.0,
                                                                    abs=1e-12)

    def test_invalid_params(self):
        with pytest.raises(ShapeError):
            g.make_shape("circle", {"center": [0, 0], "radius": -1.0})
        with pytest.raises(ShapeError):
            g.make_shape("rotated-ellipse", {"center": [0, 0], "a": 0, "b": 1})
        with pytest.raises(ShapeError):
            g.make_shape("warp-core", {})


class TestDerivatives:
    def test_circle_hessian_constant(self):
        c = g.make_shape("circle", {"center": [0, 0], "radius": 1.0})
        for p in ([0.0, 0.0], [3.0, -2.0], [0.1, 0.7]):
            assert np.array_equal(c.hessian(p), 2.0 * np.eye(2))

    def test_moving_ellipse_time_derivative(self):
        me = g.make_shape("rotated-ellipse",
                          {"center": [-5, 0], "a": 2, "b": 1},
                          velocity=[0.5, 0])
        # chain rule on (x + 5 - 0.5 t)^2 / 4 at the origin
        assert me.time_derivative([0.0, 0.0], 0.0) == pytest.approx(-1.25,
                                                                    abs=1e-12)
        st = g.make_shape("circle", {"center": [0, 0], "radius": 1.0})
        assert st.time_derivative([5.0, 1.0], 3.0) == 0.0

    def test_rotated_ellipse_quarter_turn_gradient(self):
        e = g.make_shape("rotated-ellipse",
                         {"center": [0, 0], "a": 2, "b": 1,
                          "beta": np.pi / 2})
        # axes swap under a 90 degree rotation: phi = y^2/4 + x^2 - 1
        assert np.allclose(e.gradient([1.0, 0.0]), [2.0, 0.0], atol=1e-15)

    def test_gradient_matches_finite_differences(self):
        shapes, rng = sample_shapes()
        for shape, dim in shapes:
            for _ in range(100):
                p = rng.uniform(-3, 3, size=dim)
                ga = shape.gradient(p)
                gn = fd_gradient(shape, p)
                scale = max(np.linalg.norm(ga), 1e-9)
                assert np.linalg.norm(ga - gn) / scale < 1e-6, shape.kind

    def test_hessian_symmetric_and_consistent(self):
        shapes, rng = sample_shapes()
        for shape, dim in shapes:
            for _ in range(20):
                p = rng.uniform(-3, 3, size=dim)
                H = shape.hessian(p)
                assert np.array_equal(H, H.T), shape.kind
                # finite difference of the analytic gradient
                h = 1e-5 * max(1.0, np.linalg.norm(p))
                for i in range(dim):
                    e = np.zeros(dim)
                    e[i] = h
                    col = (shape.gradient(p + e) - shape.gradient(p - e)) / (2 * h)
                    scale = max(np.abs(H).max(), 1.0)
                    assert np.abs(H[:, i] - col).max() < 1e-4 * scale, shape.kind

    def test_custom_shape_finite_differences(self):
        fn = lambda xi: xi[..., 0] ** 2 + 2.0 * xi[..., 1] ** 2 - 1.0
        c = g.make_shape("custom", {}, dimension=2, fn=fn)
        p = np.array([0.7, -0.4])
        assert np.allclose(c.gradient(p), [1.4, -1.6], atol=1e-7)
        H = c.hessian(p)
        assert np.abs(H - np.diag([2.0, 4.0])).max() < 1e-5
        assert np.abs(H - H.T).max() < 1e-8

    def test_translation_invariance(self):
        me = g.make_shape("cassini", {"foci": [[0.9, 2], [-0.9, 2]],
                                      "b4": 0.9}, velocity=[0.3, -0.2])
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = rng.uniform(-3, 3, size=2)
            t = rng.uniform(0, 10)
            off = np.array([0.3, -0.2]) * t
            assert me.eval(p + off, t) == pytest.approx(me.eval(p, 0.0),
                                                        abs=1e-9, rel=1e-12)

    def test_level_ordering_along_rays(self):
        closed = [
            g.make_shape("circle", {"center": [0.5, -0.5], "radius": 1.2}),
            g.make_shape("rotated-ellipse", {"center": [0, 0], "a": 2, "b": 1,
                                             "beta": 0.4}),
            g.make_shape("cassini", {"foci": [[0.9, 2], [-0.9, 2]], "b4": 0.9}),
            g.make_shape("quartic-blob", {"center": [0, -1], "level": 2.0}),
        ]
        for shape in closed:
            center = shape.center()
            for ang in np.linspace(0, 2 * np.pi, 36, endpoint=False):
                ray = np.array([np.cos(ang), np.sin(ang)])
                ts = np.linspace(0.0, 6.0, 400)
                vals = shape.eval(center + ts[:, None] * ray)
                k0 = int(np.argmin(vals))
                outside = np.where(vals[k0:] >= 0.0)[0]
                stop = k0 + (outside[0] + 1 if len(outside) else len(vals) - k0)
                seg = vals[k0:stop]
                assert np.all(np.diff(seg) >= -1e-12), shape.kind


class TestRegions:
    def test_three_way_split(self):
        q = g.make_shape("quartic-blob", {"center": [0, -1], "level": 2.0})
        obs = g.Obstacle(q, c=-1.5, k_r=0.4)
        on_repulsive = [0.25 ** 0.25, -1.0]   # phi = -1.5 exactly
        assert q.eval(on_repulsive) == pytest.approx(-1.5, abs=1e-12)
        assert g.region_of(obs, on_repulsive) is Region.REPULSIVE
        in_mixed = [0.625 ** 0.25, -1.0]      # phi = -0.75
        assert g.region_of(obs, in_mixed) is Region.MIXED
        assert g.region_of(obs, [1.0, -1.0]) is Region.NONREACTIVE  # phi = 0
        assert g.region_of(obs, [5.0, 5.0]) is Region.NONREACTIVE

    def test_obstacle_validation(self):
        q = g.make_shape("quartic-blob", {"center": [0, -1], "level": 2.0})
        with pytest.raises(ShapeError):
            g.Obstacle(q, c=1.0, k_r=0.4)
        with pytest.raises(ShapeError):
            g.Obstacle(q, c=-1.5, k_r=-1.0)


class TestRbfFit:
    PTS = [[1.5, 0], [1.5, 2.6], [-0.75, 1.3], [-3, 0], [-0.75, -1.3],
           [1.5, -2.6]]

    def test_reference_weights(self):
        s = g.fit_rbf_surface(self.PTS)
        w = np.asarray(s.params["weights"])
        expected = np.array([-0.048, 0.035, -0.048, 0.035, -0.048, 0.035])
        assert np.abs(w - expected).max() < 5e-3

    def test_interpolation_residual(self):
        s = g.fit_rbf_surface(self.PTS)
        for p in self.PTS:
            assert abs(s.eval([p[0], p[1], 0.0])) < 1e-9

    def test_two_symmetric_samples(self):
        # 2x2 system solved by hand: G = [[0, f(2)], [f(2), 0]] with
        # f(2) = 4 ln 3, so both weights equal 1 / (4 ln 3)
        s = g.fit_rbf_surface([[1, 0, 0], [-1, 0, 0]])
        w = np.asarray(s.params["weights"])
        expected = 1.0 / (4.0 * np.log(3.0))
        assert np.allclose(w, [expected, expected], rtol=1e-12)

    def test_singular_gram_matrix(self):
        with pytest.raises(FitError) as err:
            g.fit_rbf_surface([[1, 0, 0], [1, 0, 0]])
        assert "cond" in str(err.value)

    def test_custom_basis_falls_back_to_fd(self):
        s = g.fit_rbf_surface(self.PTS, basis=lambda r: r ** 3)
        for p in self.PTS:
            assert abs(s.eval([p[0], p[1], 0.0])) < 1e-9
        gvec = s.gradient([1.0, 1.0, 0.5])
        assert np.all(np.isfinite(gvec))
