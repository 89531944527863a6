import numpy as np
import pytest

import gvfnav as g
from gvfnav import BumpPair, FieldStack, ShapeError, SingularFieldError


@pytest.fixture
def pair():
    return BumpPair(c=-1.5, l1=0.1, l2=0.1)


class TestBumps:
    def test_boundary_values(self, pair):
        assert g.bump_values(pair, -1.5) == (0.0, 1.0)
        assert g.bump_values(pair, 0.0) == (1.0, 0.0)
        S, Z = g.bump_values(pair, -0.75)
        assert S == pytest.approx(0.5, abs=1e-15)
        assert Z == pytest.approx(0.5, abs=1e-15)

    def test_outside_band_saturates(self, pair):
        assert g.bump_values(pair, -7.0) == (0.0, 1.0)
        assert g.bump_values(pair, 3.0) == (1.0, 0.0)

    def test_equal_level(self, pair):
        assert g.equal_level(pair) == pytest.approx(-0.75, abs=1e-12)
        skew = BumpPair(c=-1.0, l1=0.2, l2=0.1)
        assert g.equal_level(skew) == pytest.approx(-1.0 / 3.0, abs=1e-12)
        for b in (pair, skew, BumpPair(-0.3, 0.7, 0.05)):
            S, Z = g.bump_values(b, g.equal_level(b))
            assert abs(S - Z) < 1e-12

    def test_partition_of_unity(self, pair):
        phis = np.linspace(2 * pair.c, -2 * pair.c, 10_000)
        S, Z = g.bump_values(pair, phis)
        assert np.abs(S + Z - 1.0).max() <= 1e-12

    def test_monotone_zero_in(self, pair):
        phis = np.linspace(pair.c, 0.0, 10_000)
        S, _ = g.bump_values(pair, phis)
        assert np.all(np.diff(S) >= -1e-12)

    def test_validation(self):
        with pytest.raises(ShapeError):
            BumpPair(c=0.5, l1=0.1, l2=0.1)
        with pytest.raises(ShapeError):
            BumpPair(c=-1.0, l1=0.0, l2=0.1)


class TestComposite:
    def test_region_cases(self, sim2_stack):
        obs = sim2_stack.obstacles[0]
        # far outside every reactive area: exactly the unit path field
        p = np.array([4.0, 2.0])
        chi = g.composite_field(sim2_stack, p)
        pvf = g.path_field_2d(sim2_stack.path, p)
        assert np.allclose(chi, pvf / np.linalg.norm(pvf), atol=0)
        assert np.linalg.norm(chi) == pytest.approx(1.0, abs=1e-15)
        # deep inside the repulsive area: exactly the unit reactive field
        q = np.array([0.3, -1.1])
        assert obs.surface.eval(q) <= obs.c
        chi = g.composite_field(sim2_stack, q)
        rvf = g.reactive_field_2d(obs, q)
        assert np.allclose(chi, rvf / np.linalg.norm(rvf), atol=0)

    def test_blended_zero_at_located_equilibrium(self, sim2_stack, sim2_census):
        stable = [e for e in sim2_census if e.stable]
        assert len(stable) == 1
        loc = stable[0].location
        obs = sim2_stack.obstacles[0]
        # cancellation only happens where the bump weights are equal
        assert obs.surface.eval(loc) == pytest.approx(
            g.equal_level(obs.bump), abs=1e-6)
        assert np.linalg.norm(g.composite_field(sim2_stack, loc)) < 1e-10

    def test_norm_bound_in_mixed_area(self, sim2_stack):
        obs = sim2_stack.obstacles[0]
        rng = np.random.default_rng(11)
        pts = rng.uniform([-2.0, -3.0], [2.0, 1.0], size=(4000, 2))
        phi = obs.surface.eval(pts)
        pts = pts[(phi > obs.c) & (phi < 0.0)]
        v = g.composite_many(sim2_stack, pts)
        norms = np.linalg.norm(v, axis=-1)
        assert np.nanmax(norms) <= 1.0 + 1e-12

    def test_continuity_across_region_boundaries(self, sim2_stack):
        obs = sim2_stack.obstacles[0]
        # points straddling the reactive boundary (phi = 0) and the
        # repulsive boundary (phi = c), displaced 1e-8 along the normal
        for base, level in (([1.0, -1.0], 0.0), ([0.25 ** 0.25, -1.0], -1.5)):
            base = np.array(base)
            assert obs.surface.eval(base) == pytest.approx(level, abs=1e-12)
            n = obs.surface.gradient(base)
            n = n / np.linalg.norm(n)
            inner = g.composite_field(sim2_stack, base - 1e-8 * n)
            outer = g.composite_field(sim2_stack, base + 1e-8 * n)
            assert np.linalg.norm(inner - outer) < 1e-6

    def test_locality(self, sim2_stack):
        # a second obstacle whose reactive area excludes the probe point
        far = g.Obstacle(
            g.make_shape("circle", {"center": [20.0, 20.0], "radius": 1.0}),
            c=-0.5, k_r=1.0)
        bigger = FieldStack(sim2_stack.path,
                            list(sim2_stack.obstacles) + [far],
                            sim2_stack.mode)
        for p in ([2.0, 0.0], [0.9, -0.6], [0.3, -1.1]):
            a = g.composite_field(sim2_stack, p)
            b = g.composite_field(bigger, p)
            assert np.array_equal(a, b)

    def test_singularity_names_component(self, sim2_stack):
        with pytest.raises(SingularFieldError) as err:
            g.composite_field(sim2_stack, [0.0, 0.0])  # path singular point
        assert "path field" in str(err.value)
        v = g.composite_many(sim2_stack, np.array([[0.0, 0.0], [4.0, 2.0]]))
        assert np.isnan(v[0]).all() and np.isfinite(v[1]).all()

    def test_mode_validation(self, sim2_stack):
        with pytest.raises(ShapeError):
            FieldStack(sim2_stack.path, sim2_stack.obstacles, "warp")
        moving = g.Obstacle(
            g.make_shape("circle", {"center": [9.0, 0.0], "radius": 1.0},
                         velocity=[1.0, 0.0]), c=-0.5, k_r=1.0)
        with pytest.raises(ShapeError):
            FieldStack(sim2_stack.path, [moving], "normalized-static")
