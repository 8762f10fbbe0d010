import numpy as np
import pytest

from semshape import (
    Constellation,
    LineSearchSettings,
    ObjectiveContext,
    ShapingConfig,
    SimilarityMatrix,
    StackedSignal,
    ValidationError,
    build_baseline,
    BaselineSpec,
    line_search,
    project,
    q_function,
    random_init,
    rotate_update,
    semantic_loss_bound,
    shape,
    shape_once,
    stack,
)
from semshape.objective import bound_from_points
from semshape.shaper import INIT_SEPARATION
from conftest import random_sphere_signal, random_weights


def two_point_weights(a01=0.6):
    return SimilarityMatrix([[0.0, a01], [a01, 0.0]])


class TestRandomInit:
    def test_on_sphere(self, rng):
        for m, n in [(2, 1), (4, 2), (16, 1)]:
            sig = random_init(m, n, rng)
            assert sig.power() == pytest.approx(m, rel=1e-12)

    def test_seeds_differ(self):
        a = random_init(4, 1, np.random.default_rng(0))
        b = random_init(4, 1, np.random.default_rng(1))
        assert not np.array_equal(a.z, b.z)

    def test_separation_enforced(self, rng):
        for _ in range(50):
            sig = random_init(8, 1, rng)
            pts = sig.points()
            diff = pts[:, None, :] - pts[None, :, :]
            d2 = np.sum(diff.real**2 + diff.imag**2, axis=2)
            assert d2[~np.eye(8, dtype=bool)].min() >= INIT_SEPARATION / 8

    def test_many_draws_no_failures(self):
        # the resampling loop never exhausts for a realistic size
        rng = np.random.default_rng(99)
        for _ in range(1000):
            random_init(16, 1, rng)


class TestProject:
    def test_parallel_component_removed(self, rng):
        sig = random_sphere_signal(4, 1, rng)
        assert np.linalg.norm(project(sig.z.copy(), sig)) <= 1e-12 * np.linalg.norm(sig.z)

    def test_tangent_vector_unchanged(self, rng):
        sig = random_sphere_signal(4, 1, rng)
        g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        t = g - (np.vdot(sig.z, g) / sig.power()) * sig.z
        assert np.allclose(project(t, sig), t, rtol=0, atol=1e-14)

    def test_orthogonality_bound(self, rng):
        for _ in range(50):
            sig = random_sphere_signal(5, 2, rng)
            g = rng.standard_normal(10) + 1j * rng.standard_normal(10)
            gp = project(g, sig)
            assert abs(np.vdot(sig.z, gp)) <= 1e-12 * np.linalg.norm(g) * np.linalg.norm(sig.z)

    def test_zero_signal_rejected(self):
        sig = StackedSignal(np.zeros(2, complex), 2, 1)
        with pytest.raises(ValueError):
            project(np.ones(2, complex), sig)


class TestRotateUpdate:
    def test_theta_zero_identity(self, rng):
        sig = random_sphere_signal(3, 1, rng)
        g = project(rng.standard_normal(3) + 1j * rng.standard_normal(3), sig)
        out = rotate_update(sig, g, 0.0)
        assert np.array_equal(out.z, sig.z)

    def test_theta_right_angle(self, rng):
        sig = random_sphere_signal(3, 1, rng)
        g = project(rng.standard_normal(3) + 1j * rng.standard_normal(3), sig)
        out = rotate_update(sig, g, np.pi / 2)
        want = np.sqrt(3) * g / np.linalg.norm(g)
        assert np.allclose(out.z, want, rtol=1e-15, atol=0)

    def test_norm_preserved(self, rng):
        sig = random_sphere_signal(4, 2, rng)
        g = project(rng.standard_normal(8) + 1j * rng.standard_normal(8), sig)
        for theta in rng.uniform(0, np.pi / 2, 20):
            out = rotate_update(sig, g, float(theta))
            assert out.power() == pytest.approx(4.0, rel=1e-12)

    def test_zero_direction_rejected(self, rng):
        sig = random_sphere_signal(2, 1, rng)
        with pytest.raises(ValueError):
            rotate_update(sig, np.zeros(2, complex), 0.3)

    def test_theta_out_of_range_rejected(self, rng):
        sig = random_sphere_signal(2, 1, rng)
        g = project(np.array([1.0, 1j]), sig)
        with pytest.raises(ValueError):
            rotate_update(sig, g, -0.1)


def descent_step_inputs(m, n, rng, gamma=10.0):
    from semshape import descent_direction

    sig = random_sphere_signal(m, n, rng)
    a = random_weights(m, rng)
    ctx = ObjectiveContext(a, gamma)
    g = descent_direction(sig, ctx)
    return sig, ctx, project(g, sig)


class TestLineSearch:
    def test_beats_dense_grid_oracle(self, rng):
        for _ in range(5):
            sig, ctx, gp = descent_step_inputs(4, 1, rng)
            theta = line_search(sig, gp, ctx)
            w = np.sqrt(sig.m) * gp / np.linalg.norm(gp)

            def at(t):
                return bound_from_points(
                    (np.cos(t) * sig.z + np.sin(t) * w).reshape(sig.m, sig.n), ctx
                )

            dense = min(at(t) for t in np.linspace(0, np.pi / 2, 10001))
            assert at(theta) <= dense + 1e-9

    def test_never_increases_objective(self, rng):
        for _ in range(100):
            m = int(rng.integers(2, 6))
            sig, ctx, gp = descent_step_inputs(m, 1, rng, gamma=float(rng.uniform(1, 20)))
            if np.linalg.norm(gp) == 0:
                continue
            theta = line_search(sig, gp, ctx)
            before = bound_from_points(sig.points(), ctx)
            after = bound_from_points(rotate_update(sig, gp, theta).points(), ctx)
            assert after <= before

    def test_stationary_direction_keeps_objective(self, rng):
        # at a near-converged state the best angle is essentially zero
        a = two_point_weights()
        ctx = ObjectiveContext(a, 10.0)
        z = np.array([1.0 + 0j, -1.0 + 0j])  # already optimal for M=2
        sig = StackedSignal(z, 2, 1)
        from semshape import descent_direction

        gp = project(descent_direction(sig, ctx), sig)
        if np.linalg.norm(gp) > 0:
            theta = line_search(sig, gp, ctx)
            before = bound_from_points(sig.points(), ctx)
            after = bound_from_points(rotate_update(sig, gp, theta).points(), ctx)
            assert after <= before
            assert abs(after - before) <= 1e-12


class TestShapeOnce:
    def test_two_point_analytic_optimum(self, rng):
        gamma = 10.0
        a01 = 0.45
        config = ShapingConfig(gamma=gamma, epsilon=1e-2, restarts=1, seed=3)
        ctx = ObjectiveContext(two_point_weights(a01), gamma)
        init = random_init(2, 1, np.random.default_rng(3))
        report, z = shape_once(init, config, ctx)
        pts = z.points()
        d2 = np.sum(np.abs(pts[0] - pts[1]) ** 2)
        assert d2 == pytest.approx(4.0, abs=1e-3)
        assert report.final_objective == pytest.approx(
            a01 * q_function(np.sqrt(2 * gamma)), rel=1e-4
        )
        assert report.stop_reason == "converged"

    def test_converged_init_returns_first_iteration(self):
        gamma = 10.0
        config = ShapingConfig(gamma=gamma, epsilon=0.5, restarts=1)  # generous threshold
        ctx = ObjectiveContext(two_point_weights(), gamma)
        init = StackedSignal(np.array([1.0 + 0j, -1.0 + 0j]), 2, 1)
        report, _ = shape_once(init, config, ctx)
        assert report.iterations == 1
        assert report.trace[0][0] == 1
        assert report.stop_reason == "converged"

    def test_invariants_along_run(self, rng):
        m, n, gamma = 6, 2, 10.0
        a = random_weights(m, rng)
        config = ShapingConfig(gamma=gamma, epsilon=1e-2, restarts=1, max_iterations=200)
        ctx = ObjectiveContext(a, gamma)
        records = []

        def hook(k, sig, g, gp, obj, ratio):
            records.append((sig.power(), abs(np.vdot(sig.z, gp)),
                            np.linalg.norm(g) * np.linalg.norm(sig.z), obj))

        report, _ = shape_once(random_init(m, n, np.random.default_rng(11)), config, ctx,
                               on_iteration=hook)
        objs = [o for _, o, _ in report.trace]
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))
        for power, ortho, scale, _ in records:
            assert power == pytest.approx(m, rel=1e-9)
            assert ortho <= 1e-12 * scale

    def test_off_sphere_init_rejected(self, rng):
        config = ShapingConfig(gamma=10.0)
        ctx = ObjectiveContext(two_point_weights(), 10.0)
        bad = StackedSignal(np.array([2.0 + 0j, -2.0 + 0j]), 2, 1)
        with pytest.raises(ValidationError, match="sphere"):
            shape_once(bad, config, ctx)

    def test_iteration_cap_reported(self, rng):
        a = random_weights(8, rng)
        config = ShapingConfig(gamma=10.0, epsilon=1e-9, max_iterations=5, restarts=1)
        ctx = ObjectiveContext(a, 10.0)
        report, _ = shape_once(random_init(8, 1, np.random.default_rng(4)), config, ctx)
        assert report.stop_reason == "iteration-cap"
        assert report.iterations == 5


class TestShape:
    def test_single_restart_equals_shape_once(self):
        a = two_point_weights()
        config = ShapingConfig(gamma=10.0, epsilon=1e-2, restarts=1, seed=5)
        result = shape(config, a, 2, 1)
        rng = np.random.default_rng(np.random.SeedSequence((5, 0)))
        init = random_init(2, 1, rng)
        report, z = shape_once(init, config, ObjectiveContext(a, 10.0))
        assert np.array_equal(result.constellation.points, z.points())
        assert result.report.trace == report.trace

    def test_deterministic_given_seed(self, rng):
        a = random_weights(4, rng)
        config = ShapingConfig(gamma=10.0, epsilon=1e-2, restarts=3, seed=17)
        r1 = shape(config, a, 4, 1)
        r2 = shape(config, a, 4, 1)
        assert np.array_equal(r1.constellation.points, r2.constellation.points)
        assert r1.all_final_objectives == r2.all_final_objectives
        assert r1.report == r2.report

    def test_final_objectives_spread_across_restarts(self, rng):
        a = random_weights(8, rng)
        config = ShapingConfig(gamma=10.0, epsilon=1e-2, restarts=5, seed=2)
        result = shape(config, a, 8, 1)
        finals = result.all_final_objectives
        assert len(finals) == 5
        assert max(finals) - min(finals) > 0

    def test_baseline_seeding_dominates_baseline(self):
        from semshape import load_similarity
        from conftest import FIXTURES

        a = load_similarity(FIXTURES / "a4.json")
        baseline = build_baseline(BaselineSpec("qpsk", 4, 1))
        gamma = 10.0
        config = ShapingConfig(
            gamma=gamma, epsilon=1e-2, restarts=2, seed=0, seed_with_baseline=baseline
        )
        result = shape(config, a, 4, 1)
        ctx = ObjectiveContext(a, gamma)
        assert result.report.final_objective <= semantic_loss_bound(baseline, ctx)
        assert len(result.all_final_objectives) == 3

    def test_phase_class_equivalence(self, rng):
        a = random_weights(4, rng)
        config = ShapingConfig(gamma=10.0, epsilon=1e-2, restarts=1, seed=9)
        result = shape(config, a, 4, 1)
        ctx = ObjectiveContext(a, 10.0)
        base = semantic_loss_bound(result.constellation, ctx)
        rotated = Constellation(result.constellation.points * np.exp(1j * 1.23))
        assert semantic_loss_bound(rotated, ctx) == pytest.approx(base, rel=1e-12)

    def test_power_constraint_active(self, rng):
        a = random_weights(4, rng)
        config = ShapingConfig(gamma=10.0, epsilon=1e-2, restarts=1, seed=1)
        result = shape(config, a, 4, 2)
        power = Constellation.average_power(result.constellation.points)
        assert power == pytest.approx(1.0, rel=1e-9)

    def test_dimension_mismatch_rejected(self, rng):
        a = random_weights(4, rng)
        with pytest.raises(ValidationError):
            shape(ShapingConfig(gamma=10.0), a, 5, 1)


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma": 0.0},
            {"gamma": 10.0, "epsilon": 0.0},
            {"gamma": 10.0, "epsilon": 1.0},
            {"gamma": 10.0, "max_iterations": 0},
            {"gamma": 10.0, "restarts": 0},
            {"gamma": 10.0, "seed": -1},
        ],
    )
    def test_invalid_config_rejected(self, kwargs):
        with pytest.raises(ValidationError):
            ShapingConfig(**kwargs)

    def test_invalid_line_search_rejected(self):
        with pytest.raises(ValidationError):
            LineSearchSettings(tol_theta=0.0)
