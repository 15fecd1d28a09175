import math
import unittest

import numpy as np

from tests.jc_test_case import JCTestCase

from info_gain import fibonacci_sphere, sphere_grid
from jc_dynamics import apply_channel
from qubit_init import (
    BallImage,
    IterationPlan,
    ball_image,
    ball_projections,
    channel_fixed_point,
    find_initialization_params,
    fixed_state_estimate,
    initialization_time,
    iterate_channel,
    meridian_rotation_check,
)
from qubit_states import (
    BlochVector,
    ConsistencyError,
    QubitDensity,
    SpherePoint,
    density_from_bloch,
    purity,
    rotate_z,
)

INIT_TAU_K3 = 5 * math.pi / 2
INIT_TAU_K4 = 7 * math.pi / 2


class TestIterationPlan(JCTestCase):
    def test_initialization_time(self):
        self.assertAlmostEqual(initialization_time(1), math.pi / 2)
        self.assertAlmostEqual(initialization_time(3), INIT_TAU_K3)
        with self.assertRaises(ValueError):
            initialization_time(0)

    def test_validation(self):
        for bad in (
            dict(tau=-1.0, alpha_modulus=0.5),
            dict(tau=1.0, alpha_modulus=-0.5),
            dict(tau=float("nan"), alpha_modulus=0.5),
            dict(tau=1.0, alpha_modulus=0.5, n_iterations=-1),
            dict(tau=1.0, alpha_modulus=0.5, n_iterations=1.5),
        ):
            with self.subTest(**bad):
                with self.assertRaises(ValueError):
                    IterationPlan(**bad)

    def test_builders(self):
        plan = IterationPlan.at_attractor(3, 0.6, n_iterations=2)
        self.assertAlmostEqual(plan.tau, INIT_TAU_K3)
        self.assertEqual(plan.with_phase(1.0).field_phase, 1.0)
        self.assertEqual(plan.with_iterations(5).n_iterations, 5)
        self.assertEqual(plan.coherent_field().modulus, 0.6)


class TestIteration(JCTestCase):
    def test_zero_iterations_is_identity(self):
        rho = QubitDensity.from_pure(self.plus_x)
        states = iterate_channel(rho, IterationPlan(INIT_TAU_K3, 0.6, n_iterations=0))
        self.assertEqual(len(states), 1)
        self.assertIs(states[0], rho)

    def test_single_iteration_is_one_channel_use(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6)
        rho = QubitDensity.from_pure(self.plus_y)
        out = iterate_channel(rho, plan)[-1]
        self.assertAllClose(out.matrix, apply_channel(rho, plan.channel()).matrix, atol=1e-15)

    def test_composition(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6, n_iterations=3)
        rho = QubitDensity.from_pure(self.excited)
        three = iterate_channel(rho, plan)
        one = iterate_channel(rho, plan.with_iterations(1))
        two_more = iterate_channel(one[-1], plan.with_iterations(2))
        self.assertAllClose(three[-1].matrix, two_more[-1].matrix, atol=1e-14)
        for state in three:
            state.validate(1e-10)

    def test_zero_time_plan_changes_nothing(self):
        plan = IterationPlan(0.0, 0.8, n_iterations=2)
        for q in self.random_qubits(4):
            rho = QubitDensity.from_pure(q)
            self.assertAllClose(iterate_channel(rho, plan)[-1].matrix, rho.matrix, atol=1e-10)

    def test_mixed_input_purity_regression(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6, n_iterations=3)
        states = iterate_channel(QubitDensity.maximally_mixed(), plan)
        expected = [0.5, 0.82835, 0.94549, 0.97551]
        for got, want in zip(map(purity, states), expected):
            self.assertAlmostEqual(got, want, delta=5e-5)


class TestBallImage(JCTestCase):
    def test_history_and_shapes(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6, n_iterations=3)
        image = ball_image(plan, n_points=40, workers=2)
        self.assertEqual(len(image.initial_points), 40)
        self.assertEqual(len(image.history[0]), 4)
        self.assertEqual(image.blochs_at().shape, (40, 3))
        self.assertAllClose(image.blochs_at(0), [p.to_bloch().as_array() for p in image.initial_points], atol=1e-10)
        single = ball_image(plan.with_iterations(1), n_points=40, workers=1)
        self.assertAllClose(image.blochs_at(1), single.blochs_at(), atol=1e-15)

    def test_no_iterations_reports_the_sphere(self):
        image = ball_image(IterationPlan(INIT_TAU_K3, 0.6, n_iterations=0), n_points=30)
        radii = np.linalg.norm(image.blochs_at(), axis=1)
        self.assertAllClose(radii, 1.0, atol=1e-12)

    def test_outside_ball_rejected(self):
        with self.assertRaises(ConsistencyError):
            BallImage([SpherePoint(0.0, 0.0)], [BlochVector(1.5, 0.0, 0.0)], IterationPlan(1.0, 0.5))
        with self.assertRaises(ValueError):
            BallImage([SpherePoint(0.0, 0.0)], [], IterationPlan(1.0, 0.5))

    def test_cloud_contracts_with_iterations(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6, n_iterations=3)
        image = ball_image(plan, n_points=200)
        diameters = [image.diameter(i) for i in range(4)]
        for before, after in zip(diameters, diameters[1:]):
            self.assertLessEqual(after, before + 1e-12)
        self.assertLess(diameters[3], diameters[1])
        star = channel_fixed_point(plan)
        self.assertLessEqual(
            image.centroid(3).distance(star), image.centroid(1).distance(star) + 1e-12
        )

    def test_small_alpha_collapses_to_a_point(self):
        image = ball_image(IterationPlan(INIT_TAU_K4, 0.2), n_points=200)
        self.assertLess(image.diameter(), 0.1)
        self.assertGreater(image.min_purity(), 0.95)

    def test_min_purity_grows_with_iterations(self):
        for alpha in (0.2, 0.4, 0.6, 0.8, 1.0):
            with self.subTest(alpha=alpha):
                image = ball_image(IterationPlan(INIT_TAU_K3, alpha, n_iterations=3), n_points=200)
                purities = [image.min_purity(i) for i in (1, 2, 3)]
                for before, after in zip(purities, purities[1:]):
                    self.assertGreater(after, before)

    def test_polar_angle_grows_with_alpha(self):
        low = ball_image(IterationPlan(INIT_TAU_K4, 0.2), n_points=100).centroid()
        high = ball_image(IterationPlan(INIT_TAU_K4, 0.4), n_points=100).centroid()
        self.assertGreater(high.polar_angle, low.polar_angle)

    def test_projections(self):
        image = ball_image(IterationPlan(INIT_TAU_K3, 0.6), n_points=20)
        proj = ball_projections(image)
        self.assertEqual(set(proj), {"x=0", "y=0", "z=0"})
        pts = image.blochs_at()
        self.assertTrue(np.array_equal(proj["x=0"][0], pts[:, 1]))
        self.assertTrue(np.array_equal(proj["z=0"][1], pts[:, 1]))

    def test_explicit_sampling(self):
        grid = sphere_grid(4, 4)
        image = ball_image(IterationPlan(INIT_TAU_K3, 0.6), grid)
        self.assertEqual(len(image.initial_points), grid.size)
        points = fibonacci_sphere(7)
        self.assertEqual(len(ball_image(IterationPlan(1.0, 0.5), points).final_blochs), 7)


class TestFixedStateEstimate(JCTestCase):
    def test_zero_time_keeps_the_sphere(self):
        centroid, dispersion, min_purity = fixed_state_estimate(IterationPlan(0.0, 1.0))
        self.assertAlmostEqual(dispersion, 2.0, delta=0.05)
        self.assertAlmostEqual(min_purity, 1.0, delta=1e-9)
        self.assertLess(centroid.radius, 0.02)

    def test_vacuum_limit_resets_to_ground(self):
        centroid, dispersion, _ = fixed_state_estimate(IterationPlan(math.pi / 2, 1e-3))
        self.assertLess(centroid.distance(BlochVector(0.0, 0.0, 1.0)), 1e-2)
        self.assertLess(dispersion, 1e-2)

    def test_more_iterations_tighten_the_cloud(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6)
        _, d1, _ = fixed_state_estimate(plan)
        _, d3, _ = fixed_state_estimate(plan.with_iterations(3))
        self.assertLess(d3, d1)


class TestFixedPoint(JCTestCase):
    def test_real_field(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6)
        star = channel_fixed_point(plan)
        out = apply_channel(density_from_bloch(star), plan.channel()).bloch()
        self.assertBlochClose(out, star, 1e-10)

    def test_phased_field(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6, field_phase=0.8)
        star = channel_fixed_point(plan)
        out = apply_channel(density_from_bloch(star), plan.channel()).bloch()
        self.assertBlochClose(out, star, 1e-9)
        self.assertBlochClose(star, rotate_z(channel_fixed_point(plan.with_phase(0.0)), 0.8), 1e-12)


class TestMeridianRotation(JCTestCase):
    def test_zero_phase(self):
        report = meridian_rotation_check(IterationPlan(INIT_TAU_K3, 0.6))
        self.assertTrue(report.ok)
        self.assertEqual(report.reason, "ok")
        self.assertEqual(report.n_points, 50)

    def test_quarter_turn(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6, field_phase=math.pi / 2, n_iterations=2)
        report = meridian_rotation_check(plan, n_points=20)
        self.assertTrue(report.ok, msg=f"max deviation {report.max_deviation:.3e}")

    def test_half_turn_mirrors_the_cloud(self):
        grid = sphere_grid(8, 8)
        plan = IterationPlan(INIT_TAU_K3, 0.6)
        base = ball_image(plan, grid).centroid()
        turned = ball_image(plan.with_phase(math.pi), grid).centroid()
        self.assertBlochClose(turned, BlochVector(-base.x, -base.y, base.z), 1e-8)

    def test_strict_mode_raises(self):
        plan = IterationPlan(INIT_TAU_K3, 0.6, field_phase=1.0)
        with self.assertRaises(ConsistencyError):
            meridian_rotation_check(plan, n_points=5, tol=0.0, strict=True)
        report = meridian_rotation_check(plan, n_points=5, tol=0.0)
        self.assertFalse(report.ok)
        self.assertEqual(report.reason, "consistency_violation")


class TestInitializationSearch(JCTestCase):
    def test_north_pole(self):
        result = find_initialization_params(SpherePoint(0.0, 0.0), n_scan=6, n_points=50)
        self.assertLessEqual(result.alpha, 0.1)
        self.assertLess(result.residual, 0.05)
        self.assertEqual(len(result.scan), 6)

    def test_reaches_target(self):
        target = SpherePoint(math.pi / 6, math.pi / 2)
        result = find_initialization_params(target, n_scan=8, n_points=50)
        self.assertTrue(result.ok, msg=f"residual {result.residual:.3f}")
        self.assertLess(result.residual, 0.05)
        self.assertAlmostEqual(result.achieved.azimuth, math.pi / 2, delta=0.1)

    def test_equator_target_needs_alpha_near_one(self):
        # measured: alpha = 0.99994, residual 0.213 rad
        result = find_initialization_params(SpherePoint(math.pi / 2, 0.0), k=3, n_iterations=3)
        self.assertAlmostEqual(result.alpha, 1.0, delta=0.02)
        self.assertAlmostEqual(result.residual, 0.213, delta=0.005)
        self.assertTrue(result.ok)

    def test_rejects_southern_targets(self):
        with self.assertRaises(ValueError):
            find_initialization_params(SpherePoint(2.0, 0.0))
        with self.assertRaises(ValueError):
            find_initialization_params(SpherePoint(0.5, 0.0), alpha_range=(1.0, 0.5))


if __name__ == "__main__":
    unittest.main()
