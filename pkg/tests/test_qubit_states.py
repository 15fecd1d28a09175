import math
import unittest

import numpy as np
from scipy.special import gammaln

from tests.jc_test_case import JCTestCase

from qubit_states import (
    BlochVector,
    CoherentField,
    EvolutionParams,
    JCReadoutError,
    NonPhysicalStateError,
    PureQubit,
    QubitDensity,
    SpherePoint,
    TruncationError,
    bloch_from_density,
    bloch_from_pure,
    density_from_bloch,
    fock_sum,
    hard_cap,
    poisson_weights,
    purity,
    rotate_z,
    sphere_point_to_qubit,
)


class TestQubitContainers(JCTestCase):
    def test_unnormalized_qubit_rejected(self):
        with self.assertRaises(NonPhysicalStateError) as cm:
            PureQubit(1, 1)
        self.assertIsInstance(cm.exception, ValueError)
        self.assertEqual(cm.exception.reason, "non_physical_state")

    def test_normalized_rejects_zero_vector(self):
        with self.assertRaises(NonPhysicalStateError):
            PureQubit.normalized(0, 0)

    def test_bloch_axes(self):
        cases = [
            (self.ground, (0, 0, 1)),
            (self.excited, (0, 0, -1)),
            (self.plus_x, (1, 0, 0)),
            (self.plus_y, (0, 1, 0)),
        ]
        for q, expected in cases:
            with self.subTest(q=q):
                self.assertAllClose(bloch_from_pure(q).as_array(), expected, atol=1e-15)

    def test_sphere_point_matches_bloch_angles(self):
        rng = np.random.default_rng(1)
        for theta, phi in zip(rng.uniform(0, math.pi, 20), rng.uniform(0, 2 * math.pi, 20)):
            p = SpherePoint(theta, phi)
            self.assertBlochClose(bloch_from_pure(sphere_point_to_qubit(p)), p.to_bloch(), 1e-14)
            v = p.to_bloch()
            self.assertAlmostEqual(v.polar_angle, theta, delta=1e-12)
            self.assertAlmostEqual(v.azimuth, phi, delta=1e-12)

    def test_sphere_point_ranges(self):
        self.assertAlmostEqual(SpherePoint(1.0, 2 * math.pi + 0.5).phi, 0.5, delta=1e-12)
        with self.assertRaises(ValueError):
            SpherePoint(4.0, 0.0)

    def test_sphere_point_clamps_rounding_at_both_poles(self):
        self.assertEqual(SpherePoint(-1e-13, 0.0).theta, 0.0)
        self.assertEqual(SpherePoint(math.pi + 1e-13, 0.0).theta, math.pi)
        with self.assertRaises(ValueError):
            SpherePoint(-1e-6, 0.0)

    def test_density_bloch_roundtrip(self):
        for q in self.random_qubits(10):
            rho = QubitDensity.from_pure(q)
            rho.validate()
            self.assertBlochClose(bloch_from_density(rho), bloch_from_pure(q), 1e-14)
            back = density_from_bloch(bloch_from_density(rho))
            self.assertAllClose(back.matrix, rho.matrix, atol=1e-14)
            self.assertAlmostEqual(purity(rho), 1.0, delta=1e-14)

    def test_density_from_bloch_rejects_outside_ball(self):
        with self.assertRaises(NonPhysicalStateError):
            density_from_bloch(BlochVector(0.8, 0.8, 0.0))

    def test_validate_flags_bad_matrices(self):
        with self.assertRaises(NonPhysicalStateError):
            QubitDensity([[1, 0.3], [0, 0]]).validate()
        with self.assertRaises(NonPhysicalStateError):
            QubitDensity([[1.2, 0], [0, -0.2]]).validate()
        with self.assertRaises(NonPhysicalStateError):
            QubitDensity([[1.0, 0], [0, 0.5]]).validate()

    def test_maximally_mixed(self):
        rho = QubitDensity.maximally_mixed()
        self.assertEqual(purity(rho), 0.5)
        self.assertEqual(rho.bloch().radius, 0.0)

    def test_rotate_z(self):
        self.assertBlochClose(
            rotate_z(BlochVector(1, 0, 0.3), math.pi / 2), BlochVector(0, 1, 0.3), 1e-15
        )


class TestFockSum(JCTestCase):
    def test_exact_rounding(self):
        self.assertEqual(fock_sum([1e16, 1.0, -1e16]), 1.0)

    def test_axis_and_complex(self):
        out = fock_sum(np.ones((3, 4)), axis=0)
        self.assertEqual(out.shape, (4,))
        self.assertTrue(np.all(out == 3.0))
        self.assertEqual(fock_sum([1 + 2j, 3 - 1j]), 4 + 1j)


class TestPoissonWeights(JCTestCase):
    def test_vacuum(self):
        w, n_max = poisson_weights(0.0)
        self.assertEqual(n_max, 0)
        self.assertEqual(w.tolist(), [1.0])

    def test_matches_log_gamma(self):
        for alpha in (0.3, 1.0, 4.0, 10.0):
            with self.subTest(alpha=alpha):
                w, n_max = poisson_weights(alpha)
                n = np.arange(n_max + 1)
                ref = np.exp(-alpha**2 + 2 * n * math.log(alpha) - gammaln(n + 1))
                self.assertAllClose(w, ref, rtol=1e-10)

    def test_tail_certificate(self):
        for alpha in (0.5, 2.0, 6.0, 10.0):
            for tol in (1e-6, 1e-12):
                with self.subTest(alpha=alpha, tol=tol):
                    w, n_max = poisson_weights(alpha, tol)
                    self.assertLessEqual(1.0 - fock_sum(w), tol + 5e-13)
                    self.assertLessEqual(n_max, hard_cap(alpha))

    def test_mean_photon_number(self):
        for alpha in (0.1, 1.0, 3.0, 10.0):
            with self.subTest(alpha=alpha):
                w, n_max = poisson_weights(alpha)
                mean = fock_sum(np.arange(n_max + 1) * w)
                self.assertAlmostEqual(mean, alpha**2, delta=1e-9 * max(1.0, alpha**2))

    def test_hard_cap(self):
        with self.assertRaises(TruncationError) as cm:
            poisson_weights(1.0, 1e-300)
        self.assertIsInstance(cm.exception, JCReadoutError)
        self.assertEqual(cm.exception.reason, "truncation_failure")

    def test_bad_arguments(self):
        with self.assertRaises(ValueError):
            poisson_weights(-1.0)
        with self.assertRaises(ValueError):
            poisson_weights(1.0, 0.0)


class TestCoherentField(JCTestCase):
    def test_from_modulus(self):
        f = CoherentField.from_modulus(2.0, phase=2 * math.pi + 0.25)
        self.assertAlmostEqual(f.phase, 0.25, delta=1e-12)
        self.assertFalse(f.is_real)
        self.assertAlmostEqual(abs(f.alpha), 2.0, delta=1e-12)
        self.assertAllClose(np.abs(f.amplitudes()) ** 2, f.weights, rtol=1e-12)
        self.assertTrue(CoherentField.from_modulus(2.0).is_real)

    def test_with_guard(self):
        f = CoherentField.from_modulus(1.5)
        g = f.with_guard(2)
        self.assertEqual(g.n_max, f.n_max + 2)
        self.assertEqual(len(g.weights), g.n_max + 1)
        self.assertAllClose(g.weights[: f.n_max + 1], f.weights, rtol=1e-15)
        self.assertIs(f.with_guard(0), f)


class TestEvolutionParams(JCTestCase):
    def test_validation(self):
        with self.assertRaises(ValueError):
            EvolutionParams(-1.0)
        with self.assertRaises(ValueError):
            EvolutionParams(float("nan"))
        self.assertEqual(EvolutionParams(3.0, g=2.0).time, 1.5)


if __name__ == "__main__":
    unittest.main()
