import sys; import os; sys.path.insert(1, os.path.join(os.getcwd(), "rough_rtm", "test")); sys.path.insert(1, os.getcwd())

import unittest

import numpy as np
import scipy.special

from test_kernel import TestKernel
from rough_rtm.modules import specfun
from rough_rtm.modules.errors import DomainError


class TestBessel(TestKernel):

    def setUp(self) -> None:
        # covers all three evaluation regimes and their borders
        self.x = np.concatenate([
            np.linspace(1e-3, 8.0, 97),
            np.linspace(8.0001, 25.0, 71),
            np.linspace(25.0001, 400.0, 53),
        ])

    def test_known_values(self):
        self.assertAlmostEqual(specfun.bessel_j(0, 1.0), 0.7651976866, places=9)
        self.assertAlmostEqual(specfun.bessel_y(0, 1.0), 0.0882569642, places=9)

    def test_against_scipy(self):
        references = {
            'J0': (lambda x: specfun.bessel_jy01(x)[0], scipy.special.j0),
            'J1': (lambda x: specfun.bessel_jy01(x)[1], scipy.special.j1),
            'Y0': (lambda x: specfun.bessel_jy01(x)[2], scipy.special.y0),
            'Y1': (lambda x: specfun.bessel_jy01(x)[3], scipy.special.y1),
        }
        for name, (mine, reference) in references.items():
            with self.subTest(function=name):
                self._test_against_reference(mine, reference, self.x, atol=1e-10, label=name)

    def test_wronskian(self):
        x = np.array([0.5, 2.0, 7.9, 12.0, 24.0, 30.0, 150.0])
        j0, j1, y0, y1 = specfun.bessel_jy01(x)
        self.assertNpCloseWithDumping(x * (j1 * y0 - j0 * y1), 2 / np.pi, 1e-10,
                                      "x (J1 Y0 - J0 Y1) must equal 2 / pi")
        self.assertAlmostEqual(float(j1[1] * y0[1] - j0[1] * y1[1]), 0.3183098862, places=9)

    def test_hankel_large_argument(self):
        h0 = specfun.hankel1(0, 500.0)
        self.assertAlmostEqual(abs(h0) * np.sqrt(500.0), 0.7978845608, delta=1e-3)

    def test_shapes_are_preserved(self):
        x = np.linspace(0.5, 30.0, 12).reshape(3, 4)
        for component in specfun.bessel_jy01(x):
            self.assertEqual(component.shape, (3, 4))
        self.assertIsInstance(specfun.bessel_j(1, 2.0), float)
        self.assertIsInstance(specfun.hankel1(1, 2.0), complex)

    def test_first_kind_at_zero(self):
        j0, j1 = specfun.bessel_j01(np.array([0.0, 1.0]))
        self.assertEqual(j0[0], 1.0)
        self.assertEqual(j1[0], 0.0)

    def test_second_kind_near_zero(self):
        self.assertLess(specfun.bessel_y(0, 1e-8), -11.0)
        leading = 2 / np.pi * (np.log(0.5e-8) + specfun.EULER_GAMMA)
        self.assertAlmostEqual(specfun.bessel_y(0, 1e-8), leading, places=10)

    def test_domain_errors(self):
        for bad in (0.0, -1.0, np.nan):
            with self.subTest(x=bad):
                with self.assertRaises(DomainError):
                    specfun.bessel_y(0, bad)
        with self.assertRaises(DomainError):
            specfun.bessel_j(2, 1.0)
        with self.assertRaises(DomainError):
            specfun.wavenumber(0.0)


class TestFundamentalSolution(TestKernel):

    def test_known_value(self):
        value = specfun.phi(1.0, np.array([1.0, 0.0]), np.array([0.0, 0.0]))
        self.assertAlmostEqual(value.real, -0.0220642411, places=9)
        self.assertAlmostEqual(value.imag, 0.1912994172, places=9)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=(20, 2)), rng.normal(size=(20, 2))
        self.assertNpCloseWithDumping(specfun.phi(3.0, x, y), specfun.phi(3.0, y, x), 0.0,
                                      "Phi must be symmetric")

    def test_gradient_matches_finite_differences(self):
        k, h = 2.5, 1e-6
        x, y = np.array([0.3, -0.7]), np.array([-1.1, 0.4])
        grad = specfun.phi_grad(k, x, y)
        for axis in range(2):
            step = np.zeros(2)
            step[axis] = h
            fd = (specfun.phi(k, x + step, y) - specfun.phi(k, x - step, y)) / (2 * h)
            with self.subTest(axis=axis):
                self.assertAlmostEqual(abs(grad[axis] - fd), 0.0, places=7)
        value, grad2 = specfun.phi_with_grad(k, x, y)
        self.assertEqual(value, specfun.phi(k, x, y))
        self.assertNpCloseWithDumping(grad, grad2, 0.0, "phi_with_grad differs from phi_grad")

    def test_coincident_points(self):
        with self.assertRaises(DomainError):
            specfun.phi(1.0, np.zeros(2), np.zeros(2))

    def test_disc_average(self):
        # midpoint rule on a fine polar grid around the singularity
        k, area = 4.0, 0.01
        a = np.sqrt(area / np.pi)
        n_r = 2000
        r = (np.arange(n_r) + 0.5) * a / n_r
        h0 = scipy.special.hankel1(0, k * r)
        integral = 0.25j * 2 * np.pi * np.sum(h0 * r) * a / n_r
        self.assertAlmostEqual(abs(specfun.phi_disc_average(k, area) - integral / area), 0.0, places=4)


if __name__ == '__main__':
    unittest.main()
