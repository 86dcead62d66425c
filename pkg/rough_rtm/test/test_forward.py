import sys; import os; sys.path.insert(1, os.path.join(os.getcwd(), "rough_rtm", "test")); sys.path.insert(1, os.getcwd())

import unittest

import numpy as np

from test_kernel import TestKernel
from rough_rtm.modules import forward, specfun
from rough_rtm.modules.config import load_config
from rough_rtm.modules.errors import ConfigError, DomainError
from rough_rtm.modules.geometry import AcquisitionGeometry, BumpProfile, DipProfile, FlatProfile
from rough_rtm.modules.greens import ImpenetrableSurface, PenetrableSurface, TwoLayerMedium, gammaR_surface

SMALL_DIP = {
    'surface.profile': 'gammaR-dip',
    'surface.dip_radius': 5.0,
    'medium.k1': 2.0,
    'acquisition.source_radius': 6.0,
    'acquisition.receiver_radius': 7.0,
    'acquisition.n_sources': 4,
    'acquisition.n_receivers': 4,
    'imaging.x1_min': -1.0,
    'imaging.x1_max': 1.0,
    'imaging.x2_min': -0.5,
    'imaging.x2_max': 0.5,
    'imaging.n1': 4,
    'imaging.n2': 3,
}


def make_data(n_receivers: int = 4, n_sources: int = 3, seed: int = 7) -> forward.ScatterData:
    rng = np.random.default_rng(seed)
    matrix = rng.normal(size=(n_receivers, n_sources)) + 1j * rng.normal(size=(n_receivers, n_sources))
    acquisition = AcquisitionGeometry('near', 'upper', 3.0, 4.0, n_sources, n_receivers)
    return forward.ScatterData('near', 'D', matrix, acquisition, 2.0, 2.0, 1.0)


class TestNoise(TestKernel):

    def test_zero_noise_copies(self):
        data = make_data()
        noisy = forward.add_noise(data, 0.0, 5)
        self.assertIsNot(noisy.matrix, data.matrix)
        self.assertTrue(np.array_equal(noisy.matrix, data.matrix))
        self.assertEqual(noisy.seed, 5)

    def test_relative_level(self):
        data = make_data()
        for tau in (0.05, 0.2):
            noisy = forward.add_noise(data, tau, 11)
            level = np.linalg.norm(noisy.matrix - data.matrix) / np.linalg.norm(data.matrix)
            with self.subTest(tau=tau):
                self.assertAlmostEqual(level, tau, places=12)
                self.assertEqual(noisy.tau, tau)

    def test_seeds(self):
        data = make_data()
        first = forward.add_noise(data, 0.1, 3).matrix
        self.assertTrue(np.array_equal(first, forward.add_noise(data, 0.1, 3).matrix))
        self.assertFalse(np.array_equal(first, forward.add_noise(data, 0.1, 4).matrix))

    def test_negative_level(self):
        with self.assertRaises(ConfigError):
            forward.add_noise(make_data(), -0.1, 0)


class TestScatterData(TestKernel):

    def test_shape_mismatch(self):
        data = make_data()
        with self.assertRaises(ConfigError):
            data.replace(matrix=np.zeros((3, 3), dtype=complex)).validate()

    def test_non_finite(self):
        matrix = make_data().matrix.copy()
        matrix[0, 0] = np.nan
        with self.assertRaises(DomainError):
            make_data().replace(matrix=matrix).validate()

    def test_counts(self):
        data = make_data(5, 2)
        self.assertEqual((data.n_receivers, data.n_sources), (5, 2))


class TestImpenetrableSolvers(TestKernel):

    def test_flat_pointsource(self):
        sources = np.array([[0.0, 1.0], [0.7, 0.4]])
        points = np.array([[1.0, 0.5], [-2.0, 1.5], [0.3, 3.0]])
        images = sources * np.array([1.0, -1.0])
        for kind, sign in (('D', -1.0), ('N', 1.0)):
            near, far = forward.solve_impenetrable_pointsource(FlatProfile(1.0), kind, 2.0, sources)
            exact = sign * specfun.phi(2.0, points[:, None, :], images[None, :, :])
            with self.subTest(kind=kind):
                self.assertNpCloseWithDumping(near(points), exact, 1e-12, "scattered field of a flat line")
                self.assertEqual(far(np.array([[0.0, 1.0]])).shape, (1, 2))

    def test_planewave_directions(self):
        with self.assertRaises(DomainError):
            forward.solve_impenetrable_planewave(FlatProfile(1.0), 'D', 2.0, np.array([0.6, 0.8]))
        with self.assertRaises(DomainError):
            forward.solve_impenetrable_planewave(FlatProfile(1.0), 'D', 2.0, np.array([0.5, -0.5]))

    def test_penetrable_kind_rejected(self):
        with self.assertRaises(ConfigError):
            forward.solve_impenetrable_pointsource(FlatProfile(1.0), 'P', 2.0, np.array([0.0, 1.0]))


class TestPenetrableSolvers(TestKernel):

    def test_source_or_direction(self):
        medium = TwoLayerMedium(2.0, 1.0)
        with self.assertRaises(ConfigError):
            forward.solve_penetrable(FlatProfile(1.0), medium)
        with self.assertRaises(ConfigError):
            forward.solve_penetrable(FlatProfile(1.0), medium, np.array([0.0, 1.0]), np.array([0.0, -1.0]))

    def test_flat_interface_against_flat_background(self):
        fields = forward.solve_penetrable(FlatProfile(1.0), TwoLayerMedium(2.0, 1.0),
                                          source=np.array([[0.0, 1.0], [0.5, -1.0]]))
        self.assertIsNone(fields.background)
        points = np.array([[1.0, 0.5], [-0.5, -0.4]])
        self.assertTrue(np.all(fields.scattered(points) == 0))
        self.assertNpCloseWithDumping(fields.total(points), fields.background_total(points), 0.0,
                                      "no contrast, no scattering")

    def test_volume_potential_matches_scattered_difference(self):
        medium = TwoLayerMedium(2.0, 1.0, 'gammaR', 1.0)
        target = PenetrableSurface(FlatProfile(0.5), medium)
        background = PenetrableSurface(DipProfile(1.0), medium)
        sources = np.array([[0.0, 3.0], [1.0, 2.5]])
        receivers = np.array([[-1.0, 4.0], [2.0, 3.0], [0.5, -2.5]])
        vp = forward.volume_potential_vp(target, background, receivers, sources)
        expected = -background.solve_point_sources(sources).scattered(receivers)
        self.assertEqual(vp.shape, (3, 2))
        self.assertNpCloseWithDumping(vp, expected, 0.0, "V_P against the difference of scattered fields",
                                      rtol=1e-6)


class TestScatterMatrix(TestKernel):

    def test_identical_surfaces_give_zero_data(self):
        target = ImpenetrableSurface(DipProfile(2.0), 'D', 2.0)
        background = gammaR_surface('D', 2.0, 2.0, 2.0)
        acquisition = AcquisitionGeometry('near', 'upper', 3.0, 4.0, 4, 4)
        matrix = forward.scatter_matrix(target, background, acquisition, 2.0)
        self.assertTrue(np.all(matrix == 0))

    def test_threads_do_not_change_results(self):
        target = ImpenetrableSurface(BumpProfile('f1'), 'D', 2.0)
        background = gammaR_surface('D', 2.0, 2.0, 5.0)
        for acquisition in (AcquisitionGeometry('near', 'upper', 6.0, 7.0, 20, 20),
                            AcquisitionGeometry('far', 'upper', n_sources=20, n_receivers=20)):
            serial = forward.scatter_matrix(target, background, acquisition, 5.0, threads=1)
            pooled = forward.scatter_matrix(target, background, acquisition, 5.0, threads=3)
            with self.subTest(regime=acquisition.regime):
                self.assertEqual(serial.shape, (20, 20))
                self.assertNpCloseWithDumping(pooled, serial, 1e-14, "results depend on the thread count")
                self.assertGreater(np.max(np.abs(serial)), 0.0)

    def test_zero_dip_radius_uses_flat_line(self):
        self.assertIsNone(gammaR_surface('D', 2.0, 2.0, 0.0))
        near = AcquisitionGeometry('near', 'upper', 6.0, 7.0, 4, 4)
        far = AcquisitionGeometry('far', 'upper', n_sources=4, n_receivers=4)
        flat = ImpenetrableSurface(FlatProfile(1.0), 'D', 2.0)
        for acquisition in (near, far):
            with self.subTest(regime=acquisition.regime):
                self.assertTrue(np.all(forward.scatter_matrix(flat, None, acquisition, 0.0) == 0))
        bump = ImpenetrableSurface(BumpProfile('f1'), 'N', 2.0)
        reference = ImpenetrableSurface(FlatProfile(4.0), 'N', 2.0)
        matrix = forward.scatter_matrix(bump, None, near, 0.0)
        self.assertGreater(np.max(np.abs(matrix)), 0.0)
        self.assertNpCloseWithDumping(matrix, forward.scatter_matrix(bump, reference, near, 0.0), 0.0,
                                      "flat background of a missing dip")
        penetrable = PenetrableSurface(FlatProfile(1.0), TwoLayerMedium(2.0, 1.0))
        background = forward.flat_background(penetrable)
        self.assertEqual((background.medium.interface, background.cells.n), ('flat', 0))
        acquisition = AcquisitionGeometry('near', 'full', 6.0, 7.0, 4, 4)
        self.assertTrue(np.all(forward.scatter_matrix(penetrable, None, acquisition, 0.0) == 0))


class TestSynthesizeData(TestKernel):

    def test_special_surface_gives_zero_data(self):
        for regime in ('near', 'far'):
            overrides = dict(SMALL_DIP, **{'acquisition.regime': regime})
            data = forward.synthesize_data(load_config(overrides=overrides))
            with self.subTest(regime=regime):
                self.assertEqual((data.regime, data.kind, data.matrix.shape), (regime, 'D', (4, 4)))
                self.assertTrue(np.all(data.matrix == 0))
                self.assertEqual(data.tau, 0.0)


if __name__ == '__main__':
    unittest.main()
