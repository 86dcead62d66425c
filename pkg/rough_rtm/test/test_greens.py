import sys; import os; sys.path.insert(1, os.path.join(os.getcwd(), "rough_rtm", "test")); sys.path.insert(1, os.getcwd())

import unittest

import numpy as np

from test_kernel import TestKernel
from rough_rtm.modules import greens, specfun
from rough_rtm.modules.errors import ConfigError, DomainError
from rough_rtm.modules.geometry import FlatProfile


class TestHalfPlane(TestKernel):

    def setUp(self) -> None:
        self.source = np.array([0.4, 1.3])
        self.line = np.column_stack([np.linspace(-6, 6, 25), np.zeros(25)])

    def test_dirichlet_vanishes_on_line(self):
        values = greens.halfplane_green('D', 3.0, self.line, self.source)
        self.assertTrue(np.all(values == 0))

    def test_neumann_flux_vanishes_on_line(self):
        _, grads = greens.halfplane_green('N', 3.0, self.line, self.source, gradient=True)
        self.assertTrue(np.all(grads[:, 1] == 0))

    def test_difference_is_image_source(self):
        x = np.array([[1.0, 0.5], [-2.0, 3.0]])
        image = self.source * np.array([1.0, -1.0])
        dirichlet = greens.halfplane_green('D', 3.0, x, self.source)
        neumann = greens.halfplane_green('N', 3.0, x, self.source)
        self.assertNpCloseWithDumping(neumann - dirichlet, 2 * specfun.phi(3.0, x, image), 1e-15,
                                      "the two kinds must differ by twice the image source")

    def test_penetrable_kind_rejected(self):
        with self.assertRaises(ConfigError):
            greens.halfplane_green('P', 3.0, self.line, self.source)


class TestPlaneWaves(TestKernel):

    def setUp(self) -> None:
        theta = -np.pi / 3
        self.direction = np.array([np.cos(theta), np.sin(theta)])
        self.line = np.column_stack([np.linspace(-6, 6, 25), np.zeros(25)])

    def test_dirichlet_vanishes_on_line(self):
        values = greens.planewave_background_impenetrable('D', 2.0, self.line, self.direction)
        self.assertTrue(np.all(values == 0))

    def test_neumann_flux_vanishes_on_line(self):
        _, grads = greens.planewave_background_impenetrable('N', 2.0, self.line, self.direction,
                                                            gradient=True)
        self.assertTrue(np.all(grads[:, 1] == 0))

    def test_upward_direction(self):
        with self.assertRaises(DomainError):
            greens.planewave_background_impenetrable('D', 2.0, self.line, np.array([0.0, 1.0]))

    def test_critical_angle(self):
        self.assertAlmostEqual(greens.critical_angle(2.0, 1.0), np.pi / 3, places=14)
        self.assertAlmostEqual(greens.critical_angle(1.0, 2.0), np.pi / 3, places=14)


class TestTwoLayerMedium(TestKernel):

    def test_sigma_and_sides(self):
        medium = greens.TwoLayerMedium(2.0, 1.0)
        self.assertEqual(medium.sigma, 3.0)
        self.assertEqual(list(medium.wavenumber_at(np.array([[0.0, 0.1], [0.0, -0.1]]))), [2.0, 1.0])

    def test_invalid_parameters(self):
        with self.assertRaises(DomainError):
            greens.TwoLayerMedium(0.0, 1.0)
        with self.assertRaises(ConfigError):
            greens.TwoLayerMedium(2.0, 1.0, 'wavy')
        with self.assertRaises(ConfigError):
            greens.TwoLayerMedium(2.0, 1.0, 'gammaR', -1.0)


class TestFlatImpenetrableSurface(TestKernel):
    """A flat line has vanishing boundary data: the solver must reproduce the half-plane fields."""

    def setUp(self) -> None:
        self.sources = np.array([[0.0, 1.0], [1.2, 0.6]])
        self.points = np.array([[-1.5, 0.3], [0.5, 2.0], [2.5, 0.8], [0.0, 0.05]])

    def test_point_source_oracle(self):
        for kind in ('D', 'N'):
            surface = greens.ImpenetrableSurface(FlatProfile(2.0), kind, 2.0)
            solution = surface.solve_point_sources(self.sources)
            exact = greens.halfplane_green(kind, 2.0, self.points[:, None, :], self.sources[None, :, :])
            with self.subTest(kind=kind):
                self.assertTrue(np.all(solution.image_mask))
                self.assertNpCloseWithDumping(solution.total(self.points), exact, 1e-12,
                                              f"flat {kind} solution differs from the half-plane Green's function")

    def test_planewave_scattered_field_vanishes(self):
        direction = np.array([[np.cos(-np.pi / 4), np.sin(-np.pi / 4)]])
        for kind in ('D', 'N'):
            surface = greens.ImpenetrableSurface(FlatProfile(2.0), kind, 2.0)
            scattered = surface.solve_plane_waves(direction).scattered(self.points)
            with self.subTest(kind=kind):
                self.assertNpCloseWithDumping(scattered, 0.0, 1e-12, "flat surface must not scatter")

    def test_points_below_surface(self):
        surface = greens.ImpenetrableSurface(FlatProfile(2.0), 'D', 2.0)
        with self.assertRaises(DomainError):
            surface.solve_point_sources(np.array([[0.0, -0.5]]))
        solution = surface.solve_point_sources(self.sources)
        with self.assertRaises(DomainError):
            solution.scattered(np.array([[0.0, -0.5]]))
        with self.assertRaises(DomainError):
            solution.far_field(np.array([[0.0, -1.0]]))


class TestSpecialSurface(TestKernel):

    def test_radius_zero_is_flat(self):
        self.assertIsNone(greens.gammaR_surface('D', 2.0, 2.0, 0.0))
        x, y = np.array([0.3, 0.9]), np.array([-1.0, 2.0])
        total, scattered = greens.background_green_gammaR_impenetrable('D', 2.0, 0.0, x, y)
        self.assertAlmostEqual(total, greens.halfplane_green('D', 2.0, x, y), places=14)
        self.assertAlmostEqual(total - scattered, specfun.phi(2.0, x, y), places=14)

    def test_planewave_backgrounds_at_radius_zero(self):
        d = np.array([0.0, -1.0])
        self.assertIsInstance(greens.planewave_background_gammaR('N', d, 2.0, 0.0), greens.ImpenetrablePlaneWave)
        self.assertIsInstance(greens.planewave_background_gammaR('P', d, 2.0, 0.0, 1.0),
                              greens.PenetrablePlaneWave)

    def test_solvers_are_cached(self):
        first = greens.gammaR_surface('D', 2.0, 2.0, 1.0)
        self.assertIs(first, greens.gammaR_surface('D', 2.0, 7.0, 1.0))

    def test_reciprocity(self):
        x, y = np.array([0.5, 1.0]), np.array([-1.5, 0.8])
        for kind in ('D', 'N'):
            forward, _ = greens.background_green_gammaR_impenetrable(kind, 2.0, 1.0, x, y)
            backward, _ = greens.background_green_gammaR_impenetrable(kind, 2.0, 1.0, y, x)
            with self.subTest(kind=kind):
                self.assertLess(abs(forward - backward) / abs(forward), 1e-3)

    def test_solved_field_interface(self):
        d = np.array([np.cos(-np.pi / 3), np.sin(-np.pi / 3)])
        field = greens.planewave_background_gammaR('D', d, 2.0, 1.0)
        self.assertEqual(field.surface, 'gammaR')
        points = np.array([[0.0, 0.5], [2.0, 1.0]])
        values, grads = field.evaluate(points, gradient=True)
        self.assertEqual(values.shape, (2,))
        self.assertEqual(grads.shape, (2, 2))
        self.assertNpCloseWithDumping(field.value(points), values, 1e-14, "value differs from evaluate")


class TestFlatPenetrableSurface(TestKernel):

    def test_no_contrast_cells(self):
        medium = greens.TwoLayerMedium(2.0, 1.0)
        surface = greens.PenetrableSurface(FlatProfile(1.0), medium)
        self.assertEqual(surface.cells.n, 0)
        sources = np.array([[0.0, 1.0], [0.5, -1.0]])
        points = np.array([[1.0, 0.5], [-0.5, -0.4]])
        solution = surface.solve_point_sources(sources)
        self.assertTrue(np.all(solution.scattered(points) == 0))
        self.assertNpCloseWithDumping(solution.total(points), medium.green().matrix(points, sources), 0.0,
                                      "total field must be v_0")


if __name__ == '__main__':
    unittest.main()
