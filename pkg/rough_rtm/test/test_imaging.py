import sys; import os; sys.path.insert(1, os.path.join(os.getcwd(), "rough_rtm", "test")); sys.path.insert(1, os.getcwd())

import unittest

import numpy as np

from test_kernel import TestKernel
from rough_rtm.modules import imaging
from rough_rtm.modules.errors import ConfigError, DomainError
from rough_rtm.modules.config import load_config
from rough_rtm.modules.forward import ScatterData, synthesize_data
from rough_rtm.modules.geometry import AcquisitionGeometry, FlatProfile, ImageGrid, acquisition_points
from rough_rtm.modules.greens import gammaR_surface
from rough_rtm.modules.nystrom import far_field_constant


def small_grid() -> ImageGrid:
    return ImageGrid(-0.5, 0.5, -0.3, 0.3, 3, 2)


def zero_data(kind: str = 'D', regime: str = 'near', aperture: str = 'upper') -> ScatterData:
    acquisition = AcquisitionGeometry(regime, aperture, 2.0, 3.0, 4, 4)
    return ScatterData(regime, kind, np.zeros((4, 4), dtype=complex), acquisition, 2.0,
                       1.0 if kind == 'P' else 2.0, 1.0)


def random_data(kind: str = 'D', regime: str = 'near', aperture: str = 'upper', seed: int = 3) -> ScatterData:
    rng = np.random.default_rng(seed)
    matrix = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    acquisition = AcquisitionGeometry(regime, aperture, 2.0, 2.0, 4, 4)
    return ScatterData(regime, kind, matrix, acquisition, 2.0, 1.0 if kind == 'P' else 2.0, 1.0)


class TestIndicatorAlgebra(TestKernel):
    """Random data against the closed-form correlations of the indicators."""

    def setUp(self) -> None:
        self.cfg = imaging.IndicatorConfig(small_grid())
        self.data = random_data()
        self.other = random_data(seed=8)

    def _fields(self, data: ScatterData, incidence: str = 'point'):
        surface = self.cfg.background_for(data)
        sources, receivers = acquisition_points(data.acquisition, data.dip_radius)
        if incidence == 'plane':
            sources, receivers = -sources, -receivers
        points = self.cfg.grid.points()
        return (imaging.background_fields(surface, points, sources, incidence),
                imaging.background_fields(surface, points, receivers, incidence))

    def test_linear_in_data(self):
        combined = self.data.replace(matrix=1.5 * self.data.matrix - 0.25 * self.other.matrix)
        left = imaging.indicator(combined, self.cfg).values
        right = 1.5 * imaging.indicator(self.data, self.cfg).values \
            - 0.25 * imaging.indicator(self.other, self.cfg).values
        self.assertNpCloseWithDumping(left, right, 1e-12 * np.max(np.abs(right)), "indicator is not linear")

    def test_near_weighting_and_rotation(self):
        gs, gr = self._fields(self.data)
        weight = self.data.acquisition.source_weight() * self.data.acquisition.receiver_weight()
        correlation = weight * np.einsum('zs,zr,rs->z', gs, gr, np.conj(self.data.matrix))
        scale = np.max(np.abs(correlation)) * 4.0
        image = imaging.indicator(self.data, self.cfg).values.ravel()
        self.assertNpCloseWithDumping(image, -4.0 * np.imag(correlation), 1e-12 * scale,
                                      "near-field indicator weighting")
        rotated = imaging.indicator(self.data.replace(matrix=1j * self.data.matrix), self.cfg).values.ravel()
        self.assertNpCloseWithDumping(rotated, 4.0 * np.real(correlation), 1e-12 * scale,
                                      "i V must give the real part of the correlation")

    def test_far_weighting(self):
        data = random_data(regime='far')
        ws, wr = self._fields(data, 'plane')
        weight = data.acquisition.source_weight() * data.acquisition.receiver_weight()
        gamma = far_field_constant(2.0)
        correlation = gamma * weight * np.einsum('zs,zr,rs->z', ws, wr, np.conj(data.matrix))
        expected = -4.0 * abs(gamma) ** 2 * np.imag(correlation)
        image = imaging.indicator(data, self.cfg).values.ravel()
        self.assertNpCloseWithDumping(image, expected, 1e-12 * np.max(np.abs(expected)),
                                      "far-field indicator weighting")

    def test_penetrable_weighting(self):
        data = random_data('P', aperture='full')
        gs, gr = self._fields(data)
        weight = data.acquisition.source_weight() * data.acquisition.receiver_weight()
        sources, receivers = acquisition_points(data.acquisition, data.dip_radius)
        k_s = np.where(sources[:, 1] >= 0, 2.0, 1.0)
        k_r = np.where(receivers[:, 1] >= 0, 2.0, 1.0)
        correlation = weight * np.einsum('zs,zr,rs->z', gs * k_s, gr * k_r, np.conj(data.matrix))
        image = imaging.indicator(data, self.cfg).values.ravel()
        self.assertNpCloseWithDumping(image, -np.imag(correlation), 1e-12 * np.max(np.abs(correlation)),
                                      "penetrable indicator weighting")

    def test_swapping_sources_and_receivers(self):
        # sources and receivers share one circle
        swapped = self.data.replace(matrix=self.data.matrix.T.copy())
        image = imaging.indicator(self.data, self.cfg).values
        self.assertNpCloseWithDumping(imaging.indicator(swapped, self.cfg).values, image,
                                      1e-12 * np.max(np.abs(image)), "roles of sources and receivers")

    def test_relabelling_invariance(self):
        gs, gr = self._fields(self.data)
        rng = np.random.default_rng(5)
        p, q = rng.permutation(4), rng.permutation(4)
        reference = imaging._correlate(gs, gr, self.data.matrix)
        permuted = imaging._correlate(gs[:, p], gr[:, q], self.data.matrix[np.ix_(q, p)])
        self.assertNpCloseWithDumping(permuted, reference, 1e-12 * np.max(np.abs(reference)),
                                      "correlation depends on the labelling")


class TestLocalization(TestKernel):

    def test_single_bump(self):
        config = load_config(overrides={
            'surface.profile': 'f2',
            'surface.dip_radius': 8.0,
            'medium.k1': 5.0,
            'acquisition.source_radius': 10.0,
            'acquisition.receiver_radius': 12.0,
            'acquisition.n_sources': 64,
            'acquisition.n_receivers': 64,
            'imaging.x1_min': -5.0,
            'imaging.x1_max': 5.0,
            'imaging.x2_min': -1.5,
            'imaging.x2_max': 1.5,
            'imaging.n1': 21,
            'imaging.n2': 25,
        })
        data = synthesize_data(config)
        image = imaging.indicator(data, imaging.IndicatorConfig(config.grid(), config.options()))
        wavelength = 2 * np.pi / 5.0
        self.assertGreaterEqual(imaging.column_localization(image, config.profile(), wavelength, 'max'), 0.8)


class TestIndicator(TestKernel):

    def test_zero_data_gives_zero_image(self):
        cfg = imaging.IndicatorConfig(small_grid())
        image = imaging.indicator(zero_data(), cfg)
        self.assertEqual(image.values.shape, (2, 3))
        self.assertTrue(np.all(image.values == 0))
        self.assertEqual(image.metadata['indicator'], 'near-impenetrable')
        self.assertEqual(image.metadata['kind'], 'D')

    def test_regime_mismatch(self):
        cfg = imaging.IndicatorConfig(small_grid())
        with self.assertRaises(ConfigError):
            imaging.indicator_far(zero_data(), cfg)
        with self.assertRaises(ConfigError):
            imaging.indicator_near_impenetrable(zero_data(regime='far'), cfg)

    def test_penetrable_needs_full_circle(self):
        cfg = imaging.IndicatorConfig(small_grid())
        with self.assertRaises(ConfigError):
            imaging.indicator_near_penetrable(zero_data('P'), cfg)

    def test_background_kind_mismatch(self):
        cfg = imaging.IndicatorConfig(small_grid(), background=gammaR_surface('D', 2.0, 2.0, 1.0))
        with self.assertRaises(ConfigError):
            imaging.indicator(zero_data('N'), cfg)

    def test_grid_outside_dip(self):
        cfg = imaging.IndicatorConfig(ImageGrid(-2.0, 2.0, -0.3, 0.3, 3, 2))
        with self.assertRaises(ConfigError):
            imaging.indicator(zero_data(), cfg)

    def test_threads_do_not_change_background_fields(self):
        surface = gammaR_surface('D', 2.0, 2.0, 1.0)
        points = small_grid().points()
        theta = np.linspace(0.2, 2.9, 20)
        positions = 2.0 * np.column_stack([np.cos(theta), np.sin(theta)])
        serial = imaging.background_fields(surface, points, positions, 'point', 1)
        pooled = imaging.background_fields(surface, points, positions, 'point', 4)
        self.assertEqual(serial.shape, (6, 20))
        self.assertNpCloseWithDumping(pooled, serial, 1e-14, "results depend on the thread count")


class TestImageTools(TestKernel):

    def setUp(self) -> None:
        self.grid = ImageGrid(-1.0, 1.0, -1.0, 1.0, 5, 9)

    def test_normalize(self):
        grid = ImageGrid(0.0, 1.0, 0.0, 1.0, 3, 2).with_values(np.arange(6.0).reshape(2, 3))
        scaled = imaging.normalize_image(grid)
        self.assertEqual(scaled.values.min(), -1.0)
        self.assertEqual(scaled.values.max(), 1.0)
        self.assertEqual((scaled.metadata['original_min'], scaled.metadata['original_max']), (0.0, 5.0))
        with self.assertRaises(DomainError):
            imaging.normalize_image(grid.with_values(np.ones((2, 3))))

    def test_expected_extremum(self):
        self.assertEqual(imaging.expected_extremum('D'), 'max')
        self.assertEqual(imaging.expected_extremum('N'), 'min')
        self.assertEqual(imaging.expected_extremum('P'), 'max')

    def test_column_localization(self):
        # ridge along x2 = 0
        values = -np.abs(self.grid.x2)[:, None] * np.ones(self.grid.n1)[None, :]
        image = self.grid.with_values(values)
        profile = FlatProfile(2.0)
        self.assertEqual(imaging.column_localization(image, profile, 0.1, 'max'), 1.0)
        self.assertEqual(imaging.column_localization(image, profile, 0.1, 'min'), 0.0)
        with self.assertRaises(ConfigError):
            imaging.column_localization(image, profile, 0.1, 'saddle')

    def test_compare_near_far(self):
        image = self.grid.with_values(np.linspace(-1, 2, 45).reshape(9, 5))
        self.assertEqual(imaging.compare_near_far(image, image), 0.0)
        with self.assertRaises(DomainError):
            imaging.compare_near_far(image, ImageGrid(n1=2, n2=2).with_values(np.ones((2, 2))))

    def test_summary(self):
        values = np.zeros((9, 5))
        values[6, 1] = 2.0
        values[2, 3] = -3.0
        image = self.grid.with_values(values)
        self.assertTrue(imaging.image_summary(image, 'D').startswith("argmax at (-0.5000, 0.5000)"))
        self.assertTrue(imaging.image_summary(image, 'N').startswith("argmin at (0.5000, -0.5000)"))


if __name__ == '__main__':
    unittest.main()
