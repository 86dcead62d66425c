import logging
import os
from typing import Dict, Optional

import numpy as np

from ..modules.config import RunConfig
from ..modules.data_io import read_kernel, write_kernel
from ..modules.errors import ConfigError
from ..modules.forward import ScatterData, add_noise, build_surface, synthesize_data
from ..modules.geometry import DipProfile, ImageGrid
from ..modules.greens import PenetrableSurface, RoughSurface, TwoLayerMedium, gammaR_surface
from ..modules.imaging import (
    IndicatorConfig, column_localization, expected_extremum, image_summary, indicator,
)
from ..modules.nystrom import BoundaryIntegralOperator, boundary_residual
from ..modules.volume import cell_spacing, layer_cells

logger = logging.getLogger(__name__)


class Experiment:
    """
    One imaging experiment: the measured surface, the special background
    surface, the data they produce and the indicator image.

    Attributes:
        config: Validated run configuration.
        kernel_cache: Optional RTMV file holding the volume kernel of the
            penetrable background. It is read when it matches the cells of
            the background and rewritten otherwise.
    """

    def __init__(self, config: RunConfig, kernel_cache: Optional[str] = None):
        self.config = config
        self.kernel_cache = kernel_cache
        self.options = config.options()
        self._background = None
        self._target = None

    def background(self) -> RoughSurface:
        if self._background is None:
            c = self.config
            if c.kind == 'P' and self.kernel_cache is not None:
                self._background = self._cached_penetrable_background()
            else:
                self._background = gammaR_surface(c.kind, c.k1, c.k2, c.dip_radius, self.options)
        return self._background

    def target(self) -> RoughSurface:
        if self._target is None:
            c = self.config
            self._target = build_surface(c.profile(), c.kind, c.k1, c.k2, self.options)
        return self._target

    def _cached_penetrable_background(self) -> PenetrableSurface:
        c = self.config
        medium = TwoLayerMedium(c.k1, c.k2, 'gammaR', c.dip_radius)
        profile = DipProfile(c.dip_radius)
        spacing = cell_spacing(c.k1, c.k2, self.options.cells_per_wavelength)
        centers = layer_cells(profile, medium.sigma, spacing).centers

        kernel = None
        if os.path.isfile(self.kernel_cache):
            k1, k2, targets, sources, values = read_kernel(self.kernel_cache)
            if (k1, k2) == (c.k1, c.k2) and targets.shape == centers.shape \
                    and np.array_equal(targets, centers) and np.array_equal(sources, centers):
                kernel = values
                logger.info("reusing the volume kernel from %s", self.kernel_cache)
            else:
                logger.warning("%s does not match the background cells, rebuilding", self.kernel_cache)

        surface = PenetrableSurface(profile, medium, self.options, kernel)
        if kernel is None:
            write_kernel(self.kernel_cache, c.k1, c.k2, centers, centers, surface.operator.kernel)
            logger.info("stored the volume kernel in %s", self.kernel_cache)
        return surface

    def synthesize(self, tau: float = None, seed: int = None) -> ScatterData:
        """Scattering data of the target against the background, with noise when tau > 0."""
        c = self.config
        data = synthesize_data(c, self.target(), self.background())
        tau = c.tau if tau is None else tau
        seed = c.seed if seed is None else seed
        if tau > 0:
            data = add_noise(data, tau, seed)
        return data

    def check_data(self, data: ScatterData) -> None:
        """Raises ConfigError naming the key when the data header contradicts the configuration."""
        c = self.config
        expected = {
            'medium.kind': (data.kind, c.kind),
            'medium.k1': (data.k1, c.k1),
            'medium.k2': (data.k2, c.k2),
            'surface.dip_radius': (data.dip_radius, c.dip_radius),
            'acquisition.n_sources': (data.n_sources, c['acquisition.n_sources']),
            'acquisition.n_receivers': (data.n_receivers, c['acquisition.n_receivers']),
        }
        if data.regime == 'near':
            expected['acquisition.source_radius'] = (data.acquisition.source_radius,
                                                     c['acquisition.source_radius'])
            expected['acquisition.receiver_radius'] = (data.acquisition.receiver_radius,
                                                       c['acquisition.receiver_radius'])
        for key, (found, wanted) in expected.items():
            if found != wanted:
                raise ConfigError(f"data header has {found}, configuration has {wanted}", key)

    def image(self, data: ScatterData, regime: str = None) -> ImageGrid:
        if regime is not None and regime != data.regime:
            raise ConfigError(f"data holds {data.regime}-field measurements, not {regime}",
                              'acquisition.regime')
        self.check_data(data)
        cfg = IndicatorConfig(self.config.grid(), self.options, self.config.threads, self.background())
        return indicator(data, cfg)

    def localization(self, grid: ImageGrid) -> float:
        """Fraction of perturbed columns whose extremum lies within half a wavelength of the surface."""
        tolerance = np.pi / self.config.k1
        return column_localization(grid, self.config.profile(), tolerance,
                                   expected_extremum(self.config.kind))

    def diagnostics(self) -> Dict[str, float]:
        """Condition estimates of both factorized systems and the residual for a unit right-hand side."""
        out = {}
        for label, surface in (('target', self.target()), ('background', self.background())):
            operator = surface.operator
            out[f'{label} condition'] = float(operator.condition)
            if isinstance(operator, BoundaryIntegralOperator):
                rhs = np.ones((operator.curve.n, 1), dtype=complex)
                out[f'{label} residual'] = boundary_residual(operator, operator.solve(rhs), rhs)
            else:
                rhs = np.ones((operator.cells.n, 1), dtype=complex)
                out[f'{label} residual'] = operator.residual(rhs, operator.solve(rhs))
        return out

    def summary(self, grid: ImageGrid) -> str:
        return image_summary(grid, self.config.kind)

    def run(self) -> ImageGrid:
        return self.image(self.synthesize())
