"""
Reverse time migration indicators.

Back-propagating the conjugated data through the background and
correlating with the incident background field collapses to closed forms,
so every indicator is a double sum over sources and receivers of
background fields at the sampling points times conj(data):

    near, impenetrable   -k1^2 Im{ w_s w_r sum G(z, x_s) G(z, x_r) conj V }
    near, penetrable     -Im{ w_s w_r sum k(x_r) k(x_s) G_P(z, x_s) G_P(z, x_r) conj V }
    far,  impenetrable   -k1^2 |g1|^2 Im{ g1 w_s w_r sum w(z, -x_s) w(z, -x_r) conj V }
    far,  penetrable     -Im{ w_s w_r sum k(x_r) k(x_s) |g(x_r)|^2 g(x_s) w(z, -x_s) w(z, -x_r) conj V }

with w_s, w_r the trapezoid weights of the acquisition circles or direction sets.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .forward import ScatterData, SOURCE_BATCH
from .geometry import ImageGrid, SurfaceProfile, acquisition_points
from .greens import IMPENETRABLE_KINDS, RoughSurface, SolverOptions, gammaR_surface
from .nystrom import far_field_constant

logger = logging.getLogger(__name__)


@dataclass
class IndicatorConfig:
    """
    Sampling grid, solver options and worker count of an imaging run.
    background overrides the special-surface solver built from the data header.
    """
    grid: ImageGrid
    options: SolverOptions = SolverOptions()
    threads: int = 1
    background: Optional[RoughSurface] = None

    def background_for(self, data: ScatterData) -> RoughSurface:
        if self.background is not None:
            if self.background.kind != data.kind:
                raise ConfigError(f"background kind {self.background.kind} does not match data kind "
                                  f"{data.kind}", "medium.kind")
            return self.background
        surface = gammaR_surface(data.kind, data.k1, data.k2, data.dip_radius, self.options)
        if surface is None:
            raise ConfigError("imaging needs a positive dip radius", "surface.dip_radius")
        return surface


def _check(data: ScatterData, cfg: IndicatorConfig, regime: str, kinds) -> None:
    data.validate()
    if data.regime != regime:
        raise ConfigError(f"expected {regime}-field data, got {data.regime}", "acquisition.regime")
    if data.kind not in kinds:
        raise ConfigError(f"data kind {data.kind} not accepted here", "medium.kind")
    source_radius = data.acquisition.source_radius if regime == 'near' else None
    cfg.grid.validate(data.dip_radius, source_radius)


def background_fields(surface: RoughSurface, points: np.ndarray, positions: np.ndarray,
                      incidence: str, threads: int = 1) -> np.ndarray:
    """
    Total background fields at points (M, 2) for point sources at positions
    (incidence 'point') or incident directions (incidence 'plane'); returns (M, N).
    Batches are fixed, so the result does not depend on the number of threads.
    """
    out = np.empty((len(points), len(positions)), dtype=complex)
    batches = [np.arange(start, min(start + SOURCE_BATCH, len(positions)))
               for start in range(0, len(positions), SOURCE_BATCH)]

    def job(batch):
        if incidence == 'point':
            solution = surface.solve_point_sources(positions[batch])
        else:
            solution = surface.solve_plane_waves(positions[batch])
        return solution.total(points)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for batch, block in zip(batches, pool.map(job, batches)):
            out[:, batch] = block
    return out


def _correlate(source_fields: np.ndarray, receiver_fields: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """sum_r sum_s G(z, x_r) G(z, x_s) conj(V[r, s]) for every z; fixed summation order."""
    inner = source_fields @ np.conj(matrix).T
    return np.sum(receiver_fields * inner, axis=1)


def _side_wavenumbers(data: ScatterData, positions: np.ndarray) -> np.ndarray:
    return np.where(positions[:, 1] >= 0, data.k1, data.k2)


def _image(grid: ImageGrid, values: np.ndarray, data: ScatterData, name: str, start: float) -> ImageGrid:
    image = grid.with_values(values, indicator=name, kind=data.kind, regime=data.regime,
                             tau=data.tau, seed=data.seed)
    logger.info("%s indicator on %dx%d grid in %.2fs", name, grid.n2, grid.n1, time.perf_counter() - start)
    return image


def indicator_near_impenetrable(data: ScatterData, cfg: IndicatorConfig) -> ImageGrid:
    start = time.perf_counter()
    _check(data, cfg, 'near', IMPENETRABLE_KINDS)
    surface = cfg.background_for(data)
    sources, receivers = acquisition_points(data.acquisition, data.dip_radius)
    points = cfg.grid.points()
    gs = background_fields(surface, points, sources, 'point', cfg.threads)
    gr = background_fields(surface, points, receivers, 'point', cfg.threads)
    weight = data.acquisition.source_weight() * data.acquisition.receiver_weight()
    values = -data.k1 ** 2 * np.imag(weight * _correlate(gs, gr, data.matrix))
    return _image(cfg.grid, values, data, 'near-impenetrable', start)


def indicator_near_penetrable(data: ScatterData, cfg: IndicatorConfig) -> ImageGrid:
    start = time.perf_counter()
    _check(data, cfg, 'near', ('P',))
    if data.acquisition.aperture != 'full':
        raise ConfigError("penetrable imaging needs the full circle", "acquisition.aperture")
    surface = cfg.background_for(data)
    sources, receivers = acquisition_points(data.acquisition, data.dip_radius)
    points = cfg.grid.points()
    gs = background_fields(surface, points, sources, 'point', cfg.threads)
    gs = gs * _side_wavenumbers(data, sources)[None, :]
    gr = background_fields(surface, points, receivers, 'point', cfg.threads)
    gr = gr * _side_wavenumbers(data, receivers)[None, :]
    weight = data.acquisition.source_weight() * data.acquisition.receiver_weight()
    values = -np.imag(weight * _correlate(gs, gr, data.matrix))
    return _image(cfg.grid, values, data, 'near-penetrable', start)


def indicator_far(data: ScatterData, cfg: IndicatorConfig) -> ImageGrid:
    """
    Far-field indicator. data[r, s] is the far-field difference in direction
    x_s for the incident direction -x_r.
    """
    start = time.perf_counter()
    _check(data, cfg, 'far', ('D', 'N', 'P'))
    surface = cfg.background_for(data)
    sources, receivers = acquisition_points(data.acquisition, data.dip_radius)
    points = cfg.grid.points()
    ws = background_fields(surface, points, -sources, 'plane', cfg.threads)
    wr = background_fields(surface, points, -receivers, 'plane', cfg.threads)
    weight = data.acquisition.source_weight() * data.acquisition.receiver_weight()
    if data.kind in IMPENETRABLE_KINDS:
        gamma = far_field_constant(data.k1)
        correlation = _correlate(ws, wr, data.matrix)
        values = -data.k1 ** 2 * abs(gamma) ** 2 * np.imag(gamma * weight * correlation)
    else:
        k_s, k_r = _side_wavenumbers(data, sources), _side_wavenumbers(data, receivers)
        gamma_s = np.array([far_field_constant(k) for k in k_s])
        gamma_r = np.array([far_field_constant(k) for k in k_r])
        ws = ws * (k_s * gamma_s)[None, :]
        wr = wr * (k_r * np.abs(gamma_r) ** 2)[None, :]
        values = -np.imag(weight * _correlate(ws, wr, data.matrix))
    return _image(cfg.grid, values, data, f'far-{data.kind}', start)


def indicator(data: ScatterData, cfg: IndicatorConfig) -> ImageGrid:
    """Dispatches on the regime and kind of the data."""
    if data.regime == 'far':
        return indicator_far(data, cfg)
    if data.kind == 'P':
        return indicator_near_penetrable(data, cfg)
    return indicator_near_impenetrable(data, cfg)


def normalize_image(grid: ImageGrid) -> ImageGrid:
    """Affine map of the values onto [-1, 1]; the original range goes to the metadata."""
    values = grid.values
    low, high = float(np.min(values)), float(np.max(values))
    if not high > low:
        raise DomainError(f"cannot normalize a constant grid (value {low})")
    scaled = 2 * (values - low) / (high - low) - 1
    return grid.with_values(scaled, original_min=low, original_max=high)


def expected_extremum(kind: str) -> str:
    """Sound-hard boundaries show up as a nadir, the others as a peak."""
    return 'min' if kind == 'N' else 'max'


def column_localization(grid: ImageGrid, profile: SurfaceProfile, tolerance: float,
                        extremum: str = 'max') -> float:
    """
    Fraction of grid columns over the perturbation (|x1| < A) whose arg-max
    (or arg-min) over x2 lies within tolerance of the surface height.
    """
    if extremum not in ('max', 'min'):
        raise ConfigError(f"extremum must be 'max' or 'min', got {extremum!r}", "imaging.extremum")
    columns = np.nonzero(np.abs(grid.x1) < profile.support_halfwidth)[0]
    if len(columns) == 0:
        raise DomainError("no grid column meets the perturbation")
    pick = np.argmax if extremum == 'max' else np.argmin
    rows = pick(grid.values[:, columns], axis=0)
    found = grid.x2[rows]
    heights = profile.height(grid.x1[columns])
    return float(np.mean(np.abs(found - heights) <= tolerance))


def compare_near_far(near: ImageGrid, far: ImageGrid) -> float:
    """max |near - far| / max |far| over the grid."""
    if near.values.shape != far.values.shape:
        raise DomainError("near and far images live on different grids")
    scale = float(np.max(np.abs(far.values)))
    if scale == 0:
        raise DomainError("far-field image vanishes")
    return float(np.max(np.abs(near.values - far.values)) / scale)


def image_summary(grid: ImageGrid, kind: str) -> str:
    values = grid.values
    flat = int(np.argmin(values) if expected_extremum(kind) == 'min' else np.argmax(values))
    row, column = np.unravel_index(flat, values.shape)
    label = 'argmin' if expected_extremum(kind) == 'min' else 'argmax'
    return (f"{label} at ({grid.x1[column]:.4f}, {grid.x2[row]:.4f}), "
            f"range [{np.min(values):.6e}, {np.max(values):.6e}]")


__all__ = [
    'IndicatorConfig', 'background_fields', 'column_localization', 'compare_near_far',
    'expected_extremum', 'image_summary', 'indicator', 'indicator_far',
    'indicator_near_impenetrable', 'indicator_near_penetrable', 'normalize_image',
]
