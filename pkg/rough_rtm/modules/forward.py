"""
Forward scattering: solves on the measured surface and on the special
surface, scattered-field and far-field data for the imaging step, and
the noise model.
"""
import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import AcquisitionGeometry, FlatProfile, SurfaceProfile, acquisition_points
from .greens import (
    IMPENETRABLE_KINDS, ImpenetrableSurface, PenetrableSurface, RoughSurface, SolverOptions,
    SurfaceSolution, TwoLayerMedium, check_kind, gammaR_surface,
)
from .volume import cell_spacing, difference_cells

logger = logging.getLogger(__name__)

GENERATOR = "numpy-Philox4x64"
SOURCE_BATCH = 16


@dataclass
class ScatterData:
    """
    Data matrix with receivers along rows and sources along columns:
    V(x_r, x_s) in the near regime, far-field differences in the far regime.
    """
    regime: str
    kind: str
    matrix: np.ndarray
    acquisition: AcquisitionGeometry
    k1: float
    k2: float
    dip_radius: float
    tau: float = 0.0
    seed: int = 0
    generator: str = GENERATOR

    @property
    def n_sources(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_receivers(self) -> int:
        return self.matrix.shape[0]

    def validate(self) -> None:
        check_kind(self.kind)
        if self.regime not in ('near', 'far'):
            raise ConfigError(f"unknown regime {self.regime!r}", "acquisition.regime")
        expected = (self.acquisition.n_receivers, self.acquisition.n_sources)
        if self.matrix.shape != expected:
            raise ConfigError(f"data matrix has shape {self.matrix.shape}, expected {expected}",
                              "acquisition.n_sources")
        if not np.all(np.isfinite(self.matrix)):
            raise DomainError("data matrix has non-finite entries")
        if self.tau < 0:
            raise ConfigError("noise level must be >= 0", "noise.tau")

    def replace(self, **changes) -> 'ScatterData':
        return dataclasses.replace(self, **changes)


class Evaluators(NamedTuple):
    near: Callable[..., np.ndarray]
    far: Callable[[np.ndarray], np.ndarray]


def build_surface(profile: SurfaceProfile, kind: str, k1: float, k2: float = None,
                  options: SolverOptions = SolverOptions()) -> RoughSurface:
    check_kind(kind)
    if kind == 'P':
        return PenetrableSurface(profile, TwoLayerMedium(k1, k1 if k2 is None else k2), options)
    return ImpenetrableSurface(profile, kind, k1, options)


def flat_background(target: RoughSurface) -> RoughSurface:
    """Solver of the flat line x2 = 0 with the media and options of the target (dip radius 0)."""
    if isinstance(target, PenetrableSurface):
        medium = TwoLayerMedium(target.medium.k1, target.medium.k2)
        return PenetrableSurface(FlatProfile(target.profile.support_halfwidth), medium, target.options)
    return ImpenetrableSurface(FlatProfile(target.profile.support_halfwidth), target.kind, target.k,
                               target.options)


def _unit_directions(d: np.ndarray, downward: bool) -> np.ndarray:
    d = np.atleast_2d(np.asarray(d, dtype=float))
    if not np.allclose(np.hypot(d[:, 0], d[:, 1]), 1.0, atol=1e-12):
        raise DomainError("incident directions must be unit vectors")
    if downward and np.any(d[:, 1] >= 0):
        raise DomainError("incident directions must point downward (d2 < 0)")
    return d


def solve_impenetrable_pointsource(profile: SurfaceProfile, kind: str, k1: float, x_s: np.ndarray,
                                   options: SolverOptions = SolverOptions(),
                                   surface: ImpenetrableSurface = None) -> Evaluators:
    """
    Scattered field u^s(., x_s) = u - Phi(., x_s) and its far-field pattern
    for one or more sources strictly above the surface; both evaluators
    return arrays with one column per source.
    """
    check_kind(kind, IMPENETRABLE_KINDS)
    surface = surface or ImpenetrableSurface(profile, kind, k1, options)
    solution = surface.solve_point_sources(x_s)
    return Evaluators(solution.scattered, solution.far_field)


def solve_impenetrable_planewave(profile: SurfaceProfile, kind: str, k1: float, d: np.ndarray,
                                 options: SolverOptions = SolverOptions(),
                                 surface: ImpenetrableSurface = None) -> Evaluators:
    """
    Field w^s = w - w_0 scattered by the perturbation for incident directions
    d (d2 < 0) and its far-field pattern. w_0 is the plane wave reflected by
    the flat line, so the boundary data vanish away from the perturbation.
    """
    check_kind(kind, IMPENETRABLE_KINDS)
    directions = _unit_directions(d, downward=True)
    surface = surface or ImpenetrableSurface(profile, kind, k1, options)
    solution = surface.solve_plane_waves(directions)
    return Evaluators(solution.scattered, solution.far_field)


@dataclass
class PenetrableFields:
    """
    Total field on the measured interface and on the special surface for the
    same point sources or incident directions. `scattered` is the near-field
    data u - G_P, `far_field` the far-field data.
    """
    solution: SurfaceSolution
    background: Optional[SurfaceSolution]

    def total(self, points: np.ndarray, gradient: bool = False):
        return self.solution.total(points, gradient)

    def background_total(self, points: np.ndarray, gradient: bool = False):
        if self.background is None:
            return self.solution.surface.incident(self.solution, points, gradient)
        return self.background.total(points, gradient)

    def scattered(self, points: np.ndarray) -> np.ndarray:
        out = self.solution.scattered(points)
        if self.background is not None:
            out = out - self.background.scattered(points)
        return out

    def far_field(self, directions: np.ndarray) -> np.ndarray:
        out = self.solution.far_field(directions)
        if self.background is not None:
            out = out - self.background.far_field(directions)
        return out


def solve_penetrable(profile: SurfaceProfile, medium: TwoLayerMedium, source: np.ndarray = None,
                     direction: np.ndarray = None, options: SolverOptions = SolverOptions(),
                     surface: PenetrableSurface = None) -> PenetrableFields:
    """
    Solves the Lippmann-Schwinger equations of the interface and of the
    special surface with dip radius medium.dip_radius (0 compares against the
    flat interface) for point sources or incident directions.
    """
    if (source is None) == (direction is None):
        raise ConfigError("give exactly one of source and direction", "forward.source")
    surface = surface or PenetrableSurface(profile, medium, options)
    background = gammaR_surface('P', medium.k1, medium.k2, medium.dip_radius, options)
    if source is not None:
        solve = lambda s: s.solve_point_sources(source)
    else:
        directions = _unit_directions(direction, downward=False)
        solve = lambda s: s.solve_plane_waves(directions)
    return PenetrableFields(solve(surface), None if background is None else solve(background))


def _batches(count: int, size: int = SOURCE_BATCH):
    return [np.arange(start, min(start + size, count)) for start in range(0, count, size)]


def scatter_matrix(target: RoughSurface, background: Optional[RoughSurface],
                   acquisition: AcquisitionGeometry, dip_radius: float = None,
                   threads: int = 1) -> np.ndarray:
    """
    (N_r, N_s) data of the target surface against the background surface.
    Sources (near) or receiver directions (far) are split into fixed batches,
    so the result does not depend on the number of threads.
    A missing background (dip radius 0) is the flat line.
    """
    if background is None:
        background = flat_background(target)
    sources, receivers = acquisition_points(acquisition, dip_radius)
    matrix = np.empty((len(receivers), len(sources)), dtype=complex)

    if acquisition.regime == 'near':
        def job(batch):
            block = target.solve_point_sources(sources[batch]).scattered(receivers)
            return block - background.solve_point_sources(sources[batch]).scattered(receivers)
        batches = _batches(len(sources))
    else:
        # incident direction -x_r, observation direction x_s
        def job(batch):
            incident = -receivers[batch]
            block = target.solve_plane_waves(incident).far_field(sources)
            return (block - background.solve_plane_waves(incident).far_field(sources)).T
        batches = _batches(len(receivers))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for batch, block in zip(batches, pool.map(job, batches)):
            if acquisition.regime == 'near':
                matrix[:, batch] = block
            else:
                matrix[batch, :] = block
    return matrix


def synthesize_data(config, target: RoughSurface = None, background: RoughSurface = None) -> ScatterData:
    """
    Noise-free data for a validated RunConfig: one factorization per surface,
    reused by every source batch. Prebuilt surfaces may be passed in.
    """
    start = time.perf_counter()
    options = config.options()
    acquisition = config.acquisition()
    if target is None:
        target = build_surface(config.profile(), config.kind, config.k1, config.k2, options)
    if background is None:
        background = gammaR_surface(config.kind, config.k1, config.k2, config.dip_radius, options)
    matrix = scatter_matrix(target, background, acquisition, config.dip_radius, config.threads)
    data = ScatterData(acquisition.regime, config.kind, matrix, acquisition,
                       config.k1, config.k2, config.dip_radius, seed=config.seed)
    data.validate()
    logger.info("synthesized %s %s data %dx%d in %.2fs, |V|_F = %.6e", acquisition.regime,
                config.kind, data.n_receivers, data.n_sources, time.perf_counter() - start,
                np.linalg.norm(matrix))
    return data


def add_noise(data: ScatterData, tau: float, seed: int) -> ScatterData:
    """
    u_tau = u + tau beta / |beta|_F |u|_F with standard normal real and
    imaginary parts of beta, drawn from Philox(seed).
    """
    if tau < 0:
        raise ConfigError("noise level must be >= 0", "noise.tau")
    if tau == 0:
        return data.replace(matrix=data.matrix.copy(), tau=0.0, seed=seed)
    rng = np.random.Generator(np.random.Philox(seed))
    shape = data.matrix.shape
    beta = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    scale = tau * np.linalg.norm(data.matrix) / np.linalg.norm(beta)
    logger.info("added %.3g relative noise with seed %d", tau, seed)
    return data.replace(matrix=data.matrix + scale * beta, tau=float(tau), seed=int(seed))


def _total_on(solution: SurfaceSolution, points: np.ndarray) -> np.ndarray:
    """Total field at points; points that are cell nodes take the solved values."""
    cells = solution.surface.cells.centers
    lookup = {tuple(center): index for index, center in enumerate(cells)}
    index = np.array([lookup.get(tuple(point), -1) for point in points], dtype=int)
    out = np.empty((len(points), solution.p), dtype=complex)
    hit = index >= 0
    out[hit] = solution.density[index[hit]]
    if np.any(~hit):
        out[~hit] = solution.total(points[~hit])
    return out


def volume_potential_vp(target: PenetrableSurface, background: PenetrableSurface,
                        receivers: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """
    V_P(x_r, x_s) = int G_P(x_r, y) (k^2 - k_R^2)(y) u(y, x_s) dy over the
    region between the interface and the special surface, with G_P(x_r, y)
    taken from the background solve for the receivers. Returns (N_r, N_s).
    """
    receivers = np.atleast_2d(np.asarray(receivers, dtype=float))
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    medium = target.medium
    spacing = cell_spacing(medium.k1, medium.k2, target.options.cells_per_wavelength)
    cells = difference_cells(target.profile, background.profile, medium.sigma, spacing)
    if cells.n == 0:
        return np.zeros((len(receivers), len(sources)), dtype=complex)
    u = _total_on(target.solve_point_sources(sources), cells.centers)
    green = _total_on(background.solve_point_sources(receivers), cells.centers)
    return green.T @ ((cells.areas * cells.contrast)[:, None] * u)


__all__ = [
    'Evaluators', 'PenetrableFields', 'ScatterData', 'add_noise', 'build_surface', 'scatter_matrix',
    'solve_impenetrable_planewave', 'solve_impenetrable_pointsource', 'solve_penetrable',
    'synthesize_data', 'volume_potential_vp',
]
