"""
Background wave fields.

Elementary fields above the flat line x2 = 0 (half-plane Green's functions,
plane waves reflected by a sound-soft/sound-hard line, Fresnel plane waves
and the Green's function of two fluids) and the fields of a locally
perturbed surface, obtained by solving a boundary integral equation
(impenetrable) or a Lippmann-Schwinger equation (penetrable). The special
surface with a semicircular dip of radius R provides the reference
backgrounds of the imaging functions.

Points are arrays with shape (..., 2). Kinds: 'D' sound-soft, 'N' sound-hard,
'P' penetrable.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from . import specfun
from .errors import ConfigError, DomainError
from .geometry import DipProfile, SurfaceProfile, discretize_surface
from .nystrom import BoundaryIntegralOperator, far_field_constant
from .sommerfeld import FlatTwoLayerGreen, FresnelCoefficients, fresnel, planewave_field
from .volume import VolumeOperator, cell_spacing, layer_cells

logger = logging.getLogger(__name__)

IMPENETRABLE_KINDS = ('D', 'N')
KINDS = ('D', 'N', 'P')


def check_kind(kind: str, allowed: Tuple[str, ...] = KINDS) -> str:
    if kind not in allowed:
        raise ConfigError(f"kind must be one of {allowed}, got {kind!r}", "medium.kind")
    return kind


def _image_sign(kind: str) -> float:
    # Dirichlet subtracts the image, Neumann adds it
    return -1.0 if check_kind(kind, IMPENETRABLE_KINDS) == 'D' else 1.0


@dataclass(frozen=True)
class TwoLayerMedium:
    """
    Wavenumbers k1 above and k2 below an interface, which is the line
    x2 = 0 ('flat') or the special surface with a dip of radius R ('gammaR').
    """
    k1: float
    k2: float
    interface: str = 'flat'
    dip_radius: float = 0.0

    def __post_init__(self):
        specfun.wavenumber(self.k1)
        specfun.wavenumber(self.k2)
        if self.interface not in ('flat', 'gammaR'):
            raise ConfigError(f"unknown interface {self.interface!r}", "medium.interface")
        if self.interface == 'gammaR' and self.dip_radius < 0:
            raise ConfigError("dip radius must be >= 0", "surface.dip_radius")

    @property
    def sigma(self) -> float:
        return self.k1 ** 2 - self.k2 ** 2

    def green(self) -> FlatTwoLayerGreen:
        return _flat_green(self.k1, self.k2)

    def wavenumber_at(self, points: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(points)[..., 1] >= 0, self.k1, self.k2)


@lru_cache(maxsize=8)
def _flat_green(k1: float, k2: float) -> FlatTwoLayerGreen:
    return FlatTwoLayerGreen(k1, k2)


@dataclass(frozen=True)
class SolverOptions:
    nodes_per_wavelength: float = 10.0
    wing_wavelengths: float = 16.0
    cells_per_wavelength: float = 8.0


def halfplane_green(kind: str, k: float, x: np.ndarray, y: np.ndarray, gradient: bool = False):
    """
    Phi_k(x, y) -/+ Phi_k(x, y') with y' = (y1, -y2); minus for 'D', plus for 'N'.
    Returns values (...) and optionally gradients in x (..., 2).
    """
    sign = _image_sign(kind)
    y = np.asarray(y, dtype=float)
    image = y * np.array([1.0, -1.0])
    if not gradient:
        return specfun.phi(k, x, y) + sign * specfun.phi(k, x, image)
    value, grad = specfun.phi_with_grad(k, x, y)
    image_value, image_grad = specfun.phi_with_grad(k, x, image)
    return value + sign * image_value, grad + sign * image_grad


def planewave_background_impenetrable(kind: str, k: float, x: np.ndarray, d: np.ndarray,
                                      gradient: bool = False):
    """
    e^{ik x.d} -/+ e^{ik x.d'} with d' = (d1, -d2), d pointing downward.
    """
    sign = _image_sign(kind)
    d = np.asarray(d, dtype=float)
    if d[1] >= 0:
        raise DomainError(f"incident direction {d} must point downward")
    reflected = d * np.array([1.0, -1.0])
    x = np.asarray(x, dtype=float)
    incident_wave = np.exp(1j * k * (x @ d))
    reflected_wave = sign * np.exp(1j * k * (x @ reflected))
    value = incident_wave + reflected_wave
    if not gradient:
        return value
    grad = 1j * k * (incident_wave[..., None] * d + reflected_wave[..., None] * reflected)
    return value, grad


def planewave_background_penetrable(medium: TwoLayerMedium, x: np.ndarray, d: np.ndarray,
                                    gradient: bool = False):
    """Plane wave with incident direction d (from above or below) on the flat interface."""
    return planewave_field(medium.k1, medium.k2, x, d, gradient)


def twolayer_flat_green(medium: TwoLayerMedium, x: np.ndarray, y: np.ndarray,
                        gradient: bool = False):
    """v_0(x, y) for the flat interface; x, y broadcast pairs of points."""
    return medium.green().pairwise(x, y, gradient)


def critical_angle(k1: float, k2: float) -> float:
    return float(np.arccos(min(k1, k2) / max(k1, k2)))


class BackgroundField:
    """
    Base class of a background wave field for a fixed source point or
    incident direction. evaluate returns (values, gradients) at points
    with shape (m, 2): values (m,), gradients (m, 2).
    """
    surface: str = 'flat'
    kind: str = 'D'

    def evaluate(self, points: np.ndarray, gradient: bool = False):
        raise NotImplementedError

    def value(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points, gradient=True)[1]


class HalfPlaneGreen(BackgroundField):
    def __init__(self, kind: str, k: float, source: np.ndarray):
        super(HalfPlaneGreen, self).__init__()
        self.kind = check_kind(kind, IMPENETRABLE_KINDS)
        self.k = specfun.wavenumber(k)
        self.source = np.asarray(source, dtype=float)

    def evaluate(self, points, gradient=False):
        return halfplane_green(self.kind, self.k, points, self.source, gradient)


class ImpenetrablePlaneWave(BackgroundField):
    def __init__(self, kind: str, k: float, direction: np.ndarray):
        super(ImpenetrablePlaneWave, self).__init__()
        self.kind = check_kind(kind, IMPENETRABLE_KINDS)
        self.k = specfun.wavenumber(k)
        self.direction = np.asarray(direction, dtype=float)

    def evaluate(self, points, gradient=False):
        return planewave_background_impenetrable(self.kind, self.k, points, self.direction, gradient)


class PenetrablePlaneWave(BackgroundField):
    kind = 'P'

    def __init__(self, medium: TwoLayerMedium, direction: np.ndarray):
        super(PenetrablePlaneWave, self).__init__()
        self.medium = medium
        self.direction = np.asarray(direction, dtype=float)

    def evaluate(self, points, gradient=False):
        return planewave_background_penetrable(self.medium, points, self.direction, gradient)


class FlatTwoLayerPointSource(BackgroundField):
    kind = 'P'

    def __init__(self, medium: TwoLayerMedium, source: np.ndarray):
        super(FlatTwoLayerPointSource, self).__init__()
        self.medium = medium
        self.source = np.asarray(source, dtype=float)

    def evaluate(self, points, gradient=False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.medium.green().matrix(points, self.source[None, :], gradient=gradient)
        if gradient:
            return out[0][:, 0], out[1][:, 0]
        return out[:, 0]


@dataclass
class SurfaceSolution:
    """
    Solved scattering problem for p point sources (incidence='point') or
    p incident directions (incidence='plane'). density holds the boundary
    densities (n, p) or the total fields on the volume cells (n, p).
    """
    surface: 'RoughSurface'
    incidence: str
    sources: np.ndarray
    density: np.ndarray
    image_mask: Optional[np.ndarray] = None

    @property
    def p(self) -> int:
        return len(self.sources)

    def scattered(self, points: np.ndarray, gradient: bool = False):
        """Total minus incident field (Phi, v_0, or the flat-surface plane wave); (m, p)."""
        return self.surface.scattered(self, points, gradient)

    def total(self, points: np.ndarray, gradient: bool = False):
        return self.surface.total(self, points, gradient)

    def far_field(self, directions: np.ndarray) -> np.ndarray:
        """Far-field pattern of the scattered field; (m, p)."""
        return self.surface.far_field(self, directions)

    def field(self, index: int) -> 'SolvedField':
        return SolvedField(self, index)


class SolvedField(BackgroundField):
    """One column of a SurfaceSolution as a BackgroundField."""

    def __init__(self, solution: SurfaceSolution, index: int):
        super(SolvedField, self).__init__()
        self.solution = solution
        self.index = index
        self.kind = solution.surface.kind
        self.surface = 'gammaR' if isinstance(solution.surface.profile, DipProfile) else 'rough'

    def evaluate(self, points, gradient=False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.solution.total(points, gradient)
        if gradient:
            return out[0][:, self.index], out[1][:, self.index]
        return out[:, self.index]


class RoughSurface:
    """Common interface of the impenetrable and penetrable surface solvers."""
    kind: str
    profile: SurfaceProfile

    def solve_point_sources(self, sources: np.ndarray) -> SurfaceSolution:
        raise NotImplementedError

    def solve_plane_waves(self, directions: np.ndarray) -> SurfaceSolution:
        raise NotImplementedError

    def scattered(self, solution: SurfaceSolution, points: np.ndarray, gradient: bool = False):
        raise NotImplementedError

    def incident(self, solution: SurfaceSolution, points: np.ndarray, gradient: bool = False):
        raise NotImplementedError

    def far_field(self, solution: SurfaceSolution, directions: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def total(self, solution: SurfaceSolution, points: np.ndarray, gradient: bool = False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not gradient:
            return self.incident(solution, points) + self.scattered(solution, points)
        inc_value, inc_grad = self.incident(solution, points, True)
        sc_value, sc_grad = self.scattered(solution, points, True)
        return inc_value + sc_value, inc_grad + sc_grad


class ImpenetrableSurface(RoughSurface):
    """
    Sound-soft or sound-hard locally rough surface above which the wave
    field lives. The scattered field of a point source y is

        G - Phi(., y) = -/+ Phi(., y') + v    if the image y' lies below the surface
        G - Phi(., y) = v                      otherwise

    with v the windowed layer potential solving the boundary condition.
    """

    def __init__(self, profile: SurfaceProfile, kind: str, k: float,
                 options: SolverOptions = SolverOptions()):
        self.profile = profile
        self.kind = check_kind(kind, IMPENETRABLE_KINDS)
        self.k = specfun.wavenumber(k)
        self.options = options
        wing = options.wing_wavelengths * 2 * np.pi / self.k
        self.curve = discretize_surface(profile, self.k, options.nodes_per_wavelength, wing)
        self.operator = BoundaryIntegralOperator(self.curve, self.kind, self.k)

    def check_above(self, points: np.ndarray, what: str = "evaluation point") -> None:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x1 = points[:, 0]
        inside = np.abs(x1) <= self.profile.support_halfwidth
        heights = np.zeros_like(x1)
        if np.any(inside):
            heights[inside] = self.profile.height(x1[inside])
        if np.any(points[:, 1] < heights):
            raise DomainError(f"{what} below the surface {self.profile.kind}")

    def image_below(self, sources: np.ndarray) -> np.ndarray:
        sources = np.atleast_2d(sources)
        x1 = sources[:, 0]
        heights = np.zeros_like(x1)
        inside = np.abs(x1) <= self.profile.support_halfwidth
        if np.any(inside):
            heights[inside] = self.profile.height(x1[inside])
        return (sources[:, 1] > 0) & (-sources[:, 1] < heights)

    def _boundary_data(self, values: np.ndarray, grads: np.ndarray) -> np.ndarray:
        if self.kind == 'D':
            return -values
        return -np.einsum('npk,nk->np', grads, self.curve.normals)

    def _point_source_data(self, sources: np.ndarray, image_mask: np.ndarray) -> np.ndarray:
        nodes = self.curve.nodes[:, None, :]
        values, grads = specfun.phi_with_grad(self.k, nodes, sources[None, :, :])
        if np.any(image_mask):
            images = sources[image_mask] * np.array([1.0, -1.0])
            sign = _image_sign(self.kind)
            image_values, image_grads = specfun.phi_with_grad(self.k, nodes, images[None, :, :])
            values[:, image_mask] += sign * image_values
            grads[:, image_mask] += sign * image_grads
        return self._boundary_data(values, grads)

    def _plane_wave_data(self, directions: np.ndarray) -> np.ndarray:
        nodes = self.curve.nodes
        values = np.empty((self.curve.n, len(directions)), dtype=complex)
        grads = np.empty((self.curve.n, len(directions), 2), dtype=complex)
        for index, direction in enumerate(directions):
            values[:, index], grads[:, index] = planewave_background_impenetrable(
                self.kind, self.k, nodes, direction, gradient=True)
        return self._boundary_data(values, grads)

    def solve_point_sources(self, sources: np.ndarray) -> SurfaceSolution:
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        self.check_above(sources, "source")
        image_mask = self.image_below(sources)
        density = self.operator.solve(self._point_source_data(sources, image_mask))
        logger.debug("%s: solved %d point sources (%d with image)", self.profile.kind,
                     len(sources), int(np.sum(image_mask)))
        return SurfaceSolution(self, 'point', sources, density, image_mask)

    def solve_plane_waves(self, directions: np.ndarray) -> SurfaceSolution:
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        density = self.operator.solve(self._plane_wave_data(directions))
        return SurfaceSolution(self, 'plane', directions, density)

    def boundary_values(self, solution: SurfaceSolution) -> np.ndarray:
        """
        Boundary quantity of the total field at the curve nodes (the value for
        D, the normal derivative for N) from the jump relations; (n, p).
        Valid where the window equals one.
        """
        if solution.incidence == 'point':
            data = self._point_source_data(solution.sources, solution.image_mask)
        else:
            data = self._plane_wave_data(solution.sources)
        return self.operator.matrix @ solution.density - data

    def incident(self, solution, points, gradient=False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if solution.incidence == 'point':
            if gradient:
                return specfun.phi_with_grad(self.k, points[:, None, :], solution.sources[None, :, :])
            return specfun.phi(self.k, points[:, None, :], solution.sources[None, :, :])
        values = np.empty((len(points), solution.p), dtype=complex)
        grads = np.empty((len(points), solution.p, 2), dtype=complex)
        for index, direction in enumerate(solution.sources):
            out = planewave_background_impenetrable(self.kind, self.k, points, direction, gradient)
            if gradient:
                values[:, index], grads[:, index] = out
            else:
                values[:, index] = out
        return (values, grads) if gradient else values

    def scattered(self, solution, points, gradient=False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self.check_above(points)
        out = self.operator.potential(points, solution.density, gradient)
        values, grads = out if gradient else (out, None)
        mask = solution.image_mask
        if solution.incidence == 'point' and np.any(mask):
            images = solution.sources[mask] * np.array([1.0, -1.0])
            sign = _image_sign(self.kind)
            if gradient:
                image_values, image_grads = specfun.phi_with_grad(self.k, points[:, None, :], images[None, :, :])
                grads[:, mask] += sign * image_grads
            else:
                image_values = specfun.phi(self.k, points[:, None, :], images[None, :, :])
            values[:, mask] += sign * image_values
        return (values, grads) if gradient else values

    def far_field(self, solution, directions):
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        if np.any(directions[:, 1] <= 0):
            raise DomainError("far-field directions must point into the upper half-plane")
        out = self.operator.far_field(directions, solution.density)
        mask = solution.image_mask
        if solution.incidence == 'point' and np.any(mask):
            images = solution.sources[mask] * np.array([1.0, -1.0])
            phase = np.exp(-1j * self.k * directions @ images.T)
            out[:, mask] += _image_sign(self.kind) * far_field_constant(self.k) * phase
        return out


class PenetrableSurface(RoughSurface):
    """
    Penetrable locally rough interface between media k1 (above) and k2 (below).
    Total fields solve u = u_0 + int v_0 q u over the region between the
    surface and x2 = 0, with u_0 = v_0(., y) or the Fresnel plane wave.
    """
    kind = 'P'

    def __init__(self, profile: SurfaceProfile, medium: TwoLayerMedium,
                 options: SolverOptions = SolverOptions(), kernel: np.ndarray = None):
        self.profile = profile
        self.medium = medium
        self.options = options
        self.green = medium.green()
        spacing = cell_spacing(medium.k1, medium.k2, options.cells_per_wavelength)
        self.cells = layer_cells(profile, medium.sigma, spacing)
        self.operator = VolumeOperator(self.green, self.cells, kernel)

    def solve_point_sources(self, sources):
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        if self.cells.n == 0:
            incident = np.zeros((0, len(sources)), dtype=complex)
        else:
            incident = self.green.matrix(self.cells.centers, sources)
        return SurfaceSolution(self, 'point', sources, self.operator.solve(incident))

    def solve_plane_waves(self, directions):
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        incident = np.empty((self.cells.n, len(directions)), dtype=complex)
        for index, direction in enumerate(directions):
            incident[:, index] = planewave_field(self.medium.k1, self.medium.k2,
                                                 self.cells.centers, direction)
        return SurfaceSolution(self, 'plane', directions, self.operator.solve(incident))

    def incident(self, solution, points, gradient=False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if solution.incidence == 'point':
            return self.green.matrix(points, solution.sources, gradient=gradient)
        values = np.empty((len(points), solution.p), dtype=complex)
        grads = np.empty((len(points), solution.p, 2), dtype=complex)
        for index, direction in enumerate(solution.sources):
            out = planewave_field(self.medium.k1, self.medium.k2, points, direction, gradient)
            if gradient:
                values[:, index], grads[:, index] = out
            else:
                values[:, index] = out
        return (values, grads) if gradient else values

    def scattered(self, solution, points, gradient=False):
        return self.operator.potential(points, solution.density, gradient)

    def far_field(self, solution, directions):
        return self.operator.far_field(directions, solution.density)


def gammaR_surface(kind: str, k1: float, k2: float, radius: float,
                   options: SolverOptions = SolverOptions()) -> Optional[RoughSurface]:
    """
    Solver of the special surface with a dip of the given radius; None for
    radius 0 (the flat line). Solvers are cached and read-only once built.
    k2 is ignored for impenetrable kinds.
    """
    check_kind(kind)
    if kind != 'P':
        k2 = k1
    return _cached_gammaR_surface(kind, float(k1), float(k2), float(radius), options)


@lru_cache(maxsize=16)
def _cached_gammaR_surface(kind, k1, k2, radius, options):
    if radius == 0:
        return None
    profile = DipProfile(radius)
    logger.info("building the %s background with dip radius %g", kind, radius)
    if kind == 'P':
        return PenetrableSurface(profile, TwoLayerMedium(k1, k2, 'gammaR', radius), options)
    return ImpenetrableSurface(profile, kind, k1, options)


def _shaped(values: np.ndarray, x: np.ndarray, y: np.ndarray):
    if np.ndim(x) == 1 and np.ndim(y) == 1:
        return values[0, 0]
    return values


def background_green_gammaR_impenetrable(kind: str, k1: float, radius: float,
                                         x: np.ndarray, x_s: np.ndarray,
                                         options: SolverOptions = SolverOptions()):
    """
    (G, G^s) of the special surface at points x for sources x_s:
    (m, p) arrays, or scalars for a single point and source.
    """
    check_kind(kind, IMPENETRABLE_KINDS)
    points = np.atleast_2d(np.asarray(x, dtype=float))
    sources = np.atleast_2d(np.asarray(x_s, dtype=float))
    surface = gammaR_surface(kind, float(k1), float(k1), float(radius), options)
    if surface is None:
        total = halfplane_green(kind, k1, points[:, None, :], sources[None, :, :])
        incident = specfun.phi(k1, points[:, None, :], sources[None, :, :])
        return _shaped(total, x, x_s), _shaped(total - incident, x, x_s)
    solution = surface.solve_point_sources(sources)
    scattered = solution.scattered(points)
    total = specfun.phi(k1, points[:, None, :], sources[None, :, :]) + scattered
    return _shaped(total, x, x_s), _shaped(scattered, x, x_s)


def background_green_gammaR_penetrable(medium: TwoLayerMedium, x: np.ndarray, x_s: np.ndarray,
                                       options: SolverOptions = SolverOptions()):
    """G_P(x, x_s): (m, p) array, or a scalar for a single point and source."""
    points = np.atleast_2d(np.asarray(x, dtype=float))
    sources = np.atleast_2d(np.asarray(x_s, dtype=float))
    surface = gammaR_surface('P', medium.k1, medium.k2, float(medium.dip_radius), options)
    if surface is None:
        return _shaped(medium.green().matrix(points, sources), x, x_s)
    solution = surface.solve_point_sources(sources)
    return _shaped(solution.total(points), x, x_s)


def planewave_background_gammaR(kind: str, direction: np.ndarray, k1: float, radius: float,
                                k2: float = None,
                                options: SolverOptions = SolverOptions()) -> BackgroundField:
    """
    Total plane-wave field of the special surface for the incident direction
    (the negated observation direction of the far-field data).
    """
    check_kind(kind)
    direction = np.asarray(direction, dtype=float)
    k2 = k1 if k2 is None else k2
    surface = gammaR_surface(kind, float(k1), float(k2), float(radius), options)
    if surface is None:
        if kind == 'P':
            return PenetrablePlaneWave(TwoLayerMedium(k1, k2), direction)
        return ImpenetrablePlaneWave(kind, k1, direction)
    return surface.solve_plane_waves(direction[None, :]).field(0)


__all__ = [
    'BackgroundField', 'FlatTwoLayerPointSource', 'FresnelCoefficients', 'HalfPlaneGreen',
    'ImpenetrablePlaneWave', 'ImpenetrableSurface', 'KINDS', 'PenetrablePlaneWave',
    'PenetrableSurface', 'RoughSurface', 'SolvedField', 'SolverOptions', 'SurfaceSolution',
    'TwoLayerMedium', 'background_green_gammaR_impenetrable', 'background_green_gammaR_penetrable',
    'check_kind', 'critical_angle', 'fresnel', 'gammaR_surface', 'halfplane_green',
    'planewave_background_gammaR', 'planewave_background_impenetrable',
    'planewave_background_penetrable', 'twolayer_flat_green',
]
