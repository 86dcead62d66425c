"""
Numerical checks of the identities behind the imaging functions:
Helmholtz-Kirchhoff identities of the background Green's functions, the
decay of their remainders with the acquisition radius, reciprocity, mixed
reciprocity and the radiation condition.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from . import specfun
from .errors import ConfigError, DomainError
from .geometry import BumpProfile, FlatProfile, discretize_surface
from .greens import (
    IMPENETRABLE_KINDS, ImpenetrableSurface, PenetrableSurface, SolverOptions, TwoLayerMedium,
    check_kind, gammaR_surface, halfplane_green,
)
from .nystrom import far_field_constant
from .volume import layer_contrast

logger = logging.getLogger(__name__)

EPSILON = 1e-300
SAMPLE_SEED = 20240101


@dataclass
class IdentityReport:
    name: str
    residual: float
    threshold: float
    samples: int
    parameters: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.residual >= 0:
            raise DomainError(f"{self.name}: residual must be a non-negative number, got {self.residual}")

    @property
    def passed(self) -> bool:
        return self.residual <= self.threshold

    def summary_line(self) -> str:
        """Machine readable: name residual threshold pass."""
        return f"{self.name} {self.residual:.6e} {self.threshold:.6e} {'pass' if self.passed else 'FAIL'}"


def format_reports(reports: Iterable[IdentityReport]) -> str:
    reports = list(reports)
    width = max([len(r.name) for r in reports] + [8])
    lines = [f"{'identity'.ljust(width)}  {'residual':>12}  {'threshold':>12}  {'samples':>7}  result"]
    for r in reports:
        lines.append(f"{r.name.ljust(width)}  {r.residual:12.4e}  {r.threshold:12.4e}  {r.samples:7d}  "
                     f"{'pass' if r.passed else 'FAIL'}")
    return "\n".join(lines)


class GreenEvaluator:
    """
    Callable G(points, sources, gradient=False) -> (m, p) values of a background
    Green's function, optionally with gradients in the points (m, p, 2).

    field: 'gammaR' (the special surface with dip radius R) or 'flat'
    (half-plane Green's function for D/N, flat two-layer v_0 for P).
    """

    def __init__(self, kind: str, k1: float, k2: float = None, radius: float = 20.0,
                 field: str = 'gammaR', options: SolverOptions = SolverOptions()):
        self.kind = check_kind(kind)
        self.k1 = float(k1)
        self.k2 = float(k1 if k2 is None or kind != 'P' else k2)
        if field not in ('gammaR', 'flat'):
            raise ConfigError(f"unknown background field {field!r}", "verify.field")
        self.field = field
        self.radius = float(radius) if field == 'gammaR' else 0.0
        self.surface = gammaR_surface(kind, self.k1, self.k2, self.radius, options) \
            if field == 'gammaR' else None

    def wavenumber_at(self, points: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(points)[..., 1] >= 0, self.k1, self.k2)

    def __call__(self, points: np.ndarray, sources: np.ndarray, gradient: bool = False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        if self.surface is not None:
            return self.surface.solve_point_sources(sources).total(points, gradient)
        if self.kind == 'P':
            return TwoLayerMedium(self.k1, self.k2).green().matrix(points, sources, gradient=gradient)
        return halfplane_green(self.kind, self.k1, points[:, None, :], sources[None, :, :], gradient)


def sample_points(count: int, bounds: Tuple[float, float, float, float], seed: int = SAMPLE_SEED) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    x1 = rng.uniform(bounds[0], bounds[1], count)
    x2 = rng.uniform(bounds[2], bounds[3], count)
    return np.column_stack([x1, x2])


def sample_pairs(count: int, kind: str, seed: int = SAMPLE_SEED) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Deterministic pairs (x, z): above x2 = 0 for D/N, on both sides for P."""
    bounds = (-4.0, 4.0, 0.25, 1.0) if kind in IMPENETRABLE_KINDS else (-4.0, 4.0, -1.0, 1.0)
    points = sample_points(2 * count, bounds, seed)
    return [(points[2 * i], points[2 * i + 1]) for i in range(count)]


def _circle(radius: float, count: int, full: bool) -> Tuple[np.ndarray, np.ndarray, float]:
    """Midpoint nodes, outward normals and weight on the upper semicircle or the full circle."""
    arc = 2 * np.pi if full else np.pi
    theta = (np.arange(count) + 0.5) * arc / count
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    return radius * normals, normals, arc * radius / count


def _quadrature_count(evaluator: GreenEvaluator, radius: float, count: int,
                      nodes_per_wavelength: float = 10.0) -> int:
    wavelength = 2 * np.pi / max(evaluator.k1, evaluator.k2)
    arc = (2 if evaluator.kind == 'P' else 1) * np.pi * radius
    return max(int(count), int(np.ceil(nodes_per_wavelength * arc / wavelength)))


def _unique_points(pairs: Sequence[Tuple[np.ndarray, np.ndarray]]):
    points = np.array([p for pair in pairs for p in pair], dtype=float)
    unique, inverse = np.unique(points, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1, 2)
    return unique, inverse[:, 0], inverse[:, 1]


def _green_at_pairs(evaluator: GreenEvaluator, pairs) -> np.ndarray:
    """G(x, z) for every pair (x, z)."""
    xs = np.array([pair[0] for pair in pairs], dtype=float)
    zs = np.array([pair[1] for pair in pairs], dtype=float)
    values = evaluator(xs, zs)
    return values[np.arange(len(pairs)), np.arange(len(pairs))]


def helmholtz_kirchhoff_terms(evaluator: GreenEvaluator, rho: float, pairs, quadrature: int = 1024):
    """
    Returns (lhs, rhs) per pair: the flux integral of conj(G(., x)) d_nu G(., z)
    - d_nu conj(G(., x)) G(., z) over the measurement curve of radius rho, and 2i Im G(x, z).
    """
    count = _quadrature_count(evaluator, rho, quadrature)
    nodes, normals, weight = _circle(rho, count, full=evaluator.kind == 'P')
    unique, ix, iz = _unique_points(pairs)
    values, grads = evaluator(nodes, unique, gradient=True)
    flux = np.einsum('mpk,mk->mp', grads, normals)
    gx, gz = values[:, ix], values[:, iz]
    lhs = weight * np.sum(np.conj(gx) * flux[:, iz] - np.conj(flux[:, ix]) * gz, axis=0)
    rhs = 2j * np.imag(_green_at_pairs(evaluator, pairs))
    return lhs, rhs


def check_helmholtz_kirchhoff(evaluator: GreenEvaluator, rho: float,
                              pairs: Sequence[Tuple[np.ndarray, np.ndarray]] = None,
                              quadrature: int = 1024, threshold: float = 1e-3) -> IdentityReport:
    """
    Max over pairs of |lhs - 2i Im G(x, z)| relative to max |2i Im G(x, z)|.
    The test circle must enclose the dip (rho > R) and every sample point.
    """
    pairs = sample_pairs(10, evaluator.kind) if pairs is None else list(pairs)
    if rho <= evaluator.radius:
        raise DomainError(f"test circle radius {rho} must exceed the dip radius {evaluator.radius}")
    if max(np.hypot(*p) for pair in pairs for p in pair) >= rho:
        raise DomainError("sample points must lie inside the test circle")
    lhs, rhs = helmholtz_kirchhoff_terms(evaluator, rho, pairs, quadrature)
    residual = float(np.max(np.abs(lhs - rhs)) / max(float(np.max(np.abs(rhs))), EPSILON))
    report = IdentityReport('helmholtz-kirchhoff', residual, threshold, len(pairs),
                            {'kind': evaluator.kind, 'field': evaluator.field, 'rho': rho,
                             'quadrature': quadrature, 'k1': evaluator.k1})
    logger.info("%s", report.summary_line())
    return report


def remainder(evaluator: GreenEvaluator, rho: float, xs: np.ndarray, zs: np.ndarray,
              quadrature: int = 1024) -> np.ndarray:
    """
    zeta(x, z) = int k(xi) conj(G(x, xi)) G(xi, z) ds(xi) - Im G(x, z) over the
    measurement curve of radius rho, as an (len(xs), len(zs)) matrix.
    """
    count = _quadrature_count(evaluator, rho, quadrature)
    nodes, _, weight = _circle(rho, count, full=evaluator.kind == 'P')
    points = np.vstack([xs, zs])
    values = evaluator(nodes, points)
    gx, gz = values[:, :len(xs)], values[:, len(xs):]
    k_side = evaluator.wavenumber_at(nodes)
    integral = weight * (np.conj(gx).T @ (k_side[:, None] * gz))
    return integral - np.imag(evaluator(xs, zs))


def check_remainder_decay(evaluator: GreenEvaluator, radii: Sequence[float],
                          xs: np.ndarray = None, zs: np.ndarray = None,
                          quadrature: int = 1024) -> IdentityReport:
    """
    max |zeta| over a 5 x 5 set of pairs for every radius. Impenetrable
    backgrounds: residual = |fitted log-log slope + 1| against 0.5.
    Penetrable: residual = largest ratio of consecutive maxima against 1
    (strictly monotone decay).
    """
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ConfigError("need at least three radii", "verify.radii")
    if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= evaluator.radius:
        raise ConfigError("radii must increase and exceed the dip radius", "verify.radii")
    if xs is None:
        xs = np.column_stack([np.linspace(-4, 4, 5), np.full(5, 0.75)])
    if zs is None:
        zs = np.column_stack([np.linspace(-3, 3, 5), np.full(5, 0.25 if evaluator.kind != 'P' else -0.5)])
    maxima = np.array([np.max(np.abs(remainder(evaluator, rho, xs, zs, quadrature))) for rho in radii])
    slope = float(np.polyfit(np.log(radii), np.log(maxima), 1)[0])
    parameters = {'kind': evaluator.kind, 'radii': radii, 'maxima': maxima.tolist(), 'slope': slope}
    if evaluator.kind in IMPENETRABLE_KINDS:
        report = IdentityReport('remainder-decay', abs(slope + 1.0), 0.5, len(xs) * len(zs), parameters)
    else:
        ratio = float(np.max(maxima[1:] / maxima[:-1]))
        report = IdentityReport('remainder-decay', ratio, 1.0 - 1e-12, len(xs) * len(zs), parameters)
    logger.info("%s (slope %.3f)", report.summary_line(), slope)
    return report


def check_reciprocity(evaluator: Callable, pairs: Sequence[Tuple[np.ndarray, np.ndarray]],
                      threshold: float = 1e-4, name: str = 'reciprocity') -> IdentityReport:
    """max |G(x, z) - G(z, x)| / max(|G(x, z)|, eps) over the pairs."""
    pairs = list(pairs)
    forward = _green_at_pairs(evaluator, pairs)
    backward = _green_at_pairs(evaluator, [(z, x) for x, z in pairs])
    residual = float(np.max(np.abs(forward - backward) / np.maximum(np.abs(forward), EPSILON)))
    report = IdentityReport(name, residual, threshold, len(pairs))
    logger.info("%s", report.summary_line())
    return report


def check_boundary_condition(surface: ImpenetrableSurface, sources: np.ndarray,
                             threshold: float = 1e-6) -> IdentityReport:
    """
    Boundary condition of the total point-source fields on the perturbed
    nodes (|x1| < A, the dip arc of the special surface), relative to the
    largest incident boundary value there.
    """
    if not isinstance(surface, ImpenetrableSurface):
        raise ConfigError(f"unsupported surface {type(surface).__name__}", "verify.surface")
    solution = surface.solve_point_sources(sources)
    curve = surface.curve
    inside = np.abs(curve.nodes[:, 0]) < surface.profile.support_halfwidth
    values = surface.boundary_values(solution)[inside]
    incident, grads = surface.incident(solution, curve.nodes[inside], gradient=True)
    if surface.kind == 'N':
        incident = np.einsum('npk,nk->np', grads, curve.normals[inside])
    residual = float(np.max(np.abs(values)) / max(float(np.max(np.abs(incident))), EPSILON))
    report = IdentityReport('boundary-condition', residual, threshold, values.size,
                            {'kind': surface.kind, 'profile': surface.profile.kind, 'nodes': int(np.sum(inside))})
    logger.info("%s", report.summary_line())
    return report


def mixed_reciprocity_terms(surface, sources: np.ndarray, directions: np.ndarray):
    """
    (v_inf, gamma w_s): far-field patterns v^inf(x, x_s) of the point-source
    problems and gamma(x) w^s(x_s, -x) of the plane-wave problems, both (m, p).
    """
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if isinstance(surface, ImpenetrableSurface):
        if not np.all(surface.image_below(sources)):
            raise DomainError("mixed reciprocity needs sources whose image lies below the surface")
        if np.any(directions[:, 1] <= 0):
            raise DomainError("observation directions must lie in the upper half-plane")
        point = surface.solve_point_sources(sources)
        # far field of the layer potential alone (the reflected point source is excluded)
        v_inf = surface.operator.far_field(directions, point.density)
        gamma = np.full(len(directions), far_field_constant(surface.k))
    elif isinstance(surface, PenetrableSurface):
        contrast = layer_contrast(surface.profile, 1.0, sources[:, 0], sources[:, 1])
        if np.any(contrast != 0):
            raise DomainError("mixed reciprocity needs sources outside the contrast region")
        v_inf = surface.solve_point_sources(sources).far_field(directions)
        k_side = np.where(directions[:, 1] >= 0, surface.medium.k1, surface.medium.k2)
        gamma = np.array([far_field_constant(k) for k in k_side])
    else:
        raise ConfigError(f"unsupported surface {type(surface).__name__}", "verify.surface")
    w_s = surface.solve_plane_waves(-directions).scattered(sources)   # (p, m)
    return v_inf, gamma[:, None] * w_s.T


def check_mixed_reciprocity(surface, sources: np.ndarray, directions: np.ndarray,
                            threshold: float = 1e-2) -> IdentityReport:
    """max |v_inf - gamma w_s| relative to max |v_inf|; 0 when both sides vanish."""
    v_inf, w_s = mixed_reciprocity_terms(surface, sources, directions)
    scale = max(float(np.max(np.abs(v_inf))), float(np.max(np.abs(w_s))))
    mismatch = float(np.max(np.abs(v_inf - w_s)))
    residual = 0.0 if mismatch == 0 else mismatch / max(scale, EPSILON)
    report = IdentityReport('mixed-reciprocity', residual, threshold, v_inf.size,
                            {'kind': surface.kind, 'profile': surface.profile.kind})
    logger.info("%s", report.summary_line())
    return report


def radiation_ratio(evaluator: GreenEvaluator, source: np.ndarray, rho: float,
                    angles: np.ndarray) -> float:
    """max over directions of |d_r G - i k G| / |G| on the circle of radius rho."""
    directions = np.column_stack([np.cos(angles), np.sin(angles)])
    values, grads = evaluator(rho * directions, np.asarray(source, dtype=float)[None, :], gradient=True)
    values, grads = values[:, 0], grads[:, 0]
    k_side = evaluator.wavenumber_at(rho * directions)
    radial = np.einsum('mk,mk->m', grads, directions)
    return float(np.max(np.abs(radial - 1j * k_side * values) / np.maximum(np.abs(values), EPSILON)))


def check_radiation_condition(evaluator: GreenEvaluator, radii: Sequence[float],
                              source: np.ndarray = (0.0, 0.5), angles: np.ndarray = None,
                              threshold: float = 0.25) -> IdentityReport:
    """
    |d_r G - i k G| / |G| should fall like 1 / rho; residual = max(0, slope + 1)
    of the log-log fit over the radii.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise ConfigError("need at least two radii", "verify.radii")
    if angles is None:
        angles = np.linspace(np.pi / 6, 5 * np.pi / 6, 9)
    ratios = np.array([radiation_ratio(evaluator, source, rho, angles) for rho in radii])
    slope = float(np.polyfit(np.log(radii), np.log(ratios), 1)[0])
    report = IdentityReport('radiation-condition', max(0.0, slope + 1.0), threshold, len(angles),
                            {'radii': radii, 'ratios': ratios.tolist(), 'slope': slope})
    logger.info("%s", report.summary_line())
    return report


# reference values of J0, J1, Y0, Y1 at x = 1, 5, 10
BESSEL_TABLE = np.array([
    [1.0, 0.7651976865579666, 0.4400505857449335, 0.08825696421567696, -0.7812128213002887],
    [5.0, -0.1775967713143383, -0.3275791375914652, -0.3085176252490338, 0.1478631433912268],
    [10.0, -0.2459357644513483, 0.04347274616886144, 0.05567116728359939, 0.2490154242069539],
])


def check_bessel_values(threshold: float = 1e-10) -> IdentityReport:
    x = BESSEL_TABLE[:, 0]
    computed = np.column_stack(specfun.bessel_jy01(x))
    expected = BESSEL_TABLE[:, 1:]
    residual = float(np.max(np.abs(computed - expected) / np.abs(expected)))
    return IdentityReport('bessel-values', residual, threshold, expected.size)


def check_bessel_wronskian(threshold: float = 1e-10) -> IdentityReport:
    """J1 Y0 - J0 Y1 = 2 / (pi x) on [0.1, 100]."""
    x = np.logspace(-1, 2, 301)
    j0, j1, y0, y1 = specfun.bessel_jy01(x)
    expected = 2 / (np.pi * x)
    residual = float(np.max(np.abs(j1 * y0 - j0 * y1 - expected) / expected))
    return IdentityReport('bessel-wronskian', residual, threshold, len(x))


def check_flat_curve_length(threshold: float = 1e-12) -> IdentityReport:
    """Quadrature weights of a discretized flat line add up to its length."""
    curve = discretize_surface(FlatProfile(2.0), 5.0, 10.0, 3.0)
    length = 2 * curve.half_length
    residual = abs(float(np.sum(curve.weights)) - length) / length
    return IdentityReport('flat-curve-length', residual, threshold, curve.n)


def check_flat_surface_oracle(kind: str, k: float = 2.0, threshold: float = 1e-12) -> IdentityReport:
    """
    On a flat line the boundary data vanish, so the solved scattered field
    must be the reflected point source of the half-plane Green's function.
    """
    surface = ImpenetrableSurface(FlatProfile(2.0), kind, k, SolverOptions(wing_wavelengths=1.0))
    sources = np.array([[0.0, 1.0], [0.5, 0.7], [-1.5, 2.0]])
    points = sample_points(20, (-3.0, 3.0, 0.1, 2.5))
    scattered = surface.solve_point_sources(sources).scattered(points)
    exact = halfplane_green(kind, k, points[:, None, :], sources[None, :, :]) \
        - specfun.phi(k, points[:, None, :], sources[None, :, :])
    residual = float(np.max(np.abs(scattered - exact)) / np.max(np.abs(exact)))
    return IdentityReport(f'flat-oracle-{kind}', residual, threshold, exact.size)


def quick_suite() -> List[IdentityReport]:
    """Special functions, curve quadrature and closed-form half-plane checks."""
    reports = [check_bessel_values(), check_bessel_wronskian(), check_flat_curve_length()]
    for kind in IMPENETRABLE_KINDS:
        reports.append(check_flat_surface_oracle(kind))
        report = check_helmholtz_kirchhoff(GreenEvaluator(kind, 5.0, field='flat'), 10.0)
        report.name = f'helmholtz-kirchhoff-flat-{kind}'
        reports.append(report)
    return reports


def full_suite(k1: float = 5.0, k2: float = 2.5, radius: float = 20.0, penetrable_radius: float = 6.0,
               options: SolverOptions = SolverOptions()) -> List[IdentityReport]:
    """Identity checks of the special-surface backgrounds at desk scale."""
    reports = quick_suite()
    radii = [30.0, 60.0, 120.0]
    evaluators = [GreenEvaluator(kind, k1, radius=radius, options=options) for kind in IMPENETRABLE_KINDS]
    evaluators.append(GreenEvaluator('P', k1, k2, radius=penetrable_radius, options=options))

    for evaluator in evaluators:
        rho = 1.5 * evaluator.radius if evaluator.kind == 'P' else radius + 10.0
        checks = [
            check_helmholtz_kirchhoff(evaluator, rho),
            check_remainder_decay(evaluator, radii),
            check_reciprocity(evaluator, sample_pairs(10, evaluator.kind),
                              1e-3 if evaluator.kind == 'P' else 1e-4),
        ]
        for report in checks:
            report.name = f'{report.name}-{evaluator.kind}'
        reports.extend(checks)

    inner = np.array([[-3.0, 0.5], [0.0, 0.75], [2.5, 0.3]])
    for evaluator in evaluators[:2]:
        report = check_boundary_condition(evaluator.surface, inner)
        report.name = f'{report.name}-{evaluator.kind}'
        reports.append(report)

    angles = np.arange(1, 7) * np.pi / 7
    upper = np.column_stack([np.cos(angles), np.sin(angles)])
    for kind in IMPENETRABLE_KINDS:
        surface = ImpenetrableSurface(BumpProfile('f1'), kind, k1, options)
        sources = np.array([[-2.0, 1.0], [0.0, 1.5], [1.5, 1.0], [3.0, 2.0]])
        report = check_mixed_reciprocity(surface, sources, upper)
        report.name = f'mixed-reciprocity-{kind}'
        reports.append(report)

    surface = PenetrableSurface(BumpProfile('f1'), TwoLayerMedium(k1, k2), options)
    sources = np.array([[-2.0, 1.0], [0.0, 1.5], [1.5, -1.5], [3.0, -2.0]])
    angles = (np.arange(6) + 0.5) * np.pi / 3
    report = check_mixed_reciprocity(surface, sources, np.column_stack([np.cos(angles), np.sin(angles)]),
                                     threshold=3e-2)
    report.name = 'mixed-reciprocity-P'
    reports.append(report)

    reports.append(check_radiation_condition(evaluators[0], [radius + 10.0, 2 * radius + 20.0]))
    return reports


__all__ = [
    'GreenEvaluator', 'IdentityReport', 'check_bessel_values', 'check_bessel_wronskian',
    'check_boundary_condition', 'check_flat_curve_length', 'check_flat_surface_oracle',
    'check_helmholtz_kirchhoff', 'check_mixed_reciprocity', 'check_radiation_condition', 'check_reciprocity',
    'check_remainder_decay', 'format_reports', 'full_suite', 'helmholtz_kirchhoff_terms',
    'mixed_reciprocity_terms', 'quick_suite', 'radiation_ratio', 'remainder', 'sample_pairs',
    'sample_points',
]
