"""
Surface profiles, the special surface with a semicircular dip, curve
discretization on a periodic parameter with smooth truncation windows,
acquisition layouts and sampling grids.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

# Built-in profiles sit at height 0.5 away from the perturbation.
BUILTIN_BASE_SHIFT = -0.5
GRADING_ORDER = 4
MIN_SEGMENT_NODES = 12


class SurfaceProfile:
    """
    Base class of a graph surface x2 = f(x1) that coincides with x2 = 0
    for |x1| >= support_halfwidth.

    Subclasses implement height and its first two derivatives. Profiles
    with corners additionally return the polyline/arc pieces of the curve
    from `pieces`, which the discretizer grades toward each corner.
    """
    kind: str = "abstract"

    def __init__(self, support_halfwidth: float, base_shift: float = 0.0):
        if support_halfwidth <= 0:
            raise ConfigError("support half-width must be positive", "surface.support_halfwidth")
        self.support_halfwidth = float(support_halfwidth)
        self.base_shift = float(base_shift)

    def height(self, x1: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, x1: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def second_derivative(self, x1: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jump_points(self) -> List[float]:
        return []

    def pieces(self, half_length: float) -> Optional[List['CurvePiece']]:
        """None for smooth graphs (a single uniformly parametrized piece)."""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind!r}, A={self.support_halfwidth})"


class FlatProfile(SurfaceProfile):
    kind = "flat"

    def height(self, x1):
        return np.zeros_like(np.asarray(x1, dtype=float))

    def derivative(self, x1):
        return np.zeros_like(np.asarray(x1, dtype=float))

    def second_derivative(self, x1):
        return np.zeros_like(np.asarray(x1, dtype=float))


class BumpProfile(SurfaceProfile):
    """
    f1: 0.6 sin(0.6 pi x1) exp(16 / (x1^2 - 16))
    f2: (0.5 + 0.05 sin(3 pi x1)) exp(4 / (x1^2 - 16))
    both for |x1| < 4 and zero elsewhere (after the base shift).
    """

    def __init__(self, kind: str):
        if kind not in ("f1", "f2"):
            raise ConfigError(f"unknown bump profile {kind!r}", "surface.profile")
        super(BumpProfile, self).__init__(4.0, BUILTIN_BASE_SHIFT)
        self.kind = kind

    def _parts(self, x1: np.ndarray):
        """
        Returns the amplitude a, the exponent g and their first and second
        derivatives (a, a1, a2, g, g1, g2) at interior points.
        """
        d = x1 * x1 - 16.0
        if self.kind == "f1":
            c, omega, offset, scale = 16.0, 0.6 * np.pi, 0.0, 0.6
        else:
            c, omega, offset, scale = 4.0, 3 * np.pi, 0.5, 0.05
        s, co = np.sin(omega * x1), np.cos(omega * x1)
        a = offset + scale * s
        a1 = scale * omega * co
        a2 = -scale * omega * omega * s
        g = c / d
        g1 = -2 * c * x1 / d ** 2
        g2 = -2 * c / d ** 2 + 8 * c * x1 * x1 / d ** 3
        return a, a1, a2, g, g1, g2

    def _evaluate(self, x1, order: int) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        out = np.zeros_like(x1)
        inside = np.abs(x1) < self.support_halfwidth
        if np.any(inside):
            a, a1, a2, g, g1, g2 = self._parts(x1[inside])
            e = np.exp(g)
            if order == 0:
                out[inside] = a * e
            elif order == 1:
                out[inside] = (a1 + a * g1) * e
            else:
                out[inside] = (a2 + 2 * a1 * g1 + a * (g2 + g1 * g1)) * e
        return out

    def height(self, x1):
        return self._evaluate(x1, 0)

    def derivative(self, x1):
        return self._evaluate(x1, 1)

    def second_derivative(self, x1):
        return self._evaluate(x1, 2)


class StepProfile(SurfaceProfile):
    """
    f3: levels 0.2 for |x1| <= 1, 0.3 for 3 <= |x1| <= 4 and 0.5 elsewhere,
    shifted by -0.5. The curve is the polyline through the steps.
    """
    kind = "f3"
    levels = ((1.0, -0.3), (3.0, 0.0), (4.0, -0.2))

    def __init__(self):
        super(StepProfile, self).__init__(4.0, BUILTIN_BASE_SHIFT)

    def height(self, x1):
        x1 = np.abs(np.asarray(x1, dtype=float))
        out = np.zeros_like(x1)
        out[x1 <= 1.0] = -0.3
        out[(x1 >= 3.0) & (x1 <= 4.0)] = -0.2
        return out

    def derivative(self, x1):
        return np.zeros_like(np.asarray(x1, dtype=float))

    def second_derivative(self, x1):
        return np.zeros_like(np.asarray(x1, dtype=float))

    def jump_points(self) -> List[float]:
        return [-4.0, -3.0, -1.0, 1.0, 3.0, 4.0]

    def pieces(self, half_length: float) -> List['CurvePiece']:
        # vertices of the polyline from left to right
        xs = [-half_length, -4.0, -4.0, -3.0, -3.0, -1.0, -1.0,
              1.0, 1.0, 3.0, 3.0, 4.0, 4.0, half_length]
        ys = [0.0, 0.0, -0.2, -0.2, 0.0, 0.0, -0.3,
              -0.3, 0.0, 0.0, -0.2, -0.2, 0.0, 0.0]
        vertices = np.column_stack([xs, ys])
        return [CurvePiece.segment(vertices[i], vertices[i + 1])
                for i in range(len(vertices) - 1)]


class DipProfile(SurfaceProfile):
    """
    The special surface: x2 = -sqrt(R^2 - x1^2) for |x1| <= R, 0 elsewhere.
    """
    kind = "gammaR-dip"

    def __init__(self, radius: float):
        if radius <= 0:
            raise ConfigError("dip radius must be positive", "surface.dip_radius")
        super(DipProfile, self).__init__(radius, 0.0)
        self.radius = float(radius)

    def height(self, x1):
        x1 = np.asarray(x1, dtype=float)
        out = np.zeros_like(x1)
        inside = np.abs(x1) <= self.radius
        out[inside] = -np.sqrt(self.radius ** 2 - x1[inside] ** 2)
        return out

    def derivative(self, x1):
        x1 = np.asarray(x1, dtype=float)
        out = np.zeros_like(x1)
        inside = np.abs(x1) < self.radius
        out[inside] = x1[inside] / np.sqrt(self.radius ** 2 - x1[inside] ** 2)
        return out

    def second_derivative(self, x1):
        x1 = np.asarray(x1, dtype=float)
        out = np.zeros_like(x1)
        inside = np.abs(x1) < self.radius
        out[inside] = self.radius ** 2 / (self.radius ** 2 - x1[inside] ** 2) ** 1.5
        return out

    def jump_points(self) -> List[float]:
        return [-self.radius, self.radius]

    def contains_below(self, points: np.ndarray) -> np.ndarray:
        """True for points strictly below the surface."""
        points = np.asarray(points, dtype=float)
        return points[..., 1] < self.height(points[..., 0])

    def pieces(self, half_length: float) -> List['CurvePiece']:
        left = CurvePiece.segment((-half_length, 0.0), (-self.radius, 0.0))
        right = CurvePiece.segment((self.radius, 0.0), (half_length, 0.0))
        return [left, CurvePiece.arc(self.radius), right]


class TabulatedProfile(SurfaceProfile):
    """Two-column table (x1, height), linearly interpolated."""
    kind = "tabulated"

    def __init__(self, table: np.ndarray, source: str = "<array>"):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or table.shape[1] != 2 or table.shape[0] < 2:
            raise ConfigError(f"profile table {source} must have two columns and >= 2 rows",
                              "surface.table")
        order = np.argsort(table[:, 0])
        self.x_table = table[order, 0]
        self.h_table = table[order, 1]
        if np.any(np.diff(self.x_table) <= 0):
            raise ConfigError(f"profile table {source} has repeated abscissae", "surface.table")
        nonzero = np.nonzero(self.h_table)[0]
        if nonzero.size:
            support = max(abs(self.x_table[nonzero[0] - 1 if nonzero[0] else 0]),
                          abs(self.x_table[min(nonzero[-1] + 1, len(self.x_table) - 1)]))
        else:
            support = 1.0
        super(TabulatedProfile, self).__init__(support, 0.0)
        self.source = source

    @classmethod
    def from_file(cls, path: str) -> 'TabulatedProfile':
        return cls(np.loadtxt(path, ndmin=2), source=path)

    def _check(self, x1: np.ndarray) -> None:
        if np.any(x1 < self.x_table[0]) or np.any(x1 > self.x_table[-1]):
            raise DomainError(
                f"tabulated profile {self.source} queried outside "
                f"[{self.x_table[0]}, {self.x_table[-1]}]")

    def height(self, x1):
        x1 = np.asarray(x1, dtype=float)
        self._check(x1)
        return np.interp(x1, self.x_table, self.h_table)

    def derivative(self, x1):
        x1 = np.asarray(x1, dtype=float)
        self._check(x1)
        slopes = np.diff(self.h_table) / np.diff(self.x_table)
        index = np.clip(np.searchsorted(self.x_table, x1, side="right") - 1, 0, len(slopes) - 1)
        return slopes[index]

    def second_derivative(self, x1):
        return np.zeros_like(np.asarray(x1, dtype=float))


def builtin_profile(name: str, dip_radius: float = 20.0, table_path: str = None) -> SurfaceProfile:
    if name in ("f1", "f2"):
        return BumpProfile(name)
    if name == "f3":
        return StepProfile()
    if name == "flat":
        return FlatProfile(4.0)
    if name == "gammaR-dip":
        return DipProfile(dip_radius)
    if name == "tabulated":
        if not table_path:
            raise ConfigError("tabulated profile needs a table path", "surface.table")
        return TabulatedProfile.from_file(table_path)
    raise ConfigError(f"unknown profile {name!r}", "surface.profile")


def profile_eval(profile: SurfaceProfile, x1) -> np.ndarray:
    return profile.height(x1)


@dataclass
class CurvePiece:
    """
    A piece of a curve given on the local parameter s in [0, 1] by
    callables returning points, first and second derivatives with shape (m, 2).
    """
    point: Callable[[np.ndarray], np.ndarray]
    first: Callable[[np.ndarray], np.ndarray]
    second: Callable[[np.ndarray], np.ndarray]
    length: float

    @classmethod
    def segment(cls, start, end) -> 'CurvePiece':
        start = np.asarray(start, dtype=float)
        delta = np.asarray(end, dtype=float) - start
        return cls(
            point=lambda s: start + s[:, None] * delta,
            first=lambda s: np.broadcast_to(delta, (len(s), 2)).copy(),
            second=lambda s: np.zeros((len(s), 2)),
            length=float(np.hypot(*delta)))

    @classmethod
    def arc(cls, radius: float) -> 'CurvePiece':
        # lower semicircle from (-R, 0) to (R, 0): angle pi + pi * s
        def point(s):
            theta = np.pi * (1 + s)
            return radius * np.column_stack([np.cos(theta), np.sin(theta)])

        def first(s):
            theta = np.pi * (1 + s)
            return radius * np.pi * np.column_stack([-np.sin(theta), np.cos(theta)])

        def second(s):
            theta = np.pi * (1 + s)
            return -radius * np.pi ** 2 * np.column_stack([np.cos(theta), np.sin(theta)])

        return cls(point, first, second, float(np.pi * radius))


def _grading(u: np.ndarray, p: int = GRADING_ORDER) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Sigmoidal map of [0, 1] onto itself whose derivatives vanish to order p - 1
    at both ends; returns (G, G', G''). The peak of G' is 2 at u = 1/2.
    """
    sigma = 2 * u - 1
    c1, c2 = 1.0 / p - 0.5, 1.0 / p
    v = -c1 * sigma ** 3 + c2 * sigma + 0.5
    v_sigma = -3 * c1 * sigma ** 2 + c2
    v_sigma2 = -6 * c1 * sigma
    a, b = v ** p, (1 - v) ** p
    g = a / (a + b)
    d = p * v ** (p - 1) * (1 - v) ** (p - 1) / (a + b) ** 2
    log_slope = (p - 1) * (1 / v - 1 / (1 - v)) - 2 * p * (v ** (p - 1) - (1 - v) ** (p - 1)) / (a + b)
    d_v = d * log_slope
    return g, 2 * d * v_sigma, 4 * (d_v * v_sigma ** 2 + d * v_sigma2)


def smooth_window(x1: np.ndarray, plateau: float, end: float) -> np.ndarray:
    """
    1 for |x1| <= plateau, 0 for |x1| >= end and the C-infinity taper
    exp(2 e^{-1/u} / (u - 1)) in between.
    """
    x1 = np.abs(np.asarray(x1, dtype=float))
    out = np.ones_like(x1)
    if end <= plateau:
        return out
    out[x1 >= end] = 0.0
    taper = (x1 > plateau) & (x1 < end)
    u = (x1[taper] - plateau) / (end - plateau)
    out[taper] = np.exp(2 * np.exp(-1 / u) / (u - 1))
    return out


@dataclass
class DiscretizedCurve:
    """
    Nystrom discretization of a truncated surface on the periodic parameter
    t in [0, 2 pi), nodes t_j = (j + 1/2) 2 pi / n.

    points/normals/first/second have shape (n, 2); weights, speed, t and
    window have shape (n,). weights = speed * 2 pi / n.
    """
    profile_kind: str
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    speed: np.ndarray
    first: np.ndarray
    second: np.ndarray
    t: np.ndarray
    window: np.ndarray
    support_halfwidth: float
    wing_halfwidth: float
    nodes_per_wavelength: float

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def half_length(self) -> float:
        return self.support_halfwidth + self.wing_halfwidth

    def validate(self) -> None:
        if np.any(self.weights <= 0):
            raise DomainError("curve weights must be positive")
        if not np.allclose(np.hypot(self.normals[:, 0], self.normals[:, 1]), 1.0, atol=1e-12):
            raise DomainError("curve normals must be unit vectors")
        if self.n % 2:
            raise DomainError("Nystrom curves need an even node count")


def _even(n: float) -> int:
    n = int(np.ceil(n))
    return n + (n % 2)


def _smooth_curve(profile: SurfaceProfile, half_length: float, n_per_length: float):
    samples = np.linspace(-half_length, half_length, 4001)
    max_speed = np.max(np.sqrt(1 + profile.derivative(samples) ** 2))
    n = max(_even(2 * half_length * max_speed * n_per_length), 2 * MIN_SEGMENT_NODES)
    t = (np.arange(n) + 0.5) * 2 * np.pi / n
    scale = 2 * half_length / (2 * np.pi)
    x1 = -half_length + scale * t
    f, f1, f2 = profile.height(x1), profile.derivative(x1), profile.second_derivative(x1)
    nodes = np.column_stack([x1, f])
    first = np.column_stack([np.full(n, scale), scale * f1])
    second = np.column_stack([np.zeros(n), scale * scale * f2])
    return t, nodes, first, second


def _graded_curve(pieces: List[CurvePiece], n_per_length: float):
    # G' peaks at 2, so each piece needs twice the uniform node density
    counts = [max(int(np.ceil(2 * piece.length * n_per_length)), MIN_SEGMENT_NODES)
              for piece in pieces]
    if sum(counts) % 2:
        counts[int(np.argmax(counts))] += 1
    n = sum(counts)
    t_all, nodes, first, second = [], [], [], []
    offset = 0
    for piece, count in zip(pieces, counts):
        u = (np.arange(count) + 0.5) / count
        s, g1, g2 = _grading(u)
        # du/dt for this piece
        u_t = n / (2 * np.pi * count)
        d1, d2 = piece.first(s), piece.second(s)
        t_all.append((offset + np.arange(count) + 0.5) * 2 * np.pi / n)
        nodes.append(piece.point(s))
        first.append(d1 * (g1 * u_t)[:, None])
        second.append(d2 * ((g1 * u_t) ** 2)[:, None] + d1 * (g2 * u_t ** 2)[:, None])
        offset += count
    return np.concatenate(t_all), np.vstack(nodes), np.vstack(first), np.vstack(second)


def discretize_surface(profile: SurfaceProfile,
                       k: float,
                       nodes_per_wavelength: float,
                       wing_halfwidth: float) -> DiscretizedCurve:
    """
    Discretizes the profile over [-A - W, A + W] with node spacing at most
    wavelength / nodes_per_wavelength. Profiles with corners are split at the
    corners and graded toward them; smooth profiles use a uniform map in x1.
    """
    if nodes_per_wavelength < 6:
        raise ConfigError("nodes_per_wavelength must be >= 6", "solver.nodes_per_wavelength")
    if wing_halfwidth < 0:
        raise ConfigError("wing half-width must be >= 0", "solver.wing_wavelengths")

    wavelength = 2 * np.pi / k
    n_per_length = nodes_per_wavelength / wavelength
    half_length = profile.support_halfwidth + wing_halfwidth

    pieces = profile.pieces(half_length)
    if pieces is None:
        t, nodes, first, second = _smooth_curve(profile, half_length, n_per_length)
    else:
        t, nodes, first, second = _graded_curve(pieces, n_per_length)

    speed = np.hypot(first[:, 0], first[:, 1])
    normals = np.column_stack([-first[:, 1], first[:, 0]]) / speed[:, None]
    weights = speed * 2 * np.pi / len(t)
    plateau = profile.support_halfwidth + wing_halfwidth / 4
    window = smooth_window(nodes[:, 0], plateau, half_length)

    curve = DiscretizedCurve(
        profile_kind=profile.kind, nodes=nodes, normals=normals, weights=weights,
        speed=speed, first=first, second=second, t=t, window=window,
        support_halfwidth=profile.support_halfwidth, wing_halfwidth=wing_halfwidth,
        nodes_per_wavelength=nodes_per_wavelength)
    curve.validate()
    logger.debug("discretized %s: %d nodes over [-%.3f, %.3f]",
                 profile.kind, curve.n, half_length, half_length)
    return curve


@dataclass
class AcquisitionGeometry:
    """
    Sources and receivers on circles (near regime) or unit directions
    (far regime). aperture is 'upper' (S_+) or 'full' (S).
    """
    regime: str = "near"
    aperture: str = "upper"
    source_radius: float = 30.0
    receiver_radius: float = 40.0
    n_sources: int = 64
    n_receivers: int = 64

    def validate(self, dip_radius: float = None) -> None:
        if self.regime not in ("near", "far"):
            raise ConfigError(f"unknown regime {self.regime!r}", "acquisition.regime")
        if self.aperture not in ("upper", "full"):
            raise ConfigError(f"unknown aperture {self.aperture!r}", "acquisition.aperture")
        if self.n_sources < 2:
            raise ConfigError("need at least two sources", "acquisition.n_sources")
        if self.n_receivers < 2:
            raise ConfigError("need at least two receivers", "acquisition.n_receivers")
        if self.regime == "near":
            if self.source_radius > self.receiver_radius:
                raise ConfigError("receiver radius must be >= source radius",
                                  "acquisition.receiver_radius")
            if dip_radius is not None and self.source_radius <= dip_radius:
                raise ConfigError("sources inside background surface (source radius <= R)",
                                  "acquisition.source_radius")

    def angles(self, count: int) -> np.ndarray:
        j = np.arange(count)
        if self.aperture == "upper":
            return (j + 0.5) * np.pi / count
        if self.regime == "near":
            return 2 * np.pi * j / count
        return (j + 0.5) * 2 * np.pi / count

    def source_weight(self) -> float:
        return self._weight(self.source_radius, self.n_sources)

    def receiver_weight(self) -> float:
        return self._weight(self.receiver_radius, self.n_receivers)

    def _weight(self, radius: float, count: int) -> float:
        arc = np.pi if self.aperture == "upper" else 2 * np.pi
        if self.regime == "near":
            arc *= radius
        return arc / count


def acquisition_points(geometry: AcquisitionGeometry,
                       dip_radius: float = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns (sources, receivers) with shapes (N_s, 2) and (N_r, 2): points on
    the circles in the near regime, unit directions in the far regime.
    """
    geometry.validate(dip_radius)
    out = []
    for count, radius in ((geometry.n_sources, geometry.source_radius),
                          (geometry.n_receivers, geometry.receiver_radius)):
        theta = geometry.angles(count)
        scale = radius if geometry.regime == "near" else 1.0
        out.append(scale * np.column_stack([np.cos(theta), np.sin(theta)]))
    return out[0], out[1]


@dataclass
class ImageGrid:
    """
    Sampling grid. values has shape (n2, n1): rows follow x2, columns x1.
    """
    x1_min: float = -5.0
    x1_max: float = 5.0
    x2_min: float = -1.5
    x2_max: float = 1.0
    n1: int = 128
    n2: int = 32
    values: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def validate(self, dip_radius: float = None, source_radius: float = None) -> None:
        if self.n1 < 1 or self.n2 < 1:
            raise ConfigError("grid resolution must be positive", "imaging.n1")
        if self.x1_min > self.x1_max or self.x2_min > self.x2_max:
            raise ConfigError("grid bounds are reversed", "imaging.x1_min")
        corners = np.array([[self.x1_min, self.x2_min], [self.x1_min, self.x2_max],
                            [self.x1_max, self.x2_min], [self.x1_max, self.x2_max]])
        radii = np.hypot(corners[:, 0], corners[:, 1])
        if dip_radius is not None and np.any(radii >= dip_radius):
            raise ConfigError("sampling grid must lie strictly inside B_R above the dip",
                              "imaging.x1_min")
        if source_radius is not None and np.any(radii >= source_radius):
            raise ConfigError("sampling grid must lie inside the source circle", "imaging.x1_min")
        if self.values is not None and self.values.shape != (self.n2, self.n1):
            raise DomainError(f"grid values have shape {self.values.shape}, "
                              f"expected {(self.n2, self.n1)}")

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(self.x1_min, self.x1_max, self.n1)

    @property
    def x2(self) -> np.ndarray:
        return np.linspace(self.x2_min, self.x2_max, self.n2)

    def points(self) -> np.ndarray:
        """Sampling points with shape (n2 * n1, 2), x1 running fastest."""
        x1, x2 = np.meshgrid(self.x1, self.x2)
        return np.column_stack([x1.ravel(), x2.ravel()])

    def with_values(self, values: np.ndarray, **metadata) -> 'ImageGrid':
        grid = ImageGrid(self.x1_min, self.x1_max, self.x2_min, self.x2_max,
                         self.n1, self.n2, np.asarray(values, dtype=float).reshape(self.n2, self.n1),
                         {**self.metadata, **metadata})
        return grid
