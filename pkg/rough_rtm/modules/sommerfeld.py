"""
Green's function v_0 of two fluids separated by the line x2 = 0
(wavenumber k1 above, k2 below).

    v_0(x, y) = Phi_ref(x, y) + (i / 2 pi) int_0^inf cos(xi (x1 - y1)) F(xi; x2, y2) dxi

    x, y above:   Phi_k1,  F = R12 e^{i b1 (x2 + y2)} / b1
    x, y below:   Phi_k2,  F = R21 e^{-i b2 (x2 + y2)} / b2
    x above, y below:  Phi_km, F = 2 / (b1 + b2) e^{i b1 x2 - i b2 y2} - e^{i bm (x2 - y2)} / bm
    (and the mirrored expression for x below, y above)

with b_j = sqrt(k_j^2 - xi^2), Im b_j >= 0, R12 = (b1 - b2) / (b1 + b2) = -R21 and
km^2 = (k1^2 + k2^2) / 2. Subtracting Phi_km from the transmitted part leaves an
absolutely integrable remainder, so points on both sides of the interface
close to each other need no special treatment.

Plane waves on the same two-fluid configuration are given by the Fresnel
formulas (`fresnel`, `planewave_field`).

The integral runs on the real axis. Panels break at k2, km, k1; the panels
touching a branch point get a quadratic map that removes the inverse
square root. Points on the interface (x2 = 0) count as upper points.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from . import specfun
from .errors import DomainError

logger = logging.getLogger(__name__)

GAUSS_POINTS = 16
DECAY_EXPONENT = 30.0
# depth floor in wavelengths of the larger wavenumber
DEPTH_FLOOR = 0.02
CHUNK_ELEMENTS = 4_000_000


def _beta(k: float, xi: np.ndarray) -> np.ndarray:
    return np.emath.sqrt(k * k - xi * xi)


def _map_panel(a: float, b: float, left: bool, right: bool,
               u: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule on [0, 1] (u, w) mapped onto [a, b], quadratically
    clustered at the singular ends.
    """
    length = b - a
    if left and right:
        xi = a + length * (1 - np.cos(np.pi * u)) / 2
        jac = length * np.pi / 2 * np.sin(np.pi * u)
    elif left:
        xi = a + length * u * u
        jac = 2 * length * u
    elif right:
        xi = b - length * (1 - u) ** 2
        jac = 2 * length * (1 - u)
    else:
        xi = a + length * u
        jac = np.full_like(u, length)
    return xi, w * jac


@lru_cache(maxsize=64)
def spectral_nodes(k1: float, k2: float, delta_max: float, depth: float,
                   panel_scale: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights on [0, xi_max] for horizontal offsets up to delta_max
    and summed depths |x2| + |y2| >= depth.
    """
    x, w = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    u, w = (x + 1) / 2, w / 2

    k_lo, k_hi = min(k1, k2), max(k1, k2)
    km = np.sqrt((k1 * k1 + k2 * k2) / 2)
    depth = max(depth, DEPTH_FLOOR * 2 * np.pi / k_hi)
    panel = min(k_lo / 2, 4 * np.pi / max(delta_max, 1e-12), 8.0 / depth) / panel_scale

    xi_max = k_hi + DECAY_EXPONENT / depth
    breaks = [0.0] + sorted({k_lo, km, k_hi}) + [xi_max]
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        count = int(np.ceil((b - a) / panel))
        edges = np.linspace(a, b, count + 1)
        for index in range(count):
            left = index == 0 and a > 0
            right = index == count - 1 and b < xi_max
            xi, wq = _map_panel(edges[index], edges[index + 1], left, right, u, w)
            nodes.append(xi)
            weights.append(wq)
    nodes, weights = np.concatenate(nodes), np.concatenate(weights)
    logger.debug("spectral rule: %d nodes up to xi = %.1f (offset %.2f, depth %.3f)",
                 len(nodes), xi_max, delta_max, depth)
    return nodes, weights


class FlatTwoLayerGreen:
    """
    v_0 for wavenumbers k1 (x2 >= 0) and k2 (x2 < 0).

    Both `matrix` (all targets against all sources) and `pairwise`
    (elementwise over broadcast point arrays) return values and, on
    request, gradients with respect to the target point.
    """

    def __init__(self, k1: float, k2: float, panel_scale: float = 1.0):
        self.k1 = specfun.wavenumber(k1)
        self.k2 = specfun.wavenumber(k2)
        self.km = float(np.sqrt((self.k1 ** 2 + self.k2 ** 2) / 2))
        self.panel_scale = panel_scale

    @property
    def sigma(self) -> float:
        return self.k1 ** 2 - self.k2 ** 2

    @property
    def homogeneous(self) -> bool:
        return self.k1 == self.k2

    def wavenumber_at(self, points: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(points)[..., 1] >= 0, self.k1, self.k2)

    # ! the four spectral terms are listed as (weight, target exponent, source exponent)
    def _terms(self, case: str, xi: np.ndarray):
        b1, b2 = _beta(self.k1, xi), _beta(self.k2, xi)
        if case == "uu":
            r12 = (b1 - b2) / (b1 + b2)
            return [(r12 / b1, 1j * b1, 1j * b1)]
        if case == "ll":
            r21 = (b2 - b1) / (b1 + b2)
            return [(r21 / b2, -1j * b2, -1j * b2)]
        bm = _beta(self.km, xi)
        transmitted = 2 / (b1 + b2)
        if case == "ul":
            return [(transmitted, 1j * b1, -1j * b2), (-1 / bm, 1j * bm, -1j * bm)]
        return [(transmitted, -1j * b2, 1j * b1), (-1 / bm, -1j * bm, 1j * bm)]

    def _reference_k(self, case: str) -> float:
        return {"uu": self.k1, "ll": self.k2}.get(case, self.km)

    @staticmethod
    def _depth(target_x2: np.ndarray, source_x2: np.ndarray) -> float:
        return float(np.min(np.abs(target_x2)) + np.min(np.abs(source_x2)))

    def _rule(self, target_x1, source_x1, depth):
        delta = max(np.max(target_x1) - np.min(source_x1), np.max(source_x1) - np.min(target_x1), 0.0)
        # rounding makes neighbouring blocks share a cached rule
        delta = float(np.ceil(delta * 4) / 4)
        if depth > 0:
            depth = float(2.0 ** (np.floor(4 * np.log2(depth)) / 4))
        return spectral_nodes(self.k1, self.k2, delta, depth, self.panel_scale)

    def _block(self, case: str, targets: np.ndarray, sources: np.ndarray,
               gradient: bool) -> Tuple[np.ndarray, np.ndarray]:
        xi, wq = self._rule(targets[:, 0], sources[:, 0],
                            self._depth(targets[:, 1], sources[:, 1]))
        # factors cached per distinct coordinate, expanded chunk by chunk
        tx1, tx1_inv = np.unique(targets[:, 0], return_inverse=True)
        tx2, tx2_inv = np.unique(targets[:, 1], return_inverse=True)
        sx1, sx1_inv = np.unique(sources[:, 0], return_inverse=True)
        sx2, sx2_inv = np.unique(sources[:, 1], return_inverse=True)
        t_cos, t_sin = np.cos(np.outer(tx1, xi)), np.sin(np.outer(tx1, xi))
        s_cos, s_sin = np.cos(np.outer(sx1, xi)), np.sin(np.outer(sx1, xi))

        m, p = len(targets), len(sources)
        values = np.zeros((m, p), dtype=complex)
        grads = np.zeros((m, p, 2), dtype=complex) if gradient else None
        chunk = max(1, CHUNK_ELEMENTS // len(xi))
        for weight, t_exp, s_exp in self._terms(case, xi):
            a = np.exp(np.outer(tx2, t_exp)) * (wq * weight)
            b = np.exp(np.outer(sx2, s_exp))
            for col_start in range(0, p, chunk):
                cols = slice(col_start, col_start + chunk)
                ci, cj = sx1_inv[cols], sx2_inv[cols]
                b_cos = (s_cos[ci] * b[cj]).T
                b_sin = (s_sin[ci] * b[cj]).T
                for start in range(0, m, chunk):
                    rows = slice(start, start + chunk)
                    a_rows = a[tx2_inv[rows]]
                    a_cos = t_cos[tx1_inv[rows]] * a_rows
                    a_sin = t_sin[tx1_inv[rows]] * a_rows
                    values[rows, cols] += a_cos @ b_cos + a_sin @ b_sin
                    if gradient:
                        grads[rows, cols, 0] += (-xi * a_sin) @ b_cos + (xi * a_cos) @ b_sin
                        grads[rows, cols, 1] += (t_exp * a_cos) @ b_cos + (t_exp * a_sin) @ b_sin
        scale = 0.5j / np.pi
        values *= scale
        if gradient:
            grads *= scale
        return values, grads

    def matrix(self, targets: np.ndarray, sources: np.ndarray, gradient: bool = False,
               skip_diagonal: bool = False):
        """
        targets: (m, 2), sources: (p, 2). Returns values (m, p) and, if gradient,
        also target gradients (m, p, 2). With skip_diagonal the direct
        (singular) part is left out on the diagonal, targets being sources.
        """
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        m, p = len(targets), len(sources)
        values = np.zeros((m, p), dtype=complex)
        grads = np.zeros((m, p, 2), dtype=complex) if gradient else None

        upper_t, upper_s = targets[:, 1] >= 0, sources[:, 1] >= 0
        for case, rows, cols in (("uu", upper_t, upper_s), ("ll", ~upper_t, ~upper_s),
                                 ("ul", upper_t, ~upper_s), ("lu", ~upper_t, upper_s)):
            if not np.any(rows) or not np.any(cols):
                continue
            ri, ci = np.nonzero(rows)[0], np.nonzero(cols)[0]
            t, s = targets[ri], sources[ci]
            k_ref = self._reference_k(case)
            direct, direct_grad = self._direct(k_ref, t, s, ri, ci, skip_diagonal, gradient)
            block = np.ix_(ri, ci)
            if self.homogeneous:
                values[block] = direct
                if gradient:
                    grads[block] = direct_grad
                continue
            spectral, spectral_grad = self._block(case, t, s, gradient)
            values[block] = direct + spectral
            if gradient:
                grads[block] = direct_grad + spectral_grad
        return (values, grads) if gradient else values

    @staticmethod
    def _direct(k, t, s, ri, ci, skip_diagonal, gradient):
        x, y = t[:, None, :], s[None, :, :]
        if skip_diagonal:
            same = ri[:, None] == ci[None, :]
            y = np.where(same[..., None], x + 1.0, y)
        if gradient:
            value, grad = specfun.phi_with_grad(k, x, y)
        else:
            value, grad = specfun.phi(k, x, y), None
        if skip_diagonal:
            value = np.where(same, 0.0, value)
            if gradient:
                grad = np.where(same[..., None], 0.0, grad)
        return value, grad

    def pairwise(self, x: np.ndarray, y: np.ndarray, gradient: bool = False):
        """
        v_0 at broadcast pairs of points x, y with shape (..., 2).
        """
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        shape = x.shape[:-1]
        xf, yf = x.reshape(-1, 2), y.reshape(-1, 2)
        values = np.empty(len(xf), dtype=complex)
        grads = np.empty((len(xf), 2), dtype=complex)
        # one pair at a time through the matrix path keeps a single code path
        for index in range(len(xf)):
            out = self.matrix(xf[index:index + 1], yf[index:index + 1], gradient=gradient)
            if gradient:
                values[index], grads[index] = out[0][0, 0], out[1][0, 0]
            else:
                values[index] = out[0, 0]
        values = values.reshape(shape)
        if gradient:
            return values, grads.reshape(shape + (2,))
        return values

    def coincident_spectral(self, points: np.ndarray) -> np.ndarray:
        """Smooth part v_0 - Phi_k(side) at coincident points, shape (m,)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.homogeneous:
            return np.zeros(len(points), dtype=complex)
        out = np.empty(len(points), dtype=complex)
        for case, mask in (("uu", points[:, 1] >= 0), ("ll", points[:, 1] < 0)):
            if not np.any(mask):
                continue
            chosen = points[mask]
            if np.any(chosen[:, 1] == 0):
                raise DomainError("coincident points on the interface")
            # unique depths only: the smooth part does not depend on x1
            depths, inverse = np.unique(chosen[:, 1], return_inverse=True)
            pts = np.column_stack([np.zeros_like(depths), depths])
            spectral = np.array([self._block(case, pts[i:i + 1], pts[i:i + 1], False)[0][0, 0]
                                 for i in range(len(depths))])
            out[mask] = spectral[inverse]
        return out


@dataclass(frozen=True)
class FresnelCoefficients:
    """
    Reflection and transmission of a plane wave at the flat interface.
    transmitted_direction may have a complex second component (evanescent
    transmission beyond the critical angle, decaying away from x2 = 0).
    """
    reflection: complex
    transmission: complex
    transmitted_direction: np.ndarray
    critical_angle: float
    from_above: bool


def fresnel(k1: float, k2: float, theta: float) -> FresnelCoefficients:
    """
    Incident direction d = (cos theta, sin theta); sin theta < 0 means incidence
    from the upper medium. Grazing and exact critical-angle incidence raise DomainError.
    """
    k1, k2 = specfun.wavenumber(k1), specfun.wavenumber(k2)
    d1, d2 = np.cos(theta), np.sin(theta)
    if abs(d2) < 1e-14:
        raise DomainError(f"grazing incidence theta = {theta}")
    critical = float(np.arccos(min(k1, k2) / max(k1, k2)))
    from_above = d2 < 0
    k_in, k_out = (k1, k2) if from_above else (k2, k1)
    xi = k_in * d1
    if k_in > k_out and abs(abs(xi) - k_out) <= 1e-13 * k_out:
        raise DomainError(f"critical-angle incidence theta = {theta}; perturb the angle")
    beta_in = k_in * abs(d2)
    beta_out = complex(np.emath.sqrt(k_out * k_out - xi * xi))
    reflection = (beta_in - beta_out) / (beta_in + beta_out)
    sign = -1.0 if from_above else 1.0
    direction = np.array([xi, sign * beta_out], dtype=complex) / k_out
    return FresnelCoefficients(complex(reflection), complex(reflection + 1), direction,
                               critical, bool(from_above))


def planewave_field(k1: float, k2: float, points: np.ndarray, direction: np.ndarray,
                    gradient: bool = False):
    """
    Total field of the plane wave e^{i k x.d} incident on the flat interface.
    points: (..., 2). Returns values (...) and optionally gradients (..., 2).
    """
    points = np.asarray(points, dtype=float)
    direction = np.asarray(direction, dtype=float)
    coeffs = fresnel(k1, k2, float(np.arctan2(direction[1], direction[0])))
    x1, x2 = points[..., 0], points[..., 1]
    upper = x2 >= 0
    k_in, k_out = (k1, k2) if coeffs.from_above else (k2, k1)
    xi = k_in * direction[0]
    beta_in = k_in * abs(direction[1])
    beta_out = coeffs.transmitted_direction[1] * k_out
    # vertical wavenumbers of incident, reflected and transmitted waves
    incident_exp, reflected_exp = (-beta_in, beta_in) if coeffs.from_above else (beta_in, -beta_in)
    same_side = upper if coeffs.from_above else ~upper
    horizontal = np.exp(1j * xi * x1)
    incident = horizontal * np.exp(1j * incident_exp * x2)
    reflected = coeffs.reflection * horizontal * np.exp(1j * reflected_exp * x2)
    transmitted = coeffs.transmission * horizontal * np.exp(1j * beta_out * x2)
    value = np.where(same_side, incident + reflected, transmitted)
    if not gradient:
        return value
    d_x2 = np.where(same_side, 1j * incident_exp * incident + 1j * reflected_exp * reflected,
                    1j * beta_out * transmitted)
    grad = np.stack([1j * xi * value, d_x2], axis=-1)
    return value, grad
