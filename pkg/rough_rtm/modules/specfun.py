"""
Cylinder functions of orders 0 and 1 and the free-space Helmholtz
fundamental solution. Everything here is vectorized: scalars and numpy
arrays are accepted, arrays are evaluated elementwise.

Three regimes are used for J_0, J_1, Y_0, Y_1:
    x <= 8        ascending series
    8 < x <= 25   normalized Miller backward recurrence + Neumann series
    x > 25        Hankel asymptotic expansion
"""
import logging
from typing import Tuple, Union

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

EULER_GAMMA = 0.57721566490153286061

SERIES_LIMIT = 8.0
ASYMPTOTIC_LIMIT = 25.0
SERIES_TERMS = 40
ASYMPTOTIC_TERMS = 32
MILLER_MARGIN = 40


def wavenumber(value: float) -> float:
    """Validates a wavenumber (strictly positive, finite) and returns it as float."""
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"wavenumber must be positive and finite, got {value}")
    return value


def _check_order(order: int) -> None:
    if order not in (0, 1):
        raise DomainError(f"only orders 0 and 1 are implemented, got {order}")


def _series_jy(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    q = x * x / 4
    half_x = x / 2
    log_term = np.log(half_x) + EULER_GAMMA

    j0_term = np.ones_like(x)
    j1_term = np.ones_like(x)
    j0 = np.ones_like(x)
    j1_sum = np.ones_like(x)
    y0_sum = np.zeros_like(x)
    # psi(1) + psi(2) = 1 - 2 * gamma
    y1_sum = (1.0 - 2 * EULER_GAMMA) * np.ones_like(x)
    harmonic = 0.0
    for k in range(1, SERIES_TERMS):
        harmonic_next = harmonic + 1.0 / k
        j0_term = j0_term * (-q) / (k * k)
        j1_term = j1_term * (-q) / (k * (k + 1))
        j0 = j0 + j0_term
        j1_sum = j1_sum + j1_term
        y0_sum = y0_sum + harmonic_next * j0_term
        psi_sum = 2 * harmonic_next + 1.0 / (k + 1) - 2 * EULER_GAMMA
        y1_sum = y1_sum + psi_sum * j1_term
        harmonic = harmonic_next

    j1 = half_x * j1_sum
    y0 = (2 / np.pi) * (log_term * j0 - y0_sum)
    y1 = -2 / (np.pi * x) + (2 / np.pi) * np.log(half_x) * j1 - (1 / np.pi) * half_x * y1_sum
    return j0, j1, y0, y1


def _miller_jy(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n_start = int(np.ceil(np.max(x))) + MILLER_MARGIN
    n_start += n_start % 2

    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    # J_n for n = n_start ... 0, stored top-down
    values = [j_cur]
    for n in range(n_start, 0, -1):
        j_prev = (2 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        values.append(j_cur)
    values = np.array(values[::-1])  # values[n] = unnormalized J_n

    norm = values[0] + 2 * np.sum(values[2::2], axis=0)
    values = values / norm

    j0 = values[0]
    j1 = values[1]
    log_term = np.log(x / 2) + EULER_GAMMA
    k = np.arange(1, n_start // 2)
    signs = ((-1.0) ** k)[:, None]
    y0_sum = np.sum(signs * values[2 * k] / k[:, None], axis=0)
    y1_sum = np.sum(signs * (values[2 * k - 1] - values[2 * k + 1]) / k[:, None], axis=0)
    y0 = (2 / np.pi) * (log_term * j0 - 2 * y0_sum)
    y1 = -(2 / np.pi) * (j0 / x - log_term * j1 - y1_sum)
    return j0, j1, y0, y1


def _asymptotic_order(x: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    mu = 4.0 * order * order
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, ASYMPTOTIC_TERMS + 1):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8 * x)
        if k % 2 == 0:
            p = p + (-1) ** (k // 2) * term
        else:
            q = q + (-1) ** ((k - 1) // 2) * term
    chi = x - (order / 2 + 0.25) * np.pi
    amplitude = np.sqrt(2 / (np.pi * x))
    j = amplitude * (p * np.cos(chi) - q * np.sin(chi))
    y = amplitude * (p * np.sin(chi) + q * np.cos(chi))
    return j, y


def bessel_jy01(x: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns (J0, J1, Y0, Y1) at x > 0. x is an array of any shape;
    all four outputs have the shape of x.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("Bessel functions of the second kind need finite x > 0")

    flat = x.ravel()
    out = np.empty((4, flat.size))

    regimes = (
        (flat <= SERIES_LIMIT, _series_jy),
        ((flat > SERIES_LIMIT) & (flat <= ASYMPTOTIC_LIMIT), _miller_jy),
    )
    for mask, evaluator in regimes:
        if np.any(mask):
            out[:, mask] = np.array(evaluator(flat[mask]))

    mask = flat > ASYMPTOTIC_LIMIT
    if np.any(mask):
        out[0, mask], out[2, mask] = _asymptotic_order(flat[mask], 0)
        out[1, mask], out[3, mask] = _asymptotic_order(flat[mask], 1)

    return tuple(component.reshape(x.shape) for component in out)


def bessel_j01(x: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """(J0, J1) at x >= 0; x = 0 gives (1, 0)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("Bessel functions of the first kind need finite x >= 0")
    j0 = np.ones_like(x)
    j1 = np.zeros_like(x)
    positive = x > 0
    if np.any(positive):
        j0_pos, j1_pos, _, _ = bessel_jy01(x[positive])
        j0[positive] = j0_pos
        j1[positive] = j1_pos
    return j0, j1


def bessel_j(order: int, x: ArrayLike) -> ArrayLike:
    _check_order(order)
    result = bessel_j01(x)[order]
    return result if result.ndim else float(result)


def bessel_y(order: int, x: ArrayLike) -> ArrayLike:
    _check_order(order)
    result = bessel_jy01(x)[2 + order]
    return result if result.ndim else float(result)


def hankel01(x: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """(H0^(1), H1^(1)) at x > 0."""
    j0, j1, y0, y1 = bessel_jy01(x)
    return j0 + 1j * y0, j1 + 1j * y1


def hankel1(order: int, x: ArrayLike) -> Union[complex, np.ndarray]:
    _check_order(order)
    result = hankel01(x)[order]
    return result if result.ndim else complex(result)


def _distance(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    x and y are arrays of points with shape (..., 2), broadcast together.
    Returns (x - y, |x - y|); coincident points raise DomainError.
    """
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(r == 0):
        raise DomainError("fundamental solution evaluated at coincident points")
    return diff, r


def phi(k: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Phi_k(x, y) = (i/4) H0^(1)(k|x - y|)
    x, y: points with shape (..., 2); output has the broadcast shape without the last axis.
    """
    _, r = _distance(x, y)
    h0, _ = hankel01(k * r)
    return 0.25j * h0


def phi_grad(k: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of Phi_k(x, y) with respect to x; shape (..., 2)."""
    diff, r = _distance(x, y)
    _, h1 = hankel01(k * r)
    factor = -0.25j * k * h1 / r
    return factor[..., None] * diff


def phi_with_grad(k: float, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    diff, r = _distance(x, y)
    h0, h1 = hankel01(k * r)
    return 0.25j * h0, (-0.25j * k * h1 / r)[..., None] * diff


def phi_disc_average(k: float, area: ArrayLike) -> np.ndarray:
    """
    Mean of Phi_k(x, .) over the disc of the given area centred at x,
    used as the self term of cell quadratures.
    """
    a = np.sqrt(np.asarray(area, dtype=float) / np.pi)
    _, h1 = hankel01(k * a)
    # integral of H0(k r) r dr over [0, a] = a H1(k a) / k + 2i / (pi k^2)
    integral = 0.25j * 2 * np.pi * (a * h1 / k + 2j / (np.pi * k * k))
    return integral / (np.pi * a * a)


def phi_hessian(k: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Hessian of Phi_k(x, y) with respect to x; shape (..., 2, 2).
    -(ik/4) [k H0 e e^T + (H1 / r)(I - 2 e e^T)], e = (x - y) / r
    """
    diff, r = _distance(x, y)
    h0, h1 = hankel01(k * r)
    e = diff / r[..., None]
    outer = e[..., :, None] * e[..., None, :]
    eye = np.eye(2)
    inner = (k * h0)[..., None, None] * outer + (h1 / r)[..., None, None] * (eye - 2 * outer)
    return -0.25j * k * inner
