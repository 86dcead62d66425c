"""
Nystrom discretization of windowed layer potentials on an open curve.

Dirichlet (combined field, eta = k):
    1/2 psi + (K - i eta S)[w psi] = g,     v = (D - i eta S)[w psi]
Neumann:
    -1/2 psi + K'[w psi] = g,               v = S[w psi]

w is the smooth truncation window of the curve. Logarithmic kernel
singularities are split off and integrated with the periodic product
weights R_j on the half-step nodes of the curve parameter.
"""
import logging

import numpy as np
import scipy.linalg

from . import specfun
from .errors import ConfigError, SolverError
from .geometry import DiscretizedCurve

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
CONDITION_WARNING = 1e8
EVALUATION_CHUNK = 512


def factorize(matrix: np.ndarray, label: str):
    """
    LU factorization with a 1-norm condition estimate.
    Raises SolverError above CONDITION_LIMIT.
    """
    if matrix.size == 0:
        return None, 1.0
    if not np.all(np.isfinite(matrix)):
        raise SolverError(f"{label}: system matrix has non-finite entries")
    lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    gecon, = scipy.linalg.get_lapack_funcs(('gecon',), (lu,))
    rcond, info = gecon(lu, np.linalg.norm(matrix, 1), norm='1')
    condition = np.inf if rcond == 0 else 1.0 / rcond
    if condition > CONDITION_LIMIT:
        raise SolverError(f"{label}: condition estimate {condition:.3e} exceeds {CONDITION_LIMIT:.0e}; "
                          "refine the mesh or change the coupling parameter")
    if condition > CONDITION_WARNING:
        logger.warning("%s: condition estimate %.3e", label, condition)
    logger.info("%s: %d unknowns, condition estimate %.3e", label, len(matrix), condition)
    return (lu, piv), condition


def solve_factorized(factors, rhs: np.ndarray, label: str) -> np.ndarray:
    if factors is None:
        return np.zeros_like(rhs, dtype=complex)
    solution = scipy.linalg.lu_solve(factors, rhs, check_finite=False)
    if not np.all(np.isfinite(solution)):
        raise SolverError(f"{label}: non-finite solution")
    return solution


def log_weights(n: int) -> np.ndarray:
    """
    Periodic weights for the integral of ln(4 sin^2((t - s) / 2)) f(s):
    R_j(t_i) = -(4 pi / n) sum_{m=1}^{n/2-1} cos(m tau) / m - (4 pi / n^2) cos(n tau / 2),
    tau = t_i - t_j on the equispaced nodes. Returns the (n, n) matrix.
    """
    half = n // 2
    tau = 2 * np.pi * np.arange(n) / n
    m = np.arange(1, half)
    profile = -(4 * np.pi / n) * np.sum(np.cos(np.outer(tau, m)) / m, axis=1) \
        - (4 * np.pi / n ** 2) * np.cos(half * tau)
    index = np.subtract.outer(np.arange(n), np.arange(n)) % n
    return profile[index]


class BoundaryIntegralOperator:
    """
    Factorized Nystrom matrix for a sound-soft ('D') or sound-hard ('N')
    curve at wavenumber k, reused for any number of right-hand sides.
    """

    def __init__(self, curve: DiscretizedCurve, kind: str, k: float, eta: float = None):
        if kind not in ('D', 'N'):
            raise ConfigError(f"boundary kind must be 'D' or 'N', got {kind!r}", "medium.kind")
        self.curve = curve
        self.kind = kind
        self.k = specfun.wavenumber(k)
        self.eta = self.k if eta is None else float(eta)
        self.matrix = self._assemble()
        self.factors, self.condition = factorize(self.matrix, f"Nystrom {kind} on {curve.profile_kind}")

    def _assemble(self) -> np.ndarray:
        c = self.curve
        n, k = c.n, self.k
        diff = c.nodes[:, None, :] - c.nodes[None, :, :]
        r = np.hypot(diff[..., 0], diff[..., 1])
        off = ~np.eye(n, dtype=bool)
        r_safe = np.where(off, r, 1.0)
        j0, j1, y0, y1 = specfun.bessel_jy01(k * r_safe)
        h0, h1 = j0 + 1j * y0, j1 + 1j * y1
        tau = np.subtract.outer(c.t, c.t)
        log_term = np.where(off, np.log(np.where(off, 4 * np.sin(tau / 2) ** 2, 1.0)), 0.0)
        speed_s = c.speed[None, :]
        curvature = np.einsum('ij,ij->i', c.normals, c.second) / (4 * np.pi * c.speed)
        diagonal = np.diag_indices(n)

        if self.kind == 'D':
            # normal at the integration point s
            projection = np.einsum('ijk,jk->ij', diff, c.normals) / r_safe
            l_full = 0.25j * k * h1 * projection * speed_s
            l1 = -(k / (4 * np.pi)) * j1 * projection * speed_s
            m_full = 0.25j * h0 * speed_s
            m1 = -(1 / (4 * np.pi)) * j0 * speed_s
            l1[diagonal] = 0.0
            m1[diagonal] = -c.speed / (4 * np.pi)
            l2 = l_full - l1 * log_term
            m2 = m_full - m1 * log_term
            l2[diagonal] = curvature
            m2[diagonal] = (0.25j - specfun.EULER_GAMMA / (2 * np.pi)
                            - np.log(k * c.speed / 2) / (2 * np.pi)) * c.speed
            singular = l1 - 1j * self.eta * m1
            smooth = l2 - 1j * self.eta * m2
            jump = 0.5
        else:
            # normal at the collocation point t
            projection = np.einsum('ijk,ik->ij', diff, c.normals) / r_safe
            l_full = -0.25j * k * h1 * projection * speed_s
            singular = (k / (4 * np.pi)) * j1 * projection * speed_s
            singular[diagonal] = 0.0
            smooth = l_full - singular * log_term
            smooth[diagonal] = curvature
            jump = -0.5

        operator = (log_weights(n) * singular + (2 * np.pi / n) * smooth) * c.window[None, :]
        operator[diagonal] += jump
        logger.debug("assembled %s operator with %d nodes", self.kind, n)
        return operator

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """rhs: (n,) or (n, p) boundary data; returns densities of the same shape."""
        return solve_factorized(self.factors, rhs, f"Nystrom {self.kind}")

    def potential(self, points: np.ndarray, density: np.ndarray,
                  gradient: bool = False):
        """
        Layer potential of the windowed density at points (m, 2).
        density: (n, p). Returns (m, p) values and optionally (m, p, 2) gradients.
        """
        c = self.curve
        points = np.atleast_2d(np.asarray(points, dtype=float))
        density = np.asarray(density).reshape(c.n, -1)
        weighted = (c.weights * c.window)[:, None] * density
        m, p = len(points), density.shape[1]
        values = np.zeros((m, p), dtype=complex)
        grads = np.zeros((m, p, 2), dtype=complex) if gradient else None
        for start in range(0, m, EVALUATION_CHUNK):
            rows = slice(start, start + EVALUATION_CHUNK)
            x, y = points[rows, None, :], c.nodes[None, :, :]
            value, grad = specfun.phi_with_grad(self.k, x, y)
            if self.kind == 'D':
                # dPhi/dnu(y) = -grad_x Phi . nu(y)
                double = -np.einsum('mjk,jk->mj', grad, c.normals)
                kernel = double - 1j * self.eta * value
                values[rows] = kernel @ weighted
                if gradient:
                    hessian = specfun.phi_hessian(self.k, x, y)
                    kernel_grad = -np.einsum('mjkl,jl->mjk', hessian, c.normals) - 1j * self.eta * grad
                    grads[rows] = np.einsum('mjk,jp->mpk', kernel_grad, weighted)
            else:
                values[rows] = value @ weighted
                if gradient:
                    grads[rows] = np.einsum('mjk,jp->mpk', grad, weighted)
        return (values, grads) if gradient else values

    def far_field(self, directions: np.ndarray, density: np.ndarray) -> np.ndarray:
        """
        Far-field pattern of the layer potential in unit directions (m, 2);
        gamma_1 = e^{i pi/4} / sqrt(8 pi k). Returns (m, p).
        """
        c = self.curve
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        density = np.asarray(density).reshape(c.n, -1)
        weighted = (c.weights * c.window)[:, None] * density
        gamma = far_field_constant(self.k)
        phase = np.exp(-1j * self.k * directions @ c.nodes.T)
        if self.kind == 'D':
            kernel = (-1j * self.k * directions @ c.normals.T - 1j * self.eta) * phase
        else:
            kernel = phase
        return gamma * (kernel @ weighted)


def far_field_constant(k: float) -> complex:
    return np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * k)


def boundary_residual(operator: BoundaryIntegralOperator, density: np.ndarray,
                      rhs: np.ndarray) -> float:
    """Relative residual of the discrete system, for diagnostics."""
    residual = operator.matrix @ density - rhs
    scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
    return float(np.linalg.norm(residual) / scale)

