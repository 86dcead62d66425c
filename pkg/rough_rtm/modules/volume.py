"""
Lippmann-Schwinger volume integral equations against the flat two-layer
Green's function v_0:

    u(x) = u_inc(x) + int_D v_0(x, y) q(y) u(y) dy

discretized on Cartesian cells of a lattice anchored at the origin. Cells
cut by the surface keep the area fraction found by subsampling and take
the centroid of their inside subsamples as quadrature node.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from . import specfun
from .errors import ConfigError, DomainError
from .geometry import SurfaceProfile
from .nystrom import factorize, solve_factorized
from .sommerfeld import FlatTwoLayerGreen, planewave_field

logger = logging.getLogger(__name__)

SUBSAMPLES = 4
PROFILE_PROBES = 2001


@dataclass
class VolumeCells:
    """
    centers: (n, 2), areas: (n,), contrast: (n,) real values of q.
    """
    centers: np.ndarray
    areas: np.ndarray
    contrast: np.ndarray
    spacing: float
    label: str = ""

    @property
    def n(self) -> int:
        return len(self.areas)

    def validate(self) -> None:
        if self.centers.shape != (self.n, 2) or self.contrast.shape != (self.n,):
            raise DomainError("inconsistent cell arrays")
        if np.any(self.areas <= 0) or np.any(self.areas > self.spacing ** 2 * (1 + 1e-12)):
            raise DomainError("cell areas must lie in (0, h^2]")


def cell_spacing(k1: float, k2: float, cells_per_wavelength: float) -> float:
    if cells_per_wavelength < 4:
        raise ConfigError("cells_per_wavelength must be >= 4", "solver.cells_per_wavelength")
    return 2 * np.pi / (max(k1, k2) * cells_per_wavelength)


def _height_range(profile: SurfaceProfile) -> Tuple[float, float]:
    a = profile.support_halfwidth
    heights = profile.height(np.linspace(-a, a, PROFILE_PROBES))
    return min(float(np.min(heights)), 0.0), max(float(np.max(heights)), 0.0)


def layer_contrast(profile: SurfaceProfile, sigma: float,
                   x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """q = +sigma where f < x2 < 0, -sigma where 0 < x2 < f, 0 elsewhere."""
    a = profile.support_halfwidth
    f = profile.height(np.clip(x1, -a, a))
    below = (f < x2) & (x2 < 0)
    above = (0 < x2) & (x2 < f)
    return sigma * (below.astype(float) - above.astype(float))


def lattice_cells(contrast: Callable[[np.ndarray, np.ndarray], np.ndarray],
                  x1_range: Tuple[float, float], x2_range: Tuple[float, float],
                  spacing: float, label: str, subsamples: int = SUBSAMPLES) -> VolumeCells:
    """
    Cells of the lattice with spacing h anchored at the origin that meet the
    support of the contrast function. A lattice cell holding both signs of
    the contrast is split into one cell per sign.
    """
    columns = np.arange(int(np.floor(x1_range[0] / spacing)), int(np.ceil(x1_range[1] / spacing)))
    rows = np.arange(int(np.floor(x2_range[0] / spacing)), int(np.ceil(x2_range[1] / spacing)))
    empty = VolumeCells(np.zeros((0, 2)), np.zeros(0), np.zeros(0), spacing, label)
    if len(rows) == 0 or len(columns) == 0:
        return empty

    offsets = (np.arange(subsamples) + 0.5) / subsamples * spacing
    ci, ri = np.meshgrid(columns, rows, indexing='ij')
    ci, ri = ci.ravel(), ri.ravel()
    # subsample coordinates, shape (cells, s, s)
    shape = (len(ci), subsamples, subsamples)
    sx1 = np.broadcast_to((ci * spacing)[:, None, None] + offsets[None, :, None], shape)
    sx2 = np.broadcast_to((ri * spacing)[:, None, None] + offsets[None, None, :], shape)
    q = contrast(sx1, sx2)

    centers, areas, values = [], [], []
    for sign in (1.0, -1.0):
        inside = sign * q > 0
        count = inside.sum(axis=(1, 2))
        keep = count > 0
        if not np.any(keep):
            continue
        inside, count = inside[keep], count[keep]
        centers.append(np.column_stack([(sx1[keep] * inside).sum(axis=(1, 2)) / count,
                                        (sx2[keep] * inside).sum(axis=(1, 2)) / count]))
        areas.append(count / subsamples ** 2 * spacing ** 2)
        values.append((q[keep] * inside).sum(axis=(1, 2)) / count)
    if not centers:
        return empty
    cells = VolumeCells(np.vstack(centers), np.concatenate(areas), np.concatenate(values), spacing, label)
    cells.validate()
    logger.info("%s: %d contrast cells, spacing %.4f", label, cells.n, spacing)
    return cells


def layer_cells(profile: SurfaceProfile, sigma: float, spacing: float,
                subsamples: int = SUBSAMPLES) -> VolumeCells:
    """
    Cells of the region between the surface and x2 = 0 with the contrast of
    `layer_contrast`. For the profile with the semicircular dip this is the half disc.
    """
    a = profile.support_halfwidth
    return lattice_cells(lambda x1, x2: layer_contrast(profile, sigma, x1, x2),
                         (-a, a), _height_range(profile), spacing, profile.kind, subsamples)


def difference_cells(profile: SurfaceProfile, reference: SurfaceProfile, sigma: float,
                     spacing: float, subsamples: int = SUBSAMPLES) -> VolumeCells:
    """
    Cells of the region between two surfaces with contrast k^2 - k_ref^2:
    +sigma above the surface and below the reference, -sigma the other way round.
    """
    a = max(profile.support_halfwidth, reference.support_halfwidth)
    low = min(_height_range(profile)[0], _height_range(reference)[0])
    high = max(_height_range(profile)[1], _height_range(reference)[1])

    def contrast(x1, x2):
        return layer_contrast(profile, sigma, x1, x2) - layer_contrast(reference, sigma, x1, x2)

    return lattice_cells(contrast, (-a, a), (low, high), spacing,
                         f"{profile.kind}-{reference.kind}", subsamples)


class VolumeOperator:
    """
    Factorized system (I - V diag(q)) u = u_inc on the cells, V_ij the
    integral of v_0(c_i, .) over cell j. Self cells use the mean of the
    free-space part over the disc of equal area plus the smooth remainder.
    """

    def __init__(self, green: FlatTwoLayerGreen, cells: VolumeCells,
                 kernel: Optional[np.ndarray] = None):
        self.green = green
        self.cells = cells
        if kernel is None:
            kernel = self.assemble_kernel()
        elif kernel.shape != (cells.n, cells.n):
            raise DomainError(f"cached kernel has shape {kernel.shape}, expected {(cells.n, cells.n)}")
        self.kernel = kernel
        system = np.eye(cells.n, dtype=complex) - kernel * cells.contrast[None, :]
        self.factors, self.condition = factorize(system, f"Lippmann-Schwinger on {cells.label}")

    def assemble_kernel(self) -> np.ndarray:
        c = self.cells
        if c.n == 0:
            return np.zeros((0, 0), dtype=complex)
        values = self.green.matrix(c.centers, c.centers, skip_diagonal=True)
        kernel = values * c.areas[None, :]
        k_side = self.green.wavenumber_at(c.centers)
        self_term = specfun.phi_disc_average(k_side, c.areas) + self.green.coincident_spectral(c.centers)
        kernel[np.diag_indices(c.n)] = c.areas * self_term
        return kernel

    def solve(self, incident: np.ndarray) -> np.ndarray:
        """incident: (n, p) field on the cell nodes; returns the total field there."""
        return solve_factorized(self.factors, incident, f"Lippmann-Schwinger on {self.cells.label}")

    def residual(self, incident: np.ndarray, fields: np.ndarray) -> float:
        """Relative residual of the discrete system, for diagnostics."""
        applied = fields - self.kernel @ (self.cells.contrast[:, None] * fields)
        scale = max(np.linalg.norm(incident), np.finfo(float).tiny)
        return float(np.linalg.norm(applied - incident) / scale)

    def potential(self, points: np.ndarray, fields: np.ndarray, gradient: bool = False):
        """
        int_D v_0(x, y) q(y) u(y) dy at points (m, 2) for fields (n, p).
        Returns (m, p) values and optionally (m, p, 2) target gradients.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        c = self.cells
        fields = np.asarray(fields).reshape(c.n, -1)
        m, p = len(points), fields.shape[1]
        if c.n == 0:
            values = np.zeros((m, p), dtype=complex)
            return (values, np.zeros((m, p, 2), dtype=complex)) if gradient else values
        weighted = (c.areas * c.contrast)[:, None] * fields
        if gradient:
            values, grads = self.green.matrix(points, c.centers, gradient=True)
            return values @ weighted, np.einsum('mjk,jp->mpk', grads, weighted)
        return self.green.matrix(points, c.centers) @ weighted

    def far_field(self, directions: np.ndarray, fields: np.ndarray) -> np.ndarray:
        """
        Far-field pattern of the potential in unit directions (m, 2):
        gamma(x) sum_j w_0(c_j, -x) area_j q_j u_j with gamma = e^{i pi/4} / sqrt(8 pi k(side)).
        """
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        c = self.cells
        fields = np.asarray(fields).reshape(c.n, -1)
        out = np.zeros((len(directions), fields.shape[1]), dtype=complex)
        if c.n == 0:
            return out
        weighted = (c.areas * c.contrast)[:, None] * fields
        for index, direction in enumerate(directions):
            k_side = self.green.k1 if direction[1] >= 0 else self.green.k2
            gamma = np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * k_side)
            plane = planewave_field(self.green.k1, self.green.k2, c.centers, -direction)
            out[index] = gamma * (plane @ weighted)
        return out
