"""
Binary and text formats, all little-endian:

RTMD  scatter data:  magic, version u32, kind u8 (0=D, 1=N, 2=P), regime u8 (0=near, 1=far),
      N_s u32, N_r u32, k1, k2, R, R_s, R_r, tau f64, seed u64, then N_r x N_s (re, im) f64 pairs;
      version 1 noise always comes from the Philox generator
RTMG  image grid:    magic, version u32, n1 u32, n2 u32, x1min, x1max, x2min, x2max f64,
      then n2 x n1 f64 values (rows follow x2)
RTMV  kernel cache:  magic, version u32, k1, k2 f64, n_targets u32, n_sources u32,
      target points, source points (x1, x2) f64, then (re, im) f64 pairs
PGM   16-bit binary greymap of a grid, min -> 0 and max -> 65535, top row = largest x2
"""
import logging
import os
from typing import Tuple

import numpy as np

from .errors import DataFormatError
from .forward import GENERATOR, ScatterData
from .geometry import AcquisitionGeometry, ImageGrid
from .imaging import normalize_image

logger = logging.getLogger(__name__)

VERSION = 1
KIND_CODES = {'D': 0, 'N': 1, 'P': 2}
REGIME_CODES = {'near': 0, 'far': 1}

RTMD_HEADER = np.dtype([
    ('magic', 'S4'), ('version', '<u4'), ('kind', 'u1'), ('regime', 'u1'),
    ('n_sources', '<u4'), ('n_receivers', '<u4'),
    ('k1', '<f8'), ('k2', '<f8'), ('dip_radius', '<f8'), ('source_radius', '<f8'),
    ('receiver_radius', '<f8'), ('tau', '<f8'), ('seed', '<u8'),
])
RTMG_HEADER = np.dtype([
    ('magic', 'S4'), ('version', '<u4'), ('n1', '<u4'), ('n2', '<u4'),
    ('x1_min', '<f8'), ('x1_max', '<f8'), ('x2_min', '<f8'), ('x2_max', '<f8'),
])
RTMV_HEADER = np.dtype([
    ('magic', 'S4'), ('version', '<u4'), ('k1', '<f8'), ('k2', '<f8'),
    ('n_targets', '<u4'), ('n_sources', '<u4'),
])
COMPLEX = np.dtype('<c16')


def _read(path: str) -> bytes:
    with open(path, 'rb') as stream:
        return stream.read()


def _write(path: str, *chunks: bytes) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as stream:
        for chunk in chunks:
            stream.write(chunk)


def _header(raw: bytes, dtype: np.dtype, magic: bytes, path: str) -> np.void:
    if len(raw) < dtype.itemsize:
        raise DataFormatError(f"{path}: truncated header")
    header = np.frombuffer(raw, dtype=dtype, count=1)[0]
    if header['magic'] != magic:
        raise DataFormatError(f"{path}: bad magic {header['magic']!r}, expected {magic!r}")
    if header['version'] != VERSION:
        raise DataFormatError(f"{path}: unsupported version {header['version']}")
    return header


def _payload(raw: bytes, offset: int, dtype, count: int, path: str) -> np.ndarray:
    expected = offset + count * np.dtype(dtype).itemsize
    if len(raw) != expected:
        raise DataFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=dtype, count=count, offset=offset)


def write_scatter_data(data: ScatterData, path: str) -> None:
    data.validate()
    if data.generator != GENERATOR:
        raise DataFormatError(f"{path}: RTMD files only describe {GENERATOR} noise, not {data.generator}")
    header = np.zeros(1, dtype=RTMD_HEADER)
    header[0] = (b'RTMD', VERSION, KIND_CODES[data.kind], REGIME_CODES[data.regime],
                 data.n_sources, data.n_receivers, data.k1, data.k2, data.dip_radius,
                 data.acquisition.source_radius, data.acquisition.receiver_radius,
                 data.tau, data.seed)
    _write(path, header.tobytes(), np.ascontiguousarray(data.matrix, dtype=COMPLEX).tobytes())
    logger.info("wrote %s (%dx%d)", path, data.n_receivers, data.n_sources)


def read_scatter_data(path: str) -> ScatterData:
    raw = _read(path)
    header = _header(raw, RTMD_HEADER, b'RTMD', path)
    kinds = {code: kind for kind, code in KIND_CODES.items()}
    regimes = {code: regime for regime, code in REGIME_CODES.items()}
    if header['kind'] not in kinds or header['regime'] not in regimes:
        raise DataFormatError(f"{path}: bad kind or regime byte")
    n_s, n_r = int(header['n_sources']), int(header['n_receivers'])
    matrix = _payload(raw, RTMD_HEADER.itemsize, COMPLEX, n_s * n_r, path).reshape(n_r, n_s).copy()
    kind = kinds[int(header['kind'])]
    acquisition = AcquisitionGeometry(regimes[int(header['regime'])], 'full' if kind == 'P' else 'upper',
                                      float(header['source_radius']), float(header['receiver_radius']),
                                      n_s, n_r)
    data = ScatterData(acquisition.regime, kind, matrix, acquisition, float(header['k1']),
                       float(header['k2']), float(header['dip_radius']), float(header['tau']),
                       int(header['seed']), GENERATOR)
    if not np.all(np.isfinite(matrix)):
        raise DataFormatError(f"{path}: non-finite entries")
    return data


def write_grid(grid: ImageGrid, path: str) -> None:
    grid.validate()
    header = np.zeros(1, dtype=RTMG_HEADER)
    header[0] = (b'RTMG', VERSION, grid.n1, grid.n2, grid.x1_min, grid.x1_max, grid.x2_min, grid.x2_max)
    _write(path, header.tobytes(), np.ascontiguousarray(grid.values, dtype='<f8').tobytes())
    logger.info("wrote %s (%dx%d)", path, grid.n2, grid.n1)


def read_grid(path: str) -> ImageGrid:
    raw = _read(path)
    header = _header(raw, RTMG_HEADER, b'RTMG', path)
    n1, n2 = int(header['n1']), int(header['n2'])
    if n1 < 1 or n2 < 1:
        raise DataFormatError(f"{path}: empty grid")
    values = _payload(raw, RTMG_HEADER.itemsize, '<f8', n1 * n2, path).reshape(n2, n1).copy()
    return ImageGrid(float(header['x1_min']), float(header['x1_max']), float(header['x2_min']),
                     float(header['x2_max']), n1, n2, values)


def write_grid_text(grid: ImageGrid, path: str) -> None:
    """One grid row (fixed x2) per line, space separated."""
    np.savetxt(path, grid.values, fmt='%.17g', delimiter=' ')


def read_grid_text(path: str, template: ImageGrid) -> ImageGrid:
    try:
        values = np.loadtxt(path, ndmin=2)
    except ValueError as error:
        raise DataFormatError(f"{path}: {error}")
    if values.shape != (template.n2, template.n1):
        raise DataFormatError(f"{path}: grid of shape {values.shape}, expected {(template.n2, template.n1)}")
    return template.with_values(values)


def write_kernel(path: str, k1: float, k2: float, targets: np.ndarray, sources: np.ndarray,
                 values: np.ndarray) -> None:
    targets, sources = np.asarray(targets, dtype='<f8'), np.asarray(sources, dtype='<f8')
    if values.shape != (len(targets), len(sources)):
        raise DataFormatError(f"kernel of shape {values.shape} does not match "
                              f"{len(targets)} targets and {len(sources)} sources")
    header = np.zeros(1, dtype=RTMV_HEADER)
    header[0] = (b'RTMV', VERSION, k1, k2, len(targets), len(sources))
    _write(path, header.tobytes(), np.ascontiguousarray(targets).tobytes(),
           np.ascontiguousarray(sources).tobytes(), np.ascontiguousarray(values, dtype=COMPLEX).tobytes())


def read_kernel(path: str) -> Tuple[float, float, np.ndarray, np.ndarray, np.ndarray]:
    """Returns (k1, k2, targets, sources, values)."""
    raw = _read(path)
    header = _header(raw, RTMV_HEADER, b'RTMV', path)
    m, p = int(header['n_targets']), int(header['n_sources'])
    offset = RTMV_HEADER.itemsize
    expected = offset + 16 * (m + p) + 16 * m * p
    if len(raw) != expected:
        raise DataFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    targets = np.frombuffer(raw, '<f8', 2 * m, offset).reshape(m, 2).copy()
    sources = np.frombuffer(raw, '<f8', 2 * p, offset + 16 * m).reshape(p, 2).copy()
    values = np.frombuffer(raw, COMPLEX, m * p, offset + 16 * (m + p)).reshape(m, p).copy()
    return float(header['k1']), float(header['k2']), targets, sources, values


def pgm_pixels(grid: ImageGrid) -> np.ndarray:
    """uint16 pixels with min -> 0 and max -> 65535; constant grids raise DomainError."""
    scaled = normalize_image(grid).values
    pixels = np.rint((scaled + 1) / 2 * 65535).astype(np.uint16)
    return pixels[::-1]


def write_pgm(grid: ImageGrid, path: str) -> None:
    pixels = pgm_pixels(grid)
    header = f"P5\n{grid.n1} {grid.n2}\n65535\n".encode('ascii')
    _write(path, header, pixels.astype('>u2').tobytes())
    logger.info("wrote %s", path)


def read_pgm(path: str) -> np.ndarray:
    raw = _read(path)
    parts = raw.split(b'\n', 3)
    if len(parts) < 4 or parts[0] != b'P5' or parts[2] != b'65535':
        raise DataFormatError(f"{path}: not a 16-bit binary PGM")
    n1, n2 = (int(v) for v in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype='>u2')
    if pixels.size != n1 * n2:
        raise DataFormatError(f"{path}: expected {n1 * n2} pixels, found {pixels.size}")
    return pixels.reshape(n2, n1).astype(np.uint16)


__all__ = [
    'pgm_pixels', 'read_grid', 'read_grid_text', 'read_kernel', 'read_pgm', 'read_scatter_data',
    'write_grid', 'write_grid_text', 'write_kernel', 'write_pgm', 'write_scatter_data',
]
