"""Uniform biperiodic scalar fields and the 5-point Poisson machinery.

All fields live on an n-by-n lattice with periodic wrap in both indices.
Grid arithmetic is 64-bit throughout; operations are pure and return new
grids.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import InputError, ShapeError

PGRD_MAGIC = b"PGRD"
PGRD_VERSION = 1


@dataclass(frozen=True)
class Grid:
    """Square scalar field on a uniform biperiodic lattice."""

    n: int
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise ShapeError(f"grid side must be >= 2, got {self.n}")
        if self.h <= 0:
            raise ShapeError(f"grid spacing must be positive, got {self.h}")
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.n, self.n):
            raise ShapeError(f"expected {(self.n, self.n)} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("grid values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, n: int, h: float | None = None) -> "Grid":
        return cls(n, 1.0 / n if h is None else h, np.zeros((n, n)))

    @classmethod
    def from_values(cls, values, h: float | None = None) -> "Grid":
        v = np.asarray(values, dtype=np.float64)
        n = v.shape[0]
        return cls(n, 1.0 / n if h is None else h, v.copy())

    def value(self, i: int, j: int) -> float:
        """Periodic point access: indices wrap modulo n."""
        return float(self.values[i % self.n, j % self.n])

    def with_values(self, values: np.ndarray) -> "Grid":
        return Grid(self.n, self.h, values)

    def copy(self) -> "Grid":
        return Grid(self.n, self.h, self.values.copy())

    def mean(self) -> float:
        return float(self.values.mean())


class NormKind(Enum):
    L2 = "l2"
    L2_MEAN = "l2-mean-normalized"


def _check_same_shape(a: Grid, b: Grid) -> None:
    if a.n != b.n or a.h != b.h:
        raise ShapeError(
            f"grid mismatch: ({a.n}, h={a.h}) vs ({b.n}, h={b.h})"
        )


def laplacian(g: Grid) -> Grid:
    """5-point periodic Laplacian, second order in h."""
    v = g.values
    lap = (
        np.roll(v, -1, axis=0)
        + np.roll(v, 1, axis=0)
        + np.roll(v, -1, axis=1)
        + np.roll(v, 1, axis=1)
        - 4.0 * v
    ) / (g.h * g.h)
    return g.with_values(lap)


def residual(p: Grid, f: Grid) -> Grid:
    """Defect r = f - laplacian(p)."""
    _check_same_shape(p, f)
    return p.with_values(f.values - laplacian(p).values)


def norm(g: Grid, kind: NormKind = NormKind.L2) -> float:
    s = float(np.sqrt(np.sum(g.values * g.values)))
    if kind is NormKind.L2_MEAN:
        return s / g.n
    return s


def subtract_mean(g: Grid) -> Grid:
    return g.with_values(g.values - g.values.mean())


@lru_cache(maxsize=32)
def _color_masks(n: int):
    ii, jj = np.indices((n, n))
    red = (ii + jj) % 2 == 0
    return red, ~red


def gauss_seidel(p: Grid, f: Grid, sweeps: int) -> Grid:
    """Red-black Gauss-Seidel sweeps for laplacian(p) = f.

    Red cells ((i+j) even) update first, then black; the result is
    mean-anchored to zero. Updates within one color are independent, so the
    vectorized form matches the sequential in-color order bit for bit.
    """
    _check_same_shape(p, f)
    v = p.values.copy()
    h2f = (p.h * p.h) * f.values
    red, black = _color_masks(p.n)
    for _ in range(sweeps):
        for mask in (red, black):
            nb = (
                np.roll(v, -1, axis=0)
                + np.roll(v, 1, axis=0)
                + np.roll(v, -1, axis=1)
                + np.roll(v, 1, axis=1)
            )
            v = np.where(mask, 0.25 * (nb - h2f), v)
    v -= v.mean()
    return p.with_values(v)


def write_pgrd(g: Grid, path) -> None:
    """Write the PGRD binary snapshot format (little-endian)."""
    with open(path, "wb") as fh:
        fh.write(PGRD_MAGIC)
        fh.write(struct.pack("<IId", PGRD_VERSION, g.n, g.h))
        fh.write(g.values.astype("<f8").tobytes())


def read_pgrd(path) -> Grid:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PGRD_MAGIC:
            raise InputError(f"bad PGRD magic {magic!r}")
        version, n = struct.unpack("<II", fh.read(8))
        if version != PGRD_VERSION:
            raise InputError(f"unsupported PGRD version {version}")
        (h,) = struct.unpack("<d", fh.read(8))
        data = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n)
    return Grid(n, h, data.copy())
