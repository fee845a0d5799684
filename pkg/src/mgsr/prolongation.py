"""Coarse-to-fine transfer operators.

Three interchangeable kinds: periodic bicubic spline interpolation, a
least-squares-fitted linear 4x window stencil, and a learned convolutional
generator. The two window-based kinds share the same pipeline: symmetric-log
normalization, overlapping 6x6 window decomposition with stride 2, per-window
4x upsampling, central-tile stitching, then denormalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, InputError, NumericalError, ShapeError
from .grid import Grid
from .network import (
    WeightsContainer,
    generator_infer_batch,
    validate_generator_weights,
)

WINDOW_SIZE = 6
WINDOW_STRIDE = 2
BASE_FACTOR = 4
FINE_WINDOW = WINDOW_SIZE * BASE_FACTOR  # 24

# Global symlog bounds for pressure data; seven decades of dynamic range.
DEFAULT_P_MIN = 1e-10
DEFAULT_P_MAX = 1e-3
# Per-grid normalization keeps the same dynamic range below the grid's peak.
PER_GRID_RANGE = DEFAULT_P_MIN / DEFAULT_P_MAX


@dataclass(frozen=True)
class NormalizationSpec:
    """Magnitude floor/ceiling of the symmetric-log map."""

    p_min: float = DEFAULT_P_MIN
    p_max: float = DEFAULT_P_MAX

    def __post_init__(self):
        if not (0.0 < self.p_min < self.p_max):
            raise ConfigurationError(
                f"need 0 < p_min < p_max, got ({self.p_min}, {self.p_max})"
            )


def symlog_normalize(g: Grid, spec: NormalizationSpec) -> Grid:
    """Sign-preserving log map of magnitudes [p_min, p_max] onto [0, 1].

    Magnitudes at or below p_min collapse to 0; above p_max clamp to +-1.
    """
    v = g.values
    scale = np.log(spec.p_max / spec.p_min)
    mag = np.maximum(np.abs(v), spec.p_min)
    y = np.sign(v) * np.clip(np.log(mag / spec.p_min) / scale, 0.0, 1.0)
    return g.with_values(y)


def symlog_denormalize(g: Grid, spec: NormalizationSpec) -> Grid:
    """Inverse of symlog_normalize on [-1, 1]; 0 maps back to 0."""
    y = g.values
    if np.any(np.abs(y) > 1.0):
        raise InputError("denormalize input outside [-1, 1]")
    mag = np.abs(y)
    v = np.where(
        mag == 0.0,
        0.0,
        np.sign(y) * spec.p_min * (spec.p_max / spec.p_min) ** mag,
    )
    return g.with_values(v)


def spline_prolong(coarse: Grid, factor: int) -> Grid:
    """Periodic bicubic spline upsampling; coarse knots reproduced exactly.

    Interpolation runs in index coordinates so that fine points land exactly
    on coarse knots for power-of-two factors.
    """
    if factor < 2:
        raise ConfigurationError(f"factor must be >= 2, got {factor}")
    n = coarse.n
    x = np.arange(n + 1, dtype=np.float64)
    xf = np.arange(n * factor, dtype=np.float64) / factor
    v = np.concatenate([coarse.values, coarse.values[:1, :]], axis=0)
    cs = CubicSpline(x, v, axis=0, bc_type="periodic")
    tmp = cs(xf)  # (n*factor, n)
    tmp = np.concatenate([tmp, tmp[:, :1]], axis=1)
    cs2 = CubicSpline(x, tmp, axis=1, bc_type="periodic")
    fine = cs2(xf)
    return Grid(n * factor, coarse.h / factor, fine)


@dataclass(frozen=True)
class WindowSet:
    """Overlapping coarse windows tiling a grid (non-periodic alignment)."""

    n_s: int
    stride: int
    offsets: list  # (row, col) coarse offsets, row-major order
    windows: np.ndarray = field(repr=False)  # (count, n_s, n_s)


def _window_offsets(n: int, n_s: int, stride: int) -> np.ndarray:
    if n < n_s:
        raise ShapeError(f"grid side {n} smaller than window {n_s}")
    if (n - n_s) % stride != 0:
        raise ShapeError(f"(n - n_s) = {n - n_s} not divisible by stride {stride}")
    return np.arange(0, n - n_s + 1, stride)


def window_decompose(coarse: Grid, n_s: int = WINDOW_SIZE, stride: int = WINDOW_STRIDE) -> WindowSet:
    offs = _window_offsets(coarse.n, n_s, stride)
    offsets = [(int(r), int(c)) for r in offs for c in offs]
    windows = np.stack(
        [coarse.values[r : r + n_s, c : c + n_s].copy() for r, c in offsets]
    )
    return WindowSet(n_s, stride, offsets, windows)


def _owned_slices(offset: int, max_offset: int, n_l: int, base_factor: int, stride: int):
    """Local and global index ranges this window writes along one axis."""
    central = 2 * base_factor  # width of the central tile
    lo = (n_l - central) // 2
    hi = lo + central
    if offset == 0:
        lo = 0
    if offset == max_offset:
        hi = n_l
    fine0 = offset * base_factor
    return slice(lo, hi), slice(fine0 + lo, fine0 + hi)


def window_stitch(
    fine_windows: np.ndarray,
    offsets: list,
    coarse_n: int,
    base_factor: int = BASE_FACTOR,
) -> np.ndarray:
    """Assemble the fine grid from per-window upsampled blocks.

    Interior cells come from each window's central tile; edge cells from the
    single window covering them. Every fine cell is written exactly once.
    """
    n_l = fine_windows.shape[1]
    n_s = n_l // base_factor
    stride = WINDOW_STRIDE
    if stride * base_factor != 2 * base_factor:
        raise ConfigurationError("central tiles only tile the grid for stride 2")
    fine_n = coarse_n * base_factor
    out = np.empty((fine_n, fine_n), dtype=np.float64)
    owner = np.zeros((fine_n, fine_n), dtype=np.int32)
    max_off = coarse_n - n_s
    for block, (orow, ocol) in zip(fine_windows, offsets):
        lr, gr = _owned_slices(orow, max_off, n_l, base_factor, stride)
        lc, gc = _owned_slices(ocol, max_off, n_l, base_factor, stride)
        out[gr, gc] = block[lr, lc]
        owner[gr, gc] += 1
    if not np.all(owner == 1):
        raise AssertionError("window stitch ownership is not a partition")
    return out


def fit_linear_stencil(samples, ridge: float = 1e-8) -> WeightsContainer:
    """Ridge least-squares fit of an affine 36 -> 576 per-window upsampler.

    samples: iterable of (6x6 input, 24x24 target) pairs in normalized space.
    Returns a linear_stencil container with tensor "stencil" of shape
    (576, 37): 36 input weights plus a bias per output position.
    The bias column is not penalized.
    """
    inputs = np.stack([np.asarray(a, dtype=np.float64).ravel() for a, _ in samples])
    targets = np.stack([np.asarray(b, dtype=np.float64).ravel() for _, b in samples])
    n_samples, n_in = inputs.shape
    if n_samples < n_in:
        raise NumericalError(f"need >= {n_in} samples, got {n_samples}")
    if ridge < 0:
        raise ConfigurationError("ridge must be non-negative")
    x = np.hstack([inputs, np.ones((n_samples, 1))])
    if ridge > 0:
        reg = np.sqrt(ridge) * np.eye(n_in + 1)
        reg[-1, -1] = 0.0
        x = np.vstack([x, reg])
        targets = np.vstack([targets, np.zeros((n_in + 1, targets.shape[1]))])
    coef, _, rank, _ = np.linalg.lstsq(x, targets, rcond=None)
    if ridge == 0 and rank < n_in + 1:
        raise NumericalError(
            f"rank-deficient fit (rank {rank} < {n_in + 1}); use ridge > 0"
        )
    stencil = coef.T.astype(np.float32)  # (576, 37)
    arch = {
        "kind": "linear_stencil",
        "n_s": WINDOW_SIZE,
        "factor": BASE_FACTOR,
    }
    return WeightsContainer(arch, {"stencil": stencil})


def apply_linear_stencil(windows: np.ndarray, w: WeightsContainer) -> np.ndarray:
    """Batch application: (B, 6, 6) -> (B, 24, 24) in normalized space."""
    st = w.tensors["stencil"].astype(np.float64)
    bsz = windows.shape[0]
    x = np.hstack([windows.reshape(bsz, -1), np.ones((bsz, 1))])
    y = x @ st.T
    return y.reshape(bsz, FINE_WINDOW, FINE_WINDOW)


def _derive_per_grid_spec(g: Grid) -> NormalizationSpec | None:
    peak = float(np.abs(g.values).max())
    if peak == 0.0:
        return None
    return NormalizationSpec(peak * PER_GRID_RANGE, peak)


def learned_prolong(
    coarse: Grid,
    window_fn,
    compositions: int = 1,
    spec: NormalizationSpec | None = None,
    per_grid: bool = False,
) -> Grid:
    """Window-based 4x upsampling pipeline, applied `compositions` times.

    Each pass: symlog-normalize, decompose into overlapping 6x6 windows,
    upsample every window to 24x24 via window_fn, stitch central tiles,
    clamp to [-1, 1], denormalize.
    """
    if compositions < 1:
        raise ConfigurationError("compositions must be >= 1")
    g = coarse
    for _ in range(compositions):
        if g.n < WINDOW_SIZE:
            raise ShapeError(f"grid side {g.n} below window size {WINDOW_SIZE}")
        if per_grid:
            s = _derive_per_grid_spec(g)
            if s is None:
                g = Grid.zeros(g.n * BASE_FACTOR, g.h / BASE_FACTOR)
                continue
        else:
            s = spec or NormalizationSpec()
        ws = window_decompose(symlog_normalize(g, s))
        fine_blocks = np.clip(window_fn(ws.windows), -1.0, 1.0)
        fine = window_stitch(fine_blocks, ws.offsets, g.n)
        g = symlog_denormalize(
            Grid(g.n * BASE_FACTOR, g.h / BASE_FACTOR, fine), s
        )
    return g


class SplineOperator:
    """Bicubic spline prolongation by an arbitrary power-of-two factor."""

    kind = "spline"

    def __init__(self, factor: int):
        if factor < 2 or factor & (factor - 1):
            raise ConfigurationError(f"spline factor must be a power of two >= 2, got {factor}")
        self.base_factor = factor
        self.total_factor = factor

    @property
    def name(self) -> str:
        return "spline"

    def apply(self, coarse: Grid) -> Grid:
        return spline_prolong(coarse, self.total_factor)


class _WindowedOperator:
    """Shared driver for the window-pipeline operators (base factor 4)."""

    def __init__(self, compositions: int, spec: NormalizationSpec | None, per_grid: bool):

        if compositions < 1:
            raise ConfigurationError("compositions must be >= 1")
        self.base_factor = BASE_FACTOR
        self.compositions = compositions
        self.total_factor = BASE_FACTOR**compositions
        self.spec = spec or NormalizationSpec()
        self.per_grid = per_grid

    def _window_fn(self, windows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply(self, coarse: Grid) -> Grid:
        return learned_prolong(
            coarse,
            self._window_fn,
            compositions=self.compositions,
            spec=self.spec,
            per_grid=self.per_grid,
        )


class LinearStencilOperator(_WindowedOperator):
    kind = "linear_stencil"

    def __init__(self, weights: WeightsContainer, compositions: int = 1,
                 spec: NormalizationSpec | None = None, per_grid: bool = True):
        if weights.architecture.get("kind") != "linear_stencil":
            raise ConfigurationError("weights are not a linear stencil")
        super().__init__(compositions, spec, per_grid)
        self.weights = weights

    @property
    def name(self) -> str:
        return "linear"

    def _window_fn(self, windows: np.ndarray) -> np.ndarray:
        return apply_linear_stencil(windows, self.weights)


class GeneratorOperator(_WindowedOperator):
    kind = "generator"

    def __init__(self, weights: WeightsContainer, compositions: int = 1,
                 spec: NormalizationSpec | None = None, per_grid: bool = True):
        validate_generator_weights(weights)
        super().__init__(compositions, spec, per_grid)
        self.weights = weights

    @property
    def name(self) -> str:
        return "gan"

    def _window_fn(self, windows: np.ndarray) -> np.ndarray:
        return generator_infer_batch(windows, self.weights).astype(np.float64)
