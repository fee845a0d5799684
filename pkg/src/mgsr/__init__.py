"""Geometric multigrid for the biperiodic Poisson equation with
super-resolution prolongation operators."""

from .grid import Grid, NormKind, gauss_seidel, laplacian, norm, residual, subtract_mean
from .multigrid import ConvergenceTrace, MultigridConfig, Schedule, restrict, restrict_k, solve, vcycle
from .network import WeightsContainer, generator_infer, read_srwt, write_srwt
from .prolongation import (
    GeneratorOperator,
    LinearStencilOperator,
    NormalizationSpec,
    SplineOperator,
    fit_linear_stencil,
    spline_prolong,
    symlog_denormalize,
    symlog_normalize,
)
from .spectral import fft_poisson_solve, power_spectrum

__all__ = [
    "Grid",
    "NormKind",
    "gauss_seidel",
    "laplacian",
    "norm",
    "residual",
    "subtract_mean",
    "ConvergenceTrace",
    "MultigridConfig",
    "Schedule",
    "restrict",
    "restrict_k",
    "solve",
    "vcycle",
    "WeightsContainer",
    "generator_infer",
    "read_srwt",
    "write_srwt",
    "GeneratorOperator",
    "LinearStencilOperator",
    "NormalizationSpec",
    "SplineOperator",
    "fit_linear_stencil",
    "spline_prolong",
    "symlog_denormalize",
    "symlog_normalize",
    "fft_poisson_solve",
    "power_spectrum",
]
