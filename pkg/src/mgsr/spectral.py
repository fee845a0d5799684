"""Fourier-side tools: exact solver for the 5-point system and radial spectra.

The FFT solve diagonalizes the same discrete Laplacian the relaxation uses,
so it serves as an independent reference solution for the multigrid solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid


def mode_numbers(n: int) -> np.ndarray:
    """Integer Fourier mode indices in FFT layout: 0, 1, ..., -1."""
    return np.fft.fftfreq(n, d=1.0 / n)


def fft_poisson_solve(f: Grid) -> Grid:
    """Direct solve of the 5-point system laplacian(p) = f, mean-zero.

    The discrete symbol of the stencil is (2cos(2*pi*m/n) - 2)/h^2 per axis;
    the zero mode is annihilated (periodic null space).
    """
    n, h = f.n, f.h
    m = mode_numbers(n)
    lam = (2.0 * np.cos(2.0 * np.pi * m[:, None] / n) - 2.0) / (h * h) + (
        2.0 * np.cos(2.0 * np.pi * m[None, :] / n) - 2.0
    ) / (h * h)
    fhat = np.fft.fft2(f.values)
    lam[0, 0] = 1.0
    phat = fhat / lam
    phat[0, 0] = 0.0
    p = np.real(np.fft.ifft2(phat))
    p -= p.mean()
    return f.with_values(p)


@dataclass(frozen=True)
class SpectrumRecord:
    """Radially averaged power: mean |FFT|^2 per integer wavenumber shell."""

    bins: np.ndarray  # shell indices 0..n/2
    power: np.ndarray  # mean power per shell
    counts: np.ndarray  # modes per shell

    def total_power_above(self, k: int) -> float:
        """Summed (not averaged) power in shells strictly above k."""
        sel = self.bins > k
        return float(np.sum(self.power[sel] * self.counts[sel]))


def power_spectrum(g: Grid) -> SpectrumRecord:
    """Bin |FFT(g)|^2 into integer shells by rounded |k|, averaged per shell."""
    n = g.n
    m = mode_numbers(n)
    kr = np.sqrt(m[:, None] ** 2 + m[None, :] ** 2)
    shell = np.rint(kr).astype(int)
    nbins = n // 2 + 1
    power = np.abs(np.fft.fft2(g.values)) ** 2
    keep = shell < nbins
    sums = np.bincount(shell[keep], weights=power[keep], minlength=nbins)
    counts = np.bincount(shell[keep], minlength=nbins)
    mean = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    return SpectrumRecord(np.arange(nbins), mean, counts)


def spectrum_to_csv(rec: SpectrumRecord, path) -> None:
    with open(path, "w") as fh:
        fh.write("k,power,count\n")
        for k, p, c in zip(rec.bins, rec.power, rec.counts):
            fh.write(f"{k},{p:.17g},{c}\n")
