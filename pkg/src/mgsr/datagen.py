"""Training-corpus generation: decaying 2-D turbulence and window sampling.

Velocity fields evolve under the incompressible Navier-Stokes equations with
a pseudo-spectral scheme whose derivative symbols match second-order centered
differences, so the projection step leaves exactly zero centered-difference
divergence. Pressure/source snapshot pairs feed both the training sampler
and the solver benchmarks.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DivergenceError, InputError, ShapeError
from .grid import Grid
from .multigrid import restrict_k
from .prolongation import (
    BASE_FACTOR,
    FINE_WINDOW,
    WINDOW_SIZE,
    NormalizationSpec,
    symlog_normalize,
)
from .spectral import fft_poisson_solve

MGDS_MAGIC = b"MGDS"
MGDS_VERSION = 1

DEFAULT_NU = 1e-3
DEFAULT_K_PEAK = 4
SNAPSHOT_EVERY = 20


@dataclass
class VelocityField:
    u: Grid
    v: Grid
    nu: float

    def __post_init__(self):
        if self.u.n != self.v.n or self.u.h != self.v.h:
            raise ShapeError("velocity components must share the lattice")
        if self.nu <= 0:
            raise ConfigurationError("viscosity must be positive")

    @property
    def n(self) -> int:
        return self.u.n

    @property
    def h(self) -> float:
        return self.u.h

    def max_speed(self) -> float:
        return float(np.sqrt(self.u.values**2 + self.v.values**2).max())


def _fd_symbols(n: int, h: float):
    """Fourier multipliers of the centered first difference and 5-point Laplacian."""
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    kx, ky = k[:, None], k[None, :]
    sx = np.sin(kx * h) / h  # centered difference symbol / i
    sy = np.sin(ky * h) / h
    lap = (2.0 * np.cos(kx * h) - 2.0) / h**2 + (2.0 * np.cos(ky * h) - 2.0) / h**2
    return sx, sy, lap


def divergence_fd(vel: VelocityField) -> Grid:
    """Centered-difference divergence of the velocity field."""
    u, v, h = vel.u.values, vel.v.values, vel.h
    div = (np.roll(u, -1, 0) - np.roll(u, 1, 0)) / (2 * h) + (
        np.roll(v, -1, 1) - np.roll(v, 1, 1)
    ) / (2 * h)
    return vel.u.with_values(div)


def init_broadband_velocity(
    n: int, seed: int, k_peak: int = DEFAULT_K_PEAK, nu: float = DEFAULT_NU
) -> VelocityField:
    """Random solenoidal field with shell energy ~ k^4 exp(-2 (k/k_peak)^2).

    Built from a random-phase streamfunction; derivatives use the centered
    difference symbols, so the centered divergence is exactly zero. RMS speed
    is normalized to 1.
    """
    if n < 16:
        raise ConfigurationError(f"need n >= 16, got {n}")
    h = 1.0 / n
    rng = np.random.default_rng(seed)
    m = np.fft.fftfreq(n, d=h) * h * n  # integer mode numbers
    km = np.sqrt(m[:, None] ** 2 + m[None, :] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        shell_e = km**4 * np.exp(-2.0 * (km / k_peak) ** 2)
        # |psi_hat| ~ sqrt(E(k) / k) / k : shell energy to per-mode streamfunction
        amp = np.sqrt(shell_e / np.maximum(km, 1e-30)) / np.maximum(km, 1e-30)
    amp[0, 0] = 0.0
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, n))
    psi_hat = amp * np.exp(1j * phase)
    sx, sy, _ = _fd_symbols(n, h)
    psi_hat = np.fft.fft2(np.real(np.fft.ifft2(psi_hat)))  # enforce Hermitian symmetry
    u = np.real(np.fft.ifft2(1j * sy * psi_hat))
    v = np.real(np.fft.ifft2(-1j * sx * psi_hat))
    rms = np.sqrt(np.mean(u**2 + v**2))
    if rms == 0.0:
        raise ConfigurationError("degenerate initial field")
    u /= rms
    v /= rms
    return VelocityField(Grid(n, h, u), Grid(n, h, v), nu)


def compute_source(vel: VelocityField) -> Grid:
    """Pressure-Poisson source: div(nu lap(u) - (u . grad) u), mean-zero.

    All derivatives are real-space second-order centered differences.
    """
    u, v, h, nu = vel.u.values, vel.v.values, vel.h, vel.nu

    def ddx(a):
        return (np.roll(a, -1, 0) - np.roll(a, 1, 0)) / (2 * h)

    def ddy(a):
        return (np.roll(a, -1, 1) - np.roll(a, 1, 1)) / (2 * h)

    def lap(a):
        return (
            np.roll(a, -1, 0) + np.roll(a, 1, 0) + np.roll(a, -1, 1) + np.roll(a, 1, 1) - 4 * a
        ) / h**2

    rx = nu * lap(u) - (u * ddx(u) + v * ddy(u))
    ry = nu * lap(v) - (u * ddx(v) + v * ddy(v))
    f = ddx(rx) + ddy(ry)
    f -= f.mean()
    return Grid(vel.n, h, f)


def _project(uh: np.ndarray, vh: np.ndarray, sx, sy):
    """Remove the centered-difference-divergent part in Fourier space."""
    s2 = sx**2 + sy**2
    s2[0, 0] = 1.0
    div = 1j * sx * uh + 1j * sy * vh
    phi = -div / s2
    phi[0, 0] = 0.0
    return uh - 1j * sx * phi, vh - 1j * sy * phi


def evolve(
    vel: VelocityField,
    dt: float | None,
    steps: int,
    snapshot_every: int = SNAPSHOT_EVERY,
    return_state: bool = False,
):
    """Advance the field with a projection method; collect (p, f) snapshots.

    Heun (RK2) predictor for advection-diffusion in Fourier space with
    centered-difference symbols, followed by an exact discrete projection.
    With dt=None the advective bound 0.5 h / max|u| is recomputed each step;
    an explicit dt must satisfy it at every step.

    Snapshot pressure is the mean-zero solution of the compact 5-point
    Poisson system for the recorded source, so each (p, f) pair is an exact
    discrete problem/solution pair at the snapshot instant.
    """
    n, h, nu = vel.n, vel.h, vel.nu
    sx, sy, lap = _fd_symbols(n, h)
    uh = np.fft.fft2(vel.u.values)
    vh = np.fft.fft2(vel.v.values)
    uh, vh = _project(uh, vh, sx, sy)

    def rhs(uh, vh):
        u = np.real(np.fft.ifft2(uh))
        v = np.real(np.fft.ifft2(vh))
        ux = np.real(np.fft.ifft2(1j * sx * uh))
        uy = np.real(np.fft.ifft2(1j * sy * uh))
        vx = np.real(np.fft.ifft2(1j * sx * vh))
        vy = np.real(np.fft.ifft2(1j * sy * vh))
        adv_u = np.fft.fft2(u * ux + v * uy)
        adv_v = np.fft.fft2(u * vx + v * vy)
        return nu * lap * uh - adv_u, nu * lap * vh - adv_v

    snapshots: list[tuple[Grid, Grid]] = []
    for step in range(1, steps + 1):
        u = np.real(np.fft.ifft2(uh))
        v = np.real(np.fft.ifft2(vh))
        max_speed = float(np.sqrt(u**2 + v**2).max())
        bound = 0.5 * h / max(max_speed, 1e-30)
        step_dt = bound if dt is None else dt
        if step_dt > bound * (1 + 1e-12):
            raise ConfigurationError(
                f"dt={step_dt} violates the advective bound {bound} at step {step}"
            )
        ru, rv = rhs(uh, vh)
        u1, v1 = _project(uh + step_dt * ru, vh + step_dt * rv, sx, sy)
        ru1, rv1 = rhs(u1, v1)
        uh = uh + 0.5 * step_dt * (ru + ru1)
        vh = vh + 0.5 * step_dt * (rv + rv1)
        uh, vh = _project(uh, vh, sx, sy)
        if not (np.all(np.isfinite(uh)) and np.all(np.isfinite(vh))):
            raise DivergenceError(f"non-finite velocity at step {step}")
        if snapshot_every > 0 and step % snapshot_every == 0:
            cur = VelocityField(
                Grid(n, h, np.real(np.fft.ifft2(uh))),
                Grid(n, h, np.real(np.fft.ifft2(vh))),
                nu,
            )
            f = compute_source(cur)
            p = fft_poisson_solve(f)
            snapshots.append((p, f))
    if return_state:
        final = VelocityField(
            Grid(n, h, np.real(np.fft.ifft2(uh))),
            Grid(n, h, np.real(np.fft.ifft2(vh))),
            nu,
        )
        return snapshots, final
    return snapshots


@dataclass(frozen=True)
class TrainingSample:
    inputs: np.ndarray  # (6, 6) normalized
    target: np.ndarray  # (24, 24) normalized
    field_id: int
    level: int
    row: int
    col: int


@dataclass
class DatasetManifest:
    count: int
    seed: int
    p_min: float
    p_max: float
    source_fields: list[int]
    format_version: int = MGDS_VERSION
    held_out_split: bool = True
    extras: dict = field(default_factory=dict)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "DatasetManifest":
        with open(path) as fh:
            return cls(**json.load(fh))


def build_level_pyramid(fine: Grid, max_level: int) -> list[Grid]:
    """Injection-downsampled levels 0..max_level of one field."""
    return [restrict_k(fine, l) if l else fine for l in range(max_level + 1)]


def window_space_size(n_fine: int, levels=range(2, 6)) -> int:
    """Distinct (level, offset) window positions per field, our alignment."""
    total = 0
    for l in levels:
        n_l = n_fine // (2**l)
        if n_l >= WINDOW_SIZE:
            total += (n_l - WINDOW_SIZE + 1) ** 2
    return total


def sample_training_windows(
    fields: list[Grid],
    count: int,
    seed: int,
    spec: NormalizationSpec,
    levels=(2, 3, 4, 5),
) -> list[TrainingSample]:
    """Random coarse/fine window pairs from injection pyramids of the fields.

    Each sample: pick a field, a level l, and an aligned 6x6 window on the
    level-l grid; the target is the matching 24x24 window at level l-2.
    """
    if count < 1:
        raise InputError("count must be >= 1")
    if not fields:
        raise InputError("no source fields")
    n = fields[0].n
    if any(f.n != n for f in fields):
        raise ShapeError("all source fields must share one grid size")
    levels = [
        l for l in levels if n % (2**l) == 0 and n // (2**l) >= WINDOW_SIZE
    ]
    if not levels:
        raise InputError(f"no feasible window level for grid size {n}")
    rng = np.random.default_rng(seed)
    max_level = max(levels)
    pyramids = [build_level_pyramid(f, max_level) for f in fields]
    samples = []
    for _ in range(count):
        fid = int(rng.integers(len(fields)))
        l = int(rng.choice(levels))
        coarse = pyramids[fid][l]
        fine = pyramids[fid][l - 2]
        max_off = coarse.n - WINDOW_SIZE
        r = int(rng.integers(max_off + 1))
        c = int(rng.integers(max_off + 1))
        cw = coarse.values[r : r + WINDOW_SIZE, c : c + WINDOW_SIZE]
        fr, fc = BASE_FACTOR * r, BASE_FACTOR * c
        fw = fine.values[fr : fr + FINE_WINDOW, fc : fc + FINE_WINDOW]
        cn = symlog_normalize(Grid(WINDOW_SIZE, coarse.h, cw.copy()), spec).values
        fn = symlog_normalize(Grid(FINE_WINDOW, fine.h, fw.copy()), spec).values
        samples.append(TrainingSample(cn, fn, fid, l, r, c))
    return samples


def write_mgds(samples: list[TrainingSample], path) -> None:
    with open(path, "wb") as fh:
        fh.write(MGDS_MAGIC)
        fh.write(struct.pack("<II", MGDS_VERSION, len(samples)))
        for s in samples:
            fh.write(struct.pack("<IBHH", s.field_id, s.level, s.row, s.col))
            fh.write(np.asarray(s.inputs, dtype="<f4").tobytes())
            fh.write(np.asarray(s.target, dtype="<f4").tobytes())


def read_mgds(path) -> list[TrainingSample]:
    with open(path, "rb") as fh:
        if fh.read(4) != MGDS_MAGIC:
            raise InputError("bad MGDS magic")
        version, count = struct.unpack("<II", fh.read(8))
        if version != MGDS_VERSION:
            raise InputError(f"unsupported MGDS version {version}")
        samples = []
        for _ in range(count):
            fid, level, row, col = struct.unpack("<IBHH", fh.read(9))
            inp = np.frombuffer(fh.read(4 * 36), dtype="<f4").reshape(6, 6)
            tgt = np.frombuffer(fh.read(4 * 576), dtype="<f4").reshape(24, 24)
            samples.append(
                TrainingSample(
                    inp.astype(np.float64), tgt.astype(np.float64), fid, level, row, col
                )
            )
    return samples


def field_paths(out_dir, field_id: int) -> tuple[Path, Path]:
    out = Path(out_dir)
    return out / f"field_{field_id}_p.pgrd", out / f"field_{field_id}_f.pgrd"


def derive_global_spec(fields: list[Grid], dynamic_range: float = 1e-7) -> NormalizationSpec:
    """Global symlog bounds from the data: peak magnitude over all fields,
    floor a fixed number of decades below it."""
    peak = max(float(np.abs(f.values).max()) for f in fields)
    if peak == 0.0:
        raise InputError("all fields are zero")
    return NormalizationSpec(peak * dynamic_range, peak)
