"""Training and evaluation of the window super-resolution generator.

Default objective is plain mean squared error against the sampled fine
windows; an optional adversarial term with a small patch discriminator can
be added on top. The exported SRWT archive is the only artifact the solver
consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from scipy.interpolate import CubicSpline
from torch import nn

from .errors import ConfigurationError, TrainingDivergedError
from .formats import WeightsArchive, WindowPair, read_mgds, write_srwt
from .model import Discriminator, Generator


@dataclass
class TrainConfig:
    dataset: str
    out_path: str
    epochs: int = 200
    batch_size: int = 64
    lr: float = 1e-3
    val_fraction: float = 0.1
    adversarial: bool = False
    adv_weight: float = 1e-3
    seed: int = 0
    log_path: str | None = None  # defaults to training_log.csv next to out_path

    def __post_init__(self):
        if not (0.0 < self.val_fraction <= 0.5):
            raise ConfigurationError("val_fraction must be in (0, 0.5]")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigurationError("epochs >= 0 and batch_size >= 1 required")
        if self.lr <= 0:
            raise ConfigurationError("learning rate must be positive")
        if self.adv_weight < 0:
            raise ConfigurationError("adversarial weight must be non-negative")


def split_dataset(
    pairs: list[WindowPair], val_fraction: float, seed: int
) -> tuple[list[WindowPair], list[WindowPair]]:
    """Deterministic shuffle split into (train, validation)."""
    order = np.random.default_rng(seed).permutation(len(pairs))
    n_val = max(1, int(round(val_fraction * len(pairs))))
    val_idx = set(order[:n_val].tolist())
    train = [p for i, p in enumerate(pairs) if i not in val_idx]
    val = [p for i, p in enumerate(pairs) if i in val_idx]
    return train, val


def _to_tensors(pairs: list[WindowPair]) -> tuple[torch.Tensor, torch.Tensor]:
    x = torch.from_numpy(np.stack([p.inputs for p in pairs])).float().unsqueeze(1)
    y = torch.from_numpy(np.stack([p.target for p in pairs])).float().unsqueeze(1)
    return x, y


def _epoch_mse(gen: Generator, x: torch.Tensor, y: torch.Tensor, batch: int) -> float:
    gen.eval()
    total = 0.0
    with torch.no_grad():
        for i in range(0, len(x), batch):
            pred = gen(x[i : i + batch])
            total += nn.functional.mse_loss(
                pred, y[i : i + batch], reduction="sum"
            ).item()
    return total / y.numel()


def train_generator(cfg: TrainConfig) -> WeightsArchive:
    """Optimize the generator on an MGDS dataset and export SRWT weights.

    Writes a per-epoch CSV log (epoch, train_mse, val_mse). With epochs = 0
    the exported weights are the seeded initialization, untouched.
    """
    pairs = read_mgds(cfg.dataset)
    if len(pairs) < 2:
        raise ConfigurationError("dataset too small to split")
    torch.manual_seed(cfg.seed)
    gen = Generator()
    train, val = split_dataset(pairs, cfg.val_fraction, cfg.seed)
    x_tr, y_tr = _to_tensors(train)
    x_va, y_va = _to_tensors(val)
    opt = torch.optim.Adam(gen.parameters(), lr=cfg.lr)
    disc = opt_d = None
    if cfg.adversarial:
        disc = Discriminator()
        opt_d = torch.optim.Adam(disc.parameters(), lr=cfg.lr)
    bce = nn.functional.binary_cross_entropy_with_logits
    generator_rng = torch.Generator().manual_seed(cfg.seed)

    log_path = cfg.log_path or str(Path(cfg.out_path).with_name("training_log.csv"))
    with open(log_path, "w") as log:
        log.write("epoch,train_mse,val_mse\n")
        for epoch in range(1, cfg.epochs + 1):
            gen.train()
            order = torch.randperm(len(x_tr), generator=generator_rng)
            for i in range(0, len(order), cfg.batch_size):
                idx = order[i : i + cfg.batch_size]
                xb, yb = x_tr[idx], y_tr[idx]
                pred = gen(xb)
                loss = nn.functional.mse_loss(pred, yb)
                if cfg.adversarial:
                    d_real = disc(yb)
                    d_fake = disc(pred.detach())
                    d_loss = bce(d_real, torch.ones_like(d_real)) + bce(
                        d_fake, torch.zeros_like(d_fake)
                    )
                    opt_d.zero_grad()
                    d_loss.backward()
                    opt_d.step()
                    # non-saturating generator term: maximize log D(fake)
                    g_fake = disc(pred)
                    loss = loss + cfg.adv_weight * bce(
                        g_fake, torch.ones_like(g_fake)
                    )
                if not math.isfinite(loss.item()):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}"
                    )
                opt.zero_grad()
                loss.backward()
                opt.step()
            train_mse = _epoch_mse(gen, x_tr, y_tr, cfg.batch_size)
            val_mse = _epoch_mse(gen, x_va, y_va, cfg.batch_size)
            log.write(f"{epoch},{train_mse:.10g},{val_mse:.10g}\n")

    weights = gen.export_weights()
    write_srwt(weights, cfg.out_path)
    return weights


def spline_upsample_window(window: np.ndarray, factor: int = 4) -> np.ndarray:
    """Periodic bicubic 4x upsampling of one window, knot-exact."""
    n = window.shape[0]
    x = np.arange(n + 1, dtype=np.float64)
    xf = np.arange(n * factor, dtype=np.float64) / factor
    v = np.concatenate([window, window[:1, :]], axis=0)
    tmp = CubicSpline(x, v, axis=0, bc_type="periodic")(xf)
    tmp = np.concatenate([tmp, tmp[:, :1]], axis=1)
    return CubicSpline(x, tmp, axis=1, bc_type="periodic")(xf)


def fit_stencil_baseline(train: list[WindowPair], ridge: float = 1e-8) -> np.ndarray:
    """Affine per-window least-squares upsampler; returns (576, 37)."""
    x = np.stack([p.inputs.ravel() for p in train]).astype(np.float64)
    y = np.stack([p.target.ravel() for p in train]).astype(np.float64)
    x = np.hstack([x, np.ones((len(train), 1))])
    reg = np.sqrt(ridge) * np.eye(37)
    reg[-1, -1] = 0.0
    coef, *_ = np.linalg.lstsq(
        np.vstack([x, reg]), np.vstack([y, np.zeros((37, y.shape[1]))]), rcond=None
    )
    return coef.T


def evaluate_operator(
    weights: WeightsArchive, dataset: str, val_fraction: float = 0.1, seed: int = 0
) -> dict[str, float]:
    """Validation MSE of the generator against spline and stencil baselines.

    The split matches train_generator's for the same fraction and seed, so
    the reported numbers are held-out for a model trained with that config.
    """
    pairs = read_mgds(dataset)
    train, val = split_dataset(pairs, val_fraction, seed)
    gen = Generator(weights.architecture)
    gen.load_weights(weights)
    x_va, y_va = _to_tensors(val)
    gen_mse = _epoch_mse(gen, x_va, y_va, 256)

    targets = np.stack([p.target for p in val]).astype(np.float64)
    spline_pred = np.stack([spline_upsample_window(p.inputs.astype(np.float64)) for p in val])
    spline_mse = float(np.mean((spline_pred - targets) ** 2))

    stencil = fit_stencil_baseline(train)
    xin = np.hstack(
        [np.stack([p.inputs.ravel() for p in val]), np.ones((len(val), 1))]
    )
    stencil_pred = (xin @ stencil.T).reshape(len(val), 24, 24)
    stencil_mse = float(np.mean((stencil_pred - targets) ** 2))

    zero_mse = float(np.mean(targets**2))
    return {
        "generator_mse": gen_mse,
        "spline_mse": spline_mse,
        "stencil_mse": stencil_mse,
        "zero_mse": zero_mse,
        "n_val": float(len(val)),
    }


def report_to_csv(report: dict[str, float], path) -> None:
    with open(path, "w") as fh:
        fh.write("metric,value\n")
        for key in sorted(report):
            fh.write(f"{key},{report[key]:.10g}\n")
