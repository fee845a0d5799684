"""Torch modules for the window super-resolution generator and discriminator.

The generator layout is pinned by the solver's inference path; the SRWT
tensor names below are the cross-package contract, so export/import maps
between the torch state dict and those names explicitly.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .errors import FormatError
from .formats import WeightsArchive

GENERATOR_ARCHITECTURE = {
    "kind": "generator",
    "in_channels": 1,
    "features": 32,
    "n_res_blocks": 4,
    "upsample_stages": 2,
    "upsample_factor": 2,
    "lrelu_slope": 0.2,
    "padding": "circular",
    "final_activation": "tanh",
    "window_in": 6,
    "window_out": 24,
}


def _conv3(cin: int, cout: int) -> nn.Conv2d:
    return nn.Conv2d(cin, cout, 3, padding=1, padding_mode="circular")


class ResBlock(nn.Module):
    def __init__(self, channels: int, slope: float):
        super().__init__()
        self.conv1 = _conv3(channels, channels)
        self.conv2 = _conv3(channels, channels)
        self.act = nn.LeakyReLU(slope)

    def forward(self, x):
        return x + self.conv2(self.act(self.conv1(x)))


class Generator(nn.Module):
    """6x6 -> 24x24 residual upsampler with sub-pixel stages and tanh output."""

    def __init__(self, arch: dict | None = None):
        super().__init__()
        arch = dict(arch or GENERATOR_ARCHITECTURE)
        self.arch = arch
        c = arch["features"]
        r = arch["upsample_factor"]
        slope = arch["lrelu_slope"]
        self.head = _conv3(arch["in_channels"], c)
        self.blocks = nn.ModuleList(
            [ResBlock(c, slope) for _ in range(arch["n_res_blocks"])]
        )
        self.up = nn.ModuleList(
            [_conv3(c, c * r * r) for _ in range(arch["upsample_stages"])]
        )
        self.tail = _conv3(c, arch["in_channels"])
        self.act = nn.LeakyReLU(slope)
        self.shuffle = nn.PixelShuffle(r)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h0 = self.act(self.head(x))
        h = h0
        for block in self.blocks:
            h = block(h)
        h = h + h0
        for up in self.up:
            h = self.act(self.shuffle(up(h)))
        return torch.tanh(self.tail(h))

    def _name_map(self) -> dict[str, str]:
        """SRWT tensor name -> torch state dict key."""
        out = {"head.weight": "head.weight", "head.bias": "head.bias"}
        for i in range(self.arch["n_res_blocks"]):
            for conv in ("conv1", "conv2"):
                for part in ("weight", "bias"):
                    out[f"res{i}.{conv}.{part}"] = f"blocks.{i}.{conv}.{part}"
        for i in range(self.arch["upsample_stages"]):
            out[f"up{i}.conv.weight"] = f"up.{i}.weight"
            out[f"up{i}.conv.bias"] = f"up.{i}.bias"
        out["tail.weight"] = "tail.weight"
        out["tail.bias"] = "tail.bias"
        return out

    def export_weights(self) -> WeightsArchive:
        sd = self.state_dict()
        tensors = {
            srwt: sd[key].detach().cpu().numpy().astype(np.float32)
            for srwt, key in self._name_map().items()
        }
        return WeightsArchive(dict(self.arch), tensors)

    def load_weights(self, w: WeightsArchive) -> None:
        if w.architecture.get("kind") != "generator":
            raise FormatError(f"not generator weights: {w.architecture.get('kind')}")
        mapping = self._name_map()
        missing = set(mapping) - set(w.tensors)
        if missing:
            raise FormatError(f"missing tensors: {sorted(missing)}")
        sd = {key: torch.from_numpy(w.tensors[srwt].copy()) for srwt, key in mapping.items()}
        self.load_state_dict(sd)


class Discriminator(nn.Module):
    """Small strided-convolution real/fake classifier for 24x24 patches."""

    def __init__(self, slope: float = 0.2):
        super().__init__()
        chans = [1, 16, 32, 64, 64]
        layers = []
        for cin, cout in zip(chans[:-1], chans[1:]):
            layers.append(nn.Conv2d(cin, cout, 3, stride=2, padding=1))
            layers.append(nn.LeakyReLU(slope))
        self.features = nn.Sequential(*layers)
        self.head = nn.Linear(64 * 2 * 2, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.features(x)
        return self.head(h.flatten(1))
