"""Super-resolution network weights, the SRWT archive format, and inference.

The generator maps one 6x6 coarse window in [-1, 1] to a 24x24 fine window
through a small residual network with two 2x sub-pixel upsampling stages.
Inference is a pure 32-bit numpy forward pass; no training framework is
needed to apply trained weights.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InputError, WeightsError

SRWT_MAGIC = b"SRWT"
SRWT_VERSION = 1

# Pinned generator layout; the trainer must agree with this bit for bit.
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


@dataclass
class WeightsContainer:
    """Architecture descriptor plus named float32 tensors."""

    architecture: dict
    tensors: dict[str, np.ndarray]
    raw_descriptor: bytes | None = field(default=None, repr=False)

    def descriptor_bytes(self) -> bytes:
        if self.raw_descriptor is not None:
            return self.raw_descriptor
        return json.dumps(self.architecture, sort_keys=True).encode("utf-8")


def write_srwt(w: WeightsContainer, path) -> None:
    desc = w.descriptor_bytes()
    with open(path, "wb") as fh:
        fh.write(SRWT_MAGIC)
        fh.write(struct.pack("<I", SRWT_VERSION))
        fh.write(struct.pack("<I", len(desc)))
        fh.write(desc)
        fh.write(struct.pack("<I", len(w.tensors)))
        for name, t in w.tensors.items():
            nb = name.encode("utf-8")
            arr = np.ascontiguousarray(t, dtype="<f4")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def read_srwt(path) -> WeightsContainer:
    with open(path, "rb") as fh:
        if fh.read(4) != SRWT_MAGIC:
            raise InputError("bad SRWT magic")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != SRWT_VERSION:
            raise InputError(f"unsupported SRWT version {version}")
        (dlen,) = struct.unpack("<I", fh.read(4))
        desc = fh.read(dlen)
        arch = json.loads(desc.decode("utf-8"))
        (count,) = struct.unpack("<I", fh.read(4))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", fh.read(2))
            name = fh.read(nlen).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            size = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(4 * size), dtype="<f4").reshape(shape)
            tensors[name] = data.copy()
    return WeightsContainer(arch, tensors, raw_descriptor=desc)


def generator_tensor_shapes(arch: dict) -> dict[str, tuple]:
    c = arch["features"]
    cin = arch["in_channels"]
    r = arch["upsample_factor"]
    shapes = {"head.weight": (c, cin, 3, 3), "head.bias": (c,)}
    for i in range(arch["n_res_blocks"]):
        shapes[f"res{i}.conv1.weight"] = (c, c, 3, 3)
        shapes[f"res{i}.conv1.bias"] = (c,)
        shapes[f"res{i}.conv2.weight"] = (c, c, 3, 3)
        shapes[f"res{i}.conv2.bias"] = (c,)
    for i in range(arch["upsample_stages"]):
        shapes[f"up{i}.conv.weight"] = (c * r * r, c, 3, 3)
        shapes[f"up{i}.conv.bias"] = (c * r * r,)
    shapes["tail.weight"] = (cin, c, 3, 3)
    shapes["tail.bias"] = (cin,)
    return shapes


def validate_generator_weights(w: WeightsContainer) -> None:
    if w.architecture.get("kind") != "generator":
        raise WeightsError(f"not a generator archive: {w.architecture.get('kind')}")
    expected = generator_tensor_shapes(w.architecture)
    for name, shape in expected.items():
        if name not in w.tensors:
            raise WeightsError(f"missing tensor {name}")
        if tuple(w.tensors[name].shape) != shape:
            raise WeightsError(
                f"tensor {name}: expected shape {shape}, got {w.tensors[name].shape}"
            )


def init_generator_weights(seed: int, arch: dict | None = None) -> WeightsContainer:
    """He-style random initialization, deterministic per seed."""
    arch = dict(arch or GENERATOR_ARCHITECTURE)
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in generator_tensor_shapes(arch).items():
        if name.endswith(".bias"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = shape[1] * shape[2] * shape[3]
            scale = np.sqrt(2.0 / fan_in)
            tensors[name] = (rng.standard_normal(shape) * scale).astype(np.float32)
    return WeightsContainer(arch, tensors)


def _conv3x3_circular(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross-correlation with 3x3 kernels and circular padding.

    x: (B, C, H, W) float32; w: (O, C, 3, 3); returns (B, O, H, W).
    """
    bsz, cin, hgt, wid = x.shape
    out_ch = w.shape[0]
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="wrap")
    cols = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (B, C, H, W, 3, 3)
    cols = cols.transpose(0, 2, 3, 1, 4, 5).reshape(bsz * hgt * wid, cin * 9)
    wm = w.reshape(out_ch, cin * 9).astype(np.float32)
    y = cols @ wm.T + b.astype(np.float32)
    return y.reshape(bsz, hgt, wid, out_ch).transpose(0, 3, 1, 2)


def _lrelu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, np.float32(slope) * x)


def _pixel_shuffle(x: np.ndarray, r: int) -> np.ndarray:
    """(B, C*r*r, H, W) -> (B, C, H*r, W*r), channel-major sub-pixel layout."""
    bsz, crr, hgt, wid = x.shape
    c = crr // (r * r)
    y = x.reshape(bsz, c, r, r, hgt, wid)
    y = y.transpose(0, 1, 4, 2, 5, 3)
    return y.reshape(bsz, c, hgt * r, wid * r)


def generator_infer_batch(windows: np.ndarray, w: WeightsContainer) -> np.ndarray:
    """Forward pass for a batch of coarse windows.

    windows: (B, ns, ns) in [-1, 1]; returns (B, ns*4, ns*4) in [-1, 1].
    Arithmetic runs in float32; the caller widens as needed.
    """
    validate_generator_weights(w)
    arch = w.architecture
    slope = arch["lrelu_slope"]
    t = w.tensors
    x = np.asarray(windows, dtype=np.float32)[:, None, :, :]
    if x.shape[2] != arch["window_in"] or x.shape[3] != arch["window_in"]:
        raise WeightsError(
            f"expected {arch['window_in']}^2 windows, got {x.shape[2:]} "
        )
    h0 = _lrelu(_conv3x3_circular(x, t["head.weight"], t["head.bias"]), slope)
    h = h0
    for i in range(arch["n_res_blocks"]):
        z = _lrelu(
            _conv3x3_circular(h, t[f"res{i}.conv1.weight"], t[f"res{i}.conv1.bias"]),
            slope,
        )
        z = _conv3x3_circular(z, t[f"res{i}.conv2.weight"], t[f"res{i}.conv2.bias"])
        h = h + z
    h = h + h0
    r = arch["upsample_factor"]
    for i in range(arch["upsample_stages"]):
        h = _conv3x3_circular(h, t[f"up{i}.conv.weight"], t[f"up{i}.conv.bias"])
        h = _lrelu(_pixel_shuffle(h, r), slope)
    y = _conv3x3_circular(h, t["tail.weight"], t["tail.bias"])
    return np.tanh(y)[:, 0, :, :]


def generator_infer(window: np.ndarray, w: WeightsContainer) -> np.ndarray:
    """Single-window forward pass; see generator_infer_batch."""
    return generator_infer_batch(np.asarray(window)[None, :, :], w)[0]
