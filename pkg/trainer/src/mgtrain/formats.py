"""Binary interchange formats shared with the solver package.

MGDS holds sampled coarse/fine training window pairs; SRWT holds named
float32 weight tensors behind a JSON architecture descriptor. Both are
little-endian and defined independently here so the trainer and the solver
only couple through the files themselves.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

MGDS_MAGIC = b"MGDS"
MGDS_VERSION = 1
SRWT_MAGIC = b"SRWT"
SRWT_VERSION = 1

COARSE_SIZE = 6
FINE_SIZE = 24


@dataclass(frozen=True)
class WindowPair:
    """One training example: normalized coarse input and fine target."""

    inputs: np.ndarray  # (6, 6) float32
    target: np.ndarray  # (24, 24) float32
    field_id: int
    level: int
    row: int
    col: int


def read_mgds(path) -> list[WindowPair]:
    with open(path, "rb") as fh:
        if fh.read(4) != MGDS_MAGIC:
            raise FormatError(f"bad MGDS magic in {path}")
        version, count = struct.unpack("<II", fh.read(8))
        if version != MGDS_VERSION:
            raise FormatError(f"unsupported MGDS version {version}")
        pairs = []
        for _ in range(count):
            header = fh.read(9)
            if len(header) != 9:
                raise FormatError("truncated MGDS record")
            fid, level, row, col = struct.unpack("<IBHH", header)
            inp = np.frombuffer(fh.read(4 * 36), dtype="<f4").reshape(6, 6)
            tgt = np.frombuffer(fh.read(4 * 576), dtype="<f4").reshape(24, 24)
            pairs.append(WindowPair(inp.copy(), tgt.copy(), fid, level, row, col))
    return pairs


def write_mgds(pairs: list[WindowPair], path) -> None:
    with open(path, "wb") as fh:
        fh.write(MGDS_MAGIC)
        fh.write(struct.pack("<II", MGDS_VERSION, len(pairs)))
        for p in pairs:
            fh.write(struct.pack("<IBHH", p.field_id, p.level, p.row, p.col))
            fh.write(np.asarray(p.inputs, dtype="<f4").tobytes())
            fh.write(np.asarray(p.target, dtype="<f4").tobytes())


@dataclass
class WeightsArchive:
    """Architecture descriptor plus named float32 tensors."""

    architecture: dict
    tensors: dict[str, np.ndarray]
    raw_descriptor: bytes | None = field(default=None, repr=False)

    def descriptor_bytes(self) -> bytes:
        if self.raw_descriptor is not None:
            return self.raw_descriptor
        return json.dumps(self.architecture, sort_keys=True).encode("utf-8")


def write_srwt(w: WeightsArchive, path) -> None:
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


def read_srwt(path) -> WeightsArchive:
    with open(path, "rb") as fh:
        if fh.read(4) != SRWT_MAGIC:
            raise FormatError(f"bad SRWT magic in {path}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != SRWT_VERSION:
            raise FormatError(f"unsupported SRWT version {version}")
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
    return WeightsArchive(arch, tensors, raw_descriptor=desc)
