"""
Binary parameter checkpoints.

Layout (all integers little-endian)::

    b"HAWKDOVE"                 magic
    u16 version
    u32 tensor count
    per tensor:
        u8 dtype code (0 = float32, 1 = float64)
        u8 ndim
        u32 dims[ndim]
        raw little-endian values, row-major

A JSON sidecar (`<path>.json`) carries seed, step count and schedule position.
The replay buffer is not saved.
"""
from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from .network import QNetwork
from .tensor_data import Tensor

logger = logging.getLogger(__name__)

MAGIC = b"HAWKDOVE"
VERSION = 1
DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
CODE_DTYPES = {code: dtype for dtype, code in DTYPE_CODES.items()}

PathLike = Union[str, Path]


class CheckpointError(ValueError):
    "Exception raised for unreadable, corrupt or incompatible checkpoints."

    def __init__(self, path: PathLike, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")


def encode_parameters(values: Sequence[Tensor]) -> bytes:
    chunks = [MAGIC, struct.pack("<HI", VERSION, len(values))]
    for value in values:
        dtype = np.dtype(value.dtype)
        if dtype not in DTYPE_CODES:
            raise ValueError(f"unsupported checkpoint dtype {dtype}")
        chunks.append(struct.pack("<BB", DTYPE_CODES[dtype], value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype=dtype.newbyteorder("<")).tobytes())
    return b"".join(chunks)


def decode_parameters(data: bytes, path: PathLike = "<bytes>") -> List[Tensor]:
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(path, "bad magic, not a hawkdove checkpoint")
    offset = len(MAGIC)
    try:
        version, count = struct.unpack_from("<HI", data, offset)
        if version != VERSION:
            raise CheckpointError(path, f"schema version {version}, expected {VERSION}")
        offset += struct.calcsize("<HI")
        values = []
        for _ in range(count):
            code, ndim = struct.unpack_from("<BB", data, offset)
            offset += 2
            if code not in CODE_DTYPES:
                raise CheckpointError(path, f"unknown dtype code {code}")
            shape = struct.unpack_from(f"<{ndim}I", data, offset)
            offset += 4 * ndim
            dtype = CODE_DTYPES[code].newbyteorder("<")
            n = int(np.prod(shape, dtype=np.int64))
            end = offset + n * dtype.itemsize
            if end > len(data):
                raise CheckpointError(path, "truncated tensor data")
            value = np.frombuffer(data[offset:end], dtype=dtype).reshape(shape)
            values.append(value.astype(CODE_DTYPES[code]))
            offset = end
    except struct.error as e:
        raise CheckpointError(path, f"truncated header ({e})") from e
    if offset != len(data):
        raise CheckpointError(path, f"{len(data) - offset} trailing bytes")
    return values


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_network(path: PathLike, net: QNetwork, meta: Dict[str, Any]) -> None:
    "Write the parameters of `net` and a JSON sidecar holding `meta`."
    path = Path(path)
    path.write_bytes(encode_parameters(net.parameter_values()))
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    logger.debug("wrote checkpoint %s", path)


def read_parameters(path: PathLike) -> List[Tensor]:
    if not str(path):
        raise CheckpointError(path, "empty checkpoint path")
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(path, e.strerror or str(e)) from e
    return decode_parameters(data, path)


def read_meta(path: PathLike) -> Dict[str, Any]:
    "Sidecar metadata, or an empty dict if there is none."
    side = sidecar_path(path)
    if not side.exists():
        return {}
    try:
        meta: Dict[str, Any] = json.loads(side.read_text())
    except json.JSONDecodeError as e:
        raise CheckpointError(side, f"bad sidecar JSON ({e.msg})") from e
    return meta


def load_network(path: PathLike, net: QNetwork) -> None:
    """
    Load parameters into `net` in place.

    Raises:
        CheckpointError : if the file is unreadable, corrupt, of another schema
            version, or its tensors do not match the network's shapes.
    """
    values = read_parameters(path)
    params = net.parameters()
    if len(values) != len(params):
        raise CheckpointError(path, f"{len(values)} tensors, network has {len(params)}")
    for (name, param), value in zip(net.named_parameters(), values):
        if value.shape != param.value.shape:
            raise CheckpointError(
                path, f"{name}: shape {value.shape} does not match network {param.value.shape}"
            )
    for param, value in zip(params, values):
        param.update(value)
