"""
Binary checkpoint format.

Layout (all integers little-endian):
    b"STGC" | version u32 | descriptor length u32 | descriptor (UTF-8 JSON, sorted keys)
    then per tensor: name length u32 | name (UTF-8) | rank u32 | extents u64 * rank | float64 payload

Payloads are written in C order with '<f8', so save/load round-trips bit-exactly.
"""

import io
import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Dict

import numpy as np

from errors import InputError

logger = logging.getLogger(__name__)

MAGIC = b'STGC'
VERSION = 1


@dataclass
class Checkpoint:
    """Architecture/statistics descriptor plus named parameter arrays (ordered)."""

    descriptor: Dict[str, Any]
    state: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def model_descriptor(self) -> Dict[str, Any]:
        return self.descriptor.get('model', {})


def _write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack('<I', value))


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    _write_u32(out, VERSION)
    descriptor = json.dumps(checkpoint.descriptor, sort_keys=True, separators=(',', ':')).encode('utf-8')
    _write_u32(out, len(descriptor))
    out.write(descriptor)
    for name, array in checkpoint.state.items():
        array = np.asarray(array, dtype=np.float64)
        encoded = name.encode('utf-8')
        _write_u32(out, len(encoded))
        out.write(encoded)
        _write_u32(out, array.ndim)
        out.write(struct.pack(f'<{array.ndim}Q', *array.shape))
        out.write(np.ascontiguousarray(array).astype('<f8').tobytes())
    return out.getvalue()


class _Reader:
    def __init__(self, payload: bytes, source: str):
        self.payload = payload
        self.pos = 0
        self.source = source

    def take(self, size: int, what: str) -> bytes:
        if self.pos + size > len(self.payload):
            raise InputError(f"{self.source}: truncated checkpoint while reading {what} at byte {self.pos}")
        chunk = self.payload[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack('<I', self.take(4, what))[0]

    @property
    def done(self) -> bool:
        return self.pos >= len(self.payload)


def decode_checkpoint(payload: bytes, source: str = '<checkpoint>') -> Checkpoint:
    reader = _Reader(payload, source)
    if reader.take(4, 'magic') != MAGIC:
        raise InputError(f"{source}: not a checkpoint (bad magic)")
    version = reader.u32('version')
    if version != VERSION:
        raise InputError(f"{source}: unsupported checkpoint version {version}")
    length = reader.u32('descriptor length')
    try:
        descriptor = json.loads(reader.take(length, 'descriptor').decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"{source}: corrupt descriptor: {exc}") from None
    state: Dict[str, np.ndarray] = {}
    while not reader.done:
        name = reader.take(reader.u32('name length'), 'name').decode('utf-8')
        rank = reader.u32(f"rank of {name}")
        shape = struct.unpack(f'<{rank}Q', reader.take(8 * rank, f"shape of {name}"))
        count = int(np.prod(shape)) if rank else 1
        data = np.frombuffer(reader.take(8 * count, f"payload of {name}"), dtype='<f8')
        state[name] = data.astype(np.float64).reshape(shape)
    return Checkpoint(descriptor=descriptor, state=state)


def save_checkpoint(checkpoint: Checkpoint, path: str) -> None:
    with open(path, 'wb') as fh:
        fh.write(encode_checkpoint(checkpoint))
    logger.info("Saved checkpoint with %d tensor(s) to %s", len(checkpoint.state), path)


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, 'rb') as fh:
            payload = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read checkpoint {path}: {exc}") from None
    return decode_checkpoint(payload, path)


__all__ = ["Checkpoint", "encode_checkpoint", "decode_checkpoint", "save_checkpoint", "load_checkpoint", "MAGIC", "VERSION"]
