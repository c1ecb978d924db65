"""
Binary checkpoint container.

Layout (little-endian):
    magic b'NTCK', format version u16, parameter count u32
    per parameter: name length u16, utf-8 name, ndim u8, dims u32 * ndim,
                   raw float64 values
    optimizer: step u64, then per parameter (same order) the Adam first
               and second moment blocks as raw float64 values
"""
import json
import logging
import struct
from pathlib import Path

import numpy as np

from nettwin.exceptions import CheckpointFormatError
from .params import ParamStore

logger = logging.getLogger(__name__)

MAGIC = b'NTCK'
FORMAT_VERSION = 1


def _raw(array):
    return np.ascontiguousarray(array, dtype='<f8').tobytes()


def checkpoint_bytes(params):
    chunks = [MAGIC, struct.pack('<HI', FORMAT_VERSION, len(params))]
    for name, tensor in params.items():
        encoded = name.encode('utf-8')
        chunks.append(struct.pack('<H', len(encoded)) + encoded)
        chunks.append(struct.pack('<B', tensor.ndim) + struct.pack(f'<{tensor.ndim}I', *tensor.shape))
        chunks.append(_raw(tensor.values))
    chunks.append(struct.pack('<Q', params.step))
    for name in params:
        chunks.append(_raw(params.m[name]))
        chunks.append(_raw(params.v[name]))
    return b''.join(chunks)


class _Reader:
    def __init__(self, payload):
        self.payload = payload
        self.offset = 0

    def take(self, size):
        if self.offset + size > len(self.payload):
            raise CheckpointFormatError("checkpoint is truncated")
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, shape):
        count = int(np.prod(shape)) if shape else 1
        return np.frombuffer(self.take(8 * count), dtype='<f8').astype(np.float64).reshape(shape)


def params_from_bytes(payload):
    reader = _Reader(payload)
    if reader.take(4) != MAGIC:
        raise CheckpointFormatError("not a nettwin checkpoint")
    version, count = reader.unpack('<HI')
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    params = ParamStore()
    shapes = []
    for _ in range(count):
        (name_length,) = reader.unpack('<H')
        name = reader.take(name_length).decode('utf-8')
        (ndim,) = reader.unpack('<B')
        shape = reader.unpack(f'<{ndim}I') if ndim else ()
        params.add(name, reader.array(shape))
        shapes.append((name, shape))
    (params.step,) = reader.unpack('<Q')
    for name, shape in shapes:
        params.m[name] = reader.array(shape)
        params.v[name] = reader.array(shape)
    if reader.offset != len(payload):
        raise CheckpointFormatError("trailing bytes after optimizer state")
    return params


def write_checkpoint(path, params, manifest=None):
    """Write the binary checkpoint and, if given, its JSON manifest next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(params))
    if manifest is not None:
        manifest_path(path).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    logger.info(f"Wrote checkpoint {path} ({params.num_parameters()} parameters)")
    return path


def read_checkpoint(path):
    return params_from_bytes(Path(path).read_bytes())


def manifest_path(checkpoint):
    return Path(checkpoint).with_suffix('.json')


def read_manifest(checkpoint):
    path = manifest_path(checkpoint)
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except (OSError, ValueError) as e:
        raise CheckpointFormatError(f"cannot read manifest {path}: {e}")
