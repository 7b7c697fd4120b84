"""
TCNW weight container.

Layout (all integers little-endian)::

    b"TCNW" | u32 version (1) | u32 tensor count
    per tensor: u16 name length | UTF-8 name | u8 rank | u32 dim * rank
                | float32 row-major payload
    u32 CRC-32 (IEEE) of every preceding byte

Besides the parameters, two ``meta.*`` tensors carry the dilation factors and
dropout rate, which cannot be recovered from the parameter shapes.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from ..errors import ChecksumMismatch, MalformedHeader, TruncatedFile, VersionUnsupported
from .network import TcnConfig, TcnWeights, layer_shapes

MAGIC = b'TCNW'
VERSION = 1


def write_tensors(path, tensors):
    """Write an ordered mapping of name -> array as a TCNW file."""
    parts = [MAGIC, struct.pack('<II', VERSION, len(tensors))]
    for name, arr in tensors.items():
        raw = name.encode('utf-8')
        arr = np.asarray(arr, dtype='<f4', order='C')  # keeps 0-d arrays 0-d
        parts.append(struct.pack('<H', len(raw)) + raw)
        parts.append(struct.pack('<B', arr.ndim) + struct.pack(f'<{arr.ndim}I', *arr.shape))
        parts.append(arr.tobytes())
    body = b''.join(parts)
    with open(path, 'wb') as fh:
        fh.write(body + struct.pack('<I', zlib.crc32(body) & 0xFFFFFFFF))


def read_tensors(path):
    """Read a TCNW file into a dict of float32 arrays (insertion ordered)."""
    with open(path, 'rb') as fh:
        data = fh.read()
    if len(data) < 16:
        raise TruncatedFile(f'{path}: {len(data)} bytes is too short for a TCNW file')
    if data[:4] != MAGIC:
        raise MalformedHeader(f'{path}: bad magic {data[:4]!r}')
    version, = struct.unpack_from('<I', data, 4)
    if version != VERSION:
        raise VersionUnsupported(f'{path}: version {version}, only {VERSION} is supported')
    body, crc = data[:-4], struct.unpack_from('<I', data, len(data) - 4)[0]
    pos = 12
    count, = struct.unpack_from('<I', data, 8)
    tensors = {}
    try:
        for _ in range(count):
            nlen, = struct.unpack_from('<H', body, pos)
            pos += 2
            if pos + nlen > len(body):
                raise struct.error('name overruns file')
            name = body[pos:pos + nlen].decode('utf-8')
            pos += nlen
            rank, = struct.unpack_from('<B', body, pos)
            pos += 1
            shape = struct.unpack_from(f'<{rank}I', body, pos)
            pos += 4 * rank
            size = 4 * int(np.prod(shape, dtype=np.int64))
            if pos + size > len(body):
                raise struct.error('payload overruns file')
            tensors[name] = np.frombuffer(body, '<f4', int(np.prod(shape, dtype=np.int64)),
                                          pos).reshape(shape).copy()
            pos += size
    except (struct.error, UnicodeDecodeError) as exc:
        if zlib.crc32(body) & 0xFFFFFFFF != crc:
            raise ChecksumMismatch(f'{path}: CRC mismatch') from exc
        raise TruncatedFile(f'{path}: {exc}') from exc
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise ChecksumMismatch(f'{path}: CRC mismatch')
    if pos != len(body):
        raise TruncatedFile(f'{path}: {len(body) - pos} unexpected trailing bytes')
    return tensors


def save_weights(weights, path):
    tensors = dict(weights.tensors)
    tensors['meta.dilations'] = np.array(weights.cfg.dilations, dtype=np.float32)
    tensors['meta.dropout_rate'] = np.array([weights.cfg.dropout_rate], dtype=np.float32)
    write_tensors(path, tensors)


def load_weights(path):
    """Load weights written by :func:`save_weights`, rebuilding the config from shapes."""
    tensors = read_tensors(path)
    try:
        dilations = tuple(int(d) for d in tensors.pop('meta.dilations'))
        # shortest decimal that round-trips through float32, so 0.2 stays 0.2
        dropout = float(str(tensors.pop('meta.dropout_rate')[0]))
        k, bands, filters = tensors['conv0.kernel'].shape
        cfg = TcnConfig(num_bands=bands, num_layers=len(dilations), kernel_size=k,
                        num_filters=filters, dilations=dilations, dropout_rate=dropout,
                        tempo_bins=tensors['tempo.bias'].shape[0])
    except (KeyError, ValueError, IndexError) as exc:
        raise MalformedHeader(f'{path}: not a TCN weight file ({exc})') from exc
    expected = layer_shapes(cfg)
    if set(expected) != set(tensors) or any(tensors[n].shape != s for n, s in expected.items()):
        raise MalformedHeader(f'{path}: tensor shapes do not match a TCN layout')
    return TcnWeights(cfg, {n: tensors[n] for n in expected})
