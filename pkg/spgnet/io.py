# Copyright 2026 The spgnet developers.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

# http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Binary formats: SPGT tensors, checkpoints, binary PPM/PGM images.

SPGT record: magic ``SPGT``, u32 version, u32 rank, rank x u32 dims, little-endian float32 values, row-major.
A checkpoint is a sequence of (u32 name length, utf-8 name, SPGT record) in name order.
"""

import contextlib
import logging
import os
import struct

import numpy as np

from .exceptions import FormatError


LOGGER = logging.getLogger(__name__)


MAGIC = b"SPGT"
VERSION = 1
_U32 = struct.Struct("<I")
_FLOAT = np.dtype("<f4")


@contextlib.contextmanager
def atomic_open(path, mode="wb"):
    """Write to a temporary sibling file and rename it over ``path`` on success."""
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    temporary = "%s.tmp-%i" % (path, os.getpid())
    try:
        with open(temporary, mode) as handle:
            yield handle
        os.replace(temporary, path)
    finally:
        if os.path.exists(temporary):
            os.remove(temporary)


def _read_exact(handle, size, what):
    data = handle.read(size)
    if len(data) != size:
        raise FormatError("truncated file while reading %s" % what)
    return data


def _read_u32(handle, what):
    return _U32.unpack(_read_exact(handle, 4, what))[0]


def write_tensor(handle, array):
    array = np.asarray(array)
    handle.write(MAGIC)
    handle.write(_U32.pack(VERSION))
    handle.write(_U32.pack(array.ndim))
    for dim in array.shape:
        handle.write(_U32.pack(dim))
    handle.write(np.ascontiguousarray(array, dtype=_FLOAT).tobytes())


def read_tensor(handle, what="tensor"):
    """
    Read one SPGT record.

    Raises
    ------
    FormatError
        On a wrong magic, unsupported version or truncated data.
    """
    magic = _read_exact(handle, 4, what)
    if magic != MAGIC:
        raise FormatError("bad magic %r in %s" % (magic, what))
    version = _read_u32(handle, what)
    if version != VERSION:
        raise FormatError("unsupported SPGT version %i in %s" % (version, what))
    rank = _read_u32(handle, what)
    dims = tuple(_read_u32(handle, what) for _ in range(rank))
    count = int(np.prod(dims)) if dims else 1
    values = np.frombuffer(_read_exact(handle, count * 4, what), dtype=_FLOAT)
    return values.reshape(dims).astype(np.float32)


def save_tensor(path, array):
    with atomic_open(path) as handle:
        write_tensor(handle, array)


def load_tensor(path):
    with open(path, "rb") as handle:
        return read_tensor(handle, path)


def save_checkpoint(store, path):
    """Serialize every parameter and buffer of a ParamStore, in name order."""
    with atomic_open(path) as handle:
        for name, tensor in store.state():
            encoded = name.encode("utf-8")
            handle.write(_U32.pack(len(encoded)))
            handle.write(encoded)
            write_tensor(handle, tensor.data)
    LOGGER.info("Wrote checkpoint %s (%i tensors)", path, len(store.state()))


def read_checkpoint(path):
    records = {}
    with open(path, "rb") as handle:
        while True:
            head = handle.read(4)
            if not head:
                break
            if len(head) != 4:
                raise FormatError("truncated checkpoint %s" % path)
            length = _U32.unpack(head)[0]
            name = _read_exact(handle, length, "tensor name").decode("utf-8")
            records[name] = read_tensor(handle, name)
    return records


def load_checkpoint(store, path):
    """
    Load a checkpoint into an existing ParamStore, in place.

    Raises
    ------
    FormatError
        If the file is truncated or a tensor is missing, unexpected or has mismatched dims.
    """
    records = read_checkpoint(path)
    expected = dict(store.state())
    missing = sorted(set(expected) - set(records))
    if missing:
        raise FormatError("checkpoint %s lacks tensor %s" % (path, missing[0]))
    extra = sorted(set(records) - set(expected))
    if extra:
        raise FormatError("checkpoint %s has unexpected tensor %s" % (path, extra[0]))
    for name, tensor in expected.items():
        if records[name].shape != tensor.shape:
            raise FormatError("tensor %s has dims %s in %s, model expects %s"
                              % (name, records[name].shape, path, tensor.shape))
    for name, tensor in expected.items():
        tensor.data[...] = records[name]
    LOGGER.info("Loaded checkpoint %s", path)


# Netpbm


def _read_netpbm(path, magic):
    with open(path, "rb") as handle:
        data = handle.read()
    tokens = []
    position = 0
    while len(tokens) < 4:
        while position < len(data) and data[position:position + 1].isspace():
            position += 1
        if data[position:position + 1] == b"#":
            while position < len(data) and data[position:position + 1] not in (b"\n", b"\r"):
                position += 1
            continue
        start = position
        while position < len(data) and not data[position:position + 1].isspace():
            position += 1
        if start == position:
            raise FormatError("truncated header in %s" % path)
        tokens.append(data[start:position])
    if tokens[0] != magic:
        raise FormatError("%s is not a %s file" % (path, magic.decode()))
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("bad header in %s" % path)
    if maxval != 255:
        raise FormatError("%s: only maxval 255 is supported" % path)
    return data[position + 1:], width, height


def write_ppm(path, image):
    """Write a (3, H, W) or (1, 3, H, W) image in [0, 1] as binary PPM."""
    image = np.asarray(image)
    if image.ndim == 4:
        image = image[0]
    pixels = np.clip(np.rint(image * 255), 0, 255).astype(np.uint8).transpose(1, 2, 0)
    with atomic_open(path) as handle:
        handle.write(b"P6\n%i %i\n255\n" % (pixels.shape[1], pixels.shape[0]))
        handle.write(pixels.tobytes())


def read_ppm(path):
    """Read a binary PPM as a float32 array (1, 3, H, W) in [0, 1]."""
    payload, width, height = _read_netpbm(path, b"P6")
    if len(payload) < width * height * 3:
        raise FormatError("truncated pixel data in %s" % path)
    pixels = np.frombuffer(payload[:width * height * 3], dtype=np.uint8).reshape(height, width, 3)
    return (pixels.transpose(2, 0, 1)[None] / 255.0).astype(np.float32)


def write_pgm(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with atomic_open(path) as handle:
        handle.write(b"P5\n%i %i\n255\n" % (labels.shape[1], labels.shape[0]))
        handle.write(labels.tobytes())


def read_pgm(path):
    """Read a binary PGM as a uint8 array (H, W)."""
    payload, width, height = _read_netpbm(path, b"P5")
    if len(payload) < width * height:
        raise FormatError("truncated pixel data in %s" % path)
    return np.frombuffer(payload[:width * height], dtype=np.uint8).reshape(height, width).copy()
