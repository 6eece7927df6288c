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

import os
import struct

import numpy as np
import pytest

from spgnet.exceptions import FormatError
from spgnet.io import atomic_open, load_checkpoint, load_tensor, read_checkpoint, read_pgm, read_ppm, \
    save_checkpoint, save_tensor, write_pgm, write_ppm
from spgnet.tensor import ParamStore


def test_tensor_file_layout(tmpdir):
    path = str(tmpdir.join("x.spgt"))
    save_tensor(path, np.arange(6, dtype=np.float32).reshape(2, 3))
    with open(path, "rb") as handle:
        raw = handle.read()
    assert raw[:4] == b"SPGT"
    assert struct.unpack("<IIII", raw[4:20]) == (1, 2, 2, 3)
    assert len(raw) == 20 + 6 * 4
    np.testing.assert_array_equal(load_tensor(path), np.arange(6).reshape(2, 3))


def test_bad_magic(tmpdir):
    path = tmpdir.join("bad.spgt")
    path.write_binary(b"NOPE" + b"\x00" * 16)
    with pytest.raises(FormatError):
        load_tensor(str(path))


def test_truncated_tensor(tmpdir):
    path = str(tmpdir.join("x.spgt"))
    save_tensor(path, np.ones((4, 4), dtype=np.float32))
    with open(path, "rb") as handle:
        raw = handle.read()
    with open(path, "wb") as handle:
        handle.write(raw[:-3])
    with pytest.raises(FormatError) as error:
        load_tensor(path)
    assert "truncated" in str(error.value)


def test_atomic_open_leaves_nothing_on_failure(tmpdir):
    path = str(tmpdir.join("sub", "file.bin"))
    with pytest.raises(RuntimeError):
        with atomic_open(path) as handle:
            handle.write(b"partial")
            raise RuntimeError("interrupted")
    assert not os.path.exists(path)
    assert os.listdir(str(tmpdir.join("sub"))) == []


def _store():
    store = ParamStore()
    store.add("conv.weight", np.arange(8).reshape(2, 1, 2, 2))
    store.add("conv.bias", [0.5, -0.5])
    store.add_buffer("bn.running_var", np.ones(2))
    return store


def test_checkpoint_restores_params_and_buffers(tmpdir):
    path = str(tmpdir.join("model.ckpt"))
    source = _store()
    save_checkpoint(source, path)
    assert sorted(read_checkpoint(path)) == ["bn.running_var", "conv.bias", "conv.weight"]

    target = _store()
    for _, tensor in target.state():
        tensor.data[...] = 0
    load_checkpoint(target, path)
    for (name, expected), (_, loaded) in zip(source.state(), target.state()):
        np.testing.assert_array_equal(loaded.data, expected.data, err_msg=name)


def test_checkpoint_is_deterministic(tmpdir):
    first, second = str(tmpdir.join("a.ckpt")), str(tmpdir.join("b.ckpt"))
    save_checkpoint(_store(), first)
    save_checkpoint(_store(), second)
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()


def test_checkpoint_names_missing_tensor(tmpdir):
    path = str(tmpdir.join("model.ckpt"))
    save_checkpoint(_store(), path)
    bigger = _store()
    bigger.add("head.weight", np.zeros(3))
    with pytest.raises(FormatError) as error:
        load_checkpoint(bigger, path)
    assert "head.weight" in str(error.value)


def test_checkpoint_names_mismatched_dims(tmpdir):
    path = str(tmpdir.join("model.ckpt"))
    save_checkpoint(_store(), path)
    other = ParamStore()
    other.add("conv.weight", np.zeros((2, 1, 3, 3)))
    other.add("conv.bias", np.zeros(2))
    other.add_buffer("bn.running_var", np.ones(2))
    with pytest.raises(FormatError) as error:
        load_checkpoint(other, path)
    assert "conv.weight" in str(error.value)


def test_ppm_quantizes_to_bytes(tmpdir):
    path = str(tmpdir.join("image.ppm"))
    image = np.zeros((3, 2, 4))
    image[0] = 1.0
    image[1, 1] = 0.5
    write_ppm(path, image)
    loaded = read_ppm(path)
    assert loaded.shape == (1, 3, 2, 4)
    assert loaded.dtype == np.float32
    np.testing.assert_allclose(loaded[0], np.rint(image * 255) / 255, atol=1e-7)


def test_pgm_keeps_labels(tmpdir):
    path = str(tmpdir.join("labels.pgm"))
    labels = np.arange(12, dtype=np.uint8).reshape(3, 4)
    write_pgm(path, labels)
    np.testing.assert_array_equal(read_pgm(path), labels)


def test_ppm_rejects_pgm(tmpdir):
    path = str(tmpdir.join("labels.pgm"))
    write_pgm(path, np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(FormatError):
        read_ppm(path)
