import struct

import numpy as np
import pytest

from gqc import checkpoint
from gqc.exceptions import ParseError


def _arrays():
    rng = np.random.default_rng(0)
    return {"a.weights": rng.normal(size=(3, 2)), "scalar": np.array(1.5), "vec": np.arange(4.0)}


def test_roundtrip(tmp_path):
    path = tmp_path / "x.ckpt"
    checkpoint.save_arrays(path, _arrays(), {"k": [1, 2], "name": "z"})
    arrays, meta = checkpoint.load_arrays(path)
    assert list(arrays) == ["a.weights", "scalar", "vec"]
    for name, arr in _arrays().items():
        assert arrays[name].shape == arr.shape
        assert arrays[name].tobytes() == arr.tobytes()
    assert meta == {"k": [1, 2], "name": "z"}


def test_header_layout(tmp_path):
    path = tmp_path / "x.ckpt"
    checkpoint.save_arrays(path, {"v": np.array([2.0])}, {})
    raw = path.read_bytes()
    assert raw[:8] == b"GQCCKPT\x00"
    assert struct.unpack_from("<II", raw, 8) == (1, 2)
    assert raw[16:18] == b"{}"
    assert struct.unpack_from("<IH", raw, 18) == (1, 1)
    assert raw[24:25] == b"v"
    assert struct.unpack_from("<BQd", raw, 25) == (1, 1, 2.0)
    assert len(raw) == 25 + 1 + 8 + 8


def test_metadata_key_order_irrelevant(tmp_path):
    checkpoint.save_arrays(tmp_path / "a", {}, {"b": 1, "a": 2})
    checkpoint.save_arrays(tmp_path / "b", {}, {"a": 2, "b": 1})
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b"NOTACKPT" + b[8:],
        lambda b: b[:8] + struct.pack("<I", 9) + b[12:],
        lambda b: b[:-3],
        lambda b: b + b"\x00",
        lambda b: b[:10],
    ],
)
def test_corrupt_files(tmp_path, mutate):
    path = tmp_path / "x.ckpt"
    checkpoint.save_arrays(path, _arrays(), {"m": 1})
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(ParseError):
        checkpoint.load_arrays(path)
