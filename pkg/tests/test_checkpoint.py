import struct

import numpy as np
import pytest

from rgi import checkpoint
from rgi.encoder import EncoderConfig, ModelParams, init_params
from rgi.errors import CheckpointError


def test_round_trip(tmp_path):
    p = init_params(EncoderConfig(5, 7, 4), seed=1)
    p.save(tmp_path / "c.rgi")
    q = ModelParams.load(tmp_path / "c.rgi")
    assert list(q) == list(p)
    assert all(q[k].tobytes() == p[k].tobytes() for k in p)


def test_layout():
    buf = checkpoint.dumps({"ab": np.array([[1.0, 2.0]])})
    assert buf[:4] == b"RGI1"
    assert struct.unpack_from("<I", buf, 4) == (1,)
    assert struct.unpack_from("<I", buf, 8) == (2,)
    assert buf[12:14] == b"ab"
    assert struct.unpack_from("<II", buf, 14) == (1, 2)
    assert struct.unpack_from("<2d", buf, 22) == (1.0, 2.0)
    assert len(buf) == 38


def test_bad_magic():
    buf = bytearray(checkpoint.dumps({"w": np.eye(2)}))
    buf[0:4] = b"XXXX"
    with pytest.raises(CheckpointError, match="bad checkpoint header"):
        checkpoint.loads(bytes(buf))


def test_truncated():
    buf = checkpoint.dumps({"w": np.eye(3)})
    with pytest.raises(CheckpointError):
        checkpoint.loads(buf[:-8])
