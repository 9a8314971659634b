import numpy as np
import pytest

from epiverify import RngStream


def test_partition_invariance():
    stream = RngStream(1234, 5)
    full = stream.uniforms(0, 1000, 3)
    for split in (1, 137, 500, 999):
        head = stream.uniforms(0, split, 3)
        tail = stream.uniforms(split, 1000 - split, 3)
        np.testing.assert_array_equal(full, np.vstack([head, tail]))


def test_repeatability_and_stream_separation():
    a = RngStream(99, 0).uniforms(0, 256, 2)
    b = RngStream(99, 0).uniforms(0, 256, 2)
    c = RngStream(99, 1).uniforms(0, 256, 2)
    d = RngStream(100, 0).uniforms(0, 256, 2)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_open_interval():
    u = RngStream(7).uniforms(0, 200_000, 1)
    assert u.min() > 0.0
    assert u.max() < 1.0


def test_normals_are_standard():
    z = RngStream(11).normals(0, 200_000, 1)[:, 0]
    assert abs(z.mean()) < 4.0 / np.sqrt(z.size)
    assert abs(z.std() - 1.0) < 0.01


def test_width_padding_independence():
    # widths in the same 4-lane block share raw positions column by column
    w1 = RngStream(3, 2).uniforms(0, 50, 1)
    w3 = RngStream(3, 2).uniforms(0, 50, 3)
    np.testing.assert_array_equal(w1[:, 0], w3[:, 0])


def test_child_tree():
    base = RngStream(42)
    assert base.child(7).stream_id == 7
    assert base.child(7).child(3).stream_id == 7 * 65536 + 3
    with pytest.raises(ValueError):
        base.child(65536)
    with pytest.raises(ValueError):
        base.child(-1)


def test_validation():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)
    with pytest.raises(TypeError):
        RngStream(1.5)
    with pytest.raises(ValueError):
        RngStream(0).uniforms(0, 10, 0)
