import numpy as np
import pytest

from ntkgauss.rng import stream


def test_same_labels_same_stream():
    assert stream(3, 1, "a").random(5).tobytes() == stream(3, 1, "a").random(5).tobytes()


def test_labels_separate_streams():
    draws = {stream(3, *k).random() for k in [(), (0,), (1,), ("a",), (0, 1), (1, 0)]}
    assert len(draws) == 6
    assert stream(3).random() != stream(4).random()


def test_order_independence():
    a = [stream(0, r).standard_normal(3) for r in range(5)]
    b = [stream(0, r).standard_normal(3) for r in reversed(range(5))][::-1]
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a, b))


def test_bad_label():
    with pytest.raises(TypeError):
        stream(0, 1.5)


def test_large_seed_wraps():
    assert stream(2**64 + 5).random() == stream(5).random()
    assert isinstance(stream(-1), np.random.Generator)
