import numpy as np
import pytest

from mont.rng import rng_stream


def test_same_seed_and_stream_reproduce():
    a = rng_stream(123, 4).random(16)
    b = rng_stream(123, 4).random(16)
    assert np.array_equal(a, b)


def test_distinct_streams_are_independent():
    base = rng_stream(123, 0).random(16)
    other = rng_stream(123, 1).random(16)
    assert not np.array_equal(base, other)


def test_distinct_seeds_differ():
    assert not np.array_equal(rng_stream(1).random(8), rng_stream(2).random(8))


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        rng_stream(-1)
