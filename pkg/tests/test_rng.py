import numpy as np
import pytest

from unbiased_cso.rng import StreamRegistry, generator, stream_id


def test_same_key_same_stream():
    a = generator(7, "replicate", 3).random(5)
    b = generator(7, "replicate", 3).random(5)
    np.testing.assert_array_equal(a, b)


def test_distinct_keys_distinct_streams():
    a = generator(7, "replicate", 3).random(5)
    b = generator(7, "replicate", 4).random(5)
    c = generator(8, "replicate", 3).random(5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_registry_debug_rejects_reuse():
    reg = StreamRegistry(1, debug=True)
    reg.generator("estimate", 0, 1)
    reg.generator("estimate", 0, 2)
    assert reg.issued == 2
    with pytest.raises(RuntimeError, match="requested twice"):
        reg.generator("estimate", 0, 1)


def test_registry_without_debug_allows_reuse():
    reg = StreamRegistry(1)
    x = reg.generator("a").random()
    assert reg.generator("a").random() == x


def test_negative_key_rejected():
    with pytest.raises(ValueError):
        generator(1, -3)


def test_stream_id_identifies_seed_sequence():
    g = generator(5, "x")
    entropy, key = stream_id(g)
    assert entropy == 5 and len(key) == 1


def test_generator_from_seed_sequence_extends_key():
    seq = np.random.SeedSequence(3, spawn_key=(1,))
    g = generator(seq, 2)
    assert stream_id(g) == (3, (1, 2))
