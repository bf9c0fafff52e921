import numpy as np

from stepshap.rng import derive_seed, philox, substream


def test_philox_reproducible():
    assert philox(7).random(4).tolist() == philox(7).random(4).tolist()


def test_substreams_independent_and_stable():
    a = substream(0, "data").random(3)
    b = substream(0, "permutations").random(3)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, substream(0, "data").random(3))


def test_derive_seed_sensitive_to_path_and_root():
    assert derive_seed(0, "x") != derive_seed(1, "x")
    assert derive_seed(0, "x") != derive_seed(0, "y")
    assert derive_seed(0, "perm", 3) != derive_seed(0, "perm", 4)
    assert derive_seed(5, "perm", "a") == derive_seed(5, "perm", "a")
