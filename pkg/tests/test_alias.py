import numpy as np
import pytest
from scipy import stats

from subedge.alias import build_alias, sample_alias


def test_normalization_example():
    t = build_alias([1, 1, 2])
    assert np.allclose(t.encoded_probabilities(), [0.25, 0.25, 0.5], rtol=0, atol=1e-15)


def test_singleton():
    t = build_alias([5])
    assert t.encoded_probabilities().tolist() == [1.0]
    assert sample_alias(t, np.random.default_rng(0)) == 0


def test_zero_weight_item_never_sampled():
    t = build_alias([0, 3])
    assert t.encoded_probabilities().tolist() == [0.0, 1.0]
    draws = t.sample(np.random.default_rng(1), 100_000)
    assert (draws == 1).all()
    t = build_alias([1, 0])
    assert (t.sample(np.random.default_rng(2), 100_000) == 0).all()


def test_frequencies_within_three_sigma():
    t = build_alias([1, 1, 2])
    draws = 1_000_000
    counts = np.bincount(t.sample(np.random.default_rng(5), draws), minlength=3)
    p = t.encoded_probabilities()
    z = (counts - draws * p) / np.sqrt(draws * p * (1 - p))
    assert np.abs(z).max() < 3


def test_fixed_seed_reproducible():
    t = build_alias([3, 1, 4, 1, 5])
    a = t.sample(np.random.default_rng(9), 1000)
    b = t.sample(np.random.default_rng(9), 1000)
    assert np.array_equal(a, b)


def test_custom_items_returned():
    t = build_alias([1, 2], items=np.array([10, 20]))
    assert set(t.sample(np.random.default_rng(0), 1000).tolist()) <= {10, 20}


@pytest.mark.parametrize("weights", [[], [0, 0], [1, -1], [[1, 2]], [1.0, float("nan")], [1.0, float("inf")]])
def test_invalid_weights(weights):
    with pytest.raises(ValueError):
        build_alias(weights)


def test_non_numeric_weights_rejected():
    with pytest.raises(TypeError):
        build_alias(np.array(["a", "b"]))


def test_float_weights_exact():
    w = np.array([0.1, 0.2, 0.3, 1e-300, 7.5])
    t = build_alias(w)
    ref = w / w.sum()
    assert np.allclose(t.encoded_probabilities(), ref, rtol=2**-40, atol=0)


def test_huge_integer_weights_use_exact_path():
    w = np.array([2**61, 3, 2**60], dtype=np.int64)
    t = build_alias(w)
    ref = np.array([float(x) / float(sum(map(int, w))) for x in w])
    assert np.allclose(t.encoded_probabilities(), ref, rtol=2**-40, atol=0)


def test_chi_square_on_random_vectors():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        size = int(rng.integers(1, 65))
        w = rng.random(size) * rng.integers(1, 100)
        w[rng.random(size) < 0.2] = 0.0
        if not (w > 0).any():
            w[0] = 1.0
        t = build_alias(w)
        counts = np.bincount(t.sample(rng, 1_000_000), minlength=size)
        p = w / w.sum()
        assert (counts[p == 0] == 0).all()
        assert stats.chisquare(counts[p > 0], p[p > 0] * 1_000_000).pvalue > 0.001


def test_alias_sampling_uses_no_oracle():
    # the table holds no graph reference; sampling only consumes the given rng
    t = build_alias([1, 2, 3])
    assert not any(hasattr(t, a) for a in ("oracle", "graph"))
