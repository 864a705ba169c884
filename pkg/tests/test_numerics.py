import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from plflab.exceptions import DegenerateVectorError, EmptyBatchError, InvalidInputError
from plflab.numerics import argmax_class, batch_max_confidence, normalize_sum, softmax_scaled

logit_vectors = arrays(np.float64, st.integers(2, 12),
                       elements=st.floats(-50, 50, allow_nan=False))


@pytest.mark.parametrize("logits,beta,expected", [
    ([0.0, 0.0], 1.0, [0.5, 0.5]),
    ([1.0, 1.0, 1.0], 7.0, [1 / 3] * 3),
    ([np.log(2.0), 0.0], 1.0, [2 / 3, 1 / 3]),
])
def test_softmax_examples(logits, beta, expected):
    np.testing.assert_allclose(softmax_scaled(logits, beta), expected, atol=1e-15)


def test_softmax_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        softmax_scaled([0.0, np.inf])
    with pytest.raises(InvalidInputError):
        softmax_scaled([0.0, np.nan])


def test_softmax_huge_logits_stay_finite():
    p = softmax_scaled([1000.0, 0.0, -1000.0], 1.0)
    assert np.all(np.isfinite(p))
    assert p[0] == 1.0


@settings(max_examples=200)
@given(logit_vectors, st.floats(1e-6, 1e3))
def test_softmax_sums_to_one(l, beta):
    p = softmax_scaled(l, beta)
    assert abs(p.sum() - 1.0) < 1e-9
    assert np.all(p >= 0)


@settings(max_examples=200)
@given(logit_vectors, st.floats(-100, 100))
def test_softmax_shift_invariant(l, shift):
    np.testing.assert_allclose(softmax_scaled(l + shift), softmax_scaled(l), atol=1e-12, rtol=0)


@settings(max_examples=200)
@given(arrays(np.float64, st.integers(2, 12), elements=st.floats(-50, 50), unique=True),
       st.floats(1e-3, 1e3))
def test_softmax_preserves_argmax(l, beta):
    p = softmax_scaled(l, beta)
    # distinct logits can still saturate to identical probabilities
    if np.sum(p == p.max()) == 1:
        assert argmax_class(p) == np.argmax(l)


@pytest.mark.parametrize("p,expected", [
    ([0.1, 0.7, 0.2], 1),
    ([0.5, 0.5], 0),
    ([1 / 3, 1 / 3, 1 / 3], 0),
])
def test_argmax_tie_break(p, expected):
    assert argmax_class(p) == expected


def test_argmax_batch():
    np.testing.assert_array_equal(argmax_class([[0.2, 0.8], [0.5, 0.5]]), [1, 0])


def test_batch_max_confidence_examples():
    assert batch_max_confidence([[0.8, 0.2], [0.6, 0.4]]) == pytest.approx(0.7, abs=1e-15)
    assert batch_max_confidence(np.full((5, 4), 0.25)) == 0.25
    assert batch_max_confidence([[1.0, 0.0]]) == 1.0
    with pytest.raises(EmptyBatchError):
        batch_max_confidence(np.zeros((0, 3)))


@settings(max_examples=100)
@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(2, 8)),
              elements=st.floats(-20, 20)))
def test_batch_max_confidence_bounds(logits):
    p = softmax_scaled(logits)
    c = batch_max_confidence(p)
    assert 1 / p.shape[1] - 1e-12 <= c <= 1.0


def test_normalize_sum():
    np.testing.assert_allclose(normalize_sum([1, 1, 2]), [0.25, 0.25, 0.5])
    np.testing.assert_allclose(normalize_sum([5]), [1.0])
    np.testing.assert_allclose(normalize_sum([0, 3]), [0.0, 1.0])
    with pytest.raises(DegenerateVectorError):
        normalize_sum([0.0, 0.0])
