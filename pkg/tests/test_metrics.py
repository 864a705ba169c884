import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plflab.exceptions import EmptyBatchError, ShapeError
from plflab.metrics import error_rate, filter_ratio, quality


def test_filter_ratio():
    assert filter_ratio([True] * 5) == 1.0
    assert filter_ratio([False] * 5) == 0.0
    assert filter_ratio([True, True, False, True]) == 0.75
    with pytest.raises(EmptyBatchError):
        filter_ratio([])


def test_quality():
    assert quality([True, True, False], [1, 2, 0], [1, 2, 1]) == 1.0
    assert quality([True] * 4 + [False], [0, 1, 2, 3, 0], [0, 1, 2, 0, 0]) == 0.75
    assert quality([False, False], [0, 1], [0, 1]) is None
    with pytest.raises(ShapeError):
        quality([True], [0, 1], [0, 1])


def test_error_rate():
    assert error_rate([0, 1, 2], [0, 1, 2]) == 0.0
    assert error_rate([1, 2, 0], [0, 1, 2]) == 1.0
    assert error_rate([0, 1, 2, 2], [0, 1, 2, 3]) == 0.25
    with pytest.raises(ShapeError):
        error_rate([0], [0, 1])
    with pytest.raises(EmptyBatchError):
        error_rate([], [])


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 3), st.integers(0, 3)), min_size=1))
def test_quality_absent_iff_nothing_kept(rows):
    mask, pseudo, true = map(np.array, zip(*rows))
    assert (quality(mask, pseudo, true) is None) == (filter_ratio(mask) == 0.0)


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 3)), min_size=1))
def test_quality_one_when_kept_rows_are_correct(rows):
    keep, labels = map(np.array, zip(*rows))
    pseudo = labels.copy()
    # corrupt only rows that are filtered out
    pseudo[~keep] = (labels[~keep] + 1) % 4
    q = quality(keep, pseudo, labels)
    assert q is None or q == 1.0
