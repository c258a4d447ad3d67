import numpy as np
import pytest

from zominimax import RngStream


def test_same_address_same_draws():
    a = RngStream(42).child(3, 1).generator().standard_normal(8)
    b = RngStream(42).child(3, 1).generator().standard_normal(8)
    assert np.array_equal(a, b)


def test_child_paths_differ():
    base = RngStream(42)
    a = base.child(0, 0).generator().standard_normal(8)
    b = base.child(0, 1).generator().standard_normal(8)
    c = base.child(1, 0).generator().standard_normal(8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_seed_changes_stream():
    a = RngStream(1).child(5).generator().standard_normal(4)
    b = RngStream(2).child(5).generator().standard_normal(4)
    assert not np.array_equal(a, b)


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        RngStream(-1)


def test_child_is_pure():
    s = RngStream(7, (1,))
    assert s.child(2).path == (1, 2)
    assert s.path == (1,)
