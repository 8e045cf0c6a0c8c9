import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towerlab.tails import TailHistogram


def test_from_values_survivors():
    h = TailHistogram.from_values([1, 2, 2, 5, 9], cap=6)
    assert h.total == 5
    assert h.survivors[0] == 5
    assert h.survivors[1] == 5      # all values >= 1
    assert h.survivors[2] == 4
    assert h.survivors[3] == 2      # {5, 9}
    assert h.survivors[6] == 1      # {9}, top-coded but still a survivor


def test_single_sample():
    h = TailHistogram.from_values([3], cap=10)
    assert h.total == 1
    assert h.survivors[3] == 1
    assert h.survivors[4] == 0


def test_rejects_nonpositive():
    with pytest.raises(ValueError):
        TailHistogram.from_values([0, 1], cap=4)


def test_merge_matches_pooled():
    a = TailHistogram.from_values([1, 4, 4], cap=5, censored=1)
    b = TailHistogram.from_values([2, 7], cap=5)
    ab = a + b
    pooled = TailHistogram.from_values([1, 4, 4, 2, 7], cap=5, censored=1)
    assert np.array_equal(ab.survivors, pooled.survivors)
    assert ab.total == pooled.total
    assert ab.censored == 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=30), min_size=1, max_size=60),
       st.lists(st.integers(min_value=1, max_value=30), min_size=1, max_size=60),
       st.lists(st.integers(min_value=1, max_value=30), min_size=1, max_size=60))
def test_merge_associative_order_independent(xs, ys, zs):
    cap = 20
    hx = TailHistogram.from_values(xs, cap)
    hy = TailHistogram.from_values(ys, cap)
    hz = TailHistogram.from_values(zs, cap)
    left = (hx + hy) + hz
    right = hx + (hy + hz)
    swapped = hz + (hx + hy)
    assert np.array_equal(left.survivors, right.survivors)
    assert np.array_equal(left.survivors, swapped.survivors)


def test_value_counts_roundtrip():
    vals = [1, 1, 2, 3, 3, 3, 8]
    h = TailHistogram.from_values(vals, cap=6)
    counts = h.value_counts()  # values 1..5
    assert counts.tolist() == [2, 1, 3, 0, 0]
    assert h.survivors[6] == 1  # the 8 sits in the tail bucket


def test_csv_output(tmp_path):
    h = TailHistogram.from_values([1, 2, 2], cap=3)
    p = tmp_path / "t.csv"
    h.write_csv(p, comment="waiting-time survival")
    text = p.read_text()
    assert text.startswith("# waiting-time survival\n")
    assert "n,survivors,total,censored" in text
    assert text.count("\n") == 5  # comment + header + 3 rows
