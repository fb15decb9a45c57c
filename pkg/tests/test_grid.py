import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stationary_kernel.grid import InvalidInterval, NonIntegralMesh, build_partition, locate_cell


def test_table_configurations():
    assert build_partition(-8, 8, 0.05).q_max == 320
    assert build_partition(0, 13, 0.02).q_max == 650


def test_non_integral_mesh():
    with pytest.raises(NonIntegralMesh):
        build_partition(-1, 1, 0.3)


def test_invalid_interval():
    with pytest.raises(InvalidInterval):
        build_partition(2, 2, 0.1)
    with pytest.raises(InvalidInterval):
        build_partition(3, 1, 0.1)


def test_points_tile_exactly():
    p = build_partition(-8, 8, 0.05)
    assert p.points[0] == -8.0
    assert p.points[-1] == 8.0
    assert np.sum(np.diff(p.points)) == pytest.approx(16.0, abs=0)
    assert np.all(np.diff(p.points) > 0)


def test_locate_cell_examples():
    p = build_partition(-8, 8, 0.05)
    assert locate_cell(p, -8.0) == 0
    assert locate_cell(p, 8.0) is None
    assert locate_cell(p, -8.0 - 1e-12) is None
    p2 = build_partition(0, 2, 0.5)
    assert locate_cell(p2, 0.75) == 1


@given(
    k_minus=st.integers(-10, 5),
    width=st.integers(1, 20),
    q=st.integers(1, 400),
)
def test_locate_cell_consistency(k_minus, width, q):
    p = build_partition(k_minus, k_minus + width, width / q)
    assert p.q_max == q
    for i in range(0, q, max(1, q // 7)):
        assert locate_cell(p, p.points[i]) == i
        assert locate_cell(p, float(p.points[i + 1] - 1e-12)) == i
    mids = p.midpoints
    for i in range(0, q, max(1, q // 5)):
        assert locate_cell(p, float(mids[i])) == i
