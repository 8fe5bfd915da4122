import numpy as np
import pytest

from empldp import rng as _rng
from empldp.errors import DomainError
from empldp.paths import GridPath, uniform_grid


def test_gridpath_validation():
    with pytest.raises(DomainError):
        GridPath(np.array([0.0, 0.5]), np.array([1.0]))
    with pytest.raises(DomainError):
        GridPath(np.array([0.0, 0.5, 0.5]), np.zeros(3))


def test_gridpath_csv_round_trip_is_bit_exact():
    g = uniform_grid(0.9, 17)
    p = GridPath(g, np.sin(g) / 3)
    text = p.to_csv()
    assert text.startswith("t,value\n")
    back = GridPath.from_csv(text)
    assert np.array_equal(back.grid, p.grid) and np.array_equal(back.values, p.values)
    assert np.array_equal(GridPath.from_csv("# schema_version=1\n" + text).values, p.values)


def test_gridpath_csv_bad_header():
    with pytest.raises(DomainError):
        GridPath.from_csv("x,y\n0,0\n")


def test_gridpath_immutable():
    p = GridPath(uniform_grid(1.0, 3), np.zeros(3))
    with pytest.raises(ValueError):
        p.values[0] = 1.0


def test_streams_are_keyed():
    a = _rng.stream(1, 0).random(4)
    assert np.array_equal(a, _rng.stream(1, 0).random(4))
    assert not np.array_equal(a, _rng.stream(1, 1).random(4))
    assert not np.array_equal(a, _rng.stream(2, 0).random(4))


def test_blocks_cover_trials():
    bl = _rng.blocks(20_001, 8192)
    assert [b for b, _ in bl] == [0, 1, 2]
    assert sum(s for _, s in bl) == 20_001


def test_ordered_map_keeps_order():
    items = list(range(50))
    assert _rng.ordered_map(lambda x: x * x, items, workers=8) == [x * x for x in items]
