import numpy as np
import pytest

from selbias.rng import DATA, TEST, Draws, RngStream


def test_same_path_same_draws():
    a = RngStream(11, (TEST, 3, 4)).draws().raw(100)
    b = RngStream(11, (TEST, 3, 4)).draws().raw(100)
    assert np.array_equal(a, b)


def test_distinct_paths_and_seeds_differ():
    base = RngStream(11, (TEST, 3)).draws().raw(8)
    for other in (RngStream(12, (TEST, 3)), RngStream(11, (TEST, 4)), RngStream(11, (TEST, 3, 0)),
                  RngStream(11, (DATA, 3))):
        assert not np.array_equal(base, other.draws().raw(8))


def test_child_extends_path():
    s = RngStream(5, (TEST,)).child(2, 7)
    assert s.path == (TEST, 2, 7)
    with pytest.raises(ValueError):
        s.child(1)


def test_invalid_seed_rejected():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)


def test_sequential_consumption_is_concatenation():
    d = RngStream(1, (TEST,)).draws()
    x = np.concatenate([d.raw(5), d.raw(7)])
    assert np.array_equal(x, RngStream(1, (TEST,)).draws().raw(12))


class _FixedRaw:
    def __init__(self, values):
        self.values = np.array(values, dtype=np.uint64)

    def random_raw(self, n):
        return self.values[:n].copy()


def test_uniform_formula_extremes_stay_open():
    d = Draws(_FixedRaw([0, 2**64 - 1, 2**63]))
    u = d.uniform(3)
    assert u[0] == 0.5 * 2.0**-52
    assert u[1] == 1.0 - 0.5 * 2.0**-52
    assert u[2] == 0.5 + 0.5 * 2.0**-52
    assert np.all(np.isfinite(Draws(_FixedRaw([0, 2**64 - 1])).normal(2)))


def test_index_never_reaches_n():
    d = Draws(_FixedRaw([2**64 - 1] * 4))
    assert np.all(d.index(np.array([1, 2, 3, 7]), 4) == [0, 1, 2, 6])


def test_index_is_uniform():
    idx = RngStream(3, (TEST,)).draws().index(5, 50_000)
    counts = np.bincount(idx, minlength=5)
    se = np.sqrt(50_000 * 0.2 * 0.8)
    assert np.all(np.abs(counts - 10_000) < 5 * se)


def test_normal_moments():
    z = RngStream(4, (TEST,)).draws().normal(200_000)
    assert abs(z.mean()) < 5 / np.sqrt(z.size)
    assert abs(z.var() - 1) < 5 * np.sqrt(2 / z.size)
