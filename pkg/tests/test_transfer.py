from fractions import Fraction
import itertools
import numpy as np
import pytest
from treemg import transfer
from treemg.exceptions import ContractError
from .libtest import with_dims


def test_weight_fractions_1d():
    assert transfer.weight_fractions((0,)) == (Fraction(1), Fraction(0))
    assert transfer.weight_fractions((1,)) == (Fraction(2, 3), Fraction(1, 3))
    assert transfer.weight_fractions((2,)) == (Fraction(1, 3), Fraction(2, 3))
    assert transfer.weight_fractions((3,)) == (Fraction(0), Fraction(1))


def test_weight_fractions_2d():
    assert transfer.weight_fractions((1, 1)) == (Fraction(4, 9), Fraction(2, 9), Fraction(2, 9), Fraction(1, 9))
    assert transfer.weight_fractions((2, 1)) == (Fraction(2, 9), Fraction(4, 9), Fraction(1, 9), Fraction(2, 9))


@with_dims(1, 2, 3, 4)
def test_weights_partition_of_unity(p):
    for thirds in itertools.product(range(4), repeat=p):
        assert sum(transfer.weight_fractions(thirds)) == 1
        assert transfer.prolongation_weights(thirds).sum() == pytest.approx(1.0)


@with_dims(1, 2, 3)
def test_prolong_reproduces_linear_functions(p):
    rng = np.random.default_rng(7)
    slope = rng.uniform(-1, 1, p)
    corners = np.array([sum(slope[d] * ((k >> d) & 1) for d in range(p)) for k in range(2**p)])
    for thirds in itertools.product(range(4), repeat=p):
        expected = sum(slope[d] * thirds[d] / 3 for d in range(p))
        assert transfer.prolong(corners, thirds) == pytest.approx(expected)


def test_prolong_channels():
    corners = np.array([[0.0, 1.0], [3.0, 1.0]])
    assert np.allclose(transfer.prolong(corners, (1,)), [1.0, 1.0])


def test_restrict_is_transposed_prolong():
    rng = np.random.default_rng(1)
    thirds = (1, 2)
    coarse = rng.uniform(size=4)
    fine = 0.7
    acc = [np.zeros(1) for _ in range(4)]
    transfer.restrict_accumulate(acc, thirds, np.array([fine]))
    restricted = np.array([a[0] for a in acc])
    assert restricted @ coarse == pytest.approx(fine * transfer.prolong(coarse, thirds))


def test_to_thirds():
    assert transfer.to_thirds((0, Fraction(1, 3), 2 / 3, 1)) == (0, 1, 2, 3)
    with pytest.raises(ContractError) as e_info:
        transfer.to_thirds((0.5,))
    assert str(e_info.value) == "relative position 0.5 is not a multiple of 1/3 in [0, 1]"
    with pytest.raises(ContractError):
        transfer.to_thirds((4 / 3,))


def test_invalid_thirds():
    with pytest.raises(ContractError) as e_info:
        transfer.weight_fractions((4,))
    assert str(e_info.value) == "relative position component must be in thirds 0..3, got 4"


def test_coinciding_corner():
    assert transfer.coinciding_corner((0, 0)) == 0
    assert transfer.coinciding_corner((3, 0)) == 1
    assert transfer.coinciding_corner((3, 3)) == 3
    assert transfer.coinciding_corner((1, 3)) is None


def test_inject():
    u = np.array([1 + 2j, 3j])
    injected = transfer.inject(u, (3, 9))
    assert np.array_equal(injected, u)
    assert injected is not u
    with pytest.raises(ContractError) as e_info:
        transfer.inject(u, (3, 4))
    assert str(e_info.value) == "vertex (3, 4) does not coincide with a coarse vertex"


def test_hierarchical_surplus():
    corners = np.array([1.0, 4.0])
    assert transfer.hierarchical_surplus(np.array(2.0), corners, (1,)) == pytest.approx(0.0)
    assert transfer.hierarchical_surplus(np.array(3.0), corners, (2,)) == pytest.approx(0.0)
    assert transfer.hierarchical_surplus(np.array(5.0), corners, (3,)) == pytest.approx(1.0)
