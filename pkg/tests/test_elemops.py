import math
import numpy as np
import pytest
from treemg import elemops
from treemg.exceptions import ContractError, DimensionError
from .libtest import with_dims


def test_reference_laplace_2d():
    expected = np.array(
        [
            [4.0, -1.0, -1.0, -2.0],
            [-1.0, 4.0, -2.0, -1.0],
            [-1.0, -2.0, 4.0, -1.0],
            [-2.0, -1.0, -1.0, 4.0],
        ]
    ) / 6.0
    assert np.allclose(elemops.reference_laplace(2), expected, atol=1e-15)


def test_reference_laplace_cyclic_order():
    # the same matrix written with the corners numbered counter-clockwise
    cyclic = np.array(
        [
            [4.0, -1.0, -2.0, -1.0],
            [-1.0, 4.0, -1.0, -2.0],
            [-2.0, -1.0, 4.0, -1.0],
            [-1.0, -2.0, -1.0, 4.0],
        ]
    ) / 6.0
    order = [0, 1, 3, 2]
    assert np.allclose(elemops.reference_laplace(2)[np.ix_(order, order)], cyclic, atol=1e-15)


@with_dims(1, 2, 3, 4)
def test_reference_matrices(p):
    laplace = elemops.reference_laplace(p)
    mass = elemops.reference_mass(p)
    assert laplace.shape == (2**p, 2**p)
    assert np.allclose(laplace, laplace.T)
    assert np.allclose(mass, mass.T)
    assert np.allclose(laplace.sum(axis=1), 0.0, atol=1e-14)
    assert math.isclose(mass.sum(), 1.0)
    assert np.all(np.linalg.eigvalsh(mass) > 0.0)


def test_reference_matrices_read_only():
    with pytest.raises(ValueError):
        elemops.reference_laplace(2)[0, 0] = 1.0
    with pytest.raises(ValueError):
        elemops.reference_mass(3)[0, 0] = 1.0


def test_check_dim():
    for p in (1, 2, 3, 4):
        elemops.check_dim(p)
    with pytest.raises(DimensionError) as e_info:
        elemops.check_dim(0)
    assert str(e_info.value) == "dimension must be between 1 and 4, got 0"
    with pytest.raises(DimensionError) as e_info:
        elemops.reference_mass(5)
    assert str(e_info.value) == "dimension must be between 1 and 4, got 5"
    with pytest.raises(DimensionError):
        elemops.check_dim(True)


def test_cell_operator_scaling():
    op = elemops.cell_operator(2, 1 / 9, 0.0, 0j)
    assert op.dim == 2
    assert op.h_elem == pytest.approx(1 / 9)
    # the Laplacian part does not scale with h in two dimensions
    assert np.allclose(op.matrix, elemops.reference_laplace(2))

    op = elemops.cell_operator(3, 1 / 3, 0.0, 0j)
    assert np.allclose(op.matrix, elemops.reference_laplace(3) / 3)


def test_cell_operator_complex_symmetric():
    op = elemops.cell_operator(2, 1 / 27, math.radians(30), 45.0**2)
    assert np.iscomplexobj(op.matrix)
    assert np.allclose(op.matrix, op.matrix.T)
    assert not np.allclose(op.matrix, op.matrix.conj().T)
    assert op.h_elem == pytest.approx(complex(math.cos(math.radians(30)), math.sin(math.radians(30))) / 27)


def test_cell_operator_invalid():
    with pytest.raises(ContractError) as e_info:
        elemops.cell_operator(2, 0.0, 0.0, 0j)
    assert str(e_info.value) == "mesh width must be positive, got 0.0"
    with pytest.raises(ContractError):
        elemops.cell_operator(2, 1.0, math.pi / 2, 0j)
    with pytest.raises(ContractError):
        elemops.cell_operator(2, 1.0, -0.1, 0j)


def test_interior_stencil_2d():
    stencil = elemops.assembled_interior_stencil(2, 1 / 9, 0.0, 0j)
    expected = np.full(9, -1.0 / 3.0)
    expected[4] = 8.0 / 3.0
    assert np.allclose(stencil, expected)


def test_interior_stencil_1d_shift():
    h, phi = 1 / 27, 100.0
    stencil = elemops.assembled_interior_stencil(1, h, 0.0, phi)
    assert stencil[1] == pytest.approx(2 / h - phi * h * 4 / 6)
    assert stencil[0] == pytest.approx(-1 / h - phi * h / 6)
    assert stencil[2] == pytest.approx(stencil[0])


@with_dims(1, 2, 3)
def test_stencil_rotation(p):
    theta = math.radians(20)
    rotated = elemops.assembled_interior_stencil(p, 1 / 3, theta, 0j)
    plain = elemops.assembled_interior_stencil(p, 1 / 3, 0.0, 0j)
    assert np.allclose(rotated, elemops.complex_width(1.0, theta) ** (p - 2) * plain)


@with_dims(1, 2, 3)
def test_cell_load_constant(p):
    h = 1 / 9
    load = elemops.cell_load(p, h, 0.0, np.ones(2**p))
    assert load.sum() == pytest.approx(h**p)
    assert np.allclose(load, load[0])
