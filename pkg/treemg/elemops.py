from __future__ import annotations
from functools import lru_cache, reduce
from typing import NamedTuple
import math
import numpy as np
from .exceptions import DimensionError, ContractError

MAX_DIM = 4

_LAPLACE_1D = np.array([[1.0, -1.0], [-1.0, 1.0]])
_MASS_1D = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


class CellOperator(NamedTuple):
    """
    Local complex-scaled Helmholtz operator of one cell

    :ivar dim: spatial dimension ``p``
    :vartype dim: int
    :ivar h_elem: complex mesh width ``h*e^(i*theta)``
    :vartype h_elem: complex
    :ivar phi_cell: ``phi`` sampled at the cell centre
    :vartype phi_cell: complex
    :ivar matrix: ``2^p x 2^p`` complex-symmetric element matrix
    :vartype matrix: numpy.ndarray
    """

    dim: int
    h_elem: complex
    phi_cell: complex
    matrix: np.ndarray


def check_dim(p: int) -> None:
    """
    Checks that ``p`` is a supported dimension

    :param p: spatial dimension
    :type p: int
    :raises DimensionError: if ``p`` is not between 1 and 4
    """
    if not isinstance(p, int) or isinstance(p, bool) or not 1 <= p <= MAX_DIM:
        raise DimensionError(f"dimension must be between 1 and {MAX_DIM}, got {p!r}")


def _tensor(factors: list[np.ndarray]) -> np.ndarray:
    # kron puts its last factor fastest, axis 0 has to come last
    return reduce(np.kron, reversed(factors))


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=None)
def reference_laplace(p: int) -> np.ndarray:
    """
    Element stiffness matrix of p-linear shape functions on the unit hypercube.

    Vertices are numbered in tensor-product order with axis 0 fastest,
    i.e. local vertex ``k`` sits at ``((k >> 0) & 1, (k >> 1) & 1, ...)``.

    >>> reference_laplace(1)
    array([[ 1., -1.],
           [-1.,  1.]])

    :param p: spatial dimension
    :type p: int
    :return: read-only ``2^p x 2^p`` matrix
    :rtype: numpy.ndarray
    :raises DimensionError: if ``p`` is out of range
    """
    check_dim(p)
    terms = []
    for axis in range(p):
        terms.append(_tensor([_LAPLACE_1D if d == axis else _MASS_1D for d in range(p)]))
    return _frozen(sum(terms[1:], terms[0].copy()))


@lru_cache(maxsize=None)
def reference_mass(p: int) -> np.ndarray:
    """
    Element mass matrix on the unit hypercube, same vertex ordering as
    :func:`reference_laplace`.

    :param p: spatial dimension
    :type p: int
    :return: read-only ``2^p x 2^p`` matrix
    :rtype: numpy.ndarray
    :raises DimensionError: if ``p`` is out of range
    """
    check_dim(p)
    return _frozen(_tensor([_MASS_1D] * p).copy())


def complex_width(h: float, theta: float) -> complex:
    """
    Rotated mesh width ``h*(cos(theta) + i*sin(theta))``
    """
    return h * complex(math.cos(theta), math.sin(theta))


def _check_cell(h: float, theta: float) -> None:
    if not h > 0.0:
        raise ContractError(f"mesh width must be positive, got {h}")
    if not -1e-12 <= theta <= math.pi / 4 + 1e-12:
        raise ContractError(f"rotation must be within [0, pi/4], got {theta}")


def cell_operator(p: int, h: float, theta: float, phi: complex) -> CellOperator:
    """
    Builds the local operator ``h_elem^(p-2)*laplace - phi*h_elem^p*mass``.

    :param p: spatial dimension
    :type p: int
    :param h: real mesh width of the cell
    :type h: float
    :param theta: rotation of the cell in radians
    :type theta: float
    :param phi: Helmholtz shift sampled at the cell centre
    :type phi: complex
    :return: the cell operator
    :rtype: :class:`CellOperator`
    :raises ContractError: for ``h <= 0`` or ``theta`` outside ``[0, pi/4]``
    """
    _check_cell(h, theta)
    h_elem = complex_width(h, theta)
    matrix = h_elem ** (p - 2) * reference_laplace(p) - phi * h_elem**p * reference_mass(p)
    return CellOperator(p, h_elem, complex(phi), matrix)


def cell_load(p: int, h: float, theta: float, chi_corners: np.ndarray) -> np.ndarray:
    """
    Consistent element load ``h_elem^p * mass @ chi`` for right-hand side
    values given at the ``2^p`` cell vertices (one column per channel).

    :param p: spatial dimension
    :type p: int
    :param h: real mesh width of the cell
    :type h: float
    :param theta: rotation of the cell in radians
    :type theta: float
    :param chi_corners: right-hand side at the cell vertices
    :type chi_corners: numpy.ndarray
    :return: load contributions per cell vertex
    :rtype: numpy.ndarray
    """
    return complex_width(h, theta) ** p * (reference_mass(p) @ chi_corners)


def assembled_interior_stencil(p: int, h: float, theta: float, phi: complex) -> np.ndarray:
    """
    Reassembles the ``3^p`` point stencil of an interior vertex from its
    ``2^p`` adjacent cells. Stencil entries use axis 0 fastest, the centre
    entry has index ``(3^p - 1) / 2``.

    >>> assembled_interior_stencil(1, 1.0, 0.0, 0.0).real
    array([-1.,  2., -1.])

    :return: complex stencil of length ``3^p``
    :rtype: numpy.ndarray
    """
    matrix = cell_operator(p, h, theta, phi).matrix
    stencil = np.zeros(3**p, dtype=complex)
    corners = range(2**p)
    for centre in corners:
        # the adjacent cell in which the stencil centre is local vertex ``centre``
        for k in corners:
            offset = sum((((k >> d) & 1) - ((centre >> d) & 1) + 1) * 3**d for d in range(p))
            stencil[offset] += matrix[centre, k]
    return stencil
