"""
Geometric inter-grid transfer on 3-partitioned grids.

Positions inside a parent cell are given in thirds: a component ``t`` in
``{0, 1, 2, 3}`` stands for the relative position ``t/3``. Parent corners use
the same tensor-product numbering as :mod:`treemg.elemops`.
"""

from __future__ import annotations
from fractions import Fraction
from functools import lru_cache
from typing import Sequence
import numpy as np
from .exceptions import ContractError

Thirds = tuple[int, ...]


def to_thirds(rel_pos: Sequence[float | Fraction]) -> Thirds:
    """
    Converts a relative position with components in ``{0, 1/3, 2/3, 1}`` into thirds

    >>> to_thirds((0, Fraction(1, 3), 2 / 3, 1))
    (0, 1, 2, 3)

    :raises ContractError: for components outside the admissible set
    """
    thirds = []
    for value in rel_pos:
        scaled = round(3 * float(value))
        if scaled not in (0, 1, 2, 3) or abs(3 * float(value) - scaled) > 1e-9:
            raise ContractError(f"relative position {value} is not a multiple of 1/3 in [0, 1]")
        thirds.append(scaled)
    return tuple(thirds)


def _check_thirds(thirds: Thirds) -> None:
    for t in thirds:
        if t not in (0, 1, 2, 3):
            raise ContractError(f"relative position component must be in thirds 0..3, got {t}")


@lru_cache(maxsize=None)
def weight_fractions(thirds: Thirds) -> tuple[Fraction, ...]:
    """
    Exact p-linear prolongation weights of the ``2^p`` parent corners

    :param thirds: relative position in thirds
    :type thirds: tuple[int, ...]
    :return: one weight per parent corner
    :rtype: tuple[fractions.Fraction, ...]
    """
    _check_thirds(thirds)
    weights = []
    for corner in range(2 ** len(thirds)):
        weight = Fraction(1)
        for d, t in enumerate(thirds):
            weight *= Fraction(t, 3) if (corner >> d) & 1 else Fraction(3 - t, 3)
        weights.append(weight)
    return tuple(weights)


@lru_cache(maxsize=None)
def prolongation_weights(thirds: Thirds) -> np.ndarray:
    """
    Floating point version of :func:`weight_fractions`, tabulated per position
    """
    weights = np.array([float(w) for w in weight_fractions(thirds)])
    weights.setflags(write=False)
    return weights


def prolong(parent_corners: np.ndarray, thirds: Thirds) -> np.ndarray:
    """
    p-linear interpolation of the parent corner values

    >>> float(prolong(np.array([0.0, 1.0]), (1,)))
    0.3333333333333333

    :param parent_corners: values at the ``2^p`` parent corners, optionally one column per channel
    :type parent_corners: numpy.ndarray
    :param thirds: relative position in thirds
    :type thirds: tuple[int, ...]
    :return: interpolated value(s)
    :rtype: numpy.ndarray
    """
    return prolongation_weights(thirds) @ parent_corners


def restrict_accumulate(coarse_acc: Sequence[np.ndarray], thirds: Thirds, fine_value: np.ndarray) -> None:
    """
    Adds ``weight_k * fine_value`` to every parent corner accumulator ``k``
    (``R`` is the transpose of :func:`prolong`).

    :param coarse_acc: one in-place accumulator per parent corner
    :type coarse_acc: Sequence[numpy.ndarray]
    :param thirds: relative position of the fine vertex in thirds
    :type thirds: tuple[int, ...]
    :param fine_value: value at the fine vertex
    :type fine_value: numpy.ndarray
    """
    for acc, weight in zip(coarse_acc, prolongation_weights(thirds)):
        if weight != 0.0:
            acc += weight * fine_value


def coinciding_corner(thirds: Thirds) -> int | None:
    """
    Parent corner sharing the position of the fine vertex, or ``None`` for f-points
    """
    if any(t not in (0, 3) for t in thirds):
        return None
    return sum((t // 3) << d for d, t in enumerate(thirds))


def inject(fine_u: np.ndarray | complex, index: Sequence[int]) -> np.ndarray | complex:
    """
    Plain copy of a fine value onto the coinciding coarse vertex

    >>> inject(3 + 4j, (3, 6))
    (3+4j)

    :param fine_u: value at the fine vertex
    :param index: level index of the fine vertex
    :type index: Sequence[int]
    :raises ContractError: if the fine vertex has no coarse counterpart
    """
    if any(i % 3 for i in index):
        raise ContractError(f"vertex {tuple(index)} does not coincide with a coarse vertex")
    if isinstance(fine_u, np.ndarray):
        return fine_u.copy()
    return fine_u


def hierarchical_surplus(u_fine: np.ndarray, parent_corners: np.ndarray, thirds: Thirds) -> np.ndarray:
    """
    ``u - P u_coarse`` at one fine vertex
    """
    return u_fine - prolong(parent_corners, thirds)
