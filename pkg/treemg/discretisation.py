from __future__ import annotations
from typing import TYPE_CHECKING
import logging
import numpy as np
from . import elemops
from .exceptions import ConfigurationError

if TYPE_CHECKING:  # pragma: no cover
    from .problems import ProblemSpec
    from .spacetree import Cell, Key, Spacetree

_logger = logging.getLogger(__name__)


class Discretisation:
    """
    Finite element discretisation of a problem on a spacetree.

    Element matrices are built on first use per cell and cached. The cache is
    keyed by cell, so refined regions simply add entries.

    :ivar tree: the grid
    :vartype tree: :class:`treemg.spacetree.Spacetree`
    :ivar problem: the problem
    :vartype problem: :class:`treemg.problems.ProblemSpec`
    :ivar min_level: coarsest compute level
    :vartype min_level: int

    :raises ConfigurationError: if the tree is not regular down to ``min_level``
    """

    def __init__(self, tree: Spacetree, problem: ProblemSpec, min_level: int = 1):
        if min_level < 1:
            raise ConfigurationError(f"coarsest compute level must be at least 1, got {min_level}")
        if tree.max_level < min_level:
            raise ConfigurationError(f"tree depth {tree.max_level} is below the coarsest compute level {min_level}")
        for cell in tree.cells.values():
            if cell.level < min_level and not cell.refined:
                raise ConfigurationError(f"cell {cell.key} above the coarsest compute level is unrefined")
        self.tree = tree
        self.problem = problem
        self.min_level = min_level
        self._operators: dict[Key, np.ndarray] = {}
        self._masses: dict[Key, np.ndarray] = {}

    @property
    def coupled(self) -> bool:
        return self.problem.coupled

    def operator(self, cell: Cell) -> np.ndarray:
        """
        Element matrices of all channels, shape ``(c, 2^p, 2^p)``
        """
        matrices = self._operators.get(cell.key)
        if matrices is None:
            phi = self.problem.phi(cell.centre)
            matrices = np.array(
                [elemops.cell_operator(self.tree.p, cell.h, cell.theta, value).matrix for value in phi]
            )
            self._operators[cell.key] = matrices
        return matrices

    def mass(self, cell: Cell) -> np.ndarray:
        """
        Scaled element mass matrix ``h_elem^p * M`` of the channel couplings
        """
        matrix = self._masses.get(cell.key)
        if matrix is None:
            p = self.tree.p
            matrix = elemops.complex_width(cell.h, cell.theta) ** p * elemops.reference_mass(p)
            self._masses[cell.key] = matrix
        return matrix

    def load(self, cell: Cell, chi: np.ndarray) -> np.ndarray:
        """
        Element load per cell vertex and channel, shape ``(2^p, c)``
        """
        return elemops.cell_load(self.tree.p, cell.h, cell.theta, chi)

    def forget(self) -> None:
        """
        Drops cached element data of cells that no longer exist
        """
        cells = self.tree.cells
        for cache in (self._operators, self._masses):
            for key in [k for k in cache if k not in cells]:
                del cache[key]
