"""
Textbook additive multigrid in correction form on regular grids. Coarse
levels see only restricted residuals, their solution values are untouched.
"""

from __future__ import annotations
from typing import TYPE_CHECKING
import logging
import numpy as np
from ..cycle import CycleDriver, CycleKind
from ..exceptions import ConfigurationError
from ..kernels import accumulate_vertices, finish_vertex, prolonged, restrict_to_parent, smooth, zero_accumulators
from ..spacetree import TraversalEvents

if TYPE_CHECKING:  # pragma: no cover
    from ..discretisation import Discretisation
    from ..omega import OmegaPolicy
    from ..spacetree import Cell, Vertex

_logger = logging.getLogger(__name__)


class _RestrictionSweep(TraversalEvents):
    def __init__(self, driver: TextbookAdditive):
        self.driver = driver
        self.omega = driver.policy.smoothing_weight(driver.n)

    def touch_vertex_first_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        zero_accumulators(vertex)
        vertex.payload.u_hat[:] = 0.0

    def enter_cell(self, cell: Cell, vertices: list[Vertex], parent_vertices: list[Vertex] | None) -> None:
        driver = self.driver
        if cell.level < driver.min_level:
            return
        adj_u = None
        if cell.level < driver.finest:
            adj_u = np.zeros((len(vertices), driver.tree.channels), dtype=complex)
        accumulate_vertices(driver.disc, cell, vertices, adj_u)

    def touch_vertex_last_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        driver = self.driver
        if vertex.level < driver.min_level:
            return
        payload = vertex.payload
        finish_vertex(vertex)
        payload.sc[:] = 0.0 if vertex.boundary else smooth(vertex, self.omega)
        if vertex.level > driver.min_level:
            assert parent_vertices is not None
            restrict_to_parent(vertex, cell, parent_vertices, payload.r)


class _ProlongationSweep(TraversalEvents):
    def __init__(self, driver: TextbookAdditive):
        self.driver = driver

    def touch_vertex_first_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        driver = self.driver
        payload = vertex.payload
        if vertex.boundary or vertex.level < driver.min_level:
            payload.corr[:] = 0.0
            return
        payload.corr[:] = payload.sc
        if vertex.level > driver.min_level:
            assert parent_vertices is not None
            payload.corr += driver.omega_cg * prolonged(vertex, cell, parent_vertices, "corr")
        if vertex.level == driver.finest:
            payload.u += payload.corr


class TextbookAdditive(CycleDriver):
    """
    Additive multigrid with the coarse corrections damped by ``omega_cg`` per
    level. The coarsest compute level is smoothed once, it is never solved
    exactly. Only loads of the finest level enter, so the tree has to be
    regular.

    :ivar omega_cg: coarse grid damping, defaults to the smoother weight
    :vartype omega_cg: complex | None
    """

    kind = CycleKind.TEXTBOOK_ADD
    traversals_per_cycle = 2

    def __init__(self, disc: Discretisation, policy: OmegaPolicy, omega_cg: complex | None = None):
        super().__init__(disc, policy)
        if not disc.tree.is_regular():
            raise ConfigurationError("textbookAdd is only supported on regular grids")
        self._omega_cg = omega_cg
        self.finest = disc.tree.max_level

    @property
    def omega_cg(self) -> complex:
        if self._omega_cg is None:
            return self.policy.smoothing_weight(self.n)
        return self._omega_cg

    def _run(self) -> None:
        if not self.tree.is_regular():
            raise ConfigurationError("textbookAdd is only supported on regular grids")
        self.tree.traverse(_RestrictionSweep(self))
        self.tree.traverse(_ProlongationSweep(self))
