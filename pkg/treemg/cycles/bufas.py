"""
Additive multigrid with full approximation storage running bottom-up: all
levels compute their update from the same state, then one top-down pass
adds the prolonged corrections.
"""

from __future__ import annotations
from typing import TYPE_CHECKING
import logging
import numpy as np
from .. import transfer
from ..cycle import CycleDriver, CycleKind
from ..kernels import (
    accumulate_vertices,
    finish_vertex,
    prolonged,
    restrict_to_parent,
    smooth,
    surplus,
    zero_accumulators,
)
from ..spacetree import TraversalEvents

if TYPE_CHECKING:  # pragma: no cover
    from ..spacetree import Cell, Vertex

_logger = logging.getLogger(__name__)


class _ResidualSweep(TraversalEvents):
    def __init__(self, driver: BottomUpFAS):
        self.driver = driver

    def create_hanging_vertex(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        zero_accumulators(vertex)

    def touch_vertex_first_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        zero_accumulators(vertex)
        payload = vertex.payload
        payload.si[:] = 0.0
        payload.sc[:] = 0.0
        if vertex.boundary or vertex.level < self.driver.min_level:
            payload.u_hat[:] = 0.0
        elif vertex.level > self.driver.min_level:
            assert parent_vertices is not None
            payload.u_hat[:] = surplus(vertex, cell, parent_vertices)
        else:
            payload.u_hat[:] = payload.u

    def enter_cell(self, cell: Cell, vertices: list[Vertex], parent_vertices: list[Vertex] | None) -> None:
        if cell.level >= self.driver.min_level:
            accumulate_vertices(self.driver.disc, cell, vertices)

    def touch_vertex_last_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        driver = self.driver
        if vertex.level < driver.min_level:
            return
        payload = vertex.payload
        finish_vertex(vertex)
        if not vertex.boundary:
            payload.sc[:] = smooth(vertex, driver.omega(vertex))
        if vertex.level > driver.min_level:
            assert parent_vertices is not None
            restrict_to_parent(vertex, cell, parent_vertices, payload.r_hat)
            corner = transfer.coinciding_corner(vertex.thirds_in(cell.parent_index))
            if corner is not None and not vertex.boundary:
                parent_vertices[corner].payload.si[:] = payload.sc

    def destroy_hanging_vertex(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        if vertex.boundary:
            return
        assert parent_vertices is not None
        payload = vertex.payload
        payload.r_hat += payload.b
        restrict_to_parent(vertex, cell, parent_vertices, payload.r_hat)


class _CorrectionSweep(TraversalEvents):
    def __init__(self, driver: BottomUpFAS):
        self.driver = driver

    def _coarse_part(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> np.ndarray:
        assert parent_vertices is not None
        return prolonged(vertex, cell, parent_vertices, "corr")

    def create_hanging_vertex(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        payload = vertex.payload
        payload.corr[:] = 0.0
        if not vertex.boundary and vertex.level > self.driver.min_level:
            payload.corr[:] = self._coarse_part(vertex, cell, parent_vertices)

    def touch_vertex_first_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        driver = self.driver
        payload = vertex.payload
        if vertex.boundary or vertex.level < driver.min_level:
            payload.corr[:] = 0.0
            return
        payload.corr[:] = payload.sc
        if vertex.level > driver.min_level:
            payload.corr += self._coarse_part(vertex, cell, parent_vertices)
            if driver.policy.bpx:
                assert parent_vertices is not None
                payload.corr -= prolonged(vertex, cell, parent_vertices, "si")
        payload.u += payload.corr


class BottomUpFAS(CycleDriver):
    """
    Additive FAS cycle in two traversals plus an injection pass.

    The first traversal computes the updates ``du`` of all levels from the
    injected state and restricts the hierarchical residuals. The second one
    adds ``du`` and the prolonged coarse corrections. With the bpx policy the
    prolonged injected fine update is subtracted, which conserves the
    injection property.
    """

    kind = CycleKind.BU_FAS
    traversals_per_cycle = 2

    def _run(self) -> None:
        self.tree.inject_hierarchy(self.min_level)
        self.tree.traverse(_ResidualSweep(self))
        self.tree.traverse(_CorrectionSweep(self))
