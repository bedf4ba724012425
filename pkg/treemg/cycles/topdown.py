"""
Single-sweep additive multigrid with full approximation storage.

Each level applies the update it staged in the previous traversal together
with the prolonged coarse updates, so one tree traversal realises one
additive cycle with a pipeline delay of one traversal.
"""

from __future__ import annotations
from typing import TYPE_CHECKING
import logging
import numpy as np
from .. import transfer
from ..cycle import CycleDriver, CycleKind
from ..exceptions import ConfigurationError
from ..kernels import (
    accumulate_vertices,
    finish_vertex,
    prolonged,
    restrict_to_parent,
    smooth,
    surplus,
    zero_accumulators,
)
from ..omega import omega_of

if TYPE_CHECKING:  # pragma: no cover
    from ..discretisation import Discretisation
    from ..omega import OmegaPolicy
    from ..spacetree import Cell, Vertex

_logger = logging.getLogger(__name__)


class TopDownAdditive(CycleDriver):
    """
    Additive multigrid integrated into one top-down traversal.

    The staged update ``sc`` travels to finer levels by prolongation, the
    update ``sf`` travels to coarser levels by injection so that every coarse
    vertex keeps the injected fine solution.

    :ivar check_injection: record :attr:`injection_defect` while the residual is evaluated
    :vartype check_injection: bool
    :ivar injection_defect: largest ``|u_coarse - I u_fine|`` observed so far
    :vartype injection_defect: float
    """

    kind = CycleKind.TD_ADD

    def __init__(self, disc: Discretisation, policy: OmegaPolicy, check_injection: bool = False):
        super().__init__(disc, policy)
        self._check_policy()
        self.check_injection = check_injection
        self.injection_defect = 0.0

    def _check_policy(self) -> None:
        if self.policy.bpx:
            raise ConfigurationError("tdAdd cannot realise the bpx policy, use tdBPX")

    def _run(self) -> None:
        self.tree.traverse(self)

    # hooks of the BPX variant

    def _correct_prolonged(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex]) -> None:
        pass

    def _stage(self, vertex: Vertex, update: np.ndarray) -> np.ndarray:
        return update

    def _inject_update(self, coarse: Vertex, update: np.ndarray) -> None:
        pass

    # events

    def create_hanging_vertex(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        zero_accumulators(vertex)
        if not vertex.boundary and vertex.level > self.min_level:
            assert parent_vertices is not None
            vertex.payload.sc[:] = prolonged(vertex, cell, parent_vertices, "sc")

    def touch_vertex_first_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        zero_accumulators(vertex)
        payload = vertex.payload
        if vertex.boundary or vertex.level < self.min_level:
            payload.u_hat[:] = 0.0
            return
        if vertex.level > self.min_level:
            assert parent_vertices is not None
            payload.sc += prolonged(vertex, cell, parent_vertices, "sc")
            self._correct_prolonged(vertex, cell, parent_vertices)
            payload.u += payload.sc + payload.sf
            payload.u_hat[:] = surplus(vertex, cell, parent_vertices)
        else:
            payload.u += payload.sc + payload.sf
            payload.u_hat[:] = payload.u
        payload.sf[:] = 0.0

    def enter_cell(self, cell: Cell, vertices: list[Vertex], parent_vertices: list[Vertex] | None) -> None:
        if cell.level >= self.min_level:
            accumulate_vertices(self.disc, cell, vertices)

    def touch_vertex_last_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        if vertex.level < self.min_level:
            return
        payload = vertex.payload
        finish_vertex(vertex)
        update = None
        if vertex.boundary:
            payload.sc[:] = 0.0
        else:
            update = smooth(vertex, self.omega(vertex))
            payload.sc[:] = self._stage(vertex, update)
        if vertex.level > self.min_level:
            assert parent_vertices is not None
            restrict_to_parent(vertex, cell, parent_vertices, payload.r_hat)
            corner = transfer.coinciding_corner(vertex.thirds_in(cell.parent_index))
            if corner is not None and update is not None:
                coarse = parent_vertices[corner]
                if self.check_injection:
                    defect = float(np.max(np.abs(coarse.payload.u - payload.u)))
                    self.injection_defect = max(self.injection_defect, defect)
                coarse.payload.sf[:] = payload.sf + payload.sc
                self._inject_update(coarse, update)
        payload.si[:] = payload.si_next
        payload.si_next[:] = 0.0

    def destroy_hanging_vertex(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        if vertex.boundary:
            return
        assert parent_vertices is not None
        payload = vertex.payload
        payload.r_hat += payload.b
        restrict_to_parent(vertex, cell, parent_vertices, payload.r_hat)


class TopDownBPX(TopDownAdditive):
    """
    BPX variant of :class:`TopDownAdditive`. C-points stage no update of their
    own. Instead their update is injected and subtracted again from the
    prolonged correction of the finer f-points.
    """

    kind = CycleKind.TD_BPX

    def _check_policy(self) -> None:
        if not self.policy.bpx:
            raise ConfigurationError("tdBPX requires the bpx policy")

    def omega(self, vertex: Vertex) -> complex:
        return omega_of(self.policy._replace(hb_mask=False), vertex, self.n, self.min_level)

    def _correct_prolonged(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex]) -> None:
        if not self.masked(vertex):
            vertex.payload.sc -= prolonged(vertex, cell, parent_vertices, "si")

    def _stage(self, vertex: Vertex, update: np.ndarray) -> np.ndarray:
        if self.masked(vertex):
            return np.zeros_like(update)
        return update

    def _inject_update(self, coarse: Vertex, update: np.ndarray) -> None:
        coarse.payload.si_next[:] = update
