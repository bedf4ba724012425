"""
Per-traversal numerical kernels. The residual is accumulated cell by cell:
every cell adds ``-H_cell u`` and its diagonal into its corner vertices,
which finish the residual once all adjacent cells have been visited.
"""

from __future__ import annotations
from typing import TYPE_CHECKING
import logging
import numpy as np
from . import transfer
from .elemops import CellOperator
from .exceptions import SingularDiagonalError
from .problems import coupled_block_apply
from .spacetree import TraversalEvents

if TYPE_CHECKING:  # pragma: no cover
    from .discretisation import Discretisation
    from .spacetree import Cell, Vertex

_logger = logging.getLogger(__name__)

SINGULAR_THRESHOLD = 1e-300


def zero_accumulators(vertex: Vertex) -> None:
    """
    Resets ``r``, ``r_hat``, ``diag`` and the restricted right-hand side ``b``
    """
    payload = vertex.payload
    payload.r[:] = 0.0
    payload.r_hat[:] = 0.0
    payload.diag[:] = 0.0
    payload.b[:] = 0.0
    if payload.block is not None:
        payload.block[:] = 0.0


def accumulate_cell(
    cell_op: CellOperator | np.ndarray, adj_u: np.ndarray, adj_u_hat: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Contribution of one cell to the residuals and diagonals of its corners.

    ``cell_op`` is either one element matrix or a stack of matrices, one per
    channel. In the latter case ``adj_u`` holds one column per channel.

    >>> import numpy as np
    >>> from treemg.elemops import cell_operator
    >>> d_r, _, d_diag = accumulate_cell(cell_operator(1, 1.0, 0.0, 0.0), np.ones(2), np.zeros(2))
    >>> float(abs(d_r).max()), d_diag.real.tolist()
    (0.0, [1.0, 1.0])

    :param cell_op: the element operator
    :type cell_op: :class:`treemg.elemops.CellOperator` | numpy.ndarray
    :param adj_u: solution at the ``2^p`` corners
    :type adj_u: numpy.ndarray
    :param adj_u_hat: hierarchical surplus at the ``2^p`` corners
    :type adj_u_hat: numpy.ndarray
    :return: ``(dR, dRhat, dDiag)``
    :rtype: tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]
    """
    matrix = cell_op.matrix if isinstance(cell_op, CellOperator) else np.asarray(cell_op)
    if matrix.ndim == 2:
        d_diag = np.diagonal(matrix).copy()
        if adj_u.ndim == 2:
            d_diag = np.repeat(d_diag[:, None], adj_u.shape[1], axis=1)
        return -(matrix @ adj_u), -(matrix @ adj_u_hat), d_diag
    d_r = -np.einsum("ckl,lc->kc", matrix, adj_u)
    d_r_hat = -np.einsum("ckl,lc->kc", matrix, adj_u_hat)
    return d_r, d_r_hat, np.diagonal(matrix, axis1=1, axis2=2).T.copy()


def accumulate_vertices(
    disc: Discretisation,
    cell: Cell,
    vertices: list[Vertex],
    adj_u: np.ndarray | None = None,
) -> None:
    """
    Adds the contributions of ``cell`` into the accumulators of its corners.
    The load is added only by unrefined cells. Channel couplings add their
    off-diagonal mass terms and the diagonal block.

    :param adj_u: solution values to apply the operator to, defaults to ``u`` of the corners
    :type adj_u: numpy.ndarray | None
    """
    if adj_u is None:
        adj_u = np.array([v.payload.u for v in vertices])
    adj_u_hat = np.array([v.payload.u_hat for v in vertices])
    d_r, d_r_hat, d_diag = accumulate_cell(disc.operator(cell), adj_u, adj_u_hat)
    couplings = disc.problem.couplings if disc.coupled else None
    if couplings is not None:
        mass = disc.mass(cell)
        d_r -= coupled_block_apply(couplings, (mass @ adj_u).T).T
        d_r_hat -= coupled_block_apply(couplings, (mass @ adj_u_hat).T).T
    if not cell.refined:
        load = disc.load(cell, np.array([v.payload.chi for v in vertices]))
        d_r += load
        d_r_hat += load
    for k, vertex in enumerate(vertices):
        payload = vertex.payload
        payload.r += d_r[k]
        payload.r_hat += d_r_hat[k]
        payload.diag += d_diag[k]
        if payload.block is not None and couplings is not None:
            payload.block += np.diag(d_diag[k]) + mass[k, k] * couplings


def finish_vertex(vertex: Vertex) -> None:
    """
    Adds the restricted right-hand side to the accumulated residuals.
    Boundary vertices are pinned to zero.

    :raises SingularDiagonalError: if a persistent interior vertex has a zero diagonal
    """
    payload = vertex.payload
    if vertex.boundary:
        payload.u[:] = 0.0
        payload.r[:] = 0.0
        payload.r_hat[:] = 0.0
        return
    payload.r += payload.b
    payload.r_hat += payload.b
    if not vertex.hanging and np.any(np.abs(payload.diag) < SINGULAR_THRESHOLD):
        raise SingularDiagonalError(f"zero diagonal at vertex {vertex.key}")


def jacobi(r: np.ndarray | complex, diag: np.ndarray | complex, omega: complex) -> np.ndarray | complex:
    """
    Damped Jacobi update ``omega*r/diag``

    >>> jacobi(2.0, 2.0, 0.8)
    0.8

    :raises SingularDiagonalError: if ``|diag| < 1e-300``
    """
    if np.any(np.abs(diag) < SINGULAR_THRESHOLD):
        raise SingularDiagonalError(f"diagonal {diag} is singular")
    return omega * r / diag


def block_jacobi(r: np.ndarray, block: np.ndarray, omega: complex) -> np.ndarray:
    """
    Damped block Jacobi update ``omega * block^-1 r`` of coupled channels

    :raises SingularDiagonalError: if the block is singular
    """
    try:
        return omega * np.linalg.solve(block, r)
    except np.linalg.LinAlgError as e:
        raise SingularDiagonalError(f"diagonal block {block.tolist()} is singular") from e


def smooth(vertex: Vertex, omega: complex) -> np.ndarray:
    """
    Smoother update of a vertex with finished residual
    """
    payload = vertex.payload
    if payload.block is not None:
        return block_jacobi(payload.r, payload.block, omega)
    return np.asarray(jacobi(payload.r, payload.diag, omega))


def restrict_to_parent(vertex: Vertex, cell: Cell, parent_vertices: list[Vertex], value: np.ndarray) -> None:
    """
    Adds ``R value`` into the restricted right-hand side of the parent corners
    """
    transfer.restrict_accumulate(
        [v.payload.b for v in parent_vertices], vertex.thirds_in(cell.parent_index), value
    )


def prolonged(vertex: Vertex, cell: Cell, parent_vertices: list[Vertex], field: str) -> np.ndarray:
    """
    ``P`` applied to one payload field of the parent corners at the position of ``vertex``
    """
    corners = np.array([getattr(v.payload, field) for v in parent_vertices])
    return transfer.prolong(corners, vertex.thirds_in(cell.parent_index))


def surplus(vertex: Vertex, cell: Cell, parent_vertices: list[Vertex]) -> np.ndarray:
    """
    Hierarchical surplus ``u - P u_coarse`` of ``vertex``
    """
    corners = np.array([v.payload.u for v in parent_vertices])
    return transfer.hierarchical_surplus(vertex.payload.u, corners, vertex.thirds_in(cell.parent_index))


class ResidualEvaluation(TraversalEvents):
    """
    Traversal computing ``r = b - H u`` level by level without changing the solution.
    On the finest level of a regular tree this is the global residual.
    """

    def __init__(self, disc: Discretisation):
        self.disc = disc

    def touch_vertex_first_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        zero_accumulators(vertex)
        vertex.payload.u_hat[:] = 0.0

    def create_hanging_vertex(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        zero_accumulators(vertex)

    def enter_cell(self, cell: Cell, vertices: list[Vertex], parent_vertices: list[Vertex] | None) -> None:
        accumulate_vertices(self.disc, cell, vertices)

    def touch_vertex_last_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        finish_vertex(vertex)


def evaluate_residual(disc: Discretisation) -> None:
    """
    Runs a :class:`ResidualEvaluation` traversal on the tree of ``disc``
    """
    disc.tree.traverse(ResidualEvaluation(disc))
