"""
The 3-partitioned spacetree.

Cells and persistent vertices live in dictionaries keyed by ``(level, index)``.
Hanging vertices are never stored: the traversal creates them when it first
enters an adjacent cell and destroys them after the last adjacent cell is left.
"""

from __future__ import annotations
from typing import TYPE_CHECKING, Iterator, TextIO
import itertools
import logging
import numpy as np
from . import transfer
from .elemops import check_dim
from .exceptions import CapacityError, ContractError
from .problems import cell_theta

if TYPE_CHECKING:  # pragma: no cover
    from .problems import ProblemSpec

_logger = logging.getLogger(__name__)

Index = tuple[int, ...]
Key = tuple[int, Index]

DEFAULT_MAX_VERTICES = 2_000_000


class VertexPayload:
    """
    Per-channel solver data of one vertex

    :ivar u: solution (full approximation on every level)
    :ivar b: right-hand side restricted from the next finer level
    :ivar chi: right-hand side sampled at the vertex position
    :ivar r: residual accumulator
    :ivar r_hat: hierarchical residual accumulator
    :ivar u_hat: hierarchical surplus
    :ivar diag: diagonal accumulator
    :ivar block: ``c x c`` diagonal block accumulator (coupled channels only)
    :ivar sc: staged smoother update, prolonged to finer levels
    :ivar sf: update injected from the next finer level
    :ivar si: update injected for the prolongation correction, read by finer levels
    :ivar si_next: ``si`` of the next traversal, written by the coinciding finer vertex
    :ivar corr: correction of the current cycle (two-pass drivers)
    :ivar s: refinement feature
    """

    __slots__ = (
        "u",
        "b",
        "chi",
        "r",
        "r_hat",
        "u_hat",
        "diag",
        "block",
        "sc",
        "sf",
        "si",
        "si_next",
        "corr",
        "s",
    )

    def __init__(self, channels: int, coupled: bool = False):
        for name in self.__slots__[:-1]:
            if name != "block":
                setattr(self, name, np.zeros(channels, dtype=complex))
        self.block = np.zeros((channels, channels), dtype=complex) if coupled else None
        self.s = 0.0


class Cell:
    """
    A spacetree cell

    :ivar level: level of the cell, 0 is the unit hypercube
    :vartype level: int
    :ivar index: position within the level lattice
    :vartype index: tuple[int, ...]
    :ivar refined: whether the cell has children
    :vartype refined: bool
    :ivar theta: rotation of the cell in radians
    :vartype theta: float
    """

    __slots__ = ("level", "index", "refined", "theta")

    def __init__(self, level: int, index: Index, theta: float = 0.0):
        self.level = level
        self.index = index
        self.refined = False
        self.theta = theta

    def __repr__(self) -> str:
        return f"Cell(level={self.level}, index={self.index})"

    @property
    def key(self) -> Key:
        return (self.level, self.index)

    @property
    def h(self) -> float:
        return 3.0**-self.level

    @property
    def centre(self) -> np.ndarray:
        return (np.array(self.index, dtype=float) + 0.5) * self.h

    @property
    def parent_index(self) -> Index:
        return tuple(i // 3 for i in self.index)

    def corner_indices(self) -> list[Index]:
        """
        Vertex indices of the ``2^p`` corners in tensor-product order
        """
        p = len(self.index)
        return [tuple(i + ((k >> d) & 1) for d, i in enumerate(self.index)) for k in range(2**p)]

    def child_indices(self) -> list[Index]:
        """
        Indices of the ``3^p`` children in lexicographic order
        """
        base = [3 * i for i in self.index]
        return [
            tuple(b + o for b, o in zip(base, offset))
            for offset in itertools.product(range(3), repeat=len(self.index))
        ]


class Vertex:
    """
    A vertex unique by ``(level, index)``

    :ivar hanging: fewer adjacent same-level cells exist than lie inside the domain
    :ivar boundary: the vertex lies on the domain boundary
    :ivar refined: all adjacent same-level cells are refined
    :ivar c_point: the position coincides with a vertex one level coarser
    :ivar succ: level distance to the nearest unrefined descendant region
    :ivar payload: solver data
    """

    __slots__ = ("level", "index", "hanging", "boundary", "refined", "c_point", "succ", "payload")

    # pylint: disable=too-many-arguments,too-many-positional-arguments
    def __init__(self, level: int, index: Index, payload: VertexPayload, boundary: bool, hanging: bool = False):
        self.level = level
        self.index = index
        self.payload = payload
        self.boundary = boundary
        self.hanging = hanging
        self.refined = False
        self.c_point = level > 0 and all(i % 3 == 0 for i in index)
        self.succ = 0

    def __repr__(self) -> str:
        return f"Vertex(level={self.level}, index={self.index}{', hanging' if self.hanging else ''})"

    @property
    def key(self) -> Key:
        return (self.level, self.index)

    @property
    def h(self) -> float:
        return 3.0**-self.level

    @property
    def position(self) -> np.ndarray:
        return np.array(self.index, dtype=float) * self.h

    def thirds_in(self, parent_index: Index) -> transfer.Thirds:
        """
        Position of the vertex within a parent cell in thirds
        """
        return tuple(v - 3 * c for v, c in zip(self.index, parent_index))


class TraversalEvents:
    """
    Event handlers of one tree traversal. All handlers do nothing by default.

    ``parent_vertices`` are the corners of the parent of the current cell,
    ``None`` for the root cell.
    """

    # pylint: disable=unused-argument

    def enter_cell(self, cell: Cell, vertices: list[Vertex], parent_vertices: list[Vertex] | None) -> None:
        pass

    def leave_cell(self, cell: Cell, vertices: list[Vertex], parent_vertices: list[Vertex] | None) -> None:
        pass

    def touch_vertex_first_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        pass

    def touch_vertex_last_time(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        pass

    def create_hanging_vertex(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        pass

    def destroy_hanging_vertex(self, vertex: Vertex, cell: Cell, parent_vertices: list[Vertex] | None) -> None:
        pass


class Spacetree:
    """
    A dynamically adaptive spacetree over the unit hypercube

    >>> tree = Spacetree.build_regular(2, 1)
    >>> len(tree.fine_grid_vertices())
    16

    :ivar p: spatial dimension
    :vartype p: int
    :ivar problem: problem providing rotation and right-hand side, may be ``None``
    :vartype problem: :class:`treemg.problems.ProblemSpec` | None
    :ivar channels: number of payload channels
    :vartype channels: int
    :ivar h_min: refinement veto, children finer than this are not created
    :vartype h_min: float | None
    :ivar dirty: classification is stale since the last structural change
    :vartype dirty: bool
    """

    def __init__(
        self,
        p: int,
        problem: ProblemSpec | None = None,
        max_vertices: int = DEFAULT_MAX_VERTICES,
    ):
        check_dim(p)
        if problem is not None and problem.p != p:
            raise ContractError(f"problem dimension {problem.p} does not match tree dimension {p}")
        self.p = p
        self.problem = problem
        self.channels = problem.n_channels if problem is not None else 1
        self.coupled = problem.coupled if problem is not None else False
        self.max_vertices = max_vertices
        self.h_min: float | None = None
        self.cells: dict[Key, Cell] = {}
        self.vertices: dict[Key, Vertex] = {}
        self.dirty = True
        self._chi_cache: dict[Key, np.ndarray] = {}
        self._live: dict[Key, Vertex] = {}
        self._remaining: dict[Key, int] = {}
        root = self._new_cell(0, (0,) * p)
        for corner in root.corner_indices():
            self._create_vertex(0, corner, np.zeros(self.channels, dtype=complex))

    def __repr__(self) -> str:
        return f"Spacetree(p={self.p}, cells={len(self.cells)}, vertices={len(self.vertices)})"

    @classmethod
    def build_regular(
        cls,
        p: int,
        levels: int,
        problem: ProblemSpec | None = None,
        max_vertices: int = DEFAULT_MAX_VERTICES,
    ) -> Spacetree:
        """
        Builds a tree refined regularly down to ``levels``

        :param p: spatial dimension
        :type p: int
        :param levels: depth of the tree, finest mesh width is ``3^-levels``
        :type levels: int
        :param problem: problem definition
        :type problem: :class:`treemg.problems.ProblemSpec` | None
        :param max_vertices: vertex cap
        :type max_vertices: int
        :return: the tree
        :rtype: :class:`Spacetree`
        :raises ContractError: if ``levels < 1``
        :raises CapacityError: if the tree would exceed ``max_vertices``
        """
        check_dim(p)
        if levels < 1:
            raise ContractError(f"a regular tree needs at least one level, got {levels}")
        estimate = sum((3**level + 1) ** p for level in range(levels + 1))
        if estimate > max_vertices:
            raise CapacityError(f"regular tree with {levels} levels needs {estimate} vertices, cap is {max_vertices}")
        tree = cls(p, problem, max_vertices)
        for level in range(levels):
            for cell in [c for c in tree.cells.values() if c.level == level]:
                tree.refine_cell(cell)
        _logger.debug("built regular tree p=%d levels=%d: %r", p, levels, tree)
        return tree

    # geometry

    def _cell_in_domain(self, level: int, index: Index) -> bool:
        n = 3**level
        return all(0 <= i < n for i in index)

    def is_boundary(self, level: int, index: Index) -> bool:
        n = 3**level
        return any(i in (0, n) for i in index)

    def adjacent_cell_indices(self, level: int, index: Index) -> list[Index]:
        """
        In-domain cells around a vertex, ordered such that the vertex is local corner ``k`` of entry ``k``
        """
        result = []
        for k in range(2**self.p):
            cell_index = tuple(i - ((k >> d) & 1) for d, i in enumerate(index))
            if self._cell_in_domain(level, cell_index):
                result.append(cell_index)
        return result

    def _existing_adjacent(self, level: int, index: Index) -> int:
        return sum((level, c) in self.cells for c in self.adjacent_cell_indices(level, index))

    def _is_hanging(self, level: int, index: Index) -> bool:
        return self._existing_adjacent(level, index) < len(self.adjacent_cell_indices(level, index))

    def position(self, level: int, index: Index) -> np.ndarray:
        return np.array(index, dtype=float) * 3.0**-level

    @property
    def max_level(self) -> int:
        return max(level for level, _ in self.cells)

    def cell(self, level: int, index: Index) -> Cell:
        return self.cells[(level, index)]

    def parent_vertices(self, cell: Cell) -> list[Vertex] | None:
        """
        Persistent corners of the parent of ``cell``, ``None`` for the root
        """
        if cell.level == 0:
            return None
        parent = self.cells[(cell.level - 1, cell.parent_index)]
        return [self.vertices[(parent.level, c)] for c in parent.corner_indices()]

    # structure

    def _new_cell(self, level: int, index: Index) -> Cell:
        cell = Cell(level, index)
        if self.problem is not None:
            cell.theta = cell_theta(cell, self.problem)
        self.cells[cell.key] = cell
        return cell

    def _sample_chi(self, level: int, index: Index) -> np.ndarray:
        key = (level, index)
        chi = self._chi_cache.get(key)
        if chi is None:
            if self.problem is None:
                chi = np.zeros(self.channels, dtype=complex)
            else:
                chi = self.problem.chi(self.position(level, index))
            self._chi_cache[key] = chi
        return chi

    def _new_payload(self, level: int, index: Index, u: np.ndarray) -> VertexPayload:
        payload = VertexPayload(self.channels, self.coupled)
        payload.chi[:] = self._sample_chi(level, index)
        if not self.is_boundary(level, index):
            payload.u[:] = u
        return payload

    def _create_vertex(self, level: int, index: Index, u: np.ndarray) -> Vertex:
        if len(self.vertices) >= self.max_vertices:
            raise CapacityError(f"vertex cap of {self.max_vertices} exceeded")
        vertex = Vertex(level, index, self._new_payload(level, index, u), self.is_boundary(level, index))
        self.vertices[vertex.key] = vertex
        return vertex

    def value_at(self, level: int, index: Index) -> np.ndarray:
        """
        Solution at a grid position, interpolated from coarser levels if no
        persistent vertex exists there

        :raises ContractError: if the position is not adjacent to any cell of ``level``
        """
        vertex = self.vertices.get((level, index))
        if vertex is not None:
            return vertex.payload.u
        if self.is_boundary(level, index):
            return np.zeros(self.channels, dtype=complex)
        for cell_index in self.adjacent_cell_indices(level, index):
            if (level, cell_index) in self.cells:
                parent = tuple(i // 3 for i in cell_index)
                corners = Cell(level - 1, parent).corner_indices()
                parent_u = np.array([self.value_at(level - 1, c) for c in corners])
                return transfer.prolong(parent_u, tuple(v - 3 * c for v, c in zip(index, parent)))
        raise ContractError(f"vertex {(level, index)} is not adjacent to any cell")

    def refine_cell(self, cell: Cell) -> bool:
        """
        Creates the ``3^p`` children of ``cell``. New vertices get the
        interpolated parent solution and zero helper values.

        :param cell: an unrefined cell
        :type cell: :class:`Cell`
        :return: ``False`` if the refinement was vetoed by :attr:`h_min`
        :rtype: bool
        :raises ContractError: if the cell is already refined
        """
        if cell.refined:
            raise ContractError(f"cell {cell.key} is already refined")
        child_level = cell.level + 1
        if self.h_min is not None and 3.0**-child_level < self.h_min * (1.0 - 1e-12):
            _logger.debug("refinement of %s vetoed by h_min=%g", cell.key, self.h_min)
            return False
        parent_u = np.array([self.value_at(cell.level, c) for c in cell.corner_indices()])
        cell.refined = True
        for child_index in cell.child_indices():
            self._new_cell(child_level, child_index)
        base = [3 * i for i in cell.index]
        for thirds in itertools.product(range(4), repeat=self.p):
            index = tuple(b + t for b, t in zip(base, thirds))
            if (child_level, index) in self.vertices or self._is_hanging(child_level, index):
                continue
            self._create_vertex(child_level, index, transfer.prolong(parent_u, thirds))
        self.dirty = True
        _logger.debug("refined cell %s", cell.key)
        return True

    def erase_subtree(self, cell: Cell) -> None:
        """
        Removes all descendants of ``cell`` and the vertices only they were adjacent to

        :param cell: a refined cell
        :type cell: :class:`Cell`
        :raises ContractError: if the cell is unrefined
        """
        if not cell.refined:
            raise ContractError(f"cannot erase the subtree of unrefined cell {cell.key}")
        removed: list[Cell] = []
        stack = [cell]
        while stack:
            current = stack.pop()
            if current.refined:
                children = [self.cells[(current.level + 1, c)] for c in current.child_indices()]
                removed.extend(children)
                stack.extend(children)
        for child in removed:
            del self.cells[child.key]
        cell.refined = False
        candidates = {(child.level, corner) for child in removed for corner in child.corner_indices()}
        for level, index in candidates:
            if (level, index) in self.vertices and self._is_hanging(level, index):
                del self.vertices[(level, index)]
        self.dirty = True
        _logger.debug("erased %d cells below %s", len(removed), cell.key)

    def inject_hierarchy(self, min_level: int = 1) -> None:
        """
        Copies the solution of every c-point onto the coinciding coarse
        vertex, finest level first, down to ``min_level``
        """
        if self.dirty:
            self.classify()
        for level in range(self.max_level, min_level, -1):
            for vertex in [v for v in self.vertices.values() if v.level == level and v.c_point]:
                coarse = self.vertices.get((level - 1, tuple(i // 3 for i in vertex.index)))
                if coarse is not None and not vertex.boundary:
                    coarse.payload.u[:] = transfer.inject(vertex.payload.u, vertex.index)

    # classification

    def classify(self) -> None:
        """
        Recomputes ``refined``, ``c_point`` and ``succ`` of every persistent vertex, finest level first
        """
        for vertex in sorted(self.vertices.values(), key=lambda v: -v.level):
            self._classify_vertex(vertex)
        self.dirty = False

    def _classify_vertex(self, vertex: Vertex) -> None:
        level, index = vertex.key
        adjacent = [self.cells.get((level, c)) for c in self.adjacent_cell_indices(level, index)]
        vertex.refined = all(c is not None and c.refined for c in adjacent)
        vertex.c_point = level > 0 and all(i % 3 == 0 for i in index)
        if not vertex.refined:
            vertex.succ = 0
            return
        succ = None
        n = 3 ** (level + 1)
        for offset in itertools.product(range(-3, 4), repeat=self.p):
            fine_index = tuple(3 * i + o for i, o in zip(index, offset))
            if not all(0 <= i <= n for i in fine_index):
                continue
            child = self.vertices.get((level + 1, fine_index))
            if child is not None and (succ is None or child.succ < succ):
                succ = child.succ
        vertex.succ = 1 + (succ or 0)

    # traversal

    def traverse(self, events: TraversalEvents) -> None:
        """
        Depth-first traversal firing ``events``. Every persistent vertex is
        touched first before any adjacent same-level cell is entered and
        touched last after all of them have been left.

        :param events: the event handlers
        :type events: :class:`TraversalEvents`
        :raises ContractError: if a vertex is still alive after the traversal
        """
        self._live = {}
        self._remaining = {}
        self._visit(self.cells[(0, (0,) * self.p)], None, events)
        if self._live:
            raise ContractError(f"{len(self._live)} vertices were not released by the traversal")

    def _hanging_vertex(self, level: int, index: Index, parent_vertices: list[Vertex], cell: Cell) -> Vertex:
        payload = VertexPayload(self.channels, self.coupled)
        payload.chi[:] = self._sample_chi(level, index)
        boundary = self.is_boundary(level, index)
        if not boundary:
            parent_u = np.array([v.payload.u for v in parent_vertices])
            payload.u[:] = transfer.prolong(parent_u, tuple(v - 3 * c for v, c in zip(index, cell.parent_index)))
        return Vertex(level, index, payload, boundary, hanging=True)

    def _visit(self, cell: Cell, parent_vertices: list[Vertex] | None, events: TraversalEvents) -> None:
        vertices = []
        for corner in cell.corner_indices():
            key = (cell.level, corner)
            vertex = self._live.get(key)
            if vertex is None:
                vertex = self.vertices.get(key)
                if vertex is not None:
                    events.touch_vertex_first_time(vertex, cell, parent_vertices)
                else:
                    assert parent_vertices is not None
                    vertex = self._hanging_vertex(cell.level, corner, parent_vertices, cell)
                    events.create_hanging_vertex(vertex, cell, parent_vertices)
                self._live[key] = vertex
                self._remaining[key] = self._existing_adjacent(cell.level, corner)
            vertices.append(vertex)
        events.enter_cell(cell, vertices, parent_vertices)
        if cell.refined:
            for child_index in cell.child_indices():
                self._visit(self.cells[(cell.level + 1, child_index)], vertices, events)
        events.leave_cell(cell, vertices, parent_vertices)
        for vertex in vertices:
            key = vertex.key
            self._remaining[key] -= 1
            if self._remaining[key] == 0:
                del self._remaining[key]
                del self._live[key]
                if vertex.hanging:
                    events.destroy_hanging_vertex(vertex, cell, parent_vertices)
                else:
                    events.touch_vertex_last_time(vertex, cell, parent_vertices)

    # queries

    def fine_grid_vertices(self) -> list[Vertex]:
        """
        Persistent vertices that are not refined, i.e. the vertices carrying unknowns or boundary values
        """
        if self.dirty:
            self.classify()
        return [v for v in self.vertices.values() if not v.refined]

    def unknowns(self) -> list[Vertex]:
        """
        Fine-grid vertices off the boundary
        """
        return [v for v in self.fine_grid_vertices() if not v.boundary]

    def unrefined_cells(self) -> Iterator[Cell]:
        return (c for c in self.cells.values() if not c.refined)

    def is_regular(self) -> bool:
        top = self.max_level
        return sum(1 for c in self.cells.values() if c.level == top) == 3 ** (self.p * top)

    def leaf_volume(self) -> float:
        return sum(c.h**self.p for c in self.unrefined_cells())

    def dump(self, stream: TextIO) -> None:
        """
        Writes one line per unrefined cell ``level i0 .. theta`` followed by
        one line per persistent vertex ``level i0 .. re(u) im(u)``, repeated
        per channel
        """
        for cell in sorted(self.unrefined_cells(), key=lambda c: c.key):
            stream.write(" ".join(str(x) for x in (cell.level, *cell.index)) + f" {float(cell.theta)!r}\n")
        for key in sorted(self.vertices):
            vertex = self.vertices[key]
            values = " ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in vertex.payload.u)
            stream.write(" ".join(str(x) for x in (vertex.level, *vertex.index)) + f" {values}\n")
