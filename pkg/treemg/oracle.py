"""
Dense reference implementation on regular grids.

Assembles the global matrices of every level, solves small systems directly
and runs the cycles as plain matrix-vector code. Interior vertices of a level
are numbered with axis 0 fastest. Everything here is meant for small grids,
the size of a level is capped.
"""

from __future__ import annotations
from typing import TYPE_CHECKING, Callable, NamedTuple
import itertools
import logging
import numpy as np
from . import elemops, transfer
from .cycle import CycleKind
from .exceptions import CapacityError, ContractError, SingularDiagonalError
from .omega import omega_of
from .problems import cell_theta
from .spacetree import Cell

if TYPE_CHECKING:  # pragma: no cover
    from .omega import OmegaPolicy
    from .problems import ProblemSpec
    from .spacetree import Index

_logger = logging.getLogger(__name__)

DEFAULT_CAP = 10_000
PIVOT_THRESHOLD = 1e-300

ThetaField = float | Callable[[Cell], float]
PhiField = complex | Callable[[Cell], complex]


class Solution(NamedTuple):
    x: np.ndarray
    residual: float


class _GridVertex(NamedTuple):
    # what omega_of needs to know about a vertex of a regular tree
    level: int
    succ: int
    c_point: bool


def interior_count(p: int, level: int) -> int:
    """
    >>> interior_count(2, 2)
    64
    """
    return (3**level - 1) ** p


def interior_indices(p: int, level: int) -> list[Index]:
    """
    Level indices of the interior vertices in oracle order (axis 0 fastest)

    >>> interior_indices(2, 1)
    [(1, 1), (2, 1), (1, 2), (2, 2)]
    """
    side = range(1, 3**level)
    return [tuple(reversed(index)) for index in itertools.product(side, repeat=p)]


def _numbering(p: int, level: int) -> dict[Index, int]:
    return {index: k for k, index in enumerate(interior_indices(p, level))}


def _check_size(p: int, level: int, cap: int) -> int:
    elemops.check_dim(p)
    if level < 1:
        raise ContractError(f"a level needs interior vertices, got level {level}")
    n = interior_count(p, level)
    if n > cap:
        raise CapacityError(f"level {level} in {p} dimensions has {n} unknowns, cap is {cap}")
    return n


def _cells(p: int, level: int):
    for index in itertools.product(range(3**level), repeat=p):
        yield Cell(level, index)


def _value(field: float | complex | Callable[[Cell], float | complex], cell: Cell):
    return field(cell) if callable(field) else field


def dense_assemble(
    p: int, level: int, theta: ThetaField = 0.0, phi: PhiField = 0j, cap: int = DEFAULT_CAP
) -> np.ndarray:
    """
    Global matrix of the interior vertices of a regular grid

    :param p: spatial dimension
    :type p: int
    :param level: grid level, the mesh width is ``3^-level``
    :type level: int
    :param theta: rotation, constant or evaluated per cell
    :type theta: float | Callable[[Cell], float]
    :param phi: shift, constant or evaluated per cell
    :type phi: complex | Callable[[Cell], complex]
    :param cap: largest admissible number of unknowns
    :type cap: int
    :return: complex matrix of size ``(3^level - 1)^p``
    :rtype: numpy.ndarray
    :raises CapacityError: if the grid has more than ``cap`` unknowns
    """
    n = _check_size(p, level, cap)
    numbering = _numbering(p, level)
    matrix = np.zeros((n, n), dtype=complex)
    h = 3.0**-level
    for cell in _cells(p, level):
        local = elemops.cell_operator(p, h, _value(theta, cell), _value(phi, cell)).matrix
        rows = [numbering.get(corner) for corner in cell.corner_indices()]
        for k, row in enumerate(rows):
            if row is None:
                continue
            for l, col in enumerate(rows):
                if col is not None:
                    matrix[row, col] += local[k, l]
    return matrix


def dense_mass(p: int, level: int, theta: ThetaField = 0.0, cap: int = DEFAULT_CAP) -> np.ndarray:
    """
    Global scaled mass matrix ``h_elem^p * M`` of the interior vertices
    """
    n = _check_size(p, level, cap)
    numbering = _numbering(p, level)
    matrix = np.zeros((n, n), dtype=complex)
    h = 3.0**-level
    for cell in _cells(p, level):
        local = elemops.complex_width(h, _value(theta, cell)) ** p * elemops.reference_mass(p)
        rows = [numbering.get(corner) for corner in cell.corner_indices()]
        for k, row in enumerate(rows):
            for l, col in enumerate(rows):
                if row is not None and col is not None:
                    matrix[row, col] += local[k, l]
    return matrix


def dense_load(
    p: int,
    level: int,
    chi: Callable[[np.ndarray], complex],
    theta: ThetaField = 0.0,
    cap: int = DEFAULT_CAP,
) -> np.ndarray:
    """
    Consistent load of the interior vertices. ``chi`` is sampled at all
    vertices, boundary vertices included.
    """
    n = _check_size(p, level, cap)
    numbering = _numbering(p, level)
    load = np.zeros(n, dtype=complex)
    h = 3.0**-level
    for cell in _cells(p, level):
        corners = cell.corner_indices()
        values = np.array([chi(np.array(corner, dtype=float) * h) for corner in corners], dtype=complex)
        local = elemops.cell_load(p, h, _value(theta, cell), values)
        for k, corner in enumerate(corners):
            row = numbering.get(corner)
            if row is not None:
                load[row] += local[k]
    return load


def dense_assemble_coupled(
    p: int,
    level: int,
    theta: ThetaField,
    phis: list[PhiField],
    couplings: np.ndarray,
    cap: int = DEFAULT_CAP,
) -> np.ndarray:
    """
    Block matrix of a coupled multichannel system. Unknowns are ordered
    vertex first, i.e. entry ``k*c + i`` is channel ``i`` of vertex ``k``.
    Channel ``i`` sees channel ``j`` through ``couplings[i, j]`` times the
    scaled mass matrix.
    """
    c = len(phis)
    blocks = [dense_assemble(p, level, theta, phi, cap) for phi in phis]
    mass = dense_mass(p, level, theta, cap)
    n = blocks[0].shape[0]
    matrix = np.kron(mass, np.asarray(couplings, dtype=complex))
    for i, block in enumerate(blocks):
        matrix[i::c, i::c] += block
    assert matrix.shape == (n * c, n * c)
    return matrix


def direct_solve(matrix: np.ndarray, rhs: np.ndarray) -> Solution:
    """
    Gaussian elimination with partial pivoting

    >>> direct_solve(np.array([[1.0, 4.0, 1.0], [1.0, 6.0, -1.0], [2.0, -1.0, 2.0]]), np.array([7.0, 13.0, 5.0])).x.real.round(12).tolist()
    [5.0, 1.0, -2.0]

    :param matrix: square matrix, not modified
    :type matrix: numpy.ndarray
    :param rhs: right-hand side, not modified
    :type rhs: numpy.ndarray
    :return: the solution and the max norm of its residual
    :rtype: :class:`Solution`
    :raises SingularDiagonalError: if a pivot vanishes
    """
    a = np.array(matrix, dtype=complex)
    b = np.array(rhs, dtype=complex)
    n = len(b)
    if a.shape != (n, n):
        raise ContractError(f"matrix of shape {a.shape} does not match a right-hand side of length {n}")
    for k in range(n):
        pivot = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[pivot, k]) < PIVOT_THRESHOLD:
            raise SingularDiagonalError(f"matrix is singular in column {k}")
        if pivot != k:
            a[[k, pivot]] = a[[pivot, k]]
            b[[k, pivot]] = b[[pivot, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        b[k + 1 :] -= factors * b[k]
    x = np.zeros(n, dtype=complex)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    residual = float(np.max(np.abs(rhs - matrix @ x))) if n else 0.0
    return Solution(x, residual)


def prolongation_matrix(p: int, level: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """
    p-linear interpolation from the interior of ``level - 1`` to the interior of ``level``
    """
    n_fine = _check_size(p, level, cap)
    if level < 2:
        return np.zeros((n_fine, 0))
    coarse = _numbering(p, level - 1)
    matrix = np.zeros((n_fine, len(coarse)))
    for row, index in enumerate(interior_indices(p, level)):
        parent = tuple(i // 3 for i in index)
        weights = transfer.prolongation_weights(tuple(i - 3 * c for i, c in zip(index, parent)))
        for corner, weight in zip(Cell(level - 1, parent).corner_indices(), weights):
            col = coarse.get(corner)
            if col is not None and weight != 0.0:
                matrix[row, col] += weight
    return matrix


def injection_matrix(p: int, level: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """
    Copies the interior c-points of ``level`` onto ``level - 1``
    """
    fine = _numbering(p, level)
    _check_size(p, level, cap)
    coarse_indices = interior_indices(p, level - 1) if level > 1 else []
    matrix = np.zeros((len(coarse_indices), len(fine)))
    for row, index in enumerate(coarse_indices):
        matrix[row, fine[tuple(3 * i for i in index)]] = 1.0
    return matrix


def galerkin_deviation(fine: np.ndarray, coarse: np.ndarray, prolongation: np.ndarray) -> float:
    """
    Largest entry of ``P^T A_fine P - A_coarse``
    """
    return float(np.max(np.abs(prolongation.T @ fine @ prolongation - coarse)))


class DenseHierarchy:
    """
    Global matrices of all compute levels of a regular tree.

    :ivar p: spatial dimension
    :vartype p: int
    :ivar level: finest level
    :vartype level: int
    :ivar min_level: coarsest compute level
    :vartype min_level: int
    :ivar operators: matrix per level
    :vartype operators: dict[int, numpy.ndarray]
    :ivar prolongations: interpolation from the next coarser level, per level above ``min_level``
    :vartype prolongations: dict[int, numpy.ndarray]
    :ivar injections: injection onto the next coarser level, per level above ``min_level``
    :vartype injections: dict[int, numpy.ndarray]
    :ivar load: load vector of the finest level
    :vartype load: numpy.ndarray
    """

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        p: int,
        level: int,
        min_level: int = 1,
        theta: ThetaField = 0.0,
        phi: PhiField = 0j,
        chi: Callable[[np.ndarray], complex] | None = None,
        cap: int = DEFAULT_CAP,
    ):
        if not 1 <= min_level <= level:
            raise ContractError(f"need 1 <= min_level <= level, got min_level={min_level}, level={level}")
        self.p = p
        self.level = level
        self.min_level = min_level
        self.operators = {l: dense_assemble(p, l, theta, phi, cap) for l in self.levels}
        self.prolongations = {l: prolongation_matrix(p, l, cap) for l in self.levels[1:]}
        self.injections = {l: injection_matrix(p, l, cap) for l in self.levels[1:]}
        if chi is None:
            self.load = np.zeros(interior_count(p, level), dtype=complex)
        else:
            self.load = dense_load(p, level, chi, theta, cap)
        _logger.debug("assembled dense hierarchy p=%d levels %d..%d", p, min_level, level)

    @classmethod
    def from_problem(
        cls, problem: ProblemSpec, level: int, min_level: int = 1, channel: int = 0, cap: int = DEFAULT_CAP
    ) -> DenseHierarchy:
        """
        Hierarchy of one channel of ``problem``, with rotation and shift evaluated per cell
        """
        return cls(
            problem.p,
            level,
            min_level,
            theta=lambda cell: cell_theta(cell, problem),
            phi=lambda cell: complex(problem.phi(cell.centre)[channel]),
            chi=lambda x: complex(problem.chi(x)[channel]),
            cap=cap,
        )

    @property
    def levels(self) -> list[int]:
        return list(range(self.min_level, self.level + 1))

    def diagonal(self, level: int) -> np.ndarray:
        return np.diagonal(self.operators[level])

    def c_points(self, level: int) -> np.ndarray:
        return np.array([all(i % 3 == 0 for i in index) for index in interior_indices(self.p, level)])

    def masked(self, level: int) -> np.ndarray:
        """
        C-points of levels above the coarsest compute level
        """
        if level <= self.min_level:
            return np.zeros(interior_count(self.p, level), dtype=bool)
        return self.c_points(level)

    def omegas(self, policy: OmegaPolicy, level: int, n: int) -> np.ndarray:
        """
        Relaxation parameter of every interior vertex of ``level`` in iteration ``n``
        """
        succ = self.level - level
        return np.array(
            [
                omega_of(policy, _GridVertex(level, succ, bool(c)), n, self.min_level)  # type: ignore[arg-type]
                for c in self.c_points(level)
            ]
        )

    def inject(self, u: dict[int, np.ndarray]) -> None:
        """
        Overwrites the coarse levels of ``u`` with the injected finer solution
        """
        for level in reversed(self.levels[1:]):
            u[level - 1] = self.injections[level] @ u[level]

    def residuals(self, u: dict[int, np.ndarray]) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        """
        FAS residuals ``(r, r_hat)`` of every level, the finest level
        carries the load and coarser levels the restricted ``r_hat``
        """
        result: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        b = self.load
        for level in reversed(self.levels):
            u_hat = u[level]
            if level > self.min_level:
                u_hat = u[level] - self.prolongations[level] @ u[level - 1]
            operator = self.operators[level]
            result[level] = (b - operator @ u[level], b - operator @ u_hat)
            if level > self.min_level:
                b = self.prolongations[level].T @ result[level][1]
        return result


def _initial_state(hierarchy: DenseHierarchy, u0: np.ndarray | None) -> dict[int, np.ndarray]:
    u = {level: np.zeros(interior_count(hierarchy.p, level), dtype=complex) for level in hierarchy.levels}
    if u0 is not None:
        u[hierarchy.level] = np.array(u0, dtype=complex)
    hierarchy.inject(u)
    return u


def _textbook(hierarchy: DenseHierarchy, policy: OmegaPolicy, n: int, u: dict[int, np.ndarray], omega_cg):
    h = hierarchy
    omega = policy.smoothing_weight(n)
    damping = omega if omega_cg is None else omega_cg
    sc = {}
    r = h.load - h.operators[h.level] @ u[h.level]
    for level in reversed(h.levels):
        sc[level] = omega * r / h.diagonal(level)
        if level > h.min_level:
            r = h.prolongations[level].T @ r
    corr = sc[h.min_level]
    for level in h.levels[1:]:
        corr = sc[level] + damping * (h.prolongations[level] @ corr)
    u[h.level] += corr


def _bottom_up(hierarchy: DenseHierarchy, policy: OmegaPolicy, n: int, u: dict[int, np.ndarray]):
    h = hierarchy
    h.inject(u)
    residuals = h.residuals(u)
    sc, si = {}, {}
    for level in h.levels:
        sc[level] = h.omegas(policy, level, n) * residuals[level][0] / h.diagonal(level)
        if level > h.min_level:
            si[level - 1] = h.injections[level] @ sc[level]
    corr: dict[int, np.ndarray] = {}
    for level in h.levels:
        corr[level] = sc[level].copy()
        if level > h.min_level:
            corr[level] += h.prolongations[level] @ corr[level - 1]
            if policy.bpx:
                corr[level] -= h.prolongations[level] @ si[level - 1]
        u[level] += corr[level]


class _Pipeline(NamedTuple):
    staged: dict[int, np.ndarray]
    from_finer: dict[int, np.ndarray]
    injected: dict[int, np.ndarray]


def _empty_pipeline(hierarchy: DenseHierarchy) -> _Pipeline:
    def zeros() -> dict[int, np.ndarray]:
        return {l: np.zeros(interior_count(hierarchy.p, l), dtype=complex) for l in hierarchy.levels}

    return _Pipeline(zeros(), zeros(), zeros())


def _top_down(
    hierarchy: DenseHierarchy,
    policy: OmegaPolicy,
    n: int,
    u: dict[int, np.ndarray],
    pipeline: _Pipeline,
    bpx: bool,
) -> _Pipeline:
    h = hierarchy
    total: dict[int, np.ndarray] = {}
    for level in h.levels:
        total[level] = pipeline.staged[level].copy()
        if level > h.min_level:
            total[level] += h.prolongations[level] @ total[level - 1]
            if bpx:
                unmasked = ~h.masked(level)
                total[level] -= unmasked * (h.prolongations[level] @ pipeline.injected[level - 1])
        u[level] += total[level] + pipeline.from_finer[level]
    residuals = h.residuals(u)
    result = _empty_pipeline(h)
    omega_policy = policy._replace(hb_mask=False) if bpx else policy
    for level in reversed(h.levels):
        update = h.omegas(omega_policy, level, n) * residuals[level][0] / h.diagonal(level)
        staged = np.where(h.masked(level), 0.0, update) if bpx else update
        result.staged[level][:] = staged
        if level > h.min_level:
            result.from_finer[level - 1][:] = h.injections[level] @ (result.from_finer[level] + staged)
            result.injected[level - 1][:] = h.injections[level] @ update
    return result


def reference_cycles(
    kind: CycleKind,
    hierarchy: DenseHierarchy,
    policy: OmegaPolicy,
    cycles: int,
    u0: np.ndarray | None = None,
    omega_cg: complex | None = None,
) -> dict[int, np.ndarray]:
    """
    Runs ``cycles`` cycles of ``kind`` in dense form. For the top-down
    kinds one cycle is one traversal, so their corrections lag one cycle
    behind the other kinds.

    :param kind: cycle kind
    :type kind: :class:`treemg.cycle.CycleKind`
    :param hierarchy: the matrices
    :type hierarchy: :class:`DenseHierarchy`
    :param policy: relaxation parameters
    :type policy: :class:`treemg.omega.OmegaPolicy`
    :param cycles: number of cycles
    :type cycles: int
    :param u0: initial guess of the finest level, injected onto the coarser ones
    :type u0: numpy.ndarray | None
    :param omega_cg: coarse grid damping of ``textbookAdd``, defaults to the smoother weight
    :type omega_cg: complex | None
    :return: solution per level
    :rtype: dict[int, numpy.ndarray]
    """
    u = _initial_state(hierarchy, u0)
    pipeline = _empty_pipeline(hierarchy)
    for n in range(1, cycles + 1):
        match kind:
            case CycleKind.TEXTBOOK_ADD:
                _textbook(hierarchy, policy, n, u, omega_cg)
            case CycleKind.BU_FAS:
                _bottom_up(hierarchy, policy, n, u)
            case CycleKind.TD_ADD:
                pipeline = _top_down(hierarchy, policy, n, u, pipeline, bpx=False)
            case CycleKind.TD_BPX:
                pipeline = _top_down(hierarchy, policy, n, u, pipeline, bpx=True)
    return u
