"""
Feature-based dynamic adaptivity. After every sweep the second differences
of the solution are binned, the vertices in the top bins mark their cells for
refinement and the vertices in the bottom bins mark their parents for erasing.
"""

from __future__ import annotations
from collections import Counter
from typing import TYPE_CHECKING, Callable, NamedTuple
import logging
import numpy as np
from .exceptions import ConfigurationError

if TYPE_CHECKING:  # pragma: no cover
    from .solver import Solver, SweepRecord
    from .spacetree import Key, Spacetree, Vertex

_logger = logging.getLogger(__name__)


class AmrConfig(NamedTuple):
    """
    Adaptivity settings

    :ivar h_max: coarsest admissible mesh width
    :vartype h_max: float
    :ivar h_min: finest admissible mesh width
    :vartype h_min: float
    :ivar refine_fraction: targeted share of vertices marked for refinement
    :vartype refine_fraction: float
    :ivar erase_fraction: targeted share of vertices marked for erasing
    :vartype erase_fraction: float
    :ivar bin_count: number of equal-width feature bins
    :vartype bin_count: int
    :ivar convergence_veto: vertices with ``|r/diag|`` above this do not change the grid
    :vartype convergence_veto: float
    """

    h_max: float
    h_min: float
    refine_fraction: float = 0.10
    erase_fraction: float = 0.02
    bin_count: int = 20
    convergence_veto: float = 1e-2

    def validate(self) -> None:
        """
        :raises ConfigurationError: for inconsistent settings
        """
        if not 0.0 < self.h_min <= self.h_max:
            raise ConfigurationError(f"need 0 < h_min <= h_max, got h_min={self.h_min}, h_max={self.h_max}")
        for name in ("refine_fraction", "erase_fraction"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must be within (0, 1), got {getattr(self, name)}")
        if self.bin_count < 2:
            raise ConfigurationError(f"bin_count must be at least 2, got {self.bin_count}")


class Marks(NamedTuple):
    """
    Outcome of :func:`mark`. Vetoes are counted by cause.
    """

    refine: frozenset[Key]
    erase: frozenset[Key]
    vetoes: Counter[str]


class AmrStats(NamedTuple):
    refined: int
    erased: int
    vetoes: Counter[str]


def level_for_width(h_max: float) -> int:
    """
    Coarsest level with a mesh width of at most ``h_max``

    >>> level_for_width(1 / 9), level_for_width(0.1)
    (2, 3)
    """
    level = 1
    while 3.0**-level > h_max * (1.0 + 1e-12):
        level += 1
    return level


def finest_level_for(h_min: float) -> int:
    """
    Finest level with a mesh width of at least ``h_min``

    >>> finest_level_for(1 / 81), finest_level_for(0.001)
    (4, 6)
    """
    level = 0
    while 3.0 ** -(level + 1) >= h_min * (1.0 - 1e-12):
        level += 1
    return level


def feature(vertex: Vertex, neighbours: list[tuple[Vertex | None, Vertex | None]]) -> float:
    """
    Largest modulus of the second differences of ``u`` along the axes,
    maximised over the channels. Axes lacking a neighbour contribute 0.

    :param vertex: a persistent vertex
    :type vertex: :class:`treemg.spacetree.Vertex`
    :param neighbours: ``(lower, upper)`` same-level neighbour per axis
    :type neighbours: list[tuple[Vertex | None, Vertex | None]]
    :return: the feature ``s``
    :rtype: float
    """
    s = 0.0
    u = vertex.payload.u
    for lower, upper in neighbours:
        if lower is None or upper is None:
            continue
        s = max(s, float(np.max(np.abs(lower.payload.u - 2.0 * u + upper.payload.u))))
    return s


def compute_features(tree: Spacetree) -> dict[Key, float]:
    """
    Evaluates :func:`feature` at every persistent vertex off the boundary and
    stores it in the payload. Returns the features of the fine-grid vertices.
    """
    if tree.dirty:
        tree.classify()
    result: dict[Key, float] = {}
    for vertex in tree.vertices.values():
        if vertex.boundary:
            vertex.payload.s = 0.0
            continue
        neighbours = []
        for axis in range(tree.p):
            step = tuple(int(d == axis) for d in range(tree.p))
            lower = tree.vertices.get((vertex.level, tuple(i - e for i, e in zip(vertex.index, step))))
            upper = tree.vertices.get((vertex.level, tuple(i + e for i, e in zip(vertex.index, step))))
            neighbours.append((lower, upper))
        vertex.payload.s = feature(vertex, neighbours)
        if not vertex.refined:
            result[vertex.key] = vertex.payload.s
    return result


def _closest_bin_count(counts: list[int], total: int, fraction: float) -> int:
    # taking no bin at all is a candidate too
    best, best_error = 0, fraction
    share = 0
    for k, count in enumerate(counts, start=1):
        share += count
        error = abs(share / total - fraction)
        if error < best_error:
            best, best_error = k, error
    return best


def select(features: dict[Key, float], fraction: float, bin_count: int, top: bool) -> set[Key]:
    """
    Vertices of the top (or bottom) bins whose share is closest to ``fraction``,
    fewer bins win ties. No vertex is selected if the first bin alone
    overshoots the target further than an empty selection.

    >>> features = {(1, (i,)): float(i) for i in range(1, 101)}
    >>> sorted(i for _, (i,) in select(features, 0.1, 20, top=True))[0]
    91
    >>> features.update({(1, (i,)): 0.0 for i in range(101, 151)})
    >>> select(features, 0.02, 20, top=False)
    set()
    """
    if not features:
        return set()
    values = np.array(list(features.values()))
    low, high = float(values.min()), float(values.max())
    if high - low <= 1e-14 * max(abs(high), 1.0):
        return set()
    width = (high - low) / bin_count
    bins = {key: min(int((s - low) / width), bin_count - 1) for key, s in features.items()}
    histogram = Counter(bins.values())
    order = range(bin_count - 1, -1, -1) if top else range(bin_count)
    counts = [histogram.get(b, 0) for b in order]
    k = _closest_bin_count(counts, len(features), fraction)
    chosen = set(list(order)[:k])
    return {key for key, b in bins.items() if b in chosen}


def _converging(vertex: Vertex, config: AmrConfig) -> bool:
    payload = vertex.payload
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(payload.r / payload.diag)
    return bool(np.all(np.isfinite(ratio)) and np.max(ratio) <= config.convergence_veto)


def mark(
    tree: Spacetree,
    config: AmrConfig,
    features: dict[Key, float] | None = None,
    fresh: frozenset[Key] = frozenset(),
) -> Marks:
    """
    Selects refinement and erase candidates among the fine-grid vertices and
    applies the vetoes. Vertices created by the previous refinement are no
    erase candidates, their interpolated values have no second differences yet.

    :param tree: a tree whose residuals are current
    :type tree: :class:`treemg.spacetree.Spacetree`
    :param config: adaptivity settings
    :type config: :class:`AmrConfig`
    :param features: features per vertex, computed with :func:`compute_features` if omitted
    :type features: dict | None
    :param fresh: vertices created by the last grid change
    :type fresh: frozenset
    :return: the marks
    :rtype: :class:`Marks`
    """
    if features is None:
        features = compute_features(tree)
    vetoes: Counter[str] = Counter()
    refine = set()
    for key in select(features, config.refine_fraction, config.bin_count, top=True):
        vertex = tree.vertices[key]
        if 3.0 ** -(vertex.level + 1) < config.h_min * (1.0 - 1e-12):
            vetoes["h_min"] += 1
        elif not _converging(vertex, config):
            vetoes["convergence"] += 1
        else:
            refine.add(key)
    erase = set()
    settled = {key: s for key, s in features.items() if key not in fresh}
    for key in select(settled, config.erase_fraction, config.bin_count, top=False):
        vertex = tree.vertices[key]
        if key in refine:
            vetoes["overlap"] += 1
        elif 3.0 ** -(vertex.level - 1) > config.h_max * (1.0 + 1e-12):
            vetoes["h_max"] += 1
        elif not _converging(vertex, config):
            vetoes["convergence"] += 1
        else:
            erase.add(key)
    return Marks(frozenset(refine), frozenset(erase), vetoes)


def _erasable(tree: Spacetree, parent_key: Key, marks: Marks, min_level: int) -> bool:
    parent = tree.cells.get(parent_key)
    if parent is None or not parent.refined or parent.level < min_level:
        return False
    level = parent.level + 1
    for child_index in parent.child_indices():
        if tree.cells[(level, child_index)].refined:
            return False
    base = [3 * i for i in parent.index]
    for offset in np.ndindex(*(4,) * tree.p):
        key = (level, tuple(b + o for b, o in zip(base, offset)))
        if key in marks.refine:
            return False
        vertex = tree.vertices.get(key)
        inner = all(o in (1, 2) for o in offset)
        if inner and vertex is not None and not vertex.boundary and key not in marks.erase:
            return False
    return True


def apply_marks(tree: Spacetree, marks: Marks, min_level: int = 1) -> AmrStats:
    """
    Erases the parents of erase-marked vertices whose children are all
    unrefined and whose inner vertices are all marked, then refines every
    unrefined cell adjacent to a refine-marked vertex. Refinement wins over
    erasing.

    :return: counts of refined and erased cells, vetoes are taken over from ``marks``
    :rtype: :class:`AmrStats`
    """
    to_refine = set()
    for level, index in marks.refine:
        for cell_index in tree.adjacent_cell_indices(level, index):
            cell = tree.cells.get((level, cell_index))
            if cell is not None and not cell.refined:
                to_refine.add(cell.key)
    parents = set()
    for level, index in marks.erase:
        for cell_index in tree.adjacent_cell_indices(level, index):
            if (level, cell_index) in tree.cells:
                parents.add((level - 1, tuple(i // 3 for i in cell_index)))
    erased = 0
    vetoes = Counter(marks.vetoes)
    for key in sorted(parents):
        if any(c[0] == key[0] + 1 and tuple(i // 3 for i in c[1]) == key[1] for c in to_refine):
            vetoes["overlap"] += 1
            continue
        if _erasable(tree, key, marks, min_level):
            tree.erase_subtree(tree.cells[key])
            erased += 1
    refined = 0
    for key in sorted(to_refine):
        cell = tree.cells.get(key)
        if cell is not None and not cell.refined and tree.refine_cell(cell):
            refined += 1
    _logger.debug("adapted grid: %d cells refined, %d erased", refined, erased)
    return AmrStats(refined, erased, vetoes)


def fmg_unfold(
    solver: Solver, max_sweeps: int, observer: Callable[[SweepRecord], bool] | None = None
) -> list[SweepRecord]:
    """
    Solves on a grid that unfolds from ``h_max`` towards ``h_min``. Coarse
    solutions serve as initial guesses of the refined regions.

    :param solver: a solver with adaptivity settings, set up on the ``h_max`` grid
    :type solver: :class:`treemg.solver.Solver`
    :param max_sweeps: sweep budget
    :type max_sweeps: int
    :param observer: called after each sweep, returning ``False`` stops the run
    :type observer: Callable[[SweepRecord], bool] | None
    :return: the sweep records
    :rtype: list[SweepRecord]
    :raises ConfigurationError: if the solver has no adaptivity settings
    """
    if solver.amr is None:
        raise ConfigurationError("grid unfolding needs adaptivity settings")
    start = level_for_width(solver.amr.h_max)
    if solver.tree.max_level != start or not solver.tree.is_regular():
        raise ConfigurationError(f"grid unfolding starts on the regular level {start}")
    _logger.info("unfolding grid from h=%g towards h=%g", solver.amr.h_max, solver.amr.h_min)
    return solver.solve(max_sweeps, observer)
