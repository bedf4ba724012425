from __future__ import annotations
from collections import Counter
from typing import TYPE_CHECKING, Callable, NamedTuple
import logging
import numpy as np
from . import amr
from .cycle import CycleKind
from .discretisation import Discretisation
from .environment import Environment, default_environment
from .exceptions import ConfigurationError
from .spacetree import DEFAULT_MAX_VERTICES, Key, Spacetree

if TYPE_CHECKING:  # pragma: no cover
    from .cycle import CycleDriver
    from .omega import OmegaPolicy
    from .problems import ProblemSpec

_logger = logging.getLogger(__name__)


class SweepRecord(NamedTuple):
    """
    State after one sweep

    :ivar sweep: iteration counter
    :vartype sweep: int
    :ivar updates: cumulative fine-grid unknown updates
    :vartype updates: int
    :ivar vertex_count: fine-grid unknowns of the current grid
    :vartype vertex_count: int
    :ivar residual: residual per unknown and channel, shape ``(n, c)``
    :vartype residual: numpy.ndarray
    :ivar widths: mesh width per unknown
    :vartype widths: numpy.ndarray
    :ivar refined: cells refined after the sweep
    :vartype refined: int
    :ivar erased: subtrees erased after the sweep
    :vartype erased: int
    :ivar vetoes: vetoed grid changes by cause
    :vartype vetoes: collections.Counter
    """

    sweep: int
    updates: int
    vertex_count: int
    residual: np.ndarray
    widths: np.ndarray
    refined: int = 0
    erased: int = 0
    vetoes: Counter[str] = Counter()


class Solver:
    """
    Runs the cycles of one driver on one tree.

    :ivar tree: the grid
    :vartype tree: :class:`treemg.spacetree.Spacetree`
    :ivar disc: the discretisation
    :vartype disc: :class:`treemg.discretisation.Discretisation`
    :ivar driver: the cycle driver
    :vartype driver: :class:`treemg.cycle.CycleDriver`
    :ivar amr: adaptivity settings, ``None`` for fixed grids
    :vartype amr: :class:`treemg.amr.AmrConfig` | None
    :ivar reference_cost: unknowns of one regular sweep on the finest admissible grid
    :vartype reference_cost: int
    :ivar fresh: vertices created by the last grid change, spared from erasing in the next sweep
    :vartype fresh: frozenset

    :param level: initial regular level, defaults to the ``h_max`` level of adaptive runs
    :type level: int | None
    :param seed: seed of a random complex initial guess, zero initial guess if ``None``
    :type seed: int | None
    """

    # pylint: disable=too-many-arguments,too-many-instance-attributes
    def __init__(
        self,
        problem: ProblemSpec,
        kind: CycleKind,
        policy: OmegaPolicy,
        *,
        level: int | None = None,
        min_level: int = 1,
        amr_config: amr.AmrConfig | None = None,
        omega_cg: complex | None = None,
        seed: int | None = None,
        check_injection: bool = False,
        env: Environment | None = None,
        max_vertices: int = DEFAULT_MAX_VERTICES,
    ):
        if amr_config is not None:
            amr_config.validate()
            if level is None:
                level = amr.level_for_width(amr_config.h_max)
            reference_level = max(amr.finest_level_for(amr_config.h_min), level)
        elif level is None:
            raise ConfigurationError("fixed grid runs need a level")
        else:
            reference_level = level
        if kind is CycleKind.TEXTBOOK_ADD and amr_config is not None:
            raise ConfigurationError("textbookAdd is only supported on regular grids")
        self.problem = problem
        self.amr = amr_config
        self.tree = Spacetree.build_regular(problem.p, level, problem, max_vertices)
        self.tree.h_min = amr_config.h_min if amr_config is not None else None
        self.disc = Discretisation(self.tree, problem, min_level)
        self.driver = self._create_driver(env or default_environment(), kind, policy, omega_cg, check_injection)
        self.reference_cost = (3**reference_level - 1) ** problem.p
        self.n = 0
        self.updates = 0
        self.fresh: frozenset[Key] = frozenset()
        if seed is not None:
            self.randomise(seed)

    def __repr__(self) -> str:
        return f"Solver(problem={self.problem!r}, driver={self.driver!r})"

    def _create_driver(
        self,
        env: Environment,
        kind: CycleKind,
        policy: OmegaPolicy,
        omega_cg: complex | None,
        check_injection: bool,
    ) -> CycleDriver:
        if kind.value not in env:
            raise ConfigurationError(f"no driver registered for '{kind.value}'")
        driver_class = env[kind.value]
        if kind is CycleKind.TEXTBOOK_ADD:
            return driver_class(self.disc, policy, omega_cg=omega_cg)  # type: ignore[call-arg]
        if kind in (CycleKind.TD_ADD, CycleKind.TD_BPX):
            return driver_class(self.disc, policy, check_injection=check_injection)  # type: ignore[call-arg]
        return driver_class(self.disc, policy)

    def randomise(self, seed: int) -> None:
        """
        Sets a uniformly distributed complex initial guess on the unknowns
        and injects it down the hierarchy
        """
        rng = np.random.default_rng(seed)
        channels = self.tree.channels
        for key in sorted(self.tree.vertices):
            vertex = self.tree.vertices[key]
            if not vertex.boundary:
                vertex.payload.u[:] = rng.uniform(-1.0, 1.0, channels) + 1j * rng.uniform(-1.0, 1.0, channels)
        self.tree.inject_hierarchy(self.disc.min_level)

    def sweep(self) -> SweepRecord:
        """
        Runs one cycle and adapts the grid afterwards

        :return: the state after the cycle
        :rtype: :class:`SweepRecord`
        """
        self.n += 1
        self.driver.cycle(self.n)
        unknowns = self.tree.unknowns()
        residual = np.array([v.payload.r for v in unknowns]).reshape(len(unknowns), self.tree.channels)
        widths = np.array([v.h for v in unknowns])
        self.updates += len(unknowns)
        record = SweepRecord(self.n, self.updates, len(unknowns), residual, widths)
        if self.amr is not None:
            marks = amr.mark(self.tree, self.amr, fresh=self.fresh)
            before = set(self.tree.vertices)
            stats = amr.apply_marks(self.tree, marks, self.disc.min_level)
            self.fresh = frozenset(set(self.tree.vertices) - before)
            if stats.refined or stats.erased:
                self.disc.forget()
            record = record._replace(refined=stats.refined, erased=stats.erased, vetoes=stats.vetoes)
            _logger.info(
                "sweep %d: refined %d cells, erased %d subtrees, vetoes %s",
                self.n,
                stats.refined,
                stats.erased,
                dict(stats.vetoes),
            )
        return record

    def solve(self, max_sweeps: int, observer: Callable[[SweepRecord], bool] | None = None) -> list[SweepRecord]:
        """
        Runs up to ``max_sweeps`` sweeps

        :param observer: called after each sweep, returning ``False`` stops the run
        :type observer: Callable[[SweepRecord], bool] | None
        :return: the records of all sweeps
        :rtype: list[SweepRecord]
        """
        records = []
        for _ in range(max_sweeps):
            record = self.sweep()
            records.append(record)
            if observer is not None and not observer(record):
                break
        return records
