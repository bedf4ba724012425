from __future__ import annotations
from enum import Enum
from typing import TYPE_CHECKING, cast
import logging
from .omega import OmegaPolicy, omega_of
from .spacetree import TraversalEvents

if TYPE_CHECKING:  # pragma: no cover
    from .discretisation import Discretisation
    from .spacetree import Spacetree, Vertex

_logger = logging.getLogger(__name__)


class CycleKind(Enum):
    TEXTBOOK_ADD = "textbookAdd"
    BU_FAS = "buFAS"
    TD_ADD = "tdAdd"
    TD_BPX = "tdBPX"


class CycleDriver(TraversalEvents):
    """
    Base class of the multigrid cycle drivers.

    A driver owns the discretisation of one tree and runs one cycle per call
    of :func:`cycle`. Drivers that need more than one traversal per cycle set
    :attr:`traversals_per_cycle`.

    :cvar kind: the cycle kind implemented by the driver
    :vartype kind: :class:`CycleKind`
    :cvar traversals_per_cycle: tree traversals of one cycle
    :vartype traversals_per_cycle: int
    :ivar disc: the discretisation
    :vartype disc: :class:`treemg.discretisation.Discretisation`
    :ivar policy: relaxation parameters
    :vartype policy: :class:`treemg.omega.OmegaPolicy`
    :ivar n: iteration counter of the running cycle
    :vartype n: int
    """

    # __must__ be set by all drivers
    kind: CycleKind = cast(CycleKind, None)

    traversals_per_cycle = 1

    def __init__(self, disc: Discretisation, policy: OmegaPolicy):
        self.disc = disc
        self.policy = policy
        self.n = 0

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind.value}, policy={self.policy})"

    @property
    def tree(self) -> Spacetree:
        return self.disc.tree

    @property
    def min_level(self) -> int:
        return self.disc.min_level

    def omega(self, vertex: Vertex) -> complex:
        return omega_of(self.policy, vertex, self.n, self.min_level)

    def masked(self, vertex: Vertex) -> bool:
        """
        Whether ``vertex`` is a c-point on a level that has a coarser compute level
        """
        return vertex.c_point and vertex.level > self.min_level

    def cycle(self, n: int) -> None:
        """
        Runs one cycle

        :param n: iteration counter, starting at 1
        :type n: int
        """
        if self.tree.dirty:
            self.tree.classify()
        self.n = n
        self._run()
        _logger.debug("%s finished cycle %d", self.kind.value, n)

    def _run(self) -> None:
        raise NotImplementedError()  # pragma: no cover
