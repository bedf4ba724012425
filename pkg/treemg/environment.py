from __future__ import annotations
import logging
from typing import TYPE_CHECKING, Callable
from . import problems
from .cycles import BottomUpFAS, TextbookAdditive, TopDownAdditive, TopDownBPX
from .exceptions import ConfigurationError, TreeMGException

if TYPE_CHECKING:  # pragma: no cover
    from .config import RunConfig
    from .cycle import CycleDriver

_logger = logging.getLogger(__name__)

ProblemFactory = Callable[["RunConfig"], problems.ProblemSpec]

DEFAULT_HELMHOLTZ_SHIFT = 45.0**2


class Environment:
    """This class keeps track of the :class:`cycle drivers <treemg.cycle.CycleDriver>`
    and problem factories available to a run.

    Drivers are registered with
    :func:`register_driver <treemg.environment.Environment.register_driver>`
    under the value of their cycle kind and are looked up with the index operator.
    Problem factories turn a :class:`RunConfig <treemg.config.RunConfig>` into a
    :class:`ProblemSpec <treemg.problems.ProblemSpec>`.

    >>> env = Environment()
    >>> env.register_driver(TopDownAdditive)
    >>> env["tdAdd"].__name__
    'TopDownAdditive'
    """

    def __init__(self) -> None:
        self._drivers: dict[str, type[CycleDriver]] = {}
        self._problems: dict[str, ProblemFactory] = {}

    def register_driver(self, driver: type[CycleDriver]) -> None:
        """
        Registers a cycle driver class

        :param driver: the driver, its ``kind`` must be set
        :type driver: type[:class:`CycleDriver <treemg.cycle.CycleDriver>`]
        """
        if driver.kind is None:
            raise TreeMGException("cannot register a driver without kind")
        name = driver.kind.value
        if name in self._drivers:
            raise TreeMGException(f"cannot register driver '{name}' twice")
        _logger.info("registering driver '%s'", name)
        self._drivers[name] = driver

    def register_problem(self, name: str, factory: ProblemFactory) -> None:
        """
        Registers a problem factory

        :param name: name used by the ``problem`` option
        :type name: str
        :param factory: builds the problem from a run configuration
        :type factory: Callable[[RunConfig], ProblemSpec]
        """
        if name in self._problems:
            raise TreeMGException(f"cannot register problem '{name}' twice")
        _logger.info("registering problem '%s'", name)
        self._problems[name] = factory

    def problem(self, config: RunConfig) -> problems.ProblemSpec:
        """
        Builds the problem selected by ``config``
        """
        factory = self._problems.get(config.problem)
        if factory is None:
            raise ConfigurationError(f"unknown problem '{config.problem}'")
        _logger.debug("building problem '%s'", config.problem)
        return factory(config)

    def __getitem__(self, key: str) -> type[CycleDriver]:
        return self._drivers[key]

    def __contains__(self, key: str) -> bool:
        return key in self._drivers


def _constant_shift(name: str, chi: problems.ChiKind, phi: complex) -> ProblemFactory:
    def factory(config: RunConfig) -> problems.ProblemSpec:
        return problems.constant_shift(
            name,
            config.p,
            config.chi_kinds() or [chi],
            config.phi_values() or [phi],
            config.theta,
            config.channels,
            problems.Coupling(config.coupling),
            config.coupling_strength,
        )

    return factory


def _gaussian(config: RunConfig) -> problems.ProblemSpec:
    return problems.gaussian(config.theta, config.channels)


def default_environment() -> Environment:
    """
    Environment with all built-in drivers and problems
    """
    env = Environment()
    for driver in (TextbookAdditive, BottomUpFAS, TopDownAdditive, TopDownBPX):
        env.register_driver(driver)
    env.register_problem("poisson", _constant_shift("poisson", problems.ChiKind.SIN, 0j))
    env.register_problem("ball", _constant_shift("ball", problems.ChiKind.BALL, 0j))
    env.register_problem("helmholtz", _constant_shift("helmholtz", problems.ChiKind.SIN, DEFAULT_HELMHOLTZ_SHIFT))
    env.register_problem("gaussian", _gaussian)
    return env
