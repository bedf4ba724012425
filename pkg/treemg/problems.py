"""
Benchmark problem definitions for ``-laplace(u) - phi*u = chi`` on the unit
hypercube with homogeneous Dirichlet boundary conditions.
"""

from __future__ import annotations
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple, Sequence
import logging
import math
import numpy as np
from .elemops import check_dim
from .exceptions import ConfigurationError

if TYPE_CHECKING:  # pragma: no cover
    from .spacetree import Cell

_logger = logging.getLogger(__name__)

BALL_RADIUS = 0.1
GAUSSIAN_SHIFT = 45.0**2
GAUSSIAN_WELL = 135.0**2


class ChiKind(Enum):
    SIN = "sin"
    BALL = "ball"
    GAUSSIAN = "gaussian"


class PhiKind(Enum):
    CONSTANT = "constant"
    GAUSSIAN = "gaussian"


class Coupling(Enum):
    INDEPENDENT = "independent"
    COUPLED_BLOCK = "coupled"


class AbsorbingLayer(NamedTuple):
    """
    Near-boundary region with an extra complex rotation

    :ivar fraction: depth of the layer measured from an open face
    :vartype fraction: float
    :ivar angle: rotation inside the layer in radians
    :vartype angle: float
    :ivar faces: open faces as ``(axis, side)`` pairs, side 1 is the face ``x_axis = 1``
    :vartype faces: tuple[tuple[int, int], ...]
    """

    fraction: float = 1.0 / 3.0
    angle: float = math.radians(30.0)
    faces: tuple[tuple[int, int], ...] = ((0, 1), (1, 1))


class Channel(NamedTuple):
    """
    Right-hand side and shift of one channel
    """

    chi: ChiKind = ChiKind.SIN
    phi: PhiKind = PhiKind.CONSTANT
    phi_value: complex = 0.0


def chi_sin(x: Sequence[float]) -> float:
    """
    ``p*pi^2*prod(sin(pi*x_i))``, the right-hand side of the smooth benchmark

    >>> round(chi_sin((0.5, 0.5)), 4)
    19.7392
    """
    x = np.asarray(x, dtype=float)
    return float(len(x) * math.pi**2 * np.prod(np.sin(math.pi * x)))


def chi_ball(x: Sequence[float]) -> float:
    """
    Indicator of the ball of radius 0.1 around the domain centre (strict inequality)
    """
    x = np.asarray(x, dtype=float)
    return 1.0 if float(np.sum((x - 0.5) ** 2)) < BALL_RADIUS**2 else 0.0


def gaussian_scenario(x: Sequence[float]) -> tuple[float, float]:
    """
    Right-hand side and shift of the two-particle scenario.

    The nuclei sit on the axes ``x=0`` and ``y=0``, so both fields decay
    with the distance from these faces.

    >>> gaussian_scenario((0.0, 0.0))
    (1.0, 38475.0)

    :param x: point in the unit square
    :type x: Sequence[float]
    :return: ``(chi, phi)``
    :rtype: tuple[float, float]
    :raises ConfigurationError: if ``x`` is not two-dimensional
    """
    if len(x) != 2:
        raise ConfigurationError(f"gaussian scenario is only defined for p=2, got p={len(x)}")
    x0, x1 = float(x[0]), float(x[1])
    chi = math.exp(-((125.0 * x0) ** 2) - (125.0 * x1) ** 2)
    phi = GAUSSIAN_SHIFT + GAUSSIAN_WELL * (math.exp(-((15.0 * x0) ** 2)) + math.exp(-((15.0 * x1) ** 2)))
    return chi, phi


class ProblemSpec:
    """
    One (possibly multichannel) problem on the unit hypercube.

    All channels share the grid geometry, i.e. dimension, rotation and
    absorbing layer. In coupled mode the channels ``i != j`` interact through
    ``A_ij`` times the mass operator.

    :ivar p: spatial dimension
    :vartype p: int
    :ivar channels: per-channel right-hand side and shift
    :vartype channels: tuple[Channel, ...]
    :ivar theta: global rotation in radians
    :vartype theta: float
    :ivar absorbing: absorbing layer or ``None``
    :vartype absorbing: AbsorbingLayer | None
    :ivar coupling: channel coupling mode
    :vartype coupling: Coupling
    :ivar couplings: ``c x c`` coupling coefficients with zero diagonal
    :vartype couplings: numpy.ndarray
    """

    # pylint: disable=too-many-arguments,too-many-positional-arguments
    def __init__(
        self,
        p: int,
        channels: Sequence[Channel],
        theta: float = 0.0,
        absorbing: AbsorbingLayer | None = None,
        coupling: Coupling = Coupling.INDEPENDENT,
        couplings: np.ndarray | None = None,
        name: str = "custom",
    ):
        check_dim(p)
        if len(channels) < 1:
            raise ConfigurationError("a problem needs at least one channel")
        if not 0.0 <= theta <= math.pi / 4 + 1e-12:
            raise ConfigurationError(f"rotation must be within [0, 45] degrees, got {math.degrees(theta):g}")
        if coupling is Coupling.COUPLED_BLOCK and len(channels) < 2:
            raise ConfigurationError("coupled channels need at least two channels")
        gaussian = any(ChiKind.GAUSSIAN in (c.chi,) or c.phi is PhiKind.GAUSSIAN for c in channels)
        if gaussian and p != 2:
            raise ConfigurationError(f"gaussian scenario is only defined for p=2, got p={p}")
        self.p = p
        self.channels = tuple(channels)
        self.theta = theta
        self.absorbing = absorbing
        self.coupling = coupling
        self.name = name
        c = len(channels)
        if couplings is None:
            couplings = np.zeros((c, c), dtype=complex)
        couplings = np.array(couplings, dtype=complex)
        if couplings.shape != (c, c):
            raise ConfigurationError(f"coupling matrix must be {c}x{c}, got {couplings.shape}")
        np.fill_diagonal(couplings, 0.0)
        self.couplings = couplings

    def __repr__(self) -> str:
        return f"ProblemSpec(name={self.name}, p={self.p}, channels={self.n_channels})"

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def coupled(self) -> bool:
        return self.coupling is Coupling.COUPLED_BLOCK

    def chi(self, x: Sequence[float]) -> np.ndarray:
        """
        Right-hand side of every channel at ``x``
        """
        values = np.zeros(self.n_channels, dtype=complex)
        for i, channel in enumerate(self.channels):
            if channel.chi is ChiKind.SIN:
                values[i] = chi_sin(x)
            elif channel.chi is ChiKind.BALL:
                values[i] = chi_ball(x)
            else:
                values[i] = gaussian_scenario(x)[0]
        return values

    def phi(self, x: Sequence[float]) -> np.ndarray:
        """
        Helmholtz shift of every channel at ``x``
        """
        values = np.zeros(self.n_channels, dtype=complex)
        for i, channel in enumerate(self.channels):
            if channel.phi is PhiKind.CONSTANT:
                values[i] = channel.phi_value
            else:
                values[i] = gaussian_scenario(x)[1]
        return values


def cell_theta(cell: Cell, spec: ProblemSpec) -> float:
    """
    Rotation of a cell: the absorbing angle if the cell centre lies within
    the layer depth of an open face, the global rotation otherwise.

    :param cell: the cell
    :type cell: :class:`treemg.spacetree.Cell`
    :param spec: the problem
    :type spec: :class:`ProblemSpec`
    :return: rotation in radians
    :rtype: float
    """
    layer = spec.absorbing
    if layer is None:
        return spec.theta
    centre = cell.centre
    for axis, side in layer.faces:
        distance = 1.0 - centre[axis] if side else centre[axis]
        if distance < layer.fraction:
            return layer.angle
    return spec.theta


def fuse_channels(specs: Sequence[ProblemSpec], name: str | None = None) -> ProblemSpec:
    """
    Fuses independent problems into one multichannel problem solved on one grid

    :param specs: problems with identical geometry
    :type specs: Sequence[ProblemSpec]
    :param name: name of the fused problem, defaults to the joined names
    :type name: str | None
    :return: the fused problem with independent channels
    :rtype: ProblemSpec
    :raises ConfigurationError: if the geometries differ
    """
    if not specs:
        raise ConfigurationError("nothing to fuse")
    first = specs[0]
    for spec in specs[1:]:
        if (spec.p, spec.theta, spec.absorbing) != (first.p, first.theta, first.absorbing):
            raise ConfigurationError(f"cannot fuse channels with different geometry: {first!r} and {spec!r}")
        if spec.coupled:
            raise ConfigurationError(f"cannot fuse coupled problem {spec!r}")
    channels = [channel for spec in specs for channel in spec.channels]
    _logger.debug("fusing %d problems into %d channels", len(specs), len(channels))
    if name is None:
        name = "+".join(s.name for s in specs)
    return ProblemSpec(first.p, channels, first.theta, first.absorbing, name=name)


def coupled_block_apply(block_row: np.ndarray, u_tuple: np.ndarray) -> np.ndarray:
    """
    Applies the ``c x c`` block of one grid entity pair to a channel tuple

    >>> coupled_block_apply(np.array([[2.0, 1.0], [0.5, 3.0]]), np.array([1.0, 2.0]))
    array([4., 6.5])
    """
    return np.asarray(block_row) @ np.asarray(u_tuple)


def kh_level(k: float) -> int:
    """
    Regular level whose mesh width keeps ``k*h = 5/9``

    >>> kh_level(45)
    4

    :raises ConfigurationError: if no level matches the wave number
    """
    level = math.log(9.0 * k / 5.0, 3) if k > 0 else math.nan
    if not abs(level - round(level)) <= 1e-9:
        raise ConfigurationError(f"wave number {k} does not give kh=5/9 on a 3-partitioned grid")
    return int(round(level))


def _channels(count: int, chi: Sequence[ChiKind], phi: Sequence[complex]) -> list[Channel]:
    if len(chi) not in (1, count) or len(phi) not in (1, count):
        raise ConfigurationError(f"per-channel values must be given once or {count} times")
    return [
        Channel(chi[i if len(chi) > 1 else 0], PhiKind.CONSTANT, phi[i if len(phi) > 1 else 0])
        for i in range(count)
    ]


# pylint: disable=too-many-arguments
def constant_shift(
    name: str,
    p: int,
    chi: Sequence[ChiKind],
    phi: Sequence[complex],
    theta: float = 0.0,
    channels: int = 1,
    coupling: Coupling = Coupling.INDEPENDENT,
    coupling_strength: complex = 0.0,
) -> ProblemSpec:
    """
    Problem with a constant shift per channel and one of the analytic
    right-hand sides. Independent channels are fused single-channel problems.
    """
    channel_list = _channels(channels, chi, phi)
    if coupling is Coupling.COUPLED_BLOCK:
        couplings = np.full((channels, channels), coupling_strength, dtype=complex)
        return ProblemSpec(p, channel_list, theta, coupling=coupling, couplings=couplings, name=name)
    return fuse_channels([ProblemSpec(p, [channel], theta, name=name) for channel in channel_list], name)


def gaussian(theta: float, channels: int = 1) -> ProblemSpec:
    """
    The two-particle scenario with absorbing layers along the top and right faces
    """
    single = ProblemSpec(2, [Channel(ChiKind.GAUSSIAN, PhiKind.GAUSSIAN)], theta, AbsorbingLayer(), name="gaussian")
    return fuse_channels([single] * channels, "gaussian")
