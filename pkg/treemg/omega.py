"""
Relaxation parameter policies. The policy decides per vertex how strongly a
level contributes to the additive correction, which is what distinguishes
plain Jacobi, undamped and damped additive multigrid, hb and BPX.
"""

from __future__ import annotations
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple
import math
from .exceptions import ContractError

if TYPE_CHECKING:  # pragma: no cover
    from .spacetree import Vertex

TWO_PHASE_OMEGA = 0.01 * complex(math.sqrt(3.0), -1.0)


class OmegaKind(Enum):
    JACOBI = "jacobi"
    UNDAMPED = "ucg"
    L_GRID = "lgrid"
    EXPONENTIAL = "exp"
    TRANSITION = "transition"


class OmegaPolicy(NamedTuple):
    """
    A relaxation parameter family

    :ivar kind: the family
    :vartype kind: :class:`OmegaKind`
    :ivar omega_s: smoother weight
    :vartype omega_s: complex
    :ivar grids: number of undamped coarse grids of :attr:`OmegaKind.L_GRID`
    :vartype grids: int
    :ivar hb_mask: mask out c-point updates
    :vartype hb_mask: bool
    :ivar bpx: subtract the prolonged injected fine update
    :vartype bpx: bool
    :ivar two_phase: alternate the complex weights of :func:`two_phase_schedule` instead of ``omega_s``
    :vartype two_phase: bool
    """

    kind: OmegaKind = OmegaKind.EXPONENTIAL
    omega_s: complex = 0.8
    grids: int = 2
    hb_mask: bool = False
    bpx: bool = False
    two_phase: bool = False

    def smoothing_weight(self, n: int) -> complex:
        if self.two_phase:
            return two_phase_schedule(n)
        return complex(self.omega_s)


def two_phase_schedule(n: int) -> complex:
    """
    Alternating complex Jacobi weights, ``0.01*(sqrt(3) - i)`` for odd
    iterations and its negated conjugate for even ones

    >>> two_phase_schedule(1) + two_phase_schedule(2)
    -0.02j

    :param n: iteration counter, starting at 1
    :type n: int
    :raises ContractError: if ``n < 1``
    """
    if n < 1:
        raise ContractError(f"iteration counter starts at 1, got {n}")
    if n % 2:
        return TWO_PHASE_OMEGA
    return -TWO_PHASE_OMEGA.conjugate()


def omega_of(policy: OmegaPolicy, vertex: Vertex, n: int, min_level: int = 1) -> complex:
    """
    Relaxation parameter of one vertex in iteration ``n``

    :param policy: the policy
    :type policy: :class:`OmegaPolicy`
    :param vertex: a classified vertex
    :type vertex: :class:`treemg.spacetree.Vertex`
    :param n: iteration counter, starting at 1
    :type n: int
    :param min_level: coarsest compute level, its c-points are never masked
    :type min_level: int
    :return: the weight
    :rtype: complex
    :raises ContractError: if ``n < 1``
    """
    if n < 1:
        raise ContractError(f"iteration counter starts at 1, got {n}")
    if policy.hb_mask and vertex.c_point and vertex.level > min_level:
        return 0j
    omega_s = policy.smoothing_weight(n)
    succ = vertex.succ
    match policy.kind:
        case OmegaKind.JACOBI:
            return omega_s if succ == 0 else 0j
        case OmegaKind.UNDAMPED:
            return omega_s
        case OmegaKind.L_GRID:
            return omega_s if succ <= policy.grids else 0j
        case OmegaKind.EXPONENTIAL:
            return omega_s ** (succ + 1)
        case OmegaKind.TRANSITION:
            return omega_s ** ((1.0 - 1.0 / n) * (succ + 1))
    raise ContractError(f"unknown omega policy {policy.kind!r}")  # pragma: no cover
