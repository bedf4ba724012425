"""
Run configuration. Configuration files are flat ``key = value`` text, ``#``
starts a comment. Keys may be written with dashes or underscores.
"""

from __future__ import annotations
from pathlib import Path
from typing import Any, Iterable, Mapping
import logging
import math
from . import fields
from .amr import AmrConfig, finest_level_for, level_for_width
from .cycle import CycleKind
from .elemops import MAX_DIM
from .exceptions import ConfigurationError, UsageError
from .omega import OmegaKind, OmegaPolicy
from .problems import ChiKind, Coupling, kh_level

_logger = logging.getLogger(__name__)

NORMS = ["max", "euclid", "h"]


class RunConfig:
    """
    Settings of one solver run.

    >>> config = RunConfig.from_text("problem = poisson\\nlevel = 2\\n")
    >>> config.problem, config.level, config.omega_s
    ('poisson', 2, (0.8+0j))
    """

    problem = fields.Selection(["poisson", "ball", "helmholtz", "gaussian"], default="poisson", help="benchmark problem")
    p = fields.Integer(default=2, help="spatial dimension")
    cycle = fields.Selection([k.value for k in CycleKind], default=CycleKind.TD_ADD.value, help="cycle kind")
    omega = fields.Selection([k.value for k in OmegaKind], default=OmegaKind.EXPONENTIAL.value, help="omega policy")
    omega_s = fields.Complex(default=0.8 + 0j, help="smoother weight")
    omega_cg = fields.Complex(help="coarse grid damping of textbookAdd, defaults to omega_s")
    grids = fields.Integer(default=2, help="undamped coarse grids of the lgrid policy")
    hb = fields.Boolean(default=False, help="mask out c-point updates")
    bpx = fields.Boolean(default=False, help="BPX prolongation correction")
    two_phase = fields.Boolean(default=False, help="alternating complex Jacobi weights")
    theta = fields.Angle(default=0.0, help="global rotation in degrees")
    phi = fields.String(default="", help="comma separated Helmholtz shift per channel")
    k = fields.Float(help="wave number, sets phi = k^2")
    chi = fields.String(default="", help="comma separated right-hand side per channel (sin or ball)")
    channels = fields.Integer(default=1, help="number of channels")
    coupling = fields.Selection([c.value for c in Coupling], default=Coupling.INDEPENDENT.value, help="channel coupling")
    coupling_strength = fields.Complex(default=0j, help="off-diagonal channel coupling coefficient")
    level = fields.Integer(help="fixed regular level")
    h_max = fields.Float(help="coarsest admissible mesh width of adaptive runs")
    h_min = fields.Float(help="finest admissible mesh width of adaptive runs")
    min_level = fields.Integer(default=1, help="coarsest compute level")
    refine_fraction = fields.Float(default=0.10, help="share of vertices marked for refinement")
    erase_fraction = fields.Float(default=0.02, help="share of vertices marked for erasing")
    bins = fields.Integer(default=20, help="feature histogram bins")
    convergence_veto = fields.Float(default=1e-2, help="largest |r/diag| that still allows grid changes")
    max_sweeps = fields.Integer(default=100, help="sweep budget")
    target = fields.Float(default=1e-6, help="relative residual drop to reach")
    norm = fields.Selection(NORMS, default="h", help="norm of the termination criterion")
    output = fields.String(default="", help="prefix of the csv, grid and log files")
    seed = fields.Integer(help="seed of a random initial guess")
    check_injection = fields.Boolean(default=False, help="record the injection defect of top-down cycles")

    def __init__(self, values: Mapping[str, Any] | None = None):
        self._values: dict[str, Any] = {}
        for key, value in (values or {}).items():
            self._option(key).__set__(self, value)

    def __repr__(self) -> str:
        return f"RunConfig({self._values})"

    @classmethod
    def options(cls) -> dict[str, fields.Option]:
        """
        All options declared by the class and its bases
        """
        result: dict[str, fields.Option] = {}
        for klass in reversed(cls.__mro__):
            for name, value in vars(klass).items():
                if isinstance(value, fields.Option):
                    result[name] = value
        return result

    @classmethod
    def _option(cls, key: str) -> fields.Option:
        name = key.strip().replace("-", "_")
        option = cls.options().get(name)
        if option is None:
            raise UsageError(f"unknown option '{key.strip()}'")
        return option

    def update(self, pairs: Mapping[str, str] | Iterable[tuple[str, str]]) -> None:
        """
        Sets options from their textual representation
        """
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        for key, text in items:
            option = self._option(key)
            self._values[option.name] = option.parse(text)

    @classmethod
    def from_text(cls, text: str) -> RunConfig:
        """
        Parses a ``key = value`` configuration

        :raises UsageError: for malformed lines and unknown keys
        """
        pairs = []
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"line {number}: expected 'key = value', got '{line}'")
            key, value = line.split("=", 1)
            pairs.append((key, value))
        config = cls()
        config.update(pairs)
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @property
    def adaptive(self) -> bool:
        return self.h_max is not None or self.h_min is not None

    @property
    def grid_level(self) -> int | None:
        """
        Fixed regular level. Without an explicit level a wave number ``k``
        selects the level with ``k*h = 5/9``.

        >>> RunConfig.from_text("k = 45").grid_level
        4
        """
        if self.level is None and not self.adaptive and self.k is not None:
            return kh_level(self.k)
        return self.level

    def validate(self) -> None:
        """
        Checks the cross-option constraints

        :raises UsageError: if options conflict
        """
        try:
            level = self.grid_level
        except ConfigurationError as e:
            raise UsageError(str(e)) from e
        if (level is None) == (not self.adaptive):
            raise UsageError("set either a fixed level or both h_max and h_min")
        if self.adaptive:
            if self.h_max is None or self.h_min is None:
                raise UsageError("adaptive runs need both h_max and h_min")
            if not 0 < self.h_min <= self.h_max:
                raise UsageError(f"need 0 < h_min <= h_max, got h_min={self.h_min}, h_max={self.h_max}")
            if finest_level_for(self.h_min) < level_for_width(self.h_max):
                raise UsageError(f"no level has a mesh width between h_min={self.h_min} and h_max={self.h_max}")
        elif level < self.min_level:
            raise UsageError(f"level {level} is below the coarsest compute level {self.min_level}")
        if self.max_sweeps < 1:
            raise UsageError(f"max_sweeps must be at least 1, got {self.max_sweeps}")
        if self.cycle == CycleKind.TD_BPX.value and not self.bpx:
            raise UsageError("tdBPX requires bpx = true")
        if self.cycle == CycleKind.TD_ADD.value and self.bpx:
            raise UsageError("tdAdd cannot realise bpx, use tdBPX")
        if self.cycle == CycleKind.TEXTBOOK_ADD.value and self.adaptive:
            raise UsageError("textbookAdd is only supported on regular grids")
        if self.coupling == Coupling.COUPLED_BLOCK.value and self.channels < 2:
            raise UsageError("coupled channels need at least two channels")
        if self.channels < 1:
            raise UsageError(f"channels must be at least 1, got {self.channels}")
        if self.k is not None and self.phi:
            raise UsageError("set either phi or k")
        if not 1 <= self.p <= MAX_DIM:
            raise UsageError(f"p must be between 1 and {MAX_DIM}, got {self.p}")
        if not 0.0 <= self.theta <= math.pi / 4 + 1e-12:
            raise UsageError(f"theta must be within [0, 45] degrees, got {math.degrees(self.theta):g}")
        if self.problem == "gaussian" and self.p != 2:
            raise UsageError(f"gaussian scenario is only defined for p=2, got p={self.p}")
        if self.omega_cg is not None and self.cycle != CycleKind.TEXTBOOK_ADD.value:
            raise UsageError("omega_cg only applies to textbookAdd")
        try:
            counts = {"chi": len(self.chi_kinds()), "phi": len(self.phi_values())}
        except ConfigurationError as e:
            raise UsageError(str(e)) from e
        for name, count in counts.items():
            if count > 1 and count != self.channels:
                raise UsageError(f"{name} has {count} values for {self.channels} channels")

    def chi_kinds(self) -> list[ChiKind]:
        if not self.chi:
            return []
        try:
            return [ChiKind(part.strip()) for part in self.chi.split(",")]
        except ValueError as e:
            raise ConfigurationError(f"unknown right-hand side in '{self.chi}'") from e

    def phi_values(self) -> list[complex]:
        if self.k is not None:
            return [complex(self.k**2)]
        if not self.phi:
            return []
        try:
            return [complex(part.strip().replace(" ", "")) for part in self.phi.split(",")]
        except ValueError as e:
            raise ConfigurationError(f"invalid shift in '{self.phi}'") from e

    def omega_policy(self) -> OmegaPolicy:
        return OmegaPolicy(
            OmegaKind(self.omega),
            self.omega_s,
            self.grids,
            self.hb,
            self.bpx,
            self.two_phase,
        )

    def amr_config(self) -> AmrConfig | None:
        if not self.adaptive:
            return None
        return AmrConfig(
            self.h_max,
            self.h_min,
            self.refine_fraction,
            self.erase_fraction,
            self.bins,
            self.convergence_veto,
        )
