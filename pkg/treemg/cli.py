"""
Batch runner of the ``solve`` command.

Runs one solver per configuration file and reports the residual history,
the final grid and a run log. The exit status is the worst status of all runs.
"""

from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from enum import IntEnum
from pathlib import Path
from typing import NamedTuple, Sequence
import argparse
import logging
import math
import sys
import numpy as np
import pandas as pd
from . import amr
from .config import RunConfig
from .cycle import CycleKind
from .environment import Environment, default_environment
from .exceptions import ConfigurationError, DimensionError, TreeMGException, UsageError
from .solver import Solver, SweepRecord

_logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e6

_PARSER_FLAGS = ("--help", "--verbose", "--jobs")
_PARSER_VALUED = ("--jobs",)


class RunStatus(IntEnum):
    CONVERGED = 0
    BUDGET_EXHAUSTED = 2
    DIVERGED = 3
    USAGE_ERROR = 64


class NormReport(NamedTuple):
    """
    Residual norms of one sweep, one entry per channel

    :ivar max_norm: largest modulus
    :vartype max_norm: numpy.ndarray
    :ivar euclid: Euclidean norm
    :vartype euclid: numpy.ndarray
    :ivar h_norm: norm scaled by the cell volumes, see :func:`norm_h`
    :vartype h_norm: numpy.ndarray
    :ivar work_units: cumulative cost in regular finest-grid sweeps
    :vartype work_units: float
    """

    max_norm: np.ndarray
    euclid: np.ndarray
    h_norm: np.ndarray
    work_units: float

    def select(self, norm: str) -> float:
        """
        Largest channel value of the named norm (``max``, ``euclid`` or ``h``)
        """
        values = {"max": self.max_norm, "euclid": self.euclid, "h": self.h_norm}[norm]
        return float(np.max(values)) if len(values) else 0.0


def norm_h(values: np.ndarray, widths: np.ndarray, p: int) -> float:
    """
    ``sqrt(sum(|h_i|^p * |x_i|^2))`` over the fine-grid unknowns

    >>> norm_h(np.ones(4), np.full(4, 1 / 3), 2)
    0.6666666666666666

    :param values: one value per unknown
    :type values: numpy.ndarray
    :param widths: mesh width of the fine cells at each unknown
    :type widths: numpy.ndarray
    :param p: spatial dimension
    :type p: int
    :rtype: float
    """
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    return float(np.sqrt(np.sum(np.abs(widths) ** p * np.abs(values) ** 2)))


def work_units(updates: int, reference: int) -> float:
    """
    Cumulative unknown updates measured in regular finest-grid sweeps

    >>> work_units(3200, 6400)
    0.5
    """
    return updates / reference


def norm_report(record: SweepRecord, p: int, reference: int) -> NormReport:
    residual = record.residual
    channels = residual.shape[1]
    if residual.shape[0] == 0:
        zeros = np.zeros(channels)
        return NormReport(zeros, zeros, zeros, work_units(record.updates, reference))
    return NormReport(
        np.max(np.abs(residual), axis=0),
        np.sqrt(np.sum(np.abs(residual) ** 2, axis=0)),
        np.array([norm_h(residual[:, c], record.widths, p) for c in range(channels)]),
        work_units(record.updates, reference),
    )


class _Monitor:
    """
    Writes the residual history and decides when a run stops
    """

    def __init__(self, config: RunConfig, solver: Solver, csv_path: Path | None):
        self.config = config
        self.solver = solver
        self.csv_path = csv_path
        self.first: float | None = None
        self.minimum = math.inf
        self.status = RunStatus.BUDGET_EXHAUSTED

    def _write(self, record: SweepRecord, report: NormReport) -> None:
        if self.csv_path is None:
            return
        row: dict[str, float | int] = {
            "sweep": record.sweep,
            "workUnits": report.work_units,
            "vertexCount": record.vertex_count,
            "maxNorm": float(np.max(report.max_norm)),
            "euclid": float(np.max(report.euclid)),
            "hNorm": float(np.max(report.h_norm)),
        }
        if len(report.h_norm) > 1:
            for c in range(len(report.h_norm)):
                row[f"maxNorm{c}"] = float(report.max_norm[c])
                row[f"euclid{c}"] = float(report.euclid[c])
                row[f"hNorm{c}"] = float(report.h_norm[c])
        pd.DataFrame([row]).to_csv(self.csv_path, mode="a", header=record.sweep == 1, index=False)

    def __call__(self, record: SweepRecord) -> bool:
        report = norm_report(record, self.solver.problem.p, self.solver.reference_cost)
        self._write(record, report)
        value = report.select(self.config.norm)
        _logger.info(
            "sweep %d: residual %.6e, %d unknowns, %.3f work units",
            record.sweep,
            value,
            record.vertex_count,
            report.work_units,
        )
        if not math.isfinite(value):
            _logger.warning("residual is no longer finite after sweep %d", record.sweep)
            self.status = RunStatus.DIVERGED
            return False
        if self.first is None:
            self.first = value
        self.minimum = min(self.minimum, value)
        if value > DIVERGENCE_FACTOR * self.minimum:
            _logger.warning("residual %.3e grew beyond %g times its minimum %.3e", value, DIVERGENCE_FACTOR, self.minimum)
            self.status = RunStatus.DIVERGED
            return False
        if value <= self.config.target * self.first:
            self.status = RunStatus.CONVERGED
            return False
        return True


def _output_paths(config: RunConfig) -> tuple[Path | None, Path | None, Path | None]:
    if not config.output:
        return None, None, None
    prefix = Path(config.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = tuple(prefix.with_name(prefix.name + suffix) for suffix in (".csv", ".grid", ".log"))
    for path in paths:
        path.unlink(missing_ok=True)
    return paths  # type: ignore[return-value]


def build_solver(config: RunConfig, env: Environment | None = None) -> Solver:
    """
    Sets up the solver described by a validated configuration
    """
    env = env or default_environment()
    return Solver(
        env.problem(config),
        CycleKind(config.cycle),
        config.omega_policy(),
        level=config.grid_level,
        min_level=config.min_level,
        amr_config=config.amr_config(),
        omega_cg=config.omega_cg,
        seed=config.seed,
        check_injection=config.check_injection,
        env=env,
    )


def run(config: RunConfig, env: Environment | None = None) -> RunStatus:
    """
    Executes one run: sweeps until the residual has dropped by
    ``config.target`` relative to the first sweep, the budget is spent or
    the run diverges. Writes the residual CSV, the grid dump and the run log
    next to ``config.output``.

    :param config: the run configuration
    :type config: :class:`treemg.config.RunConfig`
    :return: the status of the run
    :rtype: :class:`RunStatus`
    """
    try:
        config.validate()
    except UsageError as e:
        _logger.error("invalid configuration: %s", e)
        return RunStatus.USAGE_ERROR
    csv_path, grid_path, log_path = _output_paths(config)
    package_logger = logging.getLogger("treemg")
    previous_level = package_logger.level
    handler = None
    if log_path is not None:
        handler = logging.FileHandler(log_path, encoding="utf-8")
        handler.setLevel(logging.INFO)
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        package_logger.addHandler(handler)
        if package_logger.getEffectiveLevel() > logging.INFO:
            package_logger.setLevel(logging.INFO)
    try:
        try:
            solver = build_solver(config, env)
        except (ConfigurationError, DimensionError) as e:
            _logger.error("invalid configuration: %s", e)
            return RunStatus.USAGE_ERROR
        monitor = _Monitor(config, solver, csv_path)
        if solver.amr is not None:
            amr.fmg_unfold(solver, config.max_sweeps, monitor)
        else:
            solver.solve(config.max_sweeps, monitor)
        if grid_path is not None:
            with open(grid_path, "w", encoding="utf-8") as stream:
                solver.tree.dump(stream)
        _logger.info("run finished with status %s after %d sweeps", monitor.status.name, solver.n)
        return monitor.status
    finally:
        if handler is not None:
            package_logger.removeHandler(handler)
            package_logger.setLevel(previous_level)
            handler.close()


def _run_file(path: str | None, overrides: list[tuple[str, str]]) -> RunStatus:
    try:
        config = RunConfig.from_file(path) if path else RunConfig()
        config.update(overrides)
    except (TreeMGException, OSError) as e:
        _logger.error("cannot read configuration %s: %s", path, e)
        return RunStatus.USAGE_ERROR
    return run(config)


def _split_overrides(argv: Sequence[str]) -> tuple[list[str], list[tuple[str, str]]]:
    """
    Separates the run option overrides from the arguments of the parser.
    Overrides are written as ``--key value`` or ``--key=value``.

    >>> _split_overrides(["a.cfg", "--theta", "35", "--jobs", "2", "--bpx=true"])
    (['a.cfg', '--jobs', '2'], [('theta', '35'), ('bpx', 'true')])
    """
    known, pairs = [], []
    items = list(argv)
    while items:
        item = items.pop(0)
        if not item.startswith("--") or item.split("=", 1)[0] in _PARSER_FLAGS:
            known.append(item)
            if item in _PARSER_VALUED and items:
                known.append(items.pop(0))
            continue
        key = item[2:]
        if "=" in key:
            pairs.append(tuple(key.split("=", 1)))
        elif items:
            pairs.append((key, items.pop(0)))
        else:
            raise UsageError(f"option '--{key}' needs a value")
    return known, pairs  # type: ignore[return-value]


def main(argv: Sequence[str] | None = None) -> int:
    """
    Entry point of ``solve <config>... [--key value ...] [--jobs N]``
    """
    parser = argparse.ArgumentParser(
        prog="solve",
        description="additive multigrid solver runs on adaptive spacetrees",
        epilog="any run option can be overridden with --key value, e.g. --theta 35",
    )
    parser.add_argument("configs", nargs="*", help="key = value configuration files")
    parser.add_argument("--jobs", type=int, default=1, help="configurations solved concurrently")
    parser.add_argument("--verbose", "-v", action="store_true", help="log debug messages")
    try:
        known, overrides = _split_overrides(sys.argv[1:] if argv is None else argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"solve: error: {e}", file=sys.stderr)
        return int(RunStatus.USAGE_ERROR)
    args = parser.parse_args(known)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        for key, value in overrides:
            RunConfig().update([(key, value)])
    except TreeMGException as e:
        parser.print_usage(sys.stderr)
        _logger.error("%s", e)
        return int(RunStatus.USAGE_ERROR)
    if args.jobs < 1:
        _logger.error("--jobs must be at least 1, got %d", args.jobs)
        return int(RunStatus.USAGE_ERROR)
    paths: list[str | None] = list(args.configs) or [None]
    if args.jobs == 1 or len(paths) == 1:
        statuses = [_run_file(path, overrides) for path in paths]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            statuses = list(pool.map(_run_file, paths, [overrides] * len(paths)))
    return int(max(statuses))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
