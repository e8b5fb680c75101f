"""
Harness - Monte Carlo coverage experiments and their CSV / JSON / markdown reports
"""

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import frontmatter
import numpy as np
import yaml
from joblib import Parallel, delayed

from .errors import (
    DegenerateSampleError,
    InvalidInputError,
    NumericalError,
    ReplicateBudgetError,
    ReportWriteError,
)
from .methods import (
    PI_METHODS,
    MethodOptions,
    check_method,
    confidence_interval,
    prediction_interval,
)
from .prediction import FAILURE_BUDGET, PredictorKind
from .seeding import check_seed, derive_rng
from .simulation import (
    ORACLE_LENGTH,
    ORACLE_SEED,
    ModelSpec,
    resolve_model,
    simulate_pair,
    true_parameter,
)
from .statistics import StatisticSpec

logger = logging.getLogger(__name__)

MIN_REPLICATIONS = 50
REPORT_COLUMNS = (
    "method", "model", "statistic", "n", "N", "B", "alpha", "cvr", "mean_width", "failures",
)
REPORT_FORMATS = ("csv", "json", "md")

_PREDICTION_TARGETS = {"pi:l2": "L2", "pi:l1": "L1"}

_CONFIG_KEYS = {
    "model", "transfer", "n_grid", "replications", "B", "alpha", "methods",
    "statistics", "seed", "jobs", "oracle_length", "predictor_draws",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One coverage study.

    `statistics` holds statistic strings (see StatisticSpec.parse) and/or the
    prediction targets `pi:l2` and `pi:l1`.
    """

    model: ModelSpec
    n_grid: Tuple[int, ...] = (100, 200, 500, 1000, 2000)
    replications: int = 200
    B: int = 250
    alpha: float = 0.05
    methods: Tuple[str, ...] = ("mf-ker",)
    statistics: Tuple[str, ...] = ("mean",)
    seed: int = 0
    jobs: int = 1
    oracle_length: int = ORACLE_LENGTH
    predictor_draws: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "statistics", tuple(self.statistics))
        if not self.n_grid or min(self.n_grid) < 2:
            raise InvalidInputError("n_grid must list lengths of at least 2")
        if self.replications < MIN_REPLICATIONS:
            raise InvalidInputError(
                f"replications must be at least {MIN_REPLICATIONS}, got {self.replications}"
            )
        for method in self.methods:
            check_method(method)
        for stat in self.statistics:
            if stat not in _PREDICTION_TARGETS:
                StatisticSpec.parse(stat)
        check_seed(self.seed)
        PredictorKind("L2", self.predictor_draws)

    def cells(self) -> List[Tuple[str, str, int]]:
        """(method, statistic, n) triples to run; the block bootstrap has no prediction mode"""
        out = []
        for method in self.methods:
            for stat in self.statistics:
                if stat in _PREDICTION_TARGETS and method not in PI_METHODS:
                    logger.debug("skipping %s for %s: no prediction mode", stat, method)
                    continue
                for n in self.n_grid:
                    out.append((method, stat, n))
        return out


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read an experiment config.

    Markdown files are experiment cards whose YAML front matter holds the keys;
    anything else is parsed as a plain `key: value` YAML file.
    """
    path = Path(path)
    try:
        if path.suffix.lower() == ".md":
            with open(path, "r", encoding="utf-8") as f:
                data = dict(frontmatter.load(f).metadata)
        else:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as e:
        raise InvalidInputError(f"cannot read config {path}: {e}") from e
    return experiment_config_from_dict(data)


def experiment_config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise InvalidInputError("experiment config must be a mapping")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise InvalidInputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "model" not in data:
        raise InvalidInputError("experiment config needs a model")

    def as_tuple(value):
        if isinstance(value, (list, tuple)):
            return tuple(value)
        return (value,)

    kwargs: Dict[str, Any] = {"model": resolve_model(str(data["model"]), data.get("transfer"))}
    for key in ("n_grid", "methods", "statistics"):
        if key in data:
            kwargs[key] = as_tuple(data[key])
    for key in ("replications", "B", "seed", "jobs", "oracle_length", "predictor_draws"):
        if key in data:
            kwargs[key] = int(data[key])
    if "alpha" in data:
        kwargs["alpha"] = float(data["alpha"])
    if "statistics" in kwargs:
        kwargs["statistics"] = tuple(str(s) for s in kwargs["statistics"])
    return ExperimentConfig(**kwargs)


@dataclass(frozen=True)
class CoverageRow:
    method: str
    model: str
    statistic: str
    n: int
    N: int
    B: int
    alpha: float
    cvr: float
    mean_width: float
    failures: int

    def sort_key(self) -> Tuple[str, str, int]:
        return (self.method, self.statistic, self.n)


@dataclass
class CoverageReport:
    rows: List[CoverageRow] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def sorted_rows(self) -> List[CoverageRow]:
        return sorted(self.rows, key=CoverageRow.sort_key)

    def records(self) -> List[Dict[str, Any]]:
        return [asdict(row) for row in self.sorted_rows()]


def _boot_seed(cfg: ExperimentConfig, n: int, index: int) -> int:
    return int(derive_rng(cfg.seed, "boot", n, index).integers(0, 2**63))


def _options(cfg: ExperimentConfig, stat: str, n: int, index: int) -> MethodOptions:
    kind = _PREDICTION_TARGETS.get(stat, "L2")
    return MethodOptions(
        B=cfg.B,
        alpha=cfg.alpha,
        seed=_boot_seed(cfg, n, index),
        predictor=PredictorKind(kind, cfg.predictor_draws),
    )


def _run_experiment(
    cfg: ExperimentConfig, method: str, stat: str, n: int, index: int, target: Optional[float]
) -> Optional[Tuple[bool, float]]:
    """One experiment: (covered, width), or None when the method failed on this sample"""
    prediction = stat in _PREDICTION_TARGETS
    # the same data seed for every method and statistic at (n, index)
    data_rng = derive_rng(cfg.seed, "data", n, index)
    _, y = simulate_pair(cfg.model, n + 1 if prediction else n, data_rng)
    opts = _options(cfg, stat, n, index)
    try:
        if prediction:
            interval = prediction_interval(method, y[:n], opts)
            target = float(y[n])
        else:
            interval = confidence_interval(method, y, StatisticSpec.parse(stat), opts)
    except (NumericalError, DegenerateSampleError) as e:
        logger.warning("%s %s n=%d experiment %d failed: %s", method, stat, n, index, e)
        return None
    return interval.contains(target), interval.width


def run_cell(cfg: ExperimentConfig, method: str, stat: str, n: int) -> CoverageRow:
    """
    Run the N experiments of one (method, statistic, n) cell.

    Failed experiments are left out of N and counted; more than 5% of the
    requested replications failing aborts the cell.
    """
    target = None
    if stat not in _PREDICTION_TARGETS:
        target = true_parameter(cfg.model, StatisticSpec.parse(stat), cfg.oracle_length)

    outcomes = Parallel(n_jobs=cfg.jobs)(
        delayed(_run_experiment)(cfg, method, stat, n, i, target) for i in range(cfg.replications)
    )
    scored = [o for o in outcomes if o is not None]
    failures = cfg.replications - len(scored)
    if failures > math.floor(FAILURE_BUDGET * cfg.replications):
        raise ReplicateBudgetError(failures, cfg.replications, "experiments")

    hits = sum(1 for covered, _ in scored if covered)
    cvr = hits / len(scored) if scored else 0.0
    mean_width = float(np.mean([w for _, w in scored])) if scored else math.nan
    logger.info("%s %s n=%d: CVR=%.3f over %d experiments", method, stat, n, cvr, len(scored))
    return CoverageRow(
        method, cfg.model.label, stat, n, len(scored), cfg.B, cfg.alpha, cvr, mean_width, failures
    )


def run_coverage(cfg: ExperimentConfig) -> CoverageReport:
    """
    Empirical coverage of every configured method over the n grid.

    Confidence intervals are scored against the true parameter of the model;
    prediction intervals simulate n + 1 points and score the held-out last one.

    Args:
        cfg: Experiment configuration

    Returns:
        CoverageReport with one row per cell, in (method, statistic, n) order
    """
    from . import __version__

    rows = [run_cell(cfg, method, stat, n) for method, stat, n in cfg.cells()]
    metadata = {
        "model": cfg.model.to_dict(),
        "seed": cfg.seed,
        "oracle_seed": ORACLE_SEED,
        "oracle_length": cfg.oracle_length,
        "version": __version__,
    }
    report = CoverageReport(rows, metadata)
    report.rows = report.sorted_rows()
    return report


def _csv_text(report: CoverageReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(report.records())
    return buf.getvalue()


def _markdown_text(report: CoverageReport) -> str:
    lines = [
        "| " + " | ".join(REPORT_COLUMNS) + " |",
        "|" + "---|" * len(REPORT_COLUMNS),
    ]
    for record in report.records():
        lines.append("| " + " | ".join(str(record[c]) for c in REPORT_COLUMNS) + " |")
    post = frontmatter.Post("\n".join(lines), **report.metadata)
    return frontmatter.dumps(post) + "\n"


def render_report(report: CoverageReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        return _csv_text(report)
    if fmt == "json":
        return json.dumps(report.records(), indent=2) + "\n"
    if fmt == "md":
        return _markdown_text(report)
    formats = ", ".join(REPORT_FORMATS)
    raise InvalidInputError(f"unknown report format {fmt!r} (expected one of {formats})")


def emit_report(report: CoverageReport, fmt: str, path: Union[str, Path]) -> Path:
    """
    Write a report.

    Args:
        report: CoverageReport
        fmt: "csv", "json" or "md"
        path: Destination file

    Returns:
        The written path
    """
    text = render_report(report, fmt)
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ReportWriteError(f"cannot write report to {path}: {e}") from e
    return path
