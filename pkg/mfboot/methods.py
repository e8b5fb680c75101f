"""
Methods - Name-to-callable registry shared by the CLI, the MCP server and the coverage harness
"""

from dataclasses import dataclass, field
from typing import Optional

from .baselines import BlockConfig, ar_sieve_ci, ar_sieve_pi, block_bootstrap_ci
from .engine import BootstrapConfig, ConfidenceInterval, run_ci
from .errors import InvalidInputError
from .prediction import PredictionInterval, PredictorKind, run_pi
from .statistics import StatisticSpec
from .transform import SampleLike

MODEL_FREE_METHODS = ("mf-ker", "mf-emp", "lmf-ker", "lmf-emp")
CI_METHODS = MODEL_FREE_METHODS + ("bb", "ar-sieve")
PI_METHODS = MODEL_FREE_METHODS + ("ar-sieve",)


@dataclass(frozen=True)
class MethodOptions:
    """Settings common to every method; method-specific ones are ignored elsewhere"""

    B: int = 250
    alpha: float = 0.05
    seed: int = 0
    n_jobs: int = 1
    block: BlockConfig = field(default_factory=BlockConfig)
    p_max: Optional[int] = None
    predictor: PredictorKind = field(default_factory=PredictorKind)

    def bootstrap_config(self, method: str) -> BootstrapConfig:
        return BootstrapConfig.from_method(
            method, B=self.B, alpha=self.alpha, seed=self.seed, n_jobs=self.n_jobs
        )


def check_method(method: str, prediction: bool = False) -> str:
    allowed = PI_METHODS if prediction else CI_METHODS
    if method not in allowed:
        kind = "prediction" if prediction else "confidence"
        raise InvalidInputError(
            f"unknown {kind} interval method {method!r} (expected one of {', '.join(allowed)})"
        )
    return method


def confidence_interval(
    method: str, sample: SampleLike, spec: StatisticSpec, opts: MethodOptions
) -> ConfidenceInterval:
    check_method(method)
    if method == "bb":
        return block_bootstrap_ci(
            sample, spec, opts.block, opts.B, opts.alpha, opts.seed, opts.n_jobs
        )
    if method == "ar-sieve":
        return ar_sieve_ci(sample, spec, opts.B, opts.alpha, opts.seed, opts.n_jobs, opts.p_max)
    interval, _ = run_ci(sample, spec, opts.bootstrap_config(method))
    return interval


def prediction_interval(
    method: str, sample: SampleLike, opts: MethodOptions
) -> PredictionInterval:
    check_method(method, prediction=True)
    if method == "ar-sieve":
        return ar_sieve_pi(sample, opts.B, opts.alpha, opts.seed, opts.n_jobs, opts.p_max)
    return run_pi(sample, opts.predictor, opts.bootstrap_config(method))
