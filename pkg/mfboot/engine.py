"""
Engine - Model-free (MF) and limit model-free (LMF) bootstrap for confidence intervals
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Literal, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from .covariance import (
    CholeskyFactor,
    TaperConfig,
    ToeplitzCovariance,
    build_tapered_matrix,
    cholesky_lower,
    colour,
    default_taper_bandwidth,
    whiten,
)
from .errors import InvalidInputError
from .seeding import check_seed, derive_rng
from .statistics import StatisticSpec, evaluate_statistic
from .transform import (
    CdfEstimate,
    SampleLike,
    SeriesSample,
    TransformedSeries,
    as_sample,
    fit_cdf,
    inverse_pit,
    pit_forward,
)

logger = logging.getLogger(__name__)

MIN_REPLICATES = 100

_CDF_SUFFIX = {"kernel": "ker", "empirical": "emp"}


@dataclass(frozen=True)
class BootstrapConfig:
    """
    Settings for one bootstrap run.

    The optional overrides replace the data-driven defaults: `cdf_bandwidth`
    (kernel CDF h), `taper_bandwidth` (flat-top l) and `threshold` (c).
    """

    variant: Literal["MF", "LMF"] = "MF"
    cdf_kind: Literal["empirical", "kernel"] = "kernel"
    B: int = 250
    alpha: float = 0.05
    seed: int = 0
    taper_bandwidth: Optional[float] = None
    threshold: Optional[float] = None
    cdf_bandwidth: Optional[float] = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.variant not in ("MF", "LMF"):
            raise InvalidInputError(f"variant must be MF or LMF, got {self.variant}")
        if self.cdf_kind not in _CDF_SUFFIX:
            raise InvalidInputError(f"unknown CDF kind: {self.cdf_kind}")
        if self.B < MIN_REPLICATES:
            raise InvalidInputError(f"B must be at least {MIN_REPLICATES}, got {self.B}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")
        check_seed(self.seed)

    @property
    def method(self) -> str:
        return f"{self.variant.lower()}-{_CDF_SUFFIX[self.cdf_kind]}"

    @classmethod
    def from_method(cls, method: str, **kwargs) -> "BootstrapConfig":
        """Build from a method name such as `mf-ker` or `lmf-emp`"""
        variant, _, suffix = method.lower().partition("-")
        kinds = {v: k for k, v in _CDF_SUFFIX.items()}
        if variant not in ("mf", "lmf") or suffix not in kinds:
            raise InvalidInputError(f"not a model-free method: {method}")
        return cls(variant=variant.upper(), cdf_kind=kinds[suffix], **kwargs)


@dataclass(frozen=True, eq=False)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float
    method: str = ""
    statistic: str = ""
    estimate: float = float("nan")

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvalidInputError(f"interval bounds out of order: {self.lower} > {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower < value < self.upper

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "estimate": self.estimate,
            "lower": self.lower,
            "upper": self.upper,
            "alpha": self.alpha,
        }


def root_quantile(sorted_roots: np.ndarray, q: float) -> float:
    """Lower quantile inf{r : R(r) >= q} of sorted roots: the ceil(B q)-th order statistic"""
    count = sorted_roots.size
    index = min(max(int(math.ceil(count * q - 1e-9)), 1), count)
    return float(sorted_roots[index - 1])


@dataclass(frozen=True, eq=False)
class RootSample:
    """B bootstrap roots theta_hat - theta_hat* around the point estimate"""

    roots: np.ndarray = field(repr=False)
    theta_hat: float

    def __post_init__(self):
        roots = np.sort(np.asarray(self.roots, dtype=float))
        if roots.size == 0 or not np.all(np.isfinite(roots)):
            raise InvalidInputError("root sample must be non-empty and finite")
        roots.setflags(write=False)
        object.__setattr__(self, "roots", roots)

    @property
    def B(self) -> int:
        return int(self.roots.size)

    def quantile(self, q: float) -> float:
        return root_quantile(self.roots, q)

    def bounds(self, alpha: float) -> Tuple[float, float]:
        """(theta_hat + R^-1(alpha/2), theta_hat + R^-1(1 - alpha/2))"""
        if not 0.0 < alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
        return (
            self.theta_hat + self.quantile(alpha / 2.0),
            self.theta_hat + self.quantile(1.0 - alpha / 2.0),
        )

    def interval(self, alpha: float, method: str = "", statistic: str = "") -> ConfidenceInterval:
        lower, upper = self.bounds(alpha)
        return ConfidenceInterval(lower, upper, alpha, method, statistic, self.theta_hat)


@dataclass(frozen=True, eq=False)
class PreparedTransform:
    """Everything estimated once per sample and shared read-only by the replicates"""

    sample: SeriesSample
    cdf: CdfEstimate
    transformed: TransformedSeries
    covariance: ToeplitzCovariance
    factor: CholeskyFactor

    @property
    def n(self) -> int:
        return self.sample.n

    @property
    def xi(self) -> np.ndarray:
        return self.transformed.xi


def choose_taper_bandwidth(z: np.ndarray, override: Optional[float] = None) -> float:
    """Taper bandwidth: the override, the empirical rule, or 1 for very short series"""
    if override is not None:
        return float(override)
    if z.size < 20:
        logger.debug("series too short for the bandwidth rule (n=%d), using l=1", z.size)
        return 1.0
    return default_taper_bandwidth(z)


def prepare_transform(
    sample: SampleLike, cfg: BootstrapConfig, dim: Optional[int] = None
) -> PreparedTransform:
    """
    Estimate the transform chain Y -> U -> Z~ -> xi for a sample.

    Args:
        sample: Observed series
        cfg: Bootstrap configuration (CDF kind and overrides)
        dim: Covariance dimension, n by default

    Returns:
        PreparedTransform with the fitted CDF, tapered matrix and Cholesky factor
    """
    sample = as_sample(sample)
    cdf = fit_cdf(sample, cfg.cdf_kind, cfg.cdf_bandwidth)
    transformed = pit_forward(sample, cdf, cfg.threshold)
    l = choose_taper_bandwidth(transformed.z, cfg.taper_bandwidth)
    covariance = build_tapered_matrix(transformed.z, TaperConfig(l), dim)
    factor = cholesky_lower(covariance)
    n = sample.n
    xi = whiten(transformed.z, CholeskyFactor(factor.lower[:n, :n]))
    logger.debug(
        "prepared %s transform: n=%d c=%.3f l=%g shrinkage=%.4f",
        cfg.cdf_kind, n, transformed.threshold, l, covariance.shrinkage,
    )
    return PreparedTransform(sample, cdf, transformed.with_xi(xi), covariance, factor)


def _leading_factor(prepared: PreparedTransform) -> CholeskyFactor:
    n = prepared.n
    if prepared.factor.n == n:
        return prepared.factor
    return CholeskyFactor(prepared.factor.lower[:n, :n])


def mf_generate(prepared: PreparedTransform, rng: np.random.Generator) -> np.ndarray:
    """MF pseudo-series: resample xi with replacement, colour, map back through F^-1 Phi"""
    n = prepared.n
    xi_star = prepared.xi[rng.integers(0, n, size=n)]
    z_star = colour(xi_star, _leading_factor(prepared))
    return inverse_pit(z_star, prepared.cdf)


def lmf_generate(prepared: PreparedTransform, rng: np.random.Generator) -> np.ndarray:
    """LMF pseudo-series: standard normal xi*, otherwise as mf_generate"""
    xi_star = rng.standard_normal(prepared.n)
    z_star = colour(xi_star, _leading_factor(prepared))
    return inverse_pit(z_star, prepared.cdf)


def generate_pseudo_series(
    prepared: PreparedTransform, variant: str, rng: np.random.Generator
) -> np.ndarray:
    if variant == "MF":
        return mf_generate(prepared, rng)
    return lmf_generate(prepared, rng)


def _ci_replicate(
    prepared: PreparedTransform, spec: StatisticSpec, cfg: BootstrapConfig, index: int
) -> float:
    rng = derive_rng(cfg.seed, index)
    y_star = generate_pseudo_series(prepared, cfg.variant, rng)
    return evaluate_statistic(spec, y_star)


def run_ci(
    sample: SampleLike, spec: StatisticSpec, cfg: BootstrapConfig
) -> Tuple[ConfidenceInterval, RootSample]:
    """
    Model-free bootstrap confidence interval.

    The transform chain is estimated once and reused by all B replicates;
    replicate b draws from its own stream derived from (seed, b).

    Args:
        sample: Observed series
        spec: Statistic of interest
        cfg: Bootstrap configuration

    Returns:
        (ConfidenceInterval, RootSample)
    """
    sample = as_sample(sample)
    theta_hat = evaluate_statistic(spec, sample)
    prepared = prepare_transform(sample, cfg)
    replicates = Parallel(n_jobs=cfg.n_jobs)(
        delayed(_ci_replicate)(prepared, spec, cfg, b) for b in range(cfg.B)
    )
    roots = RootSample(theta_hat - np.asarray(replicates), theta_hat)
    logger.info("%s %s: theta_hat=%.6g over B=%d", cfg.method, spec.label, theta_hat, cfg.B)
    return roots.interval(cfg.alpha, cfg.method, spec.label), roots
