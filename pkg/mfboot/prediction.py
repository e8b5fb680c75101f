"""
Prediction - One-step-ahead model-free prediction intervals via bootstrapped predictive roots
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from .covariance import CholeskyFactor, colour, whiten
from .engine import BootstrapConfig, PreparedTransform, RootSample, prepare_transform
from .errors import (
    DegenerateSampleError,
    InvalidInputError,
    NumericalError,
    ReplicateBudgetError,
)
from .seeding import as_generator, derive_rng
from .transform import CdfEstimate, SampleLike, SeriesSample, as_sample, inverse_pit

logger = logging.getLogger(__name__)

MIN_PREDICTION_N = 50
MIN_DRAWS = 500
MAX_RETRIES = 5
FAILURE_BUDGET = 0.05


@dataclass(frozen=True)
class PredictorKind:
    """L2 (conditional mean) or L1 (conditional median) predictor with M Monte Carlo draws"""

    kind: Literal["L2", "L1"] = "L2"
    monte_carlo_M: int = 1000

    def __post_init__(self):
        if self.kind not in ("L2", "L1"):
            raise InvalidInputError(f"predictor must be L2 or L1, got {self.kind}")
        if self.monte_carlo_M < MIN_DRAWS:
            raise InvalidInputError(f"need at least {MIN_DRAWS} draws, got {self.monte_carlo_M}")


@dataclass(frozen=True, eq=False)
class PredictionInterval:
    point_prediction: float
    lower: float
    upper: float
    alpha: float
    method: str = ""
    failures: int = 0
    roots: Optional[RootSample] = field(default=None, repr=False)

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
            "point_prediction": self.point_prediction,
            "lower": self.lower,
            "upper": self.upper,
            "alpha": self.alpha,
            "failures": self.failures,
        }


@dataclass(frozen=True, eq=False)
class PredictiveState:
    """
    Transforms fitted on the observed series with an (n+1)-dimensional matrix.

    The last row of the Cholesky factor splits into `last_row` (first n
    entries) and `last_diag`; last_row @ xi is the conditional mean of
    Z_{n+1} and last_diag**2 its conditional variance.
    """

    prepared: PreparedTransform

    @property
    def n(self) -> int:
        return self.prepared.n

    @property
    def cdf(self) -> CdfEstimate:
        return self.prepared.cdf

    @property
    def z(self) -> np.ndarray:
        return self.prepared.transformed.z

    @property
    def xi(self) -> np.ndarray:
        return self.prepared.xi

    @property
    def last_row(self) -> np.ndarray:
        return self.prepared.factor.lower[self.n, : self.n]

    @property
    def last_diag(self) -> float:
        return float(self.prepared.factor.lower[self.n, self.n])

    @property
    def leading_factor(self) -> CholeskyFactor:
        return CholeskyFactor(self.prepared.factor.lower[: self.n, : self.n])

    def conditional_mean(self, z: Optional[np.ndarray] = None) -> float:
        """Sigma21 Sigma11^-1 z via the factor; defaults to this state's own Z~"""
        if z is None:
            xi = self.xi
        else:
            xi = whiten(z, self.leading_factor)
        return float(self.last_row @ xi)


def prepare_predictive_state(sample: SampleLike, cfg: BootstrapConfig) -> PredictiveState:
    sample = as_sample(sample)
    return PredictiveState(prepare_transform(sample, cfg, dim=sample.n + 1))


def conditional_next_z_mf(
    state: PredictiveState, xi_next: Union[float, np.ndarray]
) -> Union[float, np.ndarray]:
    """(n+1)-th entry of L_{n+1} (xi_1..xi_n, xi_next)"""
    value = state.conditional_mean() + state.last_diag * np.asarray(xi_next, dtype=float)
    return float(value) if np.ndim(value) == 0 else value


def next_z_draws(
    mean: float,
    sd: float,
    variant: str,
    rng: np.random.Generator,
    size: int,
    xi_pool: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Draws of Z_{n+1}: mean + sd * xi with xi resampled from xi_pool (MF) or N(0,1) (LMF)"""
    if variant == "MF":
        xi = xi_pool[rng.integers(0, xi_pool.size, size=size)]
    else:
        xi = rng.standard_normal(size)
    return mean + sd * xi


def monte_carlo_predictor(cdf: CdfEstimate, z_draws: np.ndarray, kind: str = "L2") -> float:
    """Predictor from latent draws: mean (L2) or median (L1) of F^-1(Phi(z))"""
    values = inverse_pit(z_draws, cdf)
    if kind == "L2":
        return float(np.mean(values))
    return float(np.median(values))


def l2_predictor(
    cdf: CdfEstimate,
    cond_mean: float,
    cond_sd: float,
    M: int,
    seed: Union[np.random.Generator, int, None] = None,
    kind: str = "L2",
) -> float:
    """
    Monte Carlo predictor under a Gaussian conditional law.

    Args:
        cdf: Marginal CDF estimate used by the inverse PIT
        cond_mean: Conditional mean of Z_{n+1}
        cond_sd: Conditional standard deviation of Z_{n+1}
        M: Number of draws
        seed: Generator or seed for the draws
        kind: "L2" for the mean, "L1" for the median

    Returns:
        The predictor on the data scale
    """
    if not cond_sd > 0:
        raise InvalidInputError(f"conditional sd must be positive, got {cond_sd}")
    rng = as_generator(seed)
    z = next_z_draws(cond_mean, cond_sd, "LMF", rng, int(M))
    return monte_carlo_predictor(cdf, z, kind)


def _point_prediction(
    state: PredictiveState, kind: PredictorKind, variant: str, rng: np.random.Generator
) -> float:
    draws = next_z_draws(
        state.conditional_mean(), state.last_diag, variant, rng, kind.monte_carlo_M, state.xi
    )
    return monte_carlo_predictor(state.cdf, draws, kind.kind)


def _predictive_root(
    state: PredictiveState,
    kind: PredictorKind,
    cfg: BootstrapConfig,
    rng: np.random.Generator,
) -> float:
    n = state.n
    variant = cfg.variant

    if variant == "MF":
        xi_star = state.xi[rng.integers(0, n, size=n)]
    else:
        xi_star = rng.standard_normal(n)
    y_star = inverse_pit(colour(xi_star, state.leading_factor), state.cdf)

    z_future = next_z_draws(state.conditional_mean(), state.last_diag, variant, rng, 1, state.xi)
    y_future = float(inverse_pit(z_future, state.cdf)[0])

    # re-estimate everything on the pseudo-series, keep the original Z~ as conditioning set
    starred_cfg = replace(cfg, cdf_bandwidth=None, n_jobs=1)
    starred = prepare_predictive_state(y_star, starred_cfg)
    draws = next_z_draws(
        starred.conditional_mean(state.z), starred.last_diag, variant, rng,
        kind.monte_carlo_M, starred.xi,
    )
    y_hat_star = monte_carlo_predictor(starred.cdf, draws, kind.kind)
    return y_future - y_hat_star


def _replicate_with_retries(
    state: PredictiveState, kind: PredictorKind, cfg: BootstrapConfig, index: int
) -> Optional[float]:
    for attempt in range(MAX_RETRIES + 1):
        rng = derive_rng(cfg.seed, index) if attempt == 0 else derive_rng(cfg.seed, index, attempt)
        try:
            return _predictive_root(state, kind, cfg, rng)
        except (NumericalError, DegenerateSampleError) as e:
            logger.warning("replicate %d attempt %d failed: %s", index, attempt, e)
    return None


def _check_length(sample: SeriesSample) -> None:
    if sample.n < MIN_PREDICTION_N:
        raise InvalidInputError(f"prediction needs n >= {MIN_PREDICTION_N}, got {sample.n}")


def point_prediction(sample: SampleLike, kind: PredictorKind, cfg: BootstrapConfig) -> float:
    """Monte Carlo L2 / L1 predictor of Y_{n+1} from the fitted transforms, no bootstrap"""
    sample = as_sample(sample)
    _check_length(sample)
    state = prepare_predictive_state(sample, cfg)
    return _point_prediction(state, kind, cfg.variant, derive_rng(cfg.seed, "point"))


def bootstrap_predictive_roots(
    sample: SampleLike, kind: PredictorKind, cfg: BootstrapConfig
) -> Tuple[float, RootSample, int]:
    """
    Point prediction and bootstrapped predictive roots.

    Returns:
        (point prediction, RootSample of Y*_{n+1} - Y^*_{n+1}, failed replicate count)
    """
    sample = as_sample(sample)
    _check_length(sample)
    state = prepare_predictive_state(sample, cfg)
    point = _point_prediction(state, kind, cfg.variant, derive_rng(cfg.seed, "point"))

    results: List[Optional[float]] = Parallel(n_jobs=cfg.n_jobs)(
        delayed(_replicate_with_retries)(state, kind, cfg, b) for b in range(cfg.B)
    )
    roots = np.array([r for r in results if r is not None])
    failures = cfg.B - roots.size
    if failures > math.floor(FAILURE_BUDGET * cfg.B):
        raise ReplicateBudgetError(failures, cfg.B)
    return point, RootSample(roots, point), failures


def run_pi(
    sample: SampleLike, kind: PredictorKind, cfg: BootstrapConfig
) -> PredictionInterval:
    """
    Model-free (cfg.variant == "MF") or limit model-free one-step prediction interval.

    Args:
        sample: Observed series Y_1..Y_n, n >= 50
        kind: Predictor (L2 or L1) and Monte Carlo size
        cfg: Bootstrap configuration

    Returns:
        PredictionInterval (point + root quantiles)
    """
    point, roots, failures = bootstrap_predictive_roots(sample, kind, cfg)
    lower, upper = roots.bounds(cfg.alpha)
    logger.info("%s prediction: point=%.6g interval=(%.6g, %.6g)", cfg.method, point, lower, upper)
    return PredictionInterval(point, lower, upper, cfg.alpha, cfg.method, failures, roots)
