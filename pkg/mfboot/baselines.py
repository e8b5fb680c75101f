"""
Baselines - Blocks-of-blocks block bootstrap and AR-sieve bootstrap for comparison runs
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from arch.bootstrap import MovingBlockBootstrap
from joblib import Parallel, delayed
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter
from statsmodels.regression.linear_model import yule_walker
from statsmodels.tsa.arima_process import ArmaProcess

from .engine import MIN_REPLICATES, ConfidenceInterval, RootSample
from .errors import DegenerateSampleError, InvalidInputError, ReplicateBudgetError
from .prediction import FAILURE_BUDGET, PredictionInterval
from .seeding import check_seed, derive_rng
from .statistics import (
    StatisticSpec,
    evaluate_statistic,
    order_statistic_quantile,
    smoothed_periodogram,
)
from .transform import SampleLike, as_sample

logger = logging.getLogger(__name__)

SIEVE_BURN_IN = 1000
BLOCK_CONSTANT = 1.5


def _check_run(B: int, alpha: float, seed: int) -> None:
    if B < MIN_REPLICATES:
        raise InvalidInputError(f"B must be at least {MIN_REPLICATES}, got {B}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    check_seed(seed)


# --- block bootstrap -------------------------------------------------------


@dataclass(frozen=True)
class BlockConfig:
    """
    Block bootstrap settings.

    `block_size` None means b = ceil(const * n^(1/3)); `embed_dim` is the
    tuple length k of the first blocking level.
    """

    block_size: Optional[int] = None
    embed_dim: int = 5
    const: float = BLOCK_CONSTANT

    def __post_init__(self):
        if self.block_size is not None and self.block_size < 1:
            raise InvalidInputError(f"block size must be positive, got {self.block_size}")
        if self.embed_dim < 1:
            raise InvalidInputError(f"embedding dimension must be positive, got {self.embed_dim}")
        if not self.const > 0:
            raise InvalidInputError(f"block-size constant must be positive, got {self.const}")

    def resolve_block_size(self, n: int, tuples: int) -> int:
        b = self.block_size
        if b is None:
            b = min(int(math.ceil(self.const * n ** (1.0 / 3.0))), tuples)
        if b > tuples:
            raise InvalidInputError(f"block size {b} exceeds the {tuples} available tuples")
        return b


def embed(y: np.ndarray, k: int) -> np.ndarray:
    """Rows X_t = (Y_t, ..., Y_{t+k-1}) for t = 1..n-k+1"""
    if not 1 <= k <= y.size:
        raise InvalidInputError(f"embedding dimension must lie in [1, {y.size}], got {k}")
    return sliding_window_view(y, k)


def evaluate_tuple_statistic(spec: StatisticSpec, tuples: np.ndarray) -> float:
    """
    The statistic written over k-tuples, so a resampled tuple set gives no
    end effects at block joins.

    Lagged moments use column 0 against column `lag`; the rest use column 0.
    """
    first = tuples[:, 0]
    if spec.kind == "mean":
        return float(first.mean())
    if spec.kind in ("autocovariance", "autocorrelation"):
        if spec.lag >= tuples.shape[1]:
            raise InvalidInputError(
                f"lag {spec.lag} needs tuples longer than {tuples.shape[1]}"
            )
        lagged = tuples[:, spec.lag]
        gamma = float(np.mean(first * lagged) - first.mean() * lagged.mean())
        if spec.kind == "autocovariance":
            return gamma
        gamma0 = float(first.var())
        if gamma0 == 0.0:
            raise DegenerateSampleError("autocorrelation of a constant series is undefined")
        return gamma / gamma0
    if spec.kind == "quantile":
        return order_statistic_quantile(first, spec.prob)
    return smoothed_periodogram(first, spec.omega, spec.bandwidth)


def _block_replicate(
    tuples: np.ndarray, spec: StatisticSpec, b: int, seed: int, index: int
) -> float:
    bs = MovingBlockBootstrap(b, tuples, seed=derive_rng(seed, index))
    (resampled,), _ = next(bs.bootstrap(1))
    return evaluate_tuple_statistic(spec, resampled)


def block_bootstrap_ci(
    sample: SampleLike,
    spec: StatisticSpec,
    blockcfg: Optional[BlockConfig] = None,
    B: int = 250,
    alpha: float = 0.05,
    seed: int = 0,
    n_jobs: int = 1,
) -> ConfidenceInterval:
    """
    Blocks-of-blocks bootstrap confidence interval.

    The series is embedded into k-tuples (k grows to lag + 1 for lagged
    statistics), blocks of b consecutive tuples are drawn with replacement
    and the concatenation is truncated to n - k + 1 tuples.

    Args:
        sample: Observed series
        spec: Statistic of interest
        blockcfg: Block settings; defaults to BlockConfig()
        B: Number of replicates
        alpha: Nominal miscoverage
        seed: Master seed
        n_jobs: joblib parallelism

    Returns:
        ConfidenceInterval from the bootstrap roots
    """
    _check_run(B, alpha, seed)
    sample = as_sample(sample)
    blockcfg = blockcfg or BlockConfig()
    k = max(blockcfg.embed_dim, spec.lag + 1)
    tuples = embed(sample.values, k)
    b = blockcfg.resolve_block_size(sample.n, tuples.shape[0])

    theta_hat = evaluate_tuple_statistic(spec, tuples)
    replicates = Parallel(n_jobs=n_jobs)(
        delayed(_block_replicate)(tuples, spec, b, seed, i) for i in range(B)
    )
    roots = RootSample(theta_hat - np.asarray(replicates), theta_hat)
    logger.info("bb %s: k=%d b=%d theta_hat=%.6g", spec.label, k, b, theta_hat)
    return roots.interval(alpha, "bb", spec.label)


# --- AR sieve --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ArSieveModel:
    """Fitted causal AR(p) on the demeaned series with centered residuals"""

    order: int
    coefficients: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    mean: float
    sigma2: float

    @property
    def intercept(self) -> float:
        return self.mean * (1.0 - float(self.coefficients.sum()))

    @property
    def ar_polynomial(self) -> np.ndarray:
        return np.r_[1.0, -self.coefficients]

    def predict_next(self, history: np.ndarray) -> float:
        """intercept + sum_i phi_i Y_{n+1-i} from the last `order` values"""
        if self.order == 0:
            return self.intercept
        recent = np.asarray(history, dtype=float)[-self.order :][::-1]
        return self.intercept + float(self.coefficients @ recent)

    def simulate(
        self, n: int, rng: np.random.Generator, burn_in: int = SIEVE_BURN_IN
    ) -> np.ndarray:
        """Recurse the fitted AR with i.i.d. resampled residuals, dropping the burn-in"""
        shocks = self.residuals[rng.integers(0, self.residuals.size, size=n + burn_in)]
        path = lfilter([1.0], self.ar_polynomial, shocks)
        return path[burn_in:] + self.mean


def default_max_order(n: int) -> int:
    return int(math.floor(10.0 * math.log10(n)))


def _fit_order(y: np.ndarray, p: int):
    """Yule-Walker fit of order p: (coefficients, innovation variance)"""
    if p == 0:
        return np.zeros(0), float(np.var(y))
    rho, sigma = yule_walker(y, order=p, method="mle", demean=True)
    return np.asarray(rho, dtype=float), float(sigma) ** 2


def _residuals(y: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    d = y - y.mean()
    p = coefficients.size
    if p == 0:
        e = d
    else:
        e = lfilter(np.r_[1.0, -coefficients], [1.0], d)[p:]
    return e - e.mean()


def fit_ar_order(sample: SampleLike, p: int) -> ArSieveModel:
    """Fit AR(p) at a fixed order"""
    y = as_sample(sample).values
    if np.var(y) == 0.0:
        raise DegenerateSampleError("cannot fit an AR model to a constant series")
    coefficients, sigma2 = _fit_order(y, p)
    residuals = _residuals(y, coefficients)
    if not np.var(residuals) > 0.0:
        raise DegenerateSampleError("AR residuals have zero variance")
    return ArSieveModel(p, coefficients, residuals, float(y.mean()), sigma2)


def fit_ar_sieve(sample: SampleLike, p_max: Optional[int] = None) -> ArSieveModel:
    """
    Select the AR order by AIC over Yule-Walker fits.

    AIC(p) = n ln(sigma2_p) + 2p for p = 0..p_max; orders whose fit is not
    causal are skipped.

    Args:
        sample: Observed series
        p_max: Largest order tried; defaults to floor(10 log10 n)

    Returns:
        ArSieveModel at the selected order
    """
    y = as_sample(sample).values
    n = y.size
    if p_max is None:
        p_max = default_max_order(n)
    if p_max < 0:
        raise InvalidInputError(f"p_max must be nonnegative, got {p_max}")
    if n <= p_max + 1:
        raise InvalidInputError(f"need n > p_max + 1, got n={n} p_max={p_max}")
    if np.var(y) == 0.0:
        raise DegenerateSampleError("cannot fit an AR model to a constant series")

    best_p, best_aic = 0, math.inf
    for p in range(p_max + 1):
        coefficients, sigma2 = _fit_order(y, p)
        if p > 0 and not ArmaProcess(np.r_[1.0, -coefficients]).isstationary:
            logger.debug("skipping non-causal Yule-Walker fit at order %d", p)
            continue
        if not sigma2 > 0:
            continue
        aic = n * math.log(sigma2) + 2 * p
        if aic < best_aic:
            best_p, best_aic = p, aic
    logger.debug("AR sieve selected order %d (AIC %.3f)", best_p, best_aic)
    return fit_ar_order(y, best_p)


def _sieve_ci_replicate(
    model: ArSieveModel, spec: StatisticSpec, n: int, seed: int, index: int
) -> float:
    return evaluate_statistic(spec, model.simulate(n, derive_rng(seed, index)))


def ar_sieve_ci(
    sample: SampleLike,
    spec: StatisticSpec,
    B: int = 250,
    alpha: float = 0.05,
    seed: int = 0,
    n_jobs: int = 1,
    p_max: Optional[int] = None,
) -> ConfidenceInterval:
    """AR-sieve bootstrap confidence interval (roots as in the model-free engine)"""
    _check_run(B, alpha, seed)
    sample = as_sample(sample)
    model = fit_ar_sieve(sample, p_max)
    theta_hat = evaluate_statistic(spec, sample)
    replicates = Parallel(n_jobs=n_jobs)(
        delayed(_sieve_ci_replicate)(model, spec, sample.n, seed, i) for i in range(B)
    )
    roots = RootSample(theta_hat - np.asarray(replicates), theta_hat)
    logger.info("ar-sieve %s: p=%d theta_hat=%.6g", spec.label, model.order, theta_hat)
    return roots.interval(alpha, "ar-sieve", spec.label)


def _sieve_pi_replicate(
    model: ArSieveModel, history: np.ndarray, seed: int, index: int
) -> Optional[float]:
    rng = derive_rng(seed, index)
    pseudo = model.simulate(history.size, rng)
    shock = model.residuals[rng.integers(0, model.residuals.size)]
    future = model.predict_next(history) + shock
    try:
        refit = fit_ar_order(pseudo, model.order)
    except DegenerateSampleError as e:
        logger.warning("sieve replicate %d failed: %s", index, e)
        return None
    return future - refit.predict_next(history)


def ar_sieve_pi(
    sample: SampleLike,
    B: int = 250,
    alpha: float = 0.05,
    seed: int = 0,
    n_jobs: int = 1,
    p_max: Optional[int] = None,
) -> PredictionInterval:
    """
    Forward AR-sieve bootstrap prediction interval for Y_{n+1}.

    Each replicate regenerates a pseudo-series from the fitted recursion,
    refits at the selected order and predicts from the observed last p values;
    the root is Y*_{n+1} - Y^*_{n+1}.
    """
    _check_run(B, alpha, seed)
    history = as_sample(sample).values
    model = fit_ar_sieve(history, p_max)
    point = model.predict_next(history)

    results: List[Optional[float]] = Parallel(n_jobs=n_jobs)(
        delayed(_sieve_pi_replicate)(model, history, seed, i) for i in range(B)
    )
    roots = np.array([r for r in results if r is not None])
    failures = B - roots.size
    if failures > math.floor(FAILURE_BUDGET * B):
        raise ReplicateBudgetError(failures, B)
    sample_roots = RootSample(roots, point)
    lower, upper = sample_roots.bounds(alpha)
    logger.info("ar-sieve prediction: p=%d point=%.6g", model.order, point)
    return PredictionInterval(point, lower, upper, alpha, "ar-sieve", failures, sample_roots)
