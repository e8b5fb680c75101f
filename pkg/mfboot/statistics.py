"""
Statistics - The statistic set bootstrapped by the engine and the baselines
"""

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from numpy.typing import ArrayLike

from .errors import DegenerateSampleError, InvalidInputError
from .transform import SeriesSample

StatisticKind = Literal["mean", "autocovariance", "autocorrelation", "quantile", "spectral"]

_SHORT_NAMES = {
    "mean": "mean",
    "acov": "autocovariance",
    "acorr": "autocorrelation",
    "quantile": "quantile",
    "spectral": "spectral",
}


@dataclass(frozen=True)
class StatisticSpec:
    """
    Which estimator to evaluate.

    `lag` applies to autocovariance/autocorrelation, `prob` to quantile,
    `omega` and optional `bandwidth` (radians) to the spectral ordinate.
    """

    kind: StatisticKind
    lag: int = 0
    prob: float = 0.5
    omega: float = 0.0
    bandwidth: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _SHORT_NAMES.values():
            raise InvalidInputError(f"unknown statistic: {self.kind}")
        if self.lag < 0:
            raise InvalidInputError(f"lag must be nonnegative, got {self.lag}")
        if not 0.0 < self.prob < 1.0:
            raise InvalidInputError(f"quantile level must lie in (0, 1), got {self.prob}")
        if not -math.pi <= self.omega <= math.pi:
            raise InvalidInputError(f"frequency must lie in [-pi, pi], got {self.omega}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise InvalidInputError(f"spectral bandwidth must be positive, got {self.bandwidth}")

    @classmethod
    def mean(cls) -> "StatisticSpec":
        return cls("mean")

    @classmethod
    def autocovariance(cls, k: int) -> "StatisticSpec":
        return cls("autocovariance", lag=int(k))

    @classmethod
    def autocorrelation(cls, k: int) -> "StatisticSpec":
        return cls("autocorrelation", lag=int(k))

    @classmethod
    def quantile(cls, p: float) -> "StatisticSpec":
        return cls("quantile", prob=float(p))

    @classmethod
    def spectral(cls, omega: float, bandwidth: Optional[float] = None) -> "StatisticSpec":
        return cls("spectral", omega=float(omega), bandwidth=bandwidth)

    @classmethod
    def parse(cls, text: str) -> "StatisticSpec":
        """Parse `mean`, `acov:K`, `acorr:K`, `quantile:P` or `spectral:OMEGA[:H]`"""
        name, _, rest = text.strip().partition(":")
        kind = _SHORT_NAMES.get(name.lower())
        if kind is None:
            raise InvalidInputError(f"unknown statistic: {text}")
        try:
            if kind == "mean":
                if rest:
                    raise ValueError(rest)
                return cls.mean()
            if kind in ("autocovariance", "autocorrelation"):
                return cls(kind, lag=int(rest))
            if kind == "quantile":
                return cls.quantile(float(rest))
            omega, _, h = rest.partition(":")
            return cls.spectral(float(omega), float(h) if h else None)
        except ValueError:
            raise InvalidInputError(f"malformed statistic: {text}") from None

    @property
    def label(self) -> str:
        if self.kind == "mean":
            return "mean"
        if self.kind == "autocovariance":
            return f"acov:{self.lag}"
        if self.kind == "autocorrelation":
            return f"acorr:{self.lag}"
        if self.kind == "quantile":
            return f"quantile:{self.prob:g}"
        if self.bandwidth is None:
            return f"spectral:{self.omega:g}"
        return f"spectral:{self.omega:g}:{self.bandwidth:g}"


def _values(sample) -> np.ndarray:
    if isinstance(sample, SeriesSample):
        return sample.values
    return np.asarray(sample, dtype=float)


def centered_autocovariance(y: np.ndarray, k: int) -> float:
    """(1/n) sum_{t<=n-k} (Y_t - mean)(Y_{t+k} - mean)"""
    n = y.size
    if not 0 <= k < n:
        raise InvalidInputError(f"lag must satisfy 0 <= k < n={n}, got {k}")
    d = y - y.mean()
    return float(d[: n - k] @ d[k:]) / n


def order_statistic_quantile(y: np.ndarray, p: float) -> float:
    """The ceil(n p)-th order statistic"""
    n = y.size
    index = min(max(int(math.ceil(n * p - 1e-9)), 1), n)
    return float(np.partition(y, index - 1)[index - 1])


def default_spectral_bandwidth(n: int) -> float:
    return n ** (-0.2)


def epanechnikov(u: ArrayLike) -> np.ndarray:
    """Bartlett-Priestley kernel: 3/4 (1 - u^2) on [-1, 1]"""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def smoothed_periodogram(y: np.ndarray, omega: float, h: Optional[float] = None) -> float:
    """
    Kernel-smoothed periodogram at frequency omega.

    The periodogram I(w_j) = |sum_t (Y_t - mean) e^{-i t w_j}|^2 / (2 pi n) over the
    nonzero Fourier frequencies is averaged with Epanechnikov weights in the
    circular distance |omega - w_j|, normalised to sum to one.
    """
    n = y.size
    if h is None:
        h = default_spectral_bandwidth(n)
    periodogram = np.abs(np.fft.fft(y - y.mean())) ** 2 / (2.0 * math.pi * n)
    freqs = 2.0 * math.pi * np.arange(n) / n
    distance = np.angle(np.exp(1j * (omega - freqs)))
    weights = epanechnikov(distance / h)
    weights[0] = 0.0
    total = weights.sum()
    if not total > 0:
        raise InvalidInputError(f"spectral bandwidth {h} covers no Fourier frequency at n={n}")
    return float(weights @ periodogram) / total


def evaluate_statistic(spec: StatisticSpec, sample) -> float:
    """
    Evaluate the named estimator on a series.

    Args:
        spec: Statistic to compute
        sample: SeriesSample or raw values

    Returns:
        The estimate as a float
    """
    y = _values(sample)
    if spec.kind == "mean":
        return float(y.mean())
    if spec.kind == "autocovariance":
        return centered_autocovariance(y, spec.lag)
    if spec.kind == "autocorrelation":
        gamma0 = centered_autocovariance(y, 0)
        gamma = centered_autocovariance(y, spec.lag)
        if gamma0 == 0.0:
            raise DegenerateSampleError("autocorrelation of a constant series is undefined")
        return gamma / gamma0
    if spec.kind == "quantile":
        return order_statistic_quantile(y, spec.prob)
    return smoothed_periodogram(y, spec.omega, spec.bandwidth)
