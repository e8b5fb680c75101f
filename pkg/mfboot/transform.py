"""
Transform - Marginal CDF estimation and the PIT / inverse-PIT chain Y -> U -> Z and back
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.interpolate import CubicHermiteSpline, PPoly
from scipy.special import ndtr, ndtri
from scipy.stats import norm

from .errors import DegenerateSampleError, InvalidInputError

logger = logging.getLogger(__name__)

# Kernel quantile solver settings
_QUANTILE_TOL = 1e-10
_QUANTILE_MAX_ITER = 200
_BRACKET_WIDTHS = 10.0
_GRID_STEPS_PER_BANDWIDTH = 32
_MAX_GRID = 1 << 16

# kernel sums are evaluated this many (point, support) pairs at a time
_CHUNK_ELEMENTS = 1 << 20

# Normal CDF values are clipped to this distance from {0, 1} before inversion
_P_FLOOR = 1e-15


@dataclass(frozen=True, eq=False)
class SeriesSample:
    """An observed stationary series Y_1..Y_n"""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidInputError("series must be one-dimensional")
        if values.size < 2:
            raise InvalidInputError(f"series needs at least 2 observations, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("series contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"SeriesSample(n={self.n})"


SampleLike = Union[SeriesSample, ArrayLike]


def as_sample(sample: SampleLike) -> SeriesSample:
    """Wrap raw values in a SeriesSample (no copy if it already is one)"""
    if isinstance(sample, SeriesSample):
        return sample
    return SeriesSample(sample)


@dataclass(frozen=True, eq=False)
class CdfEstimate:
    """
    An estimated marginal CDF with forward and quantile evaluation.

    `support` is the sorted fitting sample; `bandwidth` is only set for the
    kernel kind.
    """

    kind: Literal["empirical", "kernel"]
    support: np.ndarray = field(repr=False)
    bandwidth: Optional[float] = None

    @property
    def n(self) -> int:
        return int(self.support.size)

    def forward(self, y: ArrayLike) -> np.ndarray:
        raise NotImplementedError

    def quantile(self, p: ArrayLike) -> np.ndarray:
        raise NotImplementedError


class EmpiricalCdf(CdfEstimate):
    """Step-function CDF: forward(y) = #{Y_t <= y} / n"""

    def forward(self, y: ArrayLike) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.searchsorted(self.support, y, side="right") / self.n

    def quantile(self, p: ArrayLike) -> np.ndarray:
        """inf{y : forward(y) >= p}, i.e. the ceil(n p)-th order statistic"""
        p = np.asarray(p, dtype=float)
        if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
            raise InvalidInputError("quantile probabilities must lie in [0, 1]")
        # the 1e-9 slack keeps p = k/n on the k-th order statistic despite rounding
        index = np.ceil(self.n * p - 1e-9).astype(int)
        index = np.clip(index, 1, self.n)
        return self.support[index - 1]


@dataclass(frozen=True, eq=False)
class KernelCdf(CdfEstimate):
    """
    Gaussian-kernel smoothed CDF: forward(y) = mean_t Phi((y - Y_t) / h)

    On construction the exact CDF and density are tabulated over the bracket
    at spacing h / 32 and joined by a cubic Hermite spline. `quantile` inverts
    the spline, so every later inversion costs O(log G) per probability
    instead of a pass over the whole support.
    """

    grid: np.ndarray = field(default=None, init=False, repr=False)
    grid_cdf: np.ndarray = field(default=None, init=False, repr=False)
    spline: CubicHermiteSpline = field(default=None, init=False, repr=False)
    slope: PPoly = field(default=None, init=False, repr=False)

    def __post_init__(self):
        lo_edge, hi_edge = self.bracket
        step = self.bandwidth / _GRID_STEPS_PER_BANDWIDTH
        count = int(math.ceil((hi_edge - lo_edge) / step)) + 1
        if count > _MAX_GRID:
            logger.debug("kernel CDF grid capped at %d nodes (wanted %d)", _MAX_GRID, count)
            count = _MAX_GRID
        grid = np.linspace(lo_edge, hi_edge, count)
        grid_cdf = np.maximum.accumulate(self.forward(grid))
        spline = CubicHermiteSpline(grid, grid_cdf, self.density(grid))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "grid_cdf", grid_cdf)
        object.__setattr__(self, "spline", spline)
        object.__setattr__(self, "slope", spline.derivative())

    def _kernel_mean(self, y: ArrayLike, kernel) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.empty(flat.shape)
        rows = max(1, _CHUNK_ELEMENTS // self.n)
        for start in range(0, flat.size, rows):
            u = (flat[start : start + rows, np.newaxis] - self.support) / self.bandwidth
            out[start : start + rows] = kernel(u).mean(axis=-1)
        return out.reshape(y.shape)

    def forward(self, y: ArrayLike) -> np.ndarray:
        return self._kernel_mean(y, ndtr)

    def density(self, y: ArrayLike) -> np.ndarray:
        return self._kernel_mean(y, norm.pdf) / self.bandwidth

    @property
    def bracket(self) -> tuple:
        pad = _BRACKET_WIDTHS * self.bandwidth
        return float(self.support[0] - pad), float(self.support[-1] + pad)

    def quantile(self, p: ArrayLike) -> np.ndarray:
        """
        Invert the smoothed CDF.

        The grid cell holding p gives a bracket and a linear starting point;
        Newton steps on the Hermite spline, bisecting whenever a step leaves
        the bracket, converge to 1e-10 in y.
        """
        p = np.asarray(p, dtype=float)
        if np.any(~((p > 0.0) & (p < 1.0))):
            raise InvalidInputError("kernel CDF quantile needs probabilities in (0, 1)")
        shape = p.shape
        p = p.ravel()

        cell = np.clip(np.searchsorted(self.grid_cdf, p, side="left"), 1, self.grid.size - 1)
        lo = self.grid[cell - 1].copy()
        hi = self.grid[cell].copy()
        f_lo = self.grid_cdf[cell - 1]
        rise = self.grid_cdf[cell] - f_lo
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(rise > 0.0, (p - f_lo) / rise, 0.5)
        x = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)

        active = np.ones(p.shape, dtype=bool)
        for _ in range(_QUANTILE_MAX_ITER):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            xa = x[idx]
            gap = self.spline(xa) - p[idx]
            lo[idx] = np.where(gap <= 0.0, xa, lo[idx])
            hi[idx] = np.where(gap >= 0.0, xa, hi[idx])

            with np.errstate(divide="ignore", invalid="ignore"):
                step = xa - gap / self.slope(xa)
            outside = ~np.isfinite(step) | (step <= lo[idx]) | (step >= hi[idx])
            step = np.where(outside, 0.5 * (lo[idx] + hi[idx]), step)

            done = (np.abs(step - xa) < _QUANTILE_TOL) | (gap == 0.0)
            x[idx] = np.where(gap == 0.0, xa, step)
            active[idx[done]] = False
        else:
            logger.warning("kernel quantile hit the iteration cap for %d points", active.sum())

        return x.reshape(shape)


def fit_empirical_cdf(sample: SampleLike) -> EmpiricalCdf:
    """Fit the empirical CDF of a series"""
    sample = as_sample(sample)
    return EmpiricalCdf(kind="empirical", support=np.sort(sample.values))


def fit_kernel_cdf(sample: SampleLike, h: Optional[float] = None) -> KernelCdf:
    """
    Fit the Gaussian-kernel smoothed CDF.

    Args:
        sample: Observed series
        h: Kernel bandwidth in units of Y; defaults to `default_bandwidth(sample)`

    Returns:
        KernelCdf estimate
    """
    sample = as_sample(sample)
    if h is None:
        h = default_bandwidth(sample)
    if not (h > 0 and math.isfinite(h)):
        raise InvalidInputError(f"kernel bandwidth must be positive, got {h}")
    return KernelCdf(kind="kernel", support=np.sort(sample.values), bandwidth=float(h))


def fit_cdf(sample: SampleLike, kind: str, h: Optional[float] = None) -> CdfEstimate:
    """Dispatch on the CDF kind"""
    if kind == "empirical":
        return fit_empirical_cdf(sample)
    if kind == "kernel":
        return fit_kernel_cdf(sample, h)
    raise InvalidInputError(f"unknown CDF kind: {kind}")


def default_bandwidth(sample: SampleLike) -> float:
    """Rule h = s_Y * n^(-1/3), which is o(n^(-1/4))"""
    sample = as_sample(sample)
    sd = float(np.std(sample.values, ddof=1))
    if sd == 0.0:
        raise DegenerateSampleError("cannot choose a kernel bandwidth for a constant series")
    return sd * sample.n ** (-1.0 / 3.0)


def default_threshold(n: int) -> float:
    """Threshold c = max(4, sqrt(2 ln n)) for the thresholded normal quantile"""
    return max(4.0, math.sqrt(2.0 * math.log(n)))


def thresholded_normal_quantile(p: ArrayLike, c: float) -> np.ndarray:
    """
    Standard normal quantile clamped to [-c, c].

    Args:
        p: Probabilities strictly inside (0, 1)
        c: Positive threshold

    Returns:
        clamp(Phi^-1(p), -c, c), same shape as p
    """
    if not c > 0:
        raise InvalidInputError(f"threshold must be positive, got {c}")
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise InvalidInputError("normal quantile needs probabilities in (0, 1)")
    return np.clip(ndtri(p), -c, c)


@dataclass(frozen=True, eq=False)
class TransformedSeries:
    """U_t, Z_t and (once whitened) xi_t for one series"""

    u: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    xi: Optional[np.ndarray] = field(default=None, repr=False)
    threshold: float = 4.0

    def with_xi(self, xi: np.ndarray) -> "TransformedSeries":
        return replace(self, xi=np.asarray(xi, dtype=float))


def pit_forward(
    sample: SampleLike, cdf: CdfEstimate, c: Optional[float] = None
) -> TransformedSeries:
    """
    Probability integral transform followed by the thresholded normal quantile.

    U_t = F(Y_t) with U = 1 moved to (n-1)/n and U = 0 moved to 1/n, then
    Z_t = clamp(Phi^-1(U_t), -c, c). The whitened residuals are left unset.
    """
    sample = as_sample(sample)
    n = sample.n
    if c is None:
        c = default_threshold(n)
    u = np.asarray(cdf.forward(sample.values), dtype=float)
    u = np.where(u >= 1.0, (n - 1) / n, u)
    u = np.where(u <= 0.0, 1.0 / n, u)
    z = thresholded_normal_quantile(u, c)
    return TransformedSeries(u=u, z=z, threshold=float(c))


def inverse_pit(z: ArrayLike, cdf: CdfEstimate) -> np.ndarray:
    """Map latent Gaussian values back to the data scale: F^-1(Phi(z))"""
    p = np.clip(ndtr(np.asarray(z, dtype=float)), _P_FLOOR, 1.0 - _P_FLOOR)
    return cdf.quantile(p)
