"""
Covariance - Flat-top tapered Toeplitz autocovariance estimation of the latent Gaussian series
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import LinAlgError, cholesky, cholesky_banded, solve_triangular, toeplitz

from .errors import DegenerateCovarianceError, FactorizationError, InvalidInputError

logger = logging.getLogger(__name__)

PD_EPSILON = 1e-6
_SHRINK_STEPS = 40

# Empirical bandwidth rule settings
_RULE_RUN = 5
_RULE_MIN_N = 20


@dataclass(frozen=True)
class TaperConfig:
    """Trapezoid flat-top taper: 1 on |x| <= 1, linear ramp to 0 at c_kappa"""

    bandwidth: float
    c_kappa: float = 2.0

    def __post_init__(self):
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise InvalidInputError(f"taper bandwidth must be positive, got {self.bandwidth}")
        if not self.c_kappa > 1:
            raise InvalidInputError(f"taper support edge must exceed 1, got {self.c_kappa}")

    @property
    def max_lag(self) -> int:
        """Largest lag with a nonzero weight"""
        return int(math.floor(self.c_kappa * self.bandwidth))

    def weights(self, lags: ArrayLike) -> np.ndarray:
        return flat_top_taper(np.asarray(lags, dtype=float) / self.bandwidth, self.c_kappa)


def flat_top_taper(x: ArrayLike, c_kappa: float = 2.0) -> np.ndarray:
    """kappa(x): 1 for |x| <= 1, (c - |x|)/(c - 1) on (1, c], 0 beyond"""
    ax = np.abs(np.asarray(x, dtype=float))
    return np.clip((c_kappa - ax) / (c_kappa - 1.0), 0.0, 1.0)


def sample_autocovariance(z: ArrayLike, k: int) -> float:
    """(1/n) sum_{t<=n-k} z_t z_{t+k}; no mean subtraction, divisor n"""
    z = np.asarray(z, dtype=float)
    n = z.size
    if not 0 <= k < n:
        raise InvalidInputError(f"lag must satisfy 0 <= k < n={n}, got {k}")
    return float(z[: n - k] @ z[k:]) / n


def autocovariances(z: ArrayLike, max_lag: int) -> np.ndarray:
    """sample_autocovariance for lags 0..max_lag (clipped to n-1)"""
    z = np.asarray(z, dtype=float)
    n = z.size
    top = min(int(max_lag), n - 1)
    return np.array([z[: n - k] @ z[k:] for k in range(top + 1)]) / n


@dataclass(frozen=True, eq=False)
class ToeplitzCovariance:
    """Symmetric Toeplitz matrix stored by its first row"""

    first_row: np.ndarray = field(repr=False)
    bandwidth: Optional[float] = None
    shrinkage: float = 1.0

    def __post_init__(self):
        row = np.array(self.first_row, dtype=float)
        row.setflags(write=False)
        object.__setattr__(self, "first_row", row)

    @property
    def n(self) -> int:
        return int(self.first_row.size)

    @property
    def max_lag(self) -> int:
        """Largest lag with a nonzero entry"""
        nonzero = np.flatnonzero(self.first_row)
        return int(nonzero[-1]) if nonzero.size else 0

    def dense(self) -> np.ndarray:
        return toeplitz(self.first_row)

    def leading(self, dim: int) -> "ToeplitzCovariance":
        """Leading principal dim x dim block (still Toeplitz)"""
        return ToeplitzCovariance(self.first_row[:dim], self.bandwidth, self.shrinkage)


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular L with L @ L.T equal to the factored matrix"""

    lower: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.lower.shape[0])


def build_tapered_matrix(
    z: ArrayLike, cfg: TaperConfig, dim: Optional[int] = None
) -> ToeplitzCovariance:
    """
    Tapered autocovariance matrix of the latent series, PD-corrected.

    Args:
        z: Latent (approximately mean-zero) series Z~
        cfg: Taper configuration
        dim: Matrix dimension, at most len(z) + 1 (n + 1 is the prediction case;
            lags beyond n - 1 are zero)

    Returns:
        ToeplitzCovariance with entries kappa(k/l) * sigma(k)
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    dim = n if dim is None else int(dim)
    if not 1 <= dim <= n + 1:
        raise InvalidInputError(f"matrix dimension must lie in [1, {n + 1}], got {dim}")

    top = min(cfg.max_lag, dim - 1, n - 1)
    row = np.zeros(dim)
    row[: top + 1] = cfg.weights(np.arange(top + 1)) * autocovariances(z, top)
    return pd_correct(ToeplitzCovariance(row, bandwidth=cfg.bandwidth))


def _clears_floor(row: np.ndarray, floor: float) -> bool:
    """True when the Toeplitz matrix of `row` has minimum eigenvalue above `floor`"""
    band = int(np.flatnonzero(row)[-1]) if np.any(row[1:]) else 0
    banded = np.zeros((band + 1, row.size))
    for k in range(band + 1):
        banded[band - k, k:] = row[k]
    banded[band] -= floor
    try:
        cholesky_banded(banded, lower=False)
    except LinAlgError:
        return False
    return True


def pd_correct(m: ToeplitzCovariance, eps: float = PD_EPSILON) -> ToeplitzCovariance:
    """
    Shrink off-diagonal lags until the matrix is safely positive definite.

    Finds the largest s in [0, 1] (40 bisection steps) such that the matrix with
    lags s * sigma(k), k >= 1, has minimum eigenvalue at least eps * sigma(0).
    Already-PD input comes back unchanged.
    """
    row = m.first_row
    if not row[0] > 0:
        raise DegenerateCovarianceError(f"lag-0 variance must be positive, got {row[0]}")
    floor = eps * row[0]
    if _clears_floor(row, floor):
        return m

    def scaled(s: float) -> np.ndarray:
        out = row * s
        out[0] = row[0]
        return out

    lo, hi = 0.0, 1.0
    for _ in range(_SHRINK_STEPS):
        mid = 0.5 * (lo + hi)
        if _clears_floor(scaled(mid), floor):
            lo = mid
        else:
            hi = mid
    logger.debug("PD correction shrank off-diagonal lags by s=%.6f", lo)
    return ToeplitzCovariance(scaled(lo), bandwidth=m.bandwidth, shrinkage=lo * m.shrinkage)


def cholesky_lower(m: ToeplitzCovariance) -> CholeskyFactor:
    """Dense lower Cholesky factor of a PD-corrected matrix"""
    try:
        lower = cholesky(m.dense(), lower=True)
    except LinAlgError as e:
        raise FactorizationError(f"Cholesky factorization failed: {e}") from e
    return CholeskyFactor(lower)


def whiten(z: ArrayLike, factor: CholeskyFactor) -> np.ndarray:
    """Solve L xi = z by forward substitution"""
    z = np.asarray(z, dtype=float)
    if z.shape[0] != factor.n:
        raise InvalidInputError(f"vector length {z.shape[0]} does not match dimension {factor.n}")
    return solve_triangular(factor.lower, z, lower=True)


def colour(xi: ArrayLike, factor: CholeskyFactor) -> np.ndarray:
    """Re-correlate: L @ xi"""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[0] != factor.n:
        raise InvalidInputError(f"vector length {xi.shape[0]} does not match dimension {factor.n}")
    return factor.lower @ xi


def conditional_gaussian(
    m_next: ToeplitzCovariance, z: ArrayLike, factor: Optional[CholeskyFactor] = None
) -> Tuple[float, float]:
    """
    Law of the (n+1)-th coordinate given the first n.

    Args:
        m_next: PD-corrected (n+1)-dimensional matrix
        z: Observed first n coordinates
        factor: Optional Cholesky factor of the leading n x n block

    Returns:
        (mean, variance) = (S21 S11^-1 z, S22 - S21 S11^-1 S12)
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    if m_next.n != n + 1:
        raise InvalidInputError(f"expected a matrix of dimension {n + 1}, got {m_next.n}")
    if factor is None:
        factor = cholesky_lower(m_next.leading(n))
    cross = m_next.first_row[1:][::-1]
    a = whiten(z, factor)
    b = whiten(cross, factor)
    mean = float(b @ a)
    variance = float(m_next.first_row[0] - b @ b)
    if not variance > 0:
        raise DegenerateCovarianceError(f"conditional variance is not positive: {variance}")
    return mean, variance


def default_taper_bandwidth(z: ArrayLike) -> float:
    """
    Empirical flat-top bandwidth rule.

    Smallest k >= 1 such that |rho(k)|, ..., |rho(k+4)| all fall below
    1.96 * sqrt(log10(n) / n); capped at sqrt(n).
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    if n < _RULE_MIN_N:
        raise InvalidInputError(f"bandwidth rule needs n >= {_RULE_MIN_N}, got {n}")
    cap = int(math.floor(math.sqrt(n)))
    acov = autocovariances(z, cap + _RULE_RUN)
    if not acov[0] > 0:
        raise DegenerateCovarianceError("latent series has zero variance")
    small = np.abs(acov / acov[0]) < 1.96 * math.sqrt(math.log10(n) / n)
    for k in range(1, cap + 1):
        if small[k : k + _RULE_RUN].all():
            return float(k)
    return float(cap)
