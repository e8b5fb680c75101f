"""
Simulation - ARMA-driven model presets, series generation and true-parameter oracles
"""

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from numpy.typing import ArrayLike
from scipy.signal import freqz, lfilter
from statsmodels.tsa.arima_process import ArmaProcess

from .errors import InvalidInputError
from .seeding import as_generator, derive_rng
from .statistics import StatisticSpec, evaluate_statistic
from .transform import SeriesSample

logger = logging.getLogger(__name__)

AR_BURN_IN = 1000
ORACLE_SEED = 20250101
ORACLE_LENGTH = 10_000_000
_ORACLE_CHUNK = 1_000_000

Transfer = Literal["asymmetric", "identity"]


def asymmetric_transfer(x: ArrayLike) -> np.ndarray:
    """-sqrt(-x) for x < 0, (x + 1)^2 / 10 for x >= 0"""
    x = np.asarray(x, dtype=float)
    neg = -np.sqrt(np.maximum(-x, 0.0))
    pos = (x + 1.0) ** 2 / 10.0
    out = np.where(x < 0.0, neg, pos)
    return out if out.ndim else float(out)


_TRANSFERS = {
    "asymmetric": asymmetric_transfer,
    "identity": lambda x: np.asarray(x, dtype=float),
}


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """
    Y_t = transfer(W_t), W_t an ARMA process with unit-variance Gaussian innovations.

    `ar` holds phi_1..phi_p and `ma` theta_1..theta_q in the convention
    W_t = sum phi_i W_{t-i} + e_t + sum theta_j e_{t-j}.
    """

    ar: Tuple[float, ...] = ()
    ma: Tuple[float, ...] = ()
    transfer: Transfer = "asymmetric"
    label: str = "custom"
    process: ArmaProcess = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        object.__setattr__(self, "ma", tuple(float(m) for m in self.ma))
        if self.transfer not in _TRANSFERS:
            raise InvalidInputError(f"unknown transfer: {self.transfer}")
        process = ArmaProcess(np.r_[1.0, -np.asarray(self.ar)], np.r_[1.0, np.asarray(self.ma)])
        if not process.isstationary:
            raise InvalidInputError(f"AR polynomial of model {self.label} is not causal")
        object.__setattr__(self, "process", process)

    def with_transfer(self, transfer: Transfer) -> "ModelSpec":
        return ModelSpec(self.ar, self.ma, transfer, self.label)

    def apply_transfer(self, w: ArrayLike) -> np.ndarray:
        return np.asarray(_TRANSFERS[self.transfer](w), dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "ar": list(self.ar),
            "ma": list(self.ma),
            "transfer": self.transfer,
        }


def _ma30_coefficients() -> Tuple[float, ...]:
    return (2.0, 1.0) + tuple(10.0 / k**2 for k in range(3, 31))


PRESETS: Dict[str, ModelSpec] = {
    "ma1": ModelSpec(ma=(-0.5,), label="ma1"),
    "ar1": ModelSpec(ar=(0.5,), label="ar1"),
    "ma30": ModelSpec(ma=_ma30_coefficients(), label="ma30"),
}

PRESET_ALIASES = {"1": "ma1", "2": "ar1", "3": "ma30"}


def load_model_spec(path: Union[str, Path]) -> ModelSpec:
    """Read a custom model from YAML with keys ar, ma, transfer, label"""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as e:
        raise InvalidInputError(f"cannot read model file {path}: {e}") from e
    if not isinstance(data, dict):
        raise InvalidInputError(f"model file {path} must hold a mapping")
    unknown = set(data) - {"ar", "ma", "transfer", "label"}
    if unknown:
        raise InvalidInputError(f"unknown model keys: {', '.join(sorted(unknown))}")
    return ModelSpec(
        ar=tuple(data.get("ar") or ()),
        ma=tuple(data.get("ma") or ()),
        transfer=data.get("transfer", "asymmetric"),
        label=str(data.get("label", path.stem)),
    )


def resolve_model(name: str, transfer: Optional[str] = None) -> ModelSpec:
    """Preset label, numeric alias or path to a model file"""
    key = PRESET_ALIASES.get(str(name), str(name))
    if key in PRESETS:
        model = PRESETS[key]
    elif Path(key).is_file():
        model = load_model_spec(key)
    else:
        raise InvalidInputError(
            f"unknown model {name!r} (expected one of {', '.join(PRESETS)}, 1-3 or a file)"
        )
    if transfer is not None:
        model = model.with_transfer(transfer)
    return model


def _burn_in(model: ModelSpec) -> int:
    return (AR_BURN_IN if model.ar else 0) + len(model.ma)


def simulate_latent(
    model: ModelSpec, n: int, seed: Union[np.random.Generator, int, None] = None
) -> np.ndarray:
    """W_1..W_n from the ARMA recursion; AR models burn in, MA models drop the presample"""
    if n < 2:
        raise InvalidInputError(f"n must be at least 2, got {n}")
    rng = as_generator(seed)
    return model.process.generate_sample(
        nsample=n, scale=1.0, distrvs=rng.standard_normal, burnin=_burn_in(model)
    )


def simulate_pair(
    model: ModelSpec, n: int, seed: Union[np.random.Generator, int, None] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """(W, Y) for one draw of the model"""
    w = simulate_latent(model, n, seed)
    return w, model.apply_transfer(w)


def generate_series(
    model: ModelSpec, n: int, seed: Union[np.random.Generator, int, None] = None
) -> SeriesSample:
    """
    Generate Y_1..Y_n from a model.

    Args:
        model: ModelSpec (preset or custom)
        n: Series length, at least 2
        seed: Seed or Generator; same seed gives a bit-identical series

    Returns:
        SeriesSample of transfer(W_t)
    """
    _, y = simulate_pair(model, n, seed)
    return SeriesSample(y)


def arma_spectral_density(model: ModelSpec, omega: float) -> float:
    """(1 / 2 pi) |theta(e^{-i w})|^2 / |phi(e^{-i w})|^2 with unit innovation variance"""
    _, h = freqz(model.process.ma, model.process.ar, worN=[abs(omega)])
    return float(np.abs(h[0]) ** 2 / (2.0 * math.pi))


def cache_dir() -> Path:
    return Path(os.environ.get("MFBOOT_CACHE_DIR", Path.home() / ".cache" / "mfboot"))


def _cache_key(model: ModelSpec, spec: StatisticSpec, length: int) -> str:
    payload = json.dumps(
        {"model": model.to_dict(), "statistic": spec.label, "length": length, "seed": ORACLE_SEED},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _oracle_series(model: ModelSpec, length: int) -> np.ndarray:
    # one continuous path, filtered chunk by chunk with carried filter state
    rng = derive_rng(ORACLE_SEED, "oracle")
    ar, ma = model.process.ar, model.process.ma
    zi = np.zeros(max(ar.size, ma.size) - 1)
    if zi.size:
        _, zi = lfilter(ma, ar, rng.standard_normal(_burn_in(model)), zi=zi)
    pieces = []
    remaining = length
    while remaining > 0:
        size = min(_ORACLE_CHUNK, remaining)
        w = rng.standard_normal(size)
        if zi.size:
            w, zi = lfilter(ma, ar, w, zi=zi)
        pieces.append(model.apply_transfer(w))
        remaining -= size
    return np.concatenate(pieces)


def true_parameter(
    model: ModelSpec,
    spec: StatisticSpec,
    length: int = ORACLE_LENGTH,
    use_cache: bool = True,
) -> float:
    """
    Population value of a statistic under a model.

    Spectral ordinates are only available for the identity transfer, where the
    ARMA spectral density is exact. Everything else is evaluated on one long
    simulated path with a fixed seed and cached on disk under MFBOOT_CACHE_DIR.

    Args:
        model: Data-generating model
        spec: Statistic (mean, autocovariance, autocorrelation, quantile, spectral)
        length: Oracle path length
        use_cache: Read and write the on-disk cache

    Returns:
        The true parameter
    """
    if spec.kind == "spectral":
        if model.transfer != "identity":
            raise InvalidInputError("spectral true parameter needs the identity transfer")
        return arma_spectral_density(model, spec.omega)
    if length < 2:
        raise InvalidInputError(f"oracle length must be at least 2, got {length}")

    path = cache_dir() / f"{_cache_key(model, spec, length)}.json"
    if use_cache and path.exists():
        try:
            return float(json.loads(path.read_text(encoding="utf-8"))["value"])
        except (OSError, ValueError, KeyError) as e:
            logger.warning("ignoring unreadable oracle cache %s: %s", path, e)

    logger.info("computing oracle %s for %s over %d points", spec.label, model.label, length)
    value = evaluate_statistic(spec, _oracle_series(model, length))

    if use_cache:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            record = {"model": model.to_dict(), "statistic": spec.label, "value": value}
            path.write_text(json.dumps(record, sort_keys=True), encoding="utf-8")
        except OSError as e:
            logger.warning("could not write oracle cache %s: %s", path, e)
    return value
