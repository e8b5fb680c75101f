"""
Tests for model presets, series generation and the true-parameter oracle
"""

import math

import numpy as np
import pytest

from mfboot import simulation
from mfboot.errors import InvalidInputError
from mfboot.simulation import (
    PRESETS,
    ModelSpec,
    arma_spectral_density,
    asymmetric_transfer,
    generate_series,
    resolve_model,
    simulate_latent,
    simulate_pair,
    true_parameter,
)
from mfboot.statistics import StatisticSpec, centered_autocovariance


def test_asymmetric_transfer_values():
    assert asymmetric_transfer(-4.0) == pytest.approx(-2.0)
    assert asymmetric_transfer(0.0) == pytest.approx(0.1)
    assert asymmetric_transfer(1.0) == pytest.approx(0.4)
    np.testing.assert_allclose(asymmetric_transfer([-1.0, 3.0]), [-1.0, 1.6])


def test_preset_coefficients():
    assert PRESETS["ma1"].ma == (-0.5,)
    assert PRESETS["ar1"].ar == (0.5,)
    ma30 = PRESETS["ma30"].ma
    assert len(ma30) == 30
    assert ma30[:2] == (2.0, 1.0)
    assert ma30[2] == pytest.approx(10.0 / 9.0)
    assert ma30[-1] == pytest.approx(10.0 / 900.0)
    assert all(spec.transfer == "asymmetric" for spec in PRESETS.values())


def test_non_causal_model_rejected():
    with pytest.raises(InvalidInputError):
        ModelSpec(ar=(1.2,))
    with pytest.raises(InvalidInputError):
        ModelSpec(transfer="cubic")


def test_generation_is_deterministic():
    model = PRESETS["ma30"]
    first = generate_series(model, 300, seed=12)
    second = generate_series(model, 300, seed=12)
    np.testing.assert_array_equal(first.values, second.values)
    other = generate_series(model, 300, seed=13)
    assert not np.array_equal(first.values, other.values)


def test_simulate_pair_applies_transfer():
    w, y = simulate_pair(PRESETS["ma1"], 50, seed=1)
    np.testing.assert_allclose(y, asymmetric_transfer(w))
    with pytest.raises(InvalidInputError):
        simulate_latent(PRESETS["ma1"], 1, seed=1)


def test_ar1_latent_autocorrelation():
    w = simulate_latent(PRESETS["ar1"], 100_000, seed=3)
    rho = centered_autocovariance(w, 1) / centered_autocovariance(w, 0)
    assert rho == pytest.approx(0.5, abs=0.02)


def test_ma1_latent_autocovariance():
    w = simulate_latent(PRESETS["ma1"], 100_000, seed=4)
    assert centered_autocovariance(w, 0) == pytest.approx(1.25, abs=0.03)
    assert centered_autocovariance(w, 1) == pytest.approx(-0.5, abs=0.03)


def test_resolve_model_aliases_and_transfer():
    assert resolve_model("2").label == "ar1"
    assert resolve_model("ma30").label == "ma30"
    assert resolve_model("1", "identity").transfer == "identity"
    with pytest.raises(InvalidInputError):
        resolve_model("arma99")


def test_resolve_model_from_file(tmp_path):
    path = tmp_path / "ar2.yaml"
    path.write_text("ar: [0.3, 0.2]\nma: [0.4]\ntransfer: identity\n")
    model = resolve_model(str(path))
    assert model.ar == (0.3, 0.2)
    assert model.ma == (0.4,)
    assert model.label == "ar2"

    bad = tmp_path / "bad.yaml"
    bad.write_text("ar: [0.3]\nnoise: t\n")
    with pytest.raises(InvalidInputError):
        resolve_model(str(bad))


def test_true_parameter_ar1_identity():
    model = PRESETS["ar1"].with_transfer("identity")
    mean = true_parameter(model, StatisticSpec.mean(), length=1_000_000, use_cache=False)
    acov = true_parameter(model, StatisticSpec.autocovariance(1), length=1_000_000, use_cache=False)
    assert mean == pytest.approx(0.0, abs=0.02)
    assert acov == pytest.approx(2.0 / 3.0, abs=0.02)


def test_true_parameter_is_cached(tmp_path, monkeypatch):
    monkeypatch.setenv("MFBOOT_CACHE_DIR", str(tmp_path))
    spec = StatisticSpec.quantile(0.5)
    value = true_parameter(PRESETS["ma1"], spec, length=5000)
    assert len(list(tmp_path.glob("*.json"))) == 1

    def no_recompute(*args, **kwargs):
        raise AssertionError("oracle recomputed despite cache")

    monkeypatch.setattr(simulation, "_oracle_series", no_recompute)
    assert true_parameter(PRESETS["ma1"], spec, length=5000) == value


def test_true_parameter_spectral():
    model = PRESETS["ar1"].with_transfer("identity")
    value = true_parameter(model, StatisticSpec.spectral(0.0))
    assert value == pytest.approx(4.0 / (2.0 * math.pi))
    assert arma_spectral_density(model, -1.0) == pytest.approx(arma_spectral_density(model, 1.0))
    with pytest.raises(InvalidInputError):
        true_parameter(PRESETS["ar1"], StatisticSpec.spectral(0.0))
