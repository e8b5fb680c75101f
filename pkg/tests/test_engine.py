"""
Tests for the MF/LMF bootstrap engine
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import lfilter

from mfboot.engine import (
    BootstrapConfig,
    ConfidenceInterval,
    RootSample,
    choose_taper_bandwidth,
    lmf_generate,
    mf_generate,
    prepare_transform,
    root_quantile,
    run_ci,
)
from mfboot.errors import DegenerateSampleError, InvalidInputError
from mfboot.simulation import PRESETS, generate_series
from mfboot.statistics import StatisticSpec


@pytest.fixture
def ar_sample():
    rng = np.random.default_rng(17)
    return lfilter([1.0], [1.0, -0.5], rng.standard_normal(100))


def test_config_validation():
    with pytest.raises(InvalidInputError):
        BootstrapConfig(B=99)
    with pytest.raises(InvalidInputError):
        BootstrapConfig(alpha=1.0)
    with pytest.raises(InvalidInputError):
        BootstrapConfig(variant="XMF")
    with pytest.raises(InvalidInputError):
        BootstrapConfig(cdf_kind="histogram")
    with pytest.raises(InvalidInputError):
        BootstrapConfig(seed=-1)


def test_config_from_method():
    cfg = BootstrapConfig.from_method("lmf-emp", B=100)
    assert (cfg.variant, cfg.cdf_kind, cfg.B) == ("LMF", "empirical", 100)
    assert cfg.method == "lmf-emp"
    assert BootstrapConfig.from_method("MF-KER").method == "mf-ker"
    with pytest.raises(InvalidInputError):
        BootstrapConfig.from_method("bb")


def test_root_quantile_order_statistics():
    roots = np.arange(1.0, 101.0)
    assert root_quantile(roots, 0.025) == 3.0
    assert root_quantile(roots, 0.975) == 98.0
    assert root_quantile(roots, 0.0) == 1.0
    assert root_quantile(roots, 1.0) == 100.0


def test_root_sample_bounds():
    roots = RootSample(np.arange(100.0, 0.0, -1.0), theta_hat=10.0)
    assert roots.B == 100
    assert roots.roots[0] == 1.0
    assert roots.bounds(0.05) == (13.0, 108.0)
    ci = roots.interval(0.05, "mf-emp", "mean")
    assert (ci.lower, ci.upper, ci.estimate) == (13.0, 108.0, 10.0)
    with pytest.raises(InvalidInputError):
        RootSample(np.array([1.0, np.nan]), 0.0)


def test_confidence_interval_is_open():
    ci = ConfidenceInterval(-1.0, 1.0, 0.05)
    assert ci.contains(0.0)
    assert not ci.contains(1.0)
    assert ci.width == 2.0
    with pytest.raises(InvalidInputError):
        ConfidenceInterval(1.0, -1.0, 0.05)


def test_choose_taper_bandwidth_short_series():
    assert choose_taper_bandwidth(np.arange(5.0)) == 1.0
    assert choose_taper_bandwidth(np.arange(50.0), override=3.0) == 3.0


def test_run_ci_is_deterministic(ar_sample):
    cfg = BootstrapConfig.from_method("mf-emp", B=100, seed=42)
    first, roots = run_ci(ar_sample, StatisticSpec.mean(), cfg)
    second, _ = run_ci(ar_sample, StatisticSpec.mean(), cfg)
    assert (first.lower, first.upper) == (second.lower, second.upper)
    assert first.lower < first.estimate < first.upper
    assert first.estimate == pytest.approx(np.mean(ar_sample))
    assert roots.B == 100
    assert first.method == "mf-emp"
    assert first.statistic == "mean"


def test_run_ci_seed_changes_interval(ar_sample):
    spec = StatisticSpec.autocorrelation(1)
    a, _ = run_ci(ar_sample, spec, BootstrapConfig.from_method("lmf-ker", B=100, seed=1))
    b, _ = run_ci(ar_sample, spec, BootstrapConfig.from_method("lmf-ker", B=100, seed=2))
    assert (a.lower, a.upper) != (b.lower, b.upper)


def test_run_ci_parallel_matches_sequential(ar_sample):
    spec = StatisticSpec.quantile(0.5)
    seq, _ = run_ci(ar_sample, spec, BootstrapConfig.from_method("mf-ker", B=100, n_jobs=1))
    par, _ = run_ci(ar_sample, spec, BootstrapConfig.from_method("mf-ker", B=100, n_jobs=2))
    assert (seq.lower, seq.upper) == (par.lower, par.upper)


def test_mf_empirical_stays_in_sample_support(ar_sample):
    """Test empirical inverse CDF only ever returns observed values"""
    prepared = prepare_transform(ar_sample, BootstrapConfig.from_method("mf-emp"))
    y_star = mf_generate(prepared, np.random.default_rng(0))
    assert y_star.shape == ar_sample.shape
    assert np.all(np.isin(y_star, ar_sample))


def test_prepare_transform_whitens(ar_sample):
    prepared = prepare_transform(ar_sample, BootstrapConfig())
    lower = prepared.factor.lower
    np.testing.assert_allclose(lower @ prepared.xi, prepared.transformed.z, atol=1e-9)
    assert prepared.n == 100


def test_lmf_kernel_two_points_is_finite():
    prepared = prepare_transform([0.3, -1.2], BootstrapConfig.from_method("lmf-ker"))
    y_star = lmf_generate(prepared, np.random.default_rng(4))
    assert y_star.shape == (2,)
    assert np.all(np.isfinite(y_star))


def test_constant_series_with_kernel_cdf():
    with pytest.raises(DegenerateSampleError):
        run_ci(np.full(50, 3.0), StatisticSpec.mean(), BootstrapConfig(B=100))


def test_run_ci_mean_is_shift_equivariant(ar_sample):
    """Test adding a constant moves the empirical-CDF interval by exactly that constant"""
    cfg = BootstrapConfig.from_method("mf-emp", B=100, seed=5)
    base, _ = run_ci(ar_sample, StatisticSpec.mean(), cfg)
    shifted, _ = run_ci(ar_sample + 7.25, StatisticSpec.mean(), cfg)
    assert shifted.lower == pytest.approx(base.lower + 7.25, abs=1e-9)
    assert shifted.upper == pytest.approx(base.upper + 7.25, abs=1e-9)
    assert shifted.estimate == pytest.approx(base.estimate + 7.25, abs=1e-9)


def test_run_ci_intervals_nest_across_levels(ar_sample):
    spec = StatisticSpec.autocovariance(1)
    wide, wide_roots = run_ci(ar_sample, spec, BootstrapConfig.from_method("lmf-emp", B=200))
    narrow, narrow_roots = run_ci(
        ar_sample, spec, BootstrapConfig.from_method("lmf-emp", B=200, alpha=0.1)
    )
    np.testing.assert_array_equal(wide_roots.roots, narrow_roots.roots)
    assert wide.lower <= narrow.lower <= narrow.upper <= wide.upper


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6), min_size=100, max_size=400),
    st.floats(-1e3, 1e3),
)
def test_root_sample_bounds_nest(values, theta_hat):
    roots = RootSample(np.asarray(values), theta_hat)
    lo_wide, hi_wide = roots.bounds(0.05)
    lo_narrow, hi_narrow = roots.bounds(0.10)
    assert lo_wide <= lo_narrow <= hi_narrow <= hi_wide


def test_kernel_ci_on_long_series_is_fast():
    """Test a kernel-CDF interval at n = 2000 finishes well inside a minute"""
    sample = generate_series(PRESETS["ar1"].with_transfer("identity"), 2000, seed=3)
    cfg = BootstrapConfig.from_method("mf-ker", B=100, seed=1)
    started = time.perf_counter()
    ci, roots = run_ci(sample, StatisticSpec.autocovariance(1), cfg)
    assert time.perf_counter() - started < 60.0
    assert roots.B == 100
    assert ci.lower < ci.upper


@pytest.mark.slow
def test_mf_and_lmf_widths_agree_for_gaussian_ar1():
    """Test MF and LMF kernel intervals have mean widths within 15% of each other"""
    model = PRESETS["ar1"].with_transfer("identity")
    spec = StatisticSpec.mean()
    widths = {"mf-ker": [], "lmf-ker": []}
    for i in range(50):
        sample = generate_series(model, 2000, seed=500 + i)
        for method in widths:
            cfg = BootstrapConfig.from_method(method, B=1000, seed=i, n_jobs=-1)
            ci, _ = run_ci(sample, spec, cfg)
            widths[method].append(ci.width)
    mf, lmf = np.mean(widths["mf-ker"]), np.mean(widths["lmf-ker"])
    assert abs(mf - lmf) / lmf < 0.15
