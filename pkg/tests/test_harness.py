"""
Tests for the coverage harness and its reports
"""

import json
import math
from dataclasses import replace
from pathlib import Path

import frontmatter
import pytest

from mfboot import harness
from mfboot.engine import ConfidenceInterval
from mfboot.errors import InvalidInputError, NumericalError, ReplicateBudgetError, ReportWriteError
from mfboot.harness import (
    REPORT_COLUMNS,
    CoverageReport,
    CoverageRow,
    ExperimentConfig,
    emit_report,
    experiment_config_from_dict,
    load_experiment_config,
    run_cell,
    run_coverage,
)
from mfboot.simulation import PRESETS

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"

HEADER = "method,model,statistic,n,N,B,alpha,cvr,mean_width,failures\n"


@pytest.fixture
def small_cfg():
    return ExperimentConfig(
        model=PRESETS["ar1"].with_transfer("identity"),
        n_grid=(60,),
        replications=50,
        B=100,
        methods=("mf-emp",),
        statistics=("mean",),
        seed=5,
        oracle_length=10_000,
    )


@pytest.fixture
def row():
    return CoverageRow("mf-ker", "ma1", "mean", 100, 200, 250, 0.05, 0.93, 0.41, 0)


def _fixed_interval(lower, upper):
    def fake(method, sample, spec, opts):
        return ConfidenceInterval(lower, upper, opts.alpha, method, spec.label)

    return fake


def test_config_validation():
    model = PRESETS["ma1"]
    with pytest.raises(InvalidInputError):
        ExperimentConfig(model, replications=49)
    with pytest.raises(InvalidInputError):
        ExperimentConfig(model, methods=("bootstrap",))
    with pytest.raises(InvalidInputError):
        ExperimentConfig(model, statistics=("median",))
    with pytest.raises(InvalidInputError):
        ExperimentConfig(model, n_grid=())


def test_cells_skip_prediction_for_block_bootstrap():
    cfg = ExperimentConfig(
        PRESETS["ar1"], n_grid=(100, 200), methods=("bb", "mf-ker"), statistics=("mean", "pi:l2")
    )
    cells = cfg.cells()
    assert ("bb", "pi:l2", 100) not in cells
    assert ("mf-ker", "pi:l2", 200) in cells
    assert len(cells) == 6


CARDS = [
    "ma1-mean.md",
    "ma1-lag1-autocov.md",
    "ar1-lag1-autocov.md",
    "ma30-lag2-autocov.md",
    "ar1-prediction.md",
]


@pytest.mark.parametrize("name", CARDS)
def test_experiment_cards_load(name):
    cfg = load_experiment_config(EXPERIMENTS / name)
    assert cfg.replications >= 50
    assert cfg.cells()


def test_yaml_config_load():
    cfg = load_experiment_config(EXPERIMENTS / "smoke.yaml")
    assert cfg.model.transfer == "identity"
    assert cfg.statistics == ("mean", "acorr:1")
    assert cfg.alpha == 0.1


def test_config_rejects_unknown_keys():
    with pytest.raises(InvalidInputError):
        experiment_config_from_dict({"model": "ar1", "bootstraps": 10})
    with pytest.raises(InvalidInputError):
        experiment_config_from_dict({"n_grid": [100]})


def test_empty_csv_report_is_header_only(tmp_path):
    path = emit_report(CoverageReport(), "csv", tmp_path / "out.csv")
    assert path.read_text() == HEADER
    assert HEADER.strip().split(",") == list(REPORT_COLUMNS)


def test_csv_report_one_row(tmp_path, row):
    path = emit_report(CoverageReport([row]), "csv", tmp_path / "out.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1] == "mf-ker,ma1,mean,100,200,250,0.05,0.93,0.41,0"


def test_json_and_markdown_reports(tmp_path, row):
    report = CoverageReport([row], {"seed": 3, "oracle_seed": 20250101})
    records = json.loads(emit_report(report, "json", tmp_path / "r.json").read_text())
    assert records == [dict(zip(REPORT_COLUMNS, row.__dict__.values()))]

    post = frontmatter.load(str(emit_report(report, "md", tmp_path / "r.md")))
    assert post.metadata["seed"] == 3
    assert "| mf-ker | ma1 | mean | 100 |" in post.content


def test_report_rows_are_sorted(row):
    other = CoverageRow("bb", "ma1", "mean", 200, 200, 250, 0.05, 0.9, 0.5, 0)
    later = CoverageRow("bb", "ma1", "mean", 1000, 200, 250, 0.05, 0.9, 0.5, 0)
    report = CoverageReport([row, later, other])
    assert [(r.method, r.n) for r in report.sorted_rows()] == [
        ("bb", 200), ("bb", 1000), ("mf-ker", 100)
    ]


def test_unwritable_report_path(tmp_path):
    with pytest.raises(ReportWriteError):
        emit_report(CoverageReport(), "csv", tmp_path / "missing" / "out.csv")
    with pytest.raises(InvalidInputError):
        emit_report(CoverageReport(), "xlsx", tmp_path / "out.xlsx")


def test_unbounded_interval_always_covers(small_cfg, monkeypatch):
    monkeypatch.setattr(harness, "true_parameter", lambda *a, **k: 0.0)
    monkeypatch.setattr(harness, "confidence_interval", _fixed_interval(-math.inf, math.inf))
    result = run_cell(small_cfg, "mf-emp", "mean", 60)
    assert result.cvr == 1.0
    assert result.N == 50
    assert result.failures == 0


def test_zero_width_interval_never_covers(small_cfg, monkeypatch):
    monkeypatch.setattr(harness, "true_parameter", lambda *a, **k: 0.0)
    monkeypatch.setattr(harness, "confidence_interval", _fixed_interval(0.0, 0.0))
    result = run_cell(small_cfg, "mf-emp", "mean", 60)
    assert result.cvr == 0.0
    assert result.mean_width == 0.0


@pytest.mark.parametrize("failing,raises", [(2, False), (3, True)])
def test_experiment_failure_budget(small_cfg, monkeypatch, failing, raises):
    """Test up to 5% of experiments may fail before the cell aborts"""
    calls = {"count": 0}
    ok = _fixed_interval(-1.0, 1.0)

    def flaky(method, sample, spec, opts):
        calls["count"] += 1
        if calls["count"] <= failing:
            raise NumericalError("factorization failed")
        return ok(method, sample, spec, opts)

    monkeypatch.setattr(harness, "true_parameter", lambda *a, **k: 0.0)
    monkeypatch.setattr(harness, "confidence_interval", flaky)
    if raises:
        with pytest.raises(ReplicateBudgetError):
            run_cell(small_cfg, "mf-emp", "mean", 60)
    else:
        result = run_cell(small_cfg, "mf-emp", "mean", 60)
        assert result.N == 48
        assert result.failures == 2
        assert result.cvr == 1.0


def test_experiments_share_data_across_methods(small_cfg, monkeypatch):
    """Test experiment i sees the same series whatever the method"""
    seen = {}

    def record(method, sample, spec, opts):
        seen.setdefault(method, []).append(tuple(sample))
        return ConfidenceInterval(-1.0, 1.0, opts.alpha, method, spec.label)

    monkeypatch.setattr(harness, "true_parameter", lambda *a, **k: 0.0)
    monkeypatch.setattr(harness, "confidence_interval", record)
    run_cell(small_cfg, "mf-emp", "mean", 60)
    run_cell(small_cfg, "bb", "mean", 60)
    assert seen["mf-emp"] == seen["bb"]
    assert len(set(seen["bb"])) == 50


def test_small_real_run(small_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("MFBOOT_CACHE_DIR", str(tmp_path))
    report = run_coverage(small_cfg)
    assert len(report.rows) == 1
    result = report.rows[0]
    assert result.N + result.failures == 50
    assert result.N * result.cvr == pytest.approx(round(result.N * result.cvr))
    assert 0.0 <= result.cvr <= 1.0
    assert result.mean_width > 0
    assert report.metadata["oracle_length"] == 10_000


def test_more_replications_keep_earlier_experiments(small_cfg, monkeypatch):
    """Test experiment i draws the same data and bootstrap seed whatever N is"""

    def run(cfg):
        seen = []

        def record(method, sample, spec, opts):
            seen.append((tuple(sample), opts.seed))
            return ConfidenceInterval(-1.0, 1.0, opts.alpha, method, spec.label)

        monkeypatch.setattr(harness, "confidence_interval", record)
        run_cell(cfg, "mf-emp", "mean", 60)
        return seen

    monkeypatch.setattr(harness, "true_parameter", lambda *a, **k: 0.0)
    short = run(small_cfg)
    long = run(replace(small_cfg, replications=60))
    assert len(long) == 60
    assert long[:50] == short
    assert len({seed for _, seed in long}) == 60


# --- Monte Carlo coverage against published reference values ---------------


def coverage(model, method, stat, n, replications=200):
    cfg = ExperimentConfig(
        model=PRESETS[model],
        n_grid=(n,),
        replications=replications,
        B=250,
        methods=(method,),
        statistics=(stat,),
        seed=2024,
        jobs=-1,
    )
    return run_cell(cfg, method, stat, n).cvr


@pytest.fixture
def oracle_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("MFBOOT_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "oracle"))


@pytest.mark.slow
@pytest.mark.parametrize(
    "model,n,method,reference",
    [
        ("ma1", 500, "mf-ker", 0.932),
        ("ma1", 500, "lmf-ker", 0.930),
        ("ma1", 500, "mf-emp", 0.931),
        ("ma1", 500, "lmf-emp", 0.935),
        ("ma1", 2000, "mf-ker", 0.948),
        ("ma1", 2000, "lmf-ker", 0.939),
        ("ma1", 2000, "mf-emp", 0.944),
        ("ma1", 2000, "lmf-emp", 0.940),
        ("ar1", 500, "mf-ker", 0.932),
        ("ar1", 500, "lmf-ker", 0.933),
        ("ar1", 500, "mf-emp", 0.928),
        ("ar1", 500, "lmf-emp", 0.924),
        ("ar1", 2000, "mf-ker", 0.937),
        ("ar1", 2000, "lmf-ker", 0.944),
        ("ar1", 2000, "mf-emp", 0.929),
        ("ar1", 2000, "lmf-emp", 0.929),
    ],
)
def test_mean_coverage_matches_reference(oracle_cache, model, n, method, reference):
    assert coverage(model, method, "mean", n) == pytest.approx(reference, abs=0.05)


@pytest.mark.slow
def test_lag2_autocovariance_beats_ar_sieve_on_ma30(oracle_cache):
    """Test the sieve undercovers a long MA while the model-free interval does not"""
    sieve = coverage("ma30", "ar-sieve", "acov:2", 2000)
    model_free = coverage("ma30", "mf-ker", "acov:2", 2000)
    assert sieve < 0.90
    assert model_free - sieve >= 0.03


@pytest.mark.slow
@pytest.mark.parametrize(
    "model,method,reference",
    [
        ("ma1", "mf-ker", 0.946),
        ("ma1", "lmf-ker", 0.966),
        ("ma1", "mf-emp", 0.942),
        ("ma1", "lmf-emp", 0.939),
        ("ar1", "mf-ker", 0.940),
        ("ar1", "lmf-ker", 0.953),
        ("ar1", "mf-emp", 0.934),
        ("ar1", "lmf-emp", 0.907),
    ],
)
def test_prediction_coverage_matches_reference(model, method, reference):
    assert coverage(model, method, "pi:l2", 200) == pytest.approx(reference, abs=0.05)
