"""
CLI - Command-line interface for ModelFreeBootstrap
"""

import logging
import os
import sys
from dataclasses import replace

import click
import numpy as np

from . import __version__
from .baselines import BlockConfig
from .errors import MFBootError
from .harness import REPORT_FORMATS, emit_report, load_experiment_config, run_coverage
from .methods import CI_METHODS, PI_METHODS, MethodOptions, confidence_interval, prediction_interval
from .prediction import PredictorKind
from .simulation import PRESET_ALIASES, PRESETS, resolve_model, simulate_pair
from .statistics import StatisticSpec
from .utils import error_msg, exit_code, load_series_csv, to_json


def _fail(exc: Exception):
    click.echo(error_msg(exc), err=True)
    sys.exit(exit_code(exc))


def _load_sample(input_path, model, transfer, n, data_seed):
    if input_path and model:
        raise click.UsageError("use either --input or --model, not both")
    if input_path:
        return load_series_csv(input_path)
    if model:
        _, y = simulate_pair(resolve_model(model, transfer), n, data_seed)
        return y
    raise click.UsageError("one of --input or --model is required")


def _data_options(f):
    """Options shared by `ci` and `pi` for choosing the series"""
    options = [
        click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="Single-column CSV series"),
        click.option("--model", default=None, help="Preset (ma1|ar1|ma30|1|2|3) or model file"),
        click.option("--transfer", type=click.Choice(["asymmetric", "identity"]), default=None,
                     help="Override the model transfer"),
        click.option("--n", "n", default=200, show_default=True,
                     help="Length simulated with --model"),
        click.option("--data-seed", default=0, show_default=True, help="Seed for --model data"),
        click.option("--B", "B", default=250, show_default=True, help="Bootstrap replicates"),
        click.option("--alpha", default=0.05, show_default=True, help="Nominal miscoverage"),
        click.option("--seed", default=0, show_default=True, help="Bootstrap seed"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


@click.group()
@click.version_option(__version__, prog_name="ModelFreeBootstrap")
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug detail")
@click.option("--jobs", default=None, type=int, help="Parallel workers (env MFBOOT_JOBS)")
@click.pass_context
def main(ctx, verbose, jobs):
    """ModelFreeBootstrap - Model-free bootstrap intervals for stationary time series"""
    ctx.ensure_object(dict)

    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )

    if jobs is None:
        jobs = int(os.environ.get("MFBOOT_JOBS", "1"))
    ctx.obj["jobs"] = jobs


@main.command()
@click.option("--model", required=True, help="Preset (ma1|ar1|ma30|1|2|3) or model file")
@click.option("--transfer", type=click.Choice(["asymmetric", "identity"]), default=None,
              help="Override the model transfer")
@click.option("--n", "n", required=True, type=int, help="Series length")
@click.option("--seed", default=0, show_default=True, help="Random seed")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), required=True,
              help="Output CSV path")
def simulate(model, transfer, n, seed, out):
    """Generate one series and write it as CSV (t, W, Y)"""
    try:
        w, y = simulate_pair(resolve_model(model, transfer), n, seed)
    except MFBootError as e:
        _fail(e)

    t = np.arange(1, n + 1)
    try:
        np.savetxt(out, np.column_stack([t, w, y]), delimiter=",", header="t,W,Y",
                   comments="", fmt=["%d", "%.17g", "%.17g"])
    except OSError as e:
        click.echo(f"✗ cannot write {out}: {e}", err=True)
        sys.exit(1)
    click.echo(f"✓ Wrote {n} observations to {out}", err=True)


@main.command()
@_data_options
@click.option("--method", type=click.Choice(CI_METHODS), default="mf-ker", show_default=True,
              help="Interval method")
@click.option("--stat", default="mean", show_default=True,
              help="mean | acov:K | acorr:K | quantile:P | spectral:OMEGA[:H]")
@click.option("--block-size", default=None, type=int, help="Block size for bb")
@click.pass_context
def ci(ctx, input_path, model, transfer, n, data_seed, B, alpha, seed, method, stat, block_size):
    """Bootstrap confidence interval for a statistic (JSON on stdout)"""
    try:
        sample = _load_sample(input_path, model, transfer, n, data_seed)
        spec = StatisticSpec.parse(stat)
        opts = MethodOptions(
            B=B, alpha=alpha, seed=seed, n_jobs=ctx.obj["jobs"], block=BlockConfig(block_size)
        )
        interval = confidence_interval(method, sample, spec, opts)
    except MFBootError as e:
        _fail(e)
    click.echo(to_json(interval.to_dict()))


@main.command()
@_data_options
@click.option("--method", type=click.Choice(PI_METHODS), default="mf-ker", show_default=True,
              help="Interval method")
@click.option("--predictor", type=click.Choice(["l2", "l1"]), default="l2", show_default=True,
              help="Conditional mean (l2) or median (l1) predictor")
@click.option("--draws", default=1000, show_default=True, help="Monte Carlo draws per predictor")
@click.pass_context
def pi(ctx, input_path, model, transfer, n, data_seed, B, alpha, seed, method, predictor, draws):
    """One-step-ahead prediction interval (JSON on stdout)"""
    try:
        sample = _load_sample(input_path, model, transfer, n, data_seed)
        opts = MethodOptions(
            B=B, alpha=alpha, seed=seed, n_jobs=ctx.obj["jobs"],
            predictor=PredictorKind(predictor.upper(), draws),
        )
        interval = prediction_interval(method, sample, opts)
    except MFBootError as e:
        _fail(e)
    click.echo(to_json(interval.to_dict()))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Experiment config (YAML or markdown card)")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Report path")
@click.option("--format", "fmt", type=click.Choice(REPORT_FORMATS), default="csv",
              show_default=True, help="Report format")
@click.pass_context
def coverage(ctx, config_path, out, fmt):
    """Run a Monte Carlo coverage study and write the report"""
    try:
        cfg = load_experiment_config(config_path)
        if ctx.obj["jobs"] != 1 and cfg.jobs == 1:
            cfg = replace(cfg, jobs=ctx.obj["jobs"])
        report = run_coverage(cfg)
        path = emit_report(report, fmt, out)
    except MFBootError as e:
        _fail(e)
    click.echo(f"✓ Wrote {len(report.rows)} rows to {path}", err=True)


@main.command()
def models():
    """List the built-in model presets"""
    aliases = {v: k for k, v in PRESET_ALIASES.items()}
    for label, spec in PRESETS.items():
        click.echo(f"• {label} (alias {aliases[label]})")
        click.echo(f"  AR: {list(spec.ar)} | MA order: {len(spec.ma)} | transfer: {spec.transfer}")


@main.command(name="mcp-server")
@click.pass_context
def mcp_server_cmd(ctx):
    """Start the MCP server for LLM integration"""
    from .mcp_server import main as run_mcp

    # Pass the parallel width to the MCP server via environment variable
    os.environ["MFBOOT_JOBS"] = str(ctx.obj["jobs"])

    run_mcp()


if __name__ == "__main__":
    main()
