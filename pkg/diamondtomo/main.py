# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""
To run:

    $ poetry run diamond-tomo diamond identity.json z.json
    $ poetry run diamond-tomo simulate --config sweep.json --jobs 4
    $ poetry run diamond-tomo sweep-report results/results.csv
    $ poetry run diamond-tomo verify all

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 failed verification.
"""
import functools
import time
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
import numpy as np
import pydantic
import sentry_sdk
import structlog

from .applications import BinaryPovm
from .applications import learn_binary_povm
from .applications import learn_multi_povm
from .applications import povm_sample_complexity
from .bench.experiment import ExperimentConfig
from .bench.experiment import load_config
from .bench.experiment import run_experiment
from .bench.experiment import write_results
from .bench.report import write_report
from .bench.verify import run_suite
from .bench.verify import Suite
from .config import DEFAULT_SEED
from .config import DiamondTomoSettings
from .config import get_settings
from .diamond.norm import diamond_norm
from .exceptions import DiamondTomoError
from .exceptions import DimensionMismatchError
from .files import load_channel
from .files import load_povm
from .haar import RngStream
from .log import setup_logging

logger = structlog.get_logger()

VERIFY_FAILED = 3

PathType = click.Path(path_type=Path, dir_okay=False)
OutDirType = click.Path(path_type=Path, file_okay=False)


def exit_codes(command: Callable[..., Any]) -> Callable[..., Any]:
    """Translate toolkit errors into the documented exit codes."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except pydantic.ValidationError as error:
            click.echo(f"Invalid input:\n{error}", err=True)
            ctx.exit(1)
        except DiamondTomoError as error:
            logger.error("Command failed", error=str(error), stage=error.stage)
            click.echo(f"Error: {error}", err=True)
            ctx.exit(error.exit_code)
        except (ValueError, OSError) as error:
            click.echo(f"Error: {error}", err=True)
            ctx.exit(1)

    return wrapper


@click.group()
@click.pass_context
def cli(ctx: click.Context) -> None:
    """Diamond-norm channel tomography toolkit."""
    settings = get_settings()
    setup_logging(settings.log_level)
    if settings.sentry_dsn:
        sentry_sdk.init(dsn=settings.sentry_dsn)
    ctx.obj = settings


@cli.command()
@click.argument("file_a", type=PathType)
@click.argument("file_b", type=PathType)
@click.option("--gap-tol", type=click.FLOAT, default=None, help="Duality gap tolerance")
@exit_codes
def diamond(file_a: Path, file_b: Path, gap_tol: float | None) -> None:
    """Diamond norm of the difference of two channel documents."""
    a = load_channel(file_a)
    b = load_channel(file_b)
    if a.dims != b.dims:
        raise DimensionMismatchError(f"{file_a} has {a.dims}, {file_b} has {b.dims}")

    start = time.perf_counter()
    kwargs = {"gap_tol": gap_tol} if gap_tol is not None else {}
    result = diamond_norm(a.choi - b.choi, a.dims.d_in, **kwargs)
    runtime = time.perf_counter() - start

    click.echo(f"diamond norm:     {result.value:.9f}")
    click.echo(f"diamond distance: {result.value / 2:.9f}")
    click.echo(f"method:           {result.method.value}")
    click.echo(f"duality gap:      {result.gap:.3e}")
    click.echo(f"runtime:          {runtime:.3f} s")


@cli.command()
@click.option("--config", "config_path", type=PathType, required=True, help="Experiment JSON")
@click.option("--seed", type=click.INT, default=None, help="Override the master seed")
@click.option("--jobs", type=click.INT, default=None, help="Worker processes (default: cores)")
@click.option(
    "--out",
    type=OutDirType,
    default=None,
    envvar="DIAMONDTOMO_OUT_DIR",
    help="Output directory",
)
@click.option("--gap-tol", type=click.FLOAT, default=None, help="Duality gap tolerance")
@click.pass_obj
@exit_codes
def simulate(
    settings: DiamondTomoSettings,
    config_path: Path,
    seed: int | None,
    jobs: int | None,
    out: Path | None,
    gap_tol: float | None,
) -> None:
    """Run a seeded Monte-Carlo sweep and write results.csv and summary.json."""
    cfg = load_config(config_path)
    overrides = {
        key: value
        for key, value in (("seed", seed), ("gap_tol", gap_tol))
        if value is not None
    }
    if overrides:
        cfg = ExperimentConfig(**{**cfg.dict(), **overrides})
    out_dir = out or cfg.out_dir or settings.out_dir

    outcomes = run_experiment(cfg, jobs)
    paths = write_results(cfg, outcomes, out_dir)
    successes = sum(outcome.row.success for outcome in outcomes)
    click.echo(f"{len(outcomes)} trials, {successes} successes")
    for path in paths.values():
        click.echo(f"wrote {path}")


@cli.command("sweep-report")
@click.argument("csv_path", type=PathType)
@click.option("--out", type=OutDirType, default=None, help="Output directory")
@exit_codes
def sweep_report(csv_path: Path, out: Path | None) -> None:
    """Fit the log-log slope of the median error against N."""
    report = write_report(csv_path, out or csv_path.parent)
    click.echo(report.text(), nl=False)


@cli.command()
@click.argument("povm_path", type=PathType)
@click.option("--copies", type=click.INT, default=None, help="Channel uses per element")
@click.option("--epsilon", type=click.FLOAT, default=0.2, show_default=True)
@click.option("--delta", type=click.FLOAT, default=0.2, show_default=True)
@click.option("--trials", type=click.INT, default=1, show_default=True)
@click.option("--seed", type=click.INT, default=DEFAULT_SEED, show_default=True)
@exit_codes
def povm(
    povm_path: Path,
    copies: int | None,
    epsilon: float,
    delta: float,
    trials: int,
    seed: int,
) -> None:
    """Learn a POVM document in operator norm and report the errors."""
    target = load_povm(povm_path)
    binary = target.outcomes == 2
    elements = 1 if binary else target.outcomes
    n = copies or povm_sample_complexity(target.dim, epsilon, delta, elements).n
    click.echo(f"dimension {target.dim}, {target.outcomes} outcomes, N = {n} per element")

    errors = []
    for trial in range(trials):
        stream = RngStream(seed=seed, stream_id=trial)
        if binary:
            error = learn_binary_povm(
                BinaryPovm(effect=target.effects[0]), n, delta, stream
            ).opnorm_error
        else:
            error = learn_multi_povm(target, n, delta, stream).max_opnorm_error
        errors.append(error)
        click.echo(f"trial {trial}: operator-norm error {error:.6f}")
    hits = np.mean([error <= epsilon for error in errors])
    click.echo(f"within epsilon={epsilon}: {hits:.3f}")


@cli.command()
@click.argument("suite", type=click.STRING, default=Suite.ALL.value)
@click.option("--seed", type=click.INT, default=DEFAULT_SEED, show_default=True)
@exit_codes
def verify(suite: str, seed: int) -> None:
    """Run a property suite: sdp, distributions, lemmas, pipeline, povm or all."""
    try:
        chosen = Suite(suite)
    except ValueError:
        raise ValueError(
            f"unknown suite {suite!r}, expected one of {[s.value for s in Suite]}"
        ) from None

    report = run_suite(chosen, seed)
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        click.echo(f"{status} {result.name}: {result.detail}")
    if not report.passed:
        click.get_current_context().exit(VERIFY_FAILED)


if __name__ == "__main__":
    cli()
