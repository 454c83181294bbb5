# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Seeded Monte-Carlo sweeps of the tomography pipeline.

An experiment runs `trials` independent trials at every point of an N grid.
Trial (N, i) draws its randomness from the stream
`RngStream(seed, N * STREAM_STRIDE + i)`, so its result does not depend on
which worker ran it or in which order.
"""
import csv
import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Any
from typing import NamedTuple

import pydantic
import structlog
from more_itertools import bucket
from pydantic import confloat
from pydantic import conint
from pydantic import root_validator
from pydantic import validator

from ..applications import BinaryPovm
from ..applications import isometry_sample_complexity
from ..applications import learn_binary_povm
from ..applications import learn_isometry
from ..applications import learn_multi_povm
from ..applications import learn_state
from ..applications import povm_sample_complexity
from ..applications import random_povm
from ..applications import state_sample_complexity
from ..bounds import sample_complexity
from ..channels import Isometry
from ..channels import random_channel
from ..channels import random_density
from ..channels import validate_rank_bounds
from ..config import DEFAULT_SEED
from ..config import GAP_TOL
from ..files import load_channel
from ..files import load_povm
from ..haar import RngStream
from ..haar import sample_haar_isometry
from ..operators import DimPair
from ..tomography import run_algorithm1
from ..tomography import STAGES
from ..tomography import TomographyConfig
from ..tomography import TrialRecord

logger = structlog.get_logger()

STREAM_STRIDE = 2**20
INSTANCE_STREAM = 0


class Scenario(str, Enum):
    CHANNEL = "channel"
    STATE = "state"
    ISOMETRY = "isometry"
    BINARY_POVM = "binary-povm"
    MULTI_POVM = "multi-povm"


class ExperimentConfig(pydantic.BaseModel):
    scenario: Scenario
    d_in: pydantic.PositiveInt = 1
    d_out: pydantic.PositiveInt = 2
    k: pydantic.PositiveInt = 1
    # Number of POVM outcomes for the multi-povm scenario
    outcomes: conint(ge=2) = 3  # type: ignore
    # Empty means a single point at the sample complexity for epsilon, delta
    n_grid: list[pydantic.PositiveInt] = []
    trials: pydantic.PositiveInt = 1
    delta: confloat(gt=0, lt=1) = 0.2  # type: ignore
    epsilon: confloat(gt=0, le=1) = 0.6  # type: ignore
    seed: conint(ge=0, lt=2**64) = DEFAULT_SEED  # type: ignore
    out_dir: Path | None = None
    gap_tol: pydantic.PositiveFloat = GAP_TOL
    # Channel (Kraus) or POVM document to use instead of a random instance
    instance_path: Path | None = None
    record_timings: bool = True

    class Config:
        extra = pydantic.Extra.forbid

    @validator("n_grid")
    def strictly_increasing(cls, grid: list[int]) -> list[int]:
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"N grid must be strictly increasing, got {grid}")
        return grid

    @root_validator(skip_on_failure=True)
    def scenario_dimensions(cls, values):
        scenario = values["scenario"]
        d_in, d_out, k = values["d_in"], values["d_out"], values["k"]
        problems = []
        if scenario is Scenario.STATE and d_in != 1:
            problems.append("state scenario needs d_in = 1")
        if scenario is Scenario.ISOMETRY:
            if k != 1:
                problems.append("isometry scenario needs k = 1")
            if d_in > d_out:
                problems.append("isometry scenario needs d_in <= d_out")
        if scenario in (Scenario.BINARY_POVM, Scenario.MULTI_POVM):
            if d_out != 2:
                problems.append("POVM scenarios need d_out = 2")
            if k != 2 * d_in:
                problems.append("POVM scenarios need k = 2 * d_in")
        if not validate_rank_bounds(DimPair(d_out=d_out, d_in=d_in), k):
            problems.append(f"Kraus rank {k} is impossible for d_in={d_in}, d_out={d_out}")
        if problems:
            raise ValueError("; ".join(problems))
        return values

    @property
    def dims(self) -> DimPair:
        return DimPair(d_out=self.d_out, d_in=self.d_in)


class ResultRow(pydantic.BaseModel):
    scenario: Scenario
    d_in: int
    d_out: int
    k: int
    n_copies: int
    trial: int
    seed: int
    stream_id: int
    eps_pure_realized: float
    diamond_error_est: float
    diamond_error_final: float
    bound_total: float
    task_error: float
    success: bool
    hayashi_event: bool
    bound_respected: bool
    factor_two_holds: bool
    wall_ms_choi: float = 0.0
    wall_ms_purify: float = 0.0
    wall_ms_tomography: float = 0.0
    wall_ms_reconstruct: float = 0.0
    wall_ms_project: float = 0.0
    wall_ms_evaluate: float = 0.0


CSV_COLUMNS = list(ResultRow.__fields__)


class TrialTask(NamedTuple):
    config: ExperimentConfig
    n_copies: int
    trial: int


class TrialOutcome(NamedTuple):
    row: ResultRow
    documents: list[str]


def trial_stream(cfg: ExperimentConfig, n_copies: int, trial: int) -> RngStream:
    if trial >= STREAM_STRIDE:
        raise ValueError(f"at most {STREAM_STRIDE} trials per grid point")
    return RngStream(seed=cfg.seed, stream_id=n_copies * STREAM_STRIDE + trial)


def default_n(cfg: ExperimentConfig) -> int:
    eps, delta = cfg.epsilon, cfg.delta
    match cfg.scenario:
        case Scenario.CHANNEL:
            return sample_complexity(cfg.dims, cfg.k, eps, delta).n
        case Scenario.STATE:
            return state_sample_complexity(cfg.d_out, cfg.k, eps, delta).n
        case Scenario.ISOMETRY:
            return isometry_sample_complexity(cfg.d_in, cfg.d_out, eps, delta).n
        case Scenario.BINARY_POVM:
            return povm_sample_complexity(cfg.d_in, eps, delta).n
        case Scenario.MULTI_POVM:
            return povm_sample_complexity(cfg.d_in, eps, delta, cfg.outcomes).n
    raise ValueError(f"unknown scenario {cfg.scenario}")


def build_instance(cfg: ExperimentConfig) -> Any:
    """The object under test, shared by every trial of the experiment."""
    rng = RngStream(seed=cfg.seed, stream_id=INSTANCE_STREAM).generator()
    match cfg.scenario:
        case Scenario.CHANNEL:
            if cfg.instance_path is not None:
                loaded = load_channel(cfg.instance_path)
                if loaded.channel is None or loaded.dims != cfg.dims:
                    raise ValueError(f"{cfg.instance_path} is not a Kraus channel on {cfg.dims}")
                return loaded.channel
            return random_channel(cfg.dims, cfg.k, rng)
        case Scenario.STATE:
            return random_density(cfg.d_out, cfg.k, rng)
        case Scenario.ISOMETRY:
            return Isometry(dims=cfg.dims, matrix=sample_haar_isometry(cfg.d_in, cfg.d_out, rng))
        case Scenario.BINARY_POVM | Scenario.MULTI_POVM:
            outcomes = 2 if cfg.scenario is Scenario.BINARY_POVM else cfg.outcomes
            povm = (
                load_povm(cfg.instance_path)
                if cfg.instance_path is not None
                else random_povm(cfg.d_in, outcomes, rng)
            )
            if povm.dim != cfg.d_in:
                raise ValueError(f"POVM of dimension {povm.dim}, config says {cfg.d_in}")
            if cfg.scenario is Scenario.BINARY_POVM:
                return BinaryPovm(effect=povm.effects[0])
            return povm
    raise ValueError(f"unknown scenario {cfg.scenario}")


def _row(
    task: TrialTask,
    stream: RngStream,
    records: list[TrialRecord],
    task_error: float,
) -> ResultRow:
    cfg = task.config
    error_final = max(r.diamond_error_final for r in records)
    wall_ms = {
        f"wall_ms_{stage}": (
            sum(r.wall_ms.get(stage, 0.0) for r in records) if cfg.record_timings else 0.0
        )
        for stage in STAGES
    }
    return ResultRow(
        scenario=cfg.scenario,
        d_in=cfg.d_in,
        d_out=cfg.d_out,
        k=cfg.k,
        n_copies=task.n_copies,
        trial=task.trial,
        seed=cfg.seed,
        stream_id=stream.stream_id,
        eps_pure_realized=max(r.epsilon_pure_realized for r in records),
        diamond_error_est=max(r.diamond_error_est for r in records),
        diamond_error_final=error_final,
        bound_total=max(r.bound.total_bound for r in records),
        task_error=task_error,
        success=error_final / 2 <= cfg.epsilon,
        hayashi_event=all(r.hayashi_event for r in records),
        bound_respected=all(r.bound_respected for r in records),
        factor_two_holds=all(r.factor_two_holds for r in records),
        **wall_ms,
    )


def run_trial(task: TrialTask) -> TrialOutcome:
    cfg = task.config
    stream = trial_stream(cfg, task.n_copies, task.trial)
    instance = build_instance(cfg)
    structlog.contextvars.bind_contextvars(n_copies=task.n_copies, trial=task.trial)
    try:
        match cfg.scenario:
            case Scenario.CHANNEL:
                tomography = TomographyConfig(
                    dims=cfg.dims,
                    k=cfg.k,
                    n_copies=task.n_copies,
                    delta=cfg.delta,
                    gap_tol=cfg.gap_tol,
                    seed=stream,
                )
                record = run_algorithm1(instance, tomography)
                records, task_error = [record], record.diamond_error_final / 2
            case Scenario.STATE:
                result = learn_state(instance, cfg.k, task.n_copies, cfg.delta, stream)
                records, task_error = [result.record], result.trace_distance
            case Scenario.ISOMETRY:
                result = learn_isometry(instance, task.n_copies, cfg.delta, stream)
                records, task_error = [result.record], result.diamond_error
            case Scenario.BINARY_POVM:
                result = learn_binary_povm(instance, task.n_copies, cfg.delta, stream)
                records, task_error = [result.record], result.opnorm_error
            case Scenario.MULTI_POVM:
                multi = learn_multi_povm(instance, task.n_copies, cfg.delta, stream)
                records, task_error = multi.records, multi.max_opnorm_error
    finally:
        structlog.contextvars.unbind_contextvars("n_copies", "trial")
    documents = [r.document(timings=cfg.record_timings) for r in records]
    return TrialOutcome(_row(task, stream, records, task_error), documents)


def run_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> list[TrialOutcome]:
    grid = cfg.n_grid or [default_n(cfg)]
    tasks = [TrialTask(cfg, n, trial) for n in grid for trial in range(cfg.trials)]
    jobs = jobs or os.cpu_count() or 1
    logger.info(
        "Running experiment",
        scenario=cfg.scenario.value,
        grid=grid,
        trials=cfg.trials,
        jobs=jobs,
    )
    if jobs == 1:
        return [run_trial(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        # map() yields in submission order, which keeps the output deterministic
        return list(executor.map(run_trial, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def summarize(cfg: ExperimentConfig, rows: list[ResultRow]) -> dict[str, Any]:
    points = []
    by_n = bucket(rows, key=lambda row: row.n_copies)
    for n in sorted(by_n):
        at_n = list(by_n[n])
        points.append(
            {
                "n_copies": n,
                "trials": len(at_n),
                "success_frequency": sum(row.success for row in at_n) / len(at_n),
                "median_half_diamond_error": statistics.median(
                    row.diamond_error_final / 2 for row in at_n
                ),
                "bound_violations": sum(
                    row.hayashi_event and not row.bound_respected for row in at_n
                ),
                "factor_two_violations": sum(not row.factor_two_holds for row in at_n),
            }
        )
    return {
        "scenario": cfg.scenario.value,
        "d_in": cfg.d_in,
        "d_out": cfg.d_out,
        "k": cfg.k,
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "seed": cfg.seed,
        "points": points,
    }


def write_results(
    cfg: ExperimentConfig, outcomes: list[TrialOutcome], out_dir: Path
) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out_dir / "results.csv",
        "summary": out_dir / "summary.json",
        "trials": out_dir / "trials.jsonl",
    }
    rows = [outcome.row for outcome in outcomes]
    with paths["results"].open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(json.loads(row.json()))
    paths["summary"].write_text(json.dumps(summarize(cfg, rows), indent=2) + "\n")
    with paths["trials"].open("w", encoding="utf-8") as f:
        for outcome in outcomes:
            for document in outcome.documents:
                f.write(document + "\n")
    logger.info("Wrote results", out_dir=str(out_dir), rows=len(rows))
    return paths


def load_config(path: Path) -> ExperimentConfig:
    return ExperimentConfig.parse_file(path)
