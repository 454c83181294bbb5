# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Statistically exact simulation of diamond-distance channel tomography.

A trial runs these stages:

1. `choi`: the exact normalised Choi state of the unknown channel.
2. `purify`: one Haar-random purification of it on out (x) in (x) env, env of dimension k.
3. `tomography`: covariant pure-state tomography of the purification. This samples the
   estimator's output law directly: the overlap with the truth is Beta(N+1, d_tot-1)
   and the error direction is Haar on the orthogonal complement.
4. `reconstruct`: the Choi estimate tr_env |v><v|.
5. `project`: the diamond-norm projection onto CPTP maps.
6. `evaluate`: diamond errors before and after projection, and the bound.
"""
import math
import time
from collections.abc import Iterator
from contextlib import contextmanager

import numpy as np
import pydantic
import structlog
from pydantic import confloat
from pydantic import root_validator

from .bounds import BoundComponents
from .bounds import hayashi_rate
from .bounds import theoretical_bound
from .channels import ChoiOperator
from .channels import kraus_to_choi
from .channels import KrausChannel
from .channels import validate_rank_bounds
from .config import GAP_TOL
from .config import RANK_CUTOFF
from .diamond.norm import diamond_norm
from .diamond.projection import cptp_project
from .exceptions import DiamondTomoError
from .exceptions import DimensionMismatchError
from .exceptions import PreconditionError
from .exceptions import RankBoundError
from .haar import haar_orthogonal_error
from .haar import RngStream
from .haar import sample_beta_pair
from .haar import sample_haar_unitary
from .operators import DimPair
from .operators import PureState
from .operators import trace_norm

logger = structlog.get_logger()

STAGES = ("choi", "purify", "tomography", "reconstruct", "project", "evaluate")


class TomographyConfig(pydantic.BaseModel):
    dims: DimPair
    k: pydantic.PositiveInt
    n_copies: pydantic.PositiveInt
    delta: confloat(gt=0, lt=1)  # type: ignore
    gap_tol: pydantic.PositiveFloat = GAP_TOL
    seed: RngStream

    @root_validator(skip_on_failure=True)
    def kraus_rank_possible(cls, values):
        if not validate_rank_bounds(values["dims"], values["k"]):
            raise ValueError(f"Kraus rank {values['k']} is impossible for {values['dims']}")
        return values

    @property
    def d_tot(self) -> int:
        return self.dims.choi_dim * self.k


class PureEstimate(pydantic.BaseModel):
    estimate: PureState
    true_overlap_sq: confloat(ge=0, le=1)  # type: ignore
    epsilon_pure_realized: confloat(ge=0, le=1)  # type: ignore
    degenerate: bool = False


class TrialRecord(pydantic.BaseModel):
    config: TomographyConfig
    epsilon_pure_realized: float
    diamond_error_est: float
    diamond_error_final: float
    projection_distance: float
    bound: BoundComponents
    hayashi_event: bool
    bound_respected: bool
    wall_ms: dict[str, float]
    # Projected Choi estimate; left out of serialised documents
    projected_choi: np.ndarray

    class Config:
        arbitrary_types_allowed = True

    def document(self, timings: bool = True) -> str:
        exclude = {"projected_choi"} if timings else {"projected_choi", "wall_ms"}
        return self.json(exclude=exclude)

    @property
    def factor_two_holds(self) -> bool:
        slack = 2 * self.config.gap_tol
        return self.diamond_error_final <= 2 * self.diamond_error_est + slack


def purify_choi(j: ChoiOperator, k: int, rng: np.random.Generator) -> PureState:
    """Haar-random purification of J with a k-dimensional environment.

    The canonical purification sum_i sqrt(lambda_i) |v_i> (x) |i> is rotated
    by a Haar unitary on the environment. For k = 1 the Choi state is already
    pure and no environment rotation is applied.
    """
    if k < 1:
        raise PreconditionError(f"environment dimension must be positive, got {k}")
    eigenvalues, eigenvectors = np.linalg.eigh(j.matrix)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues, eigenvectors = eigenvalues[order], eigenvectors[:, order]
    rank = int(np.count_nonzero(eigenvalues > RANK_CUTOFF * eigenvalues[0]))
    if rank > k:
        raise RankBoundError(f"Choi rank {rank} exceeds the environment dimension {k}")

    purification = np.zeros((j.dims.choi_dim, k), dtype=np.complex128)
    purification[:, :rank] = eigenvectors[:, :rank] * np.sqrt(eigenvalues[:rank])
    if k > 1:
        purification = purification @ sample_haar_unitary(k, rng).T
    amplitudes = purification.reshape(-1)
    return PureState(amplitudes=amplitudes / np.linalg.norm(amplitudes))


def reduce_environment(psi: PureState, dims: DimPair, k: int) -> np.ndarray:
    """tr_env |psi><psi| for a state on out (x) in (x) env."""
    if psi.dim != dims.choi_dim * k:
        raise DimensionMismatchError(f"state of dimension {psi.dim} does not match {dims}, k={k}")
    m = psi.amplitudes.reshape(dims.choi_dim, k)
    return m @ m.conj().T


def simulate_covariant_pure_tomography(
    psi: PureState, n: int, rng: np.random.Generator
) -> PureEstimate:
    """Sample the output of a covariant N-copy pure-state tomography scheme.

    The squared overlap X with the true state is Beta(N+1, d-1), and the error
    direction is a Haar state on the orthogonal complement. A uniform phase
    is included in the Haar draw.
    """
    if n < 1:
        raise PreconditionError(f"need at least one copy, got {n}")
    if psi.dim == 1:
        return PureEstimate(
            estimate=psi, true_overlap_sq=1.0, epsilon_pure_realized=0.0, degenerate=True
        )
    overlap, miss = sample_beta_pair(n + 1, psi.dim - 1, rng)
    error = haar_orthogonal_error(psi, rng)
    v = math.sqrt(overlap) * psi.amplitudes + math.sqrt(miss) * error.amplitudes
    return PureEstimate(
        estimate=PureState.normalized(v),
        true_overlap_sq=overlap,
        epsilon_pure_realized=math.sqrt(miss),
    )


def hayashi_sample_size(d: int, eta: float, delta: float) -> int:
    if not 0.0 < eta < 1.0 or not 0.0 < delta < 1.0:
        raise PreconditionError(f"need eta, delta in (0, 1), got {eta}, {delta}")
    return math.ceil(4 * (d + math.log(1 / delta)) / eta)



def _diamond_error(x: np.ndarray, dims: DimPair, gap_tol: float) -> float:
    # State preparations have d_in = 1 and the diamond norm is the trace norm
    if dims.d_in == 1:
        return trace_norm(x)
    return diamond_norm(x, dims.d_in, gap_tol=gap_tol).value


@contextmanager
def _stage(name: str, timings: dict[str, float]) -> Iterator[None]:
    structlog.contextvars.bind_contextvars(stage=name)
    start = time.perf_counter()
    try:
        yield
    except DiamondTomoError as error:
        if error.stage is None:
            error.stage = name
        raise
    finally:
        timings[name] = (time.perf_counter() - start) * 1000
        structlog.contextvars.unbind_contextvars("stage")


def run_algorithm1(channel: KrausChannel, cfg: TomographyConfig) -> TrialRecord:
    """One end-to-end trial of diamond-distance tomography."""
    rng = cfg.seed.generator()
    dims, k = cfg.dims, cfg.k
    timings: dict[str, float] = {}

    with _stage("choi", timings):
        if channel.dims != dims:
            raise DimensionMismatchError(f"channel has {channel.dims}, config says {dims}")
        choi = kraus_to_choi(channel)

    with _stage("purify", timings):
        psi = purify_choi(choi, k, rng)

    with _stage("tomography", timings):
        estimate = simulate_covariant_pure_tomography(psi, cfg.n_copies, rng)

    with _stage("reconstruct", timings):
        j_est = reduce_environment(estimate.estimate, dims, k)

    with _stage("project", timings):
        projected, distance = cptp_project(j_est, dims, gap_tol=cfg.gap_tol)

    with _stage("evaluate", timings):
        error_est = _diamond_error(j_est - choi.matrix, dims, cfg.gap_tol)
        error_final = _diamond_error(projected.matrix - choi.matrix, dims, cfg.gap_tol)
        eps_pure = estimate.epsilon_pure_realized
        bound = theoretical_bound(dims, k, cfg.delta, eps_pure)

    record = TrialRecord(
        config=cfg,
        epsilon_pure_realized=eps_pure,
        diamond_error_est=error_est,
        diamond_error_final=error_final,
        projection_distance=distance,
        bound=bound,
        hayashi_event=eps_pure <= hayashi_rate(cfg.d_tot, cfg.n_copies, cfg.delta / 2),
        bound_respected=error_est <= bound.total_bound,
        wall_ms=timings,
        projected_choi=projected.matrix,
    )
    if not record.factor_two_holds:
        logger.warning(
            "Projection more than doubled the error",
            error_est=error_est,
            error_final=error_final,
        )
    logger.debug(
        "Trial finished",
        n_copies=cfg.n_copies,
        stream_id=cfg.seed.stream_id,
        eps_pure=eps_pure,
        error_final=error_final,
    )
    return record
