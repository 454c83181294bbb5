# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""The tomography pipeline specialised to states, isometries and POVMs."""
import math
from typing import NamedTuple

import numpy as np
import pydantic
import structlog
from pydantic import root_validator
from pydantic import validator

from .bounds import in_regime
from .bounds import sample_complexity
from .bounds import SampleComplexity
from .channels import ChoiOperator
from .channels import choi_rank
from .channels import choi_to_kraus
from .channels import Isometry
from .channels import KrausChannel
from .config import PSD_TOL
from .config import TP_TOL
from .diamond.norm import diamond_norm
from .exceptions import DimensionMismatchError
from .exceptions import OutOfRegimeError
from .exceptions import PreconditionError
from .exceptions import RankBoundError
from .haar import RngStream
from .haar import sample_haar_isometry
from .operators import as_density
from .operators import as_hermitian
from .operators import DensityOperator
from .operators import DimPair
from .operators import operator_norm
from .operators import project_psd
from .operators import psd_power
from .operators import trace_norm
from .tomography import run_algorithm1
from .tomography import TomographyConfig
from .tomography import TrialRecord

logger = structlog.get_logger()


class BinaryPovm(pydantic.BaseModel):
    effect: np.ndarray

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("effect", pre=True)
    def between_zero_and_identity(cls, e):
        e = np.asarray(as_hermitian(np.asarray(e, dtype=np.complex128)))
        eigenvalues = np.linalg.eigvalsh(e)
        if eigenvalues[0] < PSD_TOL or eigenvalues[-1] > 1 - PSD_TOL:
            raise ValueError(
                f"effect spectrum [{eigenvalues[0]:.3e}, {eigenvalues[-1]:.3e}] "
                "is not inside [0, 1]"
            )
        return e

    @property
    def dim(self) -> int:
        return self.effect.shape[0]

    @property
    def elements(self) -> tuple[np.ndarray, np.ndarray]:
        return self.effect, np.eye(self.dim) - self.effect


class MultiPovm(pydantic.BaseModel):
    effects: list[np.ndarray]

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("effects", pre=True)
    def positive_effects(cls, effects):
        effects = [np.asarray(as_hermitian(np.asarray(e, dtype=np.complex128))) for e in effects]
        if len(effects) < 2:
            raise ValueError("a POVM needs at least two outcomes")
        for e in effects:
            if e.shape != effects[0].shape:
                raise ValueError("effects have different dimensions")
            if np.linalg.eigvalsh(e)[0] < PSD_TOL:
                raise ValueError("effect is not positive semidefinite")
        return effects

    @root_validator(skip_on_failure=True)
    def complete(cls, values):
        effects = values["effects"]
        defect = np.max(np.abs(sum(effects) - np.eye(effects[0].shape[0])))
        if defect > TP_TOL:
            raise ValueError(f"effects do not sum to the identity ({defect:.3e})")
        return values

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def outcomes(self) -> int:
        return len(self.effects)


class StateLearningResult(NamedTuple):
    estimate: DensityOperator
    trace_distance: float
    record: TrialRecord


class IsometryLearningResult(NamedTuple):
    estimate: KrausChannel
    diamond_error: float
    record: TrialRecord


class BinaryPovmLearningResult(NamedTuple):
    estimate: BinaryPovm
    opnorm_error: float
    record: TrialRecord


class MultiPovmLearningResult(NamedTuple):
    estimate: MultiPovm
    max_opnorm_error: float
    records: list[TrialRecord]


def state_channel(rho: np.ndarray, r: int) -> KrausChannel:
    """The preparation channel C -> C^d with output rho and Kraus rank rank(rho) <= r."""
    rho = as_density(rho)
    d = rho.shape[0]
    eigenvalues, eigenvectors = np.linalg.eigh(rho)
    eigenvalues, eigenvectors = eigenvalues[::-1], eigenvectors[:, ::-1]
    rank = choi_rank(rho)
    if rank > r:
        raise RankBoundError(f"state has rank {rank}, more than r={r}")
    ops = [
        math.sqrt(max(eigenvalues[i], 0.0)) * eigenvectors[:, i].reshape(d, 1)
        for i in range(rank)
    ]
    completeness = sum(float(np.vdot(k, k).real) for k in ops)
    ops = [k / math.sqrt(completeness) for k in ops]
    return KrausChannel(dims=DimPair(d_out=d, d_in=1), kraus_ops=ops)


def learn_state(
    rho: np.ndarray, r: int, n: int, delta: float, rng: RngStream
) -> StateLearningResult:
    channel = state_channel(rho, r)
    cfg = TomographyConfig(dims=channel.dims, k=r, n_copies=n, delta=delta, seed=rng)
    record = run_algorithm1(channel, cfg)
    estimate = as_density(record.projected_choi)
    distance = trace_norm(estimate - np.asarray(rho)) / 2
    return StateLearningResult(estimate, distance, record)


def learn_isometry(
    v: Isometry, n: int, delta: float, rng: RngStream
) -> IsometryLearningResult:
    channel = KrausChannel(dims=v.dims, kraus_ops=[v.matrix])
    cfg = TomographyConfig(dims=v.dims, k=1, n_copies=n, delta=delta, seed=rng)
    record = run_algorithm1(channel, cfg)
    projected = ChoiOperator(
        dims=channel.dims, matrix=record.projected_choi, cp=True, tp=True
    )
    estimate = choi_to_kraus(projected)
    return IsometryLearningResult(estimate, record.diamond_error_final / 2, record)


def povm_to_channel(m: BinaryPovm) -> KrausChannel:
    """The classical-quantum channel rho -> sum_b tr(M_b rho) |b><b|."""
    d = m.dim
    ops = []
    for b, element in enumerate(m.elements):
        eigenvalues, eigenvectors = np.linalg.eigh(element)
        ket = np.zeros((2, 1), dtype=np.complex128)
        ket[b, 0] = 1.0
        for mu, u in zip(eigenvalues, eigenvectors.T):
            if mu > 0:
                ops.append(math.sqrt(mu) * ket @ u.conj().reshape(1, d))
    return KrausChannel(dims=DimPair(d_out=2, d_in=d), kraus_ops=ops)


def povm_choi(m: BinaryPovm) -> np.ndarray:
    """Choi operator sum_b |b><b| (x) M_b^T / d, built directly."""
    d = m.dim
    blocks = [np.kron(np.diag(np.eye(2)[b]), e.T) for b, e in enumerate(m.elements)]
    return sum(blocks) / d


def povm_diamond_identity(e: BinaryPovm, f: BinaryPovm) -> tuple[float, float]:
    if e.dim != f.dim:
        raise DimensionMismatchError(f"POVMs act on dimensions {e.dim} and {f.dim}")
    lhs = diamond_norm(povm_choi(e) - povm_choi(f), e.dim).value
    rhs = 2 * operator_norm(e.effect - f.effect)
    return lhs, rhs


def extract_povm_effect(j: np.ndarray, d: int) -> BinaryPovm:
    """Effect of outcome 0 from a Choi operator on C^2 (x) C^d.

    The block <0|J|0> equals E^T / d; its spectrum is clipped to [0, 1].
    """
    j = np.asarray(j)
    if j.shape != (2 * d, 2 * d):
        raise DimensionMismatchError(f"Choi of shape {j.shape} is not on C^2 (x) C^{d}")
    effect = d * j[:d, :d].T
    return BinaryPovm(effect=project_psd(as_hermitian(effect, tol=1e-7), upper=1.0))


def _check_povm_regime(d: int, delta: float, outcomes: int = 1) -> None:
    if not in_regime(4 * d * d, delta / outcomes):
        raise OutOfRegimeError(
            f"delta={delta} must exceed {4 * outcomes} exp(-{4 * d * d}) for d={d}"
        )


def learn_binary_povm(
    e: BinaryPovm, n: int, delta: float, rng: RngStream
) -> BinaryPovmLearningResult:
    _check_povm_regime(e.dim, delta)
    channel = povm_to_channel(e)
    cfg = TomographyConfig(
        dims=channel.dims, k=2 * e.dim, n_copies=n, delta=delta, seed=rng
    )
    record = run_algorithm1(channel, cfg)
    estimate = extract_povm_effect(record.projected_choi, e.dim)
    error = operator_norm(estimate.effect - e.effect)
    return BinaryPovmLearningResult(estimate, error, record)


def renormalize_effects(effects: list[np.ndarray]) -> list[np.ndarray]:
    """Restore sum_j E_j = I after independent per-element estimation.

    The residual I - sum_j E_j is shared equally. If that breaks positivity
    the clipped effects are rescaled by the congruence S^-1/2 . S^-1/2 with
    S = sum_j E_j instead.
    """
    d = effects[0].shape[0]
    residual = np.eye(d) - sum(effects)
    shifted = [e + residual / len(effects) for e in effects]
    if all(np.linalg.eigvalsh(e)[0] >= PSD_TOL for e in shifted):
        return shifted
    logger.info("Additive renormalisation left the PSD cone, using congruence")
    clipped = [np.asarray(project_psd(e)) for e in effects]
    scale = psd_power(sum(clipped), -0.5)
    return [scale @ e @ scale.conj().T for e in clipped]


def learn_multi_povm(
    m: MultiPovm, n_per_element: int, delta: float, rng: RngStream
) -> MultiPovmLearningResult:
    outcomes = m.outcomes
    _check_povm_regime(m.dim, delta, outcomes)
    per_element = delta / outcomes
    estimates = []
    records = []
    for j, effect in enumerate(m.effects):
        binary = BinaryPovm(effect=project_psd(effect, upper=1.0))
        result = learn_binary_povm(binary, n_per_element, per_element, rng.child(j))
        estimates.append(result.estimate.effect)
        records.append(result.record)
    renormalized = renormalize_effects(estimates)
    estimate = MultiPovm(effects=renormalized)
    error = max(operator_norm(a - b) for a, b in zip(renormalized, m.effects))
    return MultiPovmLearningResult(estimate, error, records)


def random_povm(d: int, outcomes: int, rng: np.random.Generator) -> MultiPovm:
    """E_j = V^dagger (|j><j| (x) I) V for a Haar isometry V: C^d -> C^L (x) C^d."""
    v = sample_haar_isometry(d, outcomes * d, rng).reshape(outcomes, d, d)
    effects = [v[j].conj().T @ v[j] for j in range(outcomes)]
    return MultiPovm(effects=effects)


def state_sample_complexity(d: int, r: int, eps: float, delta: float) -> SampleComplexity:
    return sample_complexity(DimPair(d_out=d, d_in=1), r, eps, delta)


def isometry_sample_complexity(
    d_in: int, d_out: int, eps: float, delta: float
) -> SampleComplexity:
    return sample_complexity(DimPair(d_out=d_out, d_in=d_in), 1, eps, delta)


def povm_sample_complexity(
    d: int, eps: float, delta: float, elements: int = 1
) -> SampleComplexity:
    """Channel uses per learned element when `elements` effects share delta."""
    if elements < 1:
        raise PreconditionError(f"need at least one element, got {elements}")
    return sample_complexity(DimPair(d_out=2, d_in=d), 2 * d, eps, delta / elements)
