# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Kraus and Choi representations of quantum channels.

The Choi operator is normalised, J = (Phi (x) id)(Omega), and lives on
out (x) in, so a channel has tr J = 1 and tr_out J = I/d_in.
"""
import math

import numpy as np
import pydantic
import structlog
from pydantic import root_validator
from pydantic import validator

from .config import NOT_CP_TOL
from .config import PSD_TOL
from .config import RANK_CUTOFF
from .config import TP_TOL
from .exceptions import DimensionMismatchError
from .exceptions import InvalidChannelError
from .exceptions import NotCompletelyPositiveError
from .exceptions import RankBoundError
from .haar import sample_haar_isometry
from .haar import sample_haar_state
from .operators import as_density
from .operators import as_hermitian
from .operators import ComplexMatrix
from .operators import DensityOperator
from .operators import DimPair
from .operators import partial_trace
from .operators import unvec
from .operators import vec

logger = structlog.get_logger()


class KrausChannel(pydantic.BaseModel):
    dims: DimPair
    kraus_ops: list[np.ndarray]

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("kraus_ops", pre=True)
    def as_complex_arrays(cls, ops):
        ops = [np.asarray(k, dtype=np.complex128) for k in ops]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        return ops

    @root_validator(skip_on_failure=True)
    def trace_preserving(cls, values):
        dims: DimPair = values["dims"]
        ops: list[np.ndarray] = values["kraus_ops"]
        for k in ops:
            if k.shape != (dims.d_out, dims.d_in):
                raise ValueError(
                    f"Kraus operator of shape {k.shape}, expected "
                    f"{(dims.d_out, dims.d_in)}"
                )
        completeness = sum(k.conj().T @ k for k in ops)
        defect = np.max(np.abs(completeness - np.eye(dims.d_in)))
        if defect > TP_TOL:
            raise ValueError(f"Kraus operators are not trace preserving ({defect:.3e})")
        return values

    @classmethod
    def from_operators(cls, ops: list[np.ndarray]) -> "KrausChannel":
        first = np.asarray(ops[0])
        if first.ndim != 2:
            raise InvalidChannelError("Kraus operators must be matrices")
        return cls(dims=DimPair(d_out=first.shape[0], d_in=first.shape[1]), kraus_ops=ops)


class ChoiOperator(pydantic.BaseModel):
    """A Hermitian operator on out (x) in, optionally flagged CP and/or TP."""

    dims: DimPair
    matrix: np.ndarray
    cp: bool = False
    tp: bool = False

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("matrix", pre=True)
    def hermitian(cls, m):
        return np.asarray(as_hermitian(np.asarray(m, dtype=np.complex128)))

    @root_validator(skip_on_failure=True)
    def flagged_properties(cls, values):
        dims: DimPair = values["dims"]
        m: np.ndarray = values["matrix"]
        if m.shape != (dims.choi_dim, dims.choi_dim):
            raise ValueError(f"Choi matrix of shape {m.shape} does not match {dims}")
        if values["cp"] and np.linalg.eigvalsh(m)[0] < NOT_CP_TOL:
            raise ValueError("Choi matrix flagged CP is not positive semidefinite")
        if values["tp"]:
            marginal = partial_trace(m, [dims.d_out, dims.d_in], keep=[1])
            defect = np.max(np.abs(marginal - np.eye(dims.d_in) / dims.d_in))
            if defect > TP_TOL:
                raise ValueError(f"Choi matrix flagged TP has marginal defect {defect:.3e}")
        return values

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


class Isometry(pydantic.BaseModel):
    dims: DimPair
    matrix: np.ndarray

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("matrix", pre=True)
    def complex_matrix(cls, m):
        return np.asarray(m, dtype=np.complex128)

    @root_validator(skip_on_failure=True)
    def isometric(cls, values):
        dims: DimPair = values["dims"]
        v: np.ndarray = values["matrix"]
        if dims.d_in > dims.d_out:
            raise ValueError("an isometry needs d_in <= d_out")
        if v.shape != (dims.d_out, dims.d_in):
            raise ValueError(f"isometry of shape {v.shape} does not match {dims}")
        if np.max(np.abs(v.conj().T @ v - np.eye(dims.d_in))) > 1e-9:
            raise ValueError("V^dagger V is not the identity")
        return values


def kraus_to_choi(c: KrausChannel) -> ChoiOperator:
    columns = np.stack([vec(k) for k in c.kraus_ops], axis=1)
    j = columns @ columns.conj().T / c.dims.d_in
    return ChoiOperator(dims=c.dims, matrix=j, cp=True, tp=True)


def choi_rank(j: ChoiOperator | np.ndarray, cutoff: float = RANK_CUTOFF) -> int:
    m = j.matrix if isinstance(j, ChoiOperator) else j
    eigenvalues = np.linalg.eigvalsh(as_hermitian(m))
    lambda_max = eigenvalues[-1]
    if lambda_max <= 0:
        return 0
    return int(np.count_nonzero(eigenvalues > cutoff * lambda_max))


def choi_to_kraus(j: ChoiOperator) -> KrausChannel:
    """Kraus operators from the spectral decomposition of a CPTP Choi operator."""
    eigenvalues, eigenvectors = np.linalg.eigh(j.matrix)
    if eigenvalues[0] < NOT_CP_TOL:
        raise NotCompletelyPositiveError(
            f"Choi operator has eigenvalue {eigenvalues[0]:.3e}, map is not CP"
        )
    lambda_max = eigenvalues[-1]
    kept = np.flatnonzero(eigenvalues > RANK_CUTOFF * lambda_max)[::-1]
    d_out, d_in = j.dims.d_out, j.dims.d_in
    ops = [
        math.sqrt(d_in * eigenvalues[i]) * unvec(eigenvectors[:, i], d_out, d_in)
        for i in kept
    ]
    try:
        return KrausChannel(dims=j.dims, kraus_ops=ops)
    except pydantic.ValidationError as error:
        raise InvalidChannelError(f"Choi operator is not a channel: {error}") from error


def apply_channel(c: KrausChannel, rho: np.ndarray) -> DensityOperator:
    rho = as_density(rho)
    if rho.shape[0] != c.dims.d_in:
        raise DimensionMismatchError(
            f"state of dimension {rho.shape[0]}, channel input is {c.dims.d_in}"
        )
    output = sum(k @ rho @ k.conj().T for k in c.kraus_ops)
    return as_density(output)


def validate_rank_bounds(dims: DimPair, k: int) -> bool:
    return math.ceil(dims.d_in / dims.d_out) <= k <= dims.d_in * dims.d_out


def is_cptp(j: ChoiOperator | np.ndarray, dims: DimPair, tol: float = TP_TOL) -> bool:
    m = j.matrix if isinstance(j, ChoiOperator) else np.asarray(j)
    if np.linalg.eigvalsh(as_hermitian(m))[0] < -tol:
        return False
    marginal = partial_trace(m, [dims.d_out, dims.d_in], keep=[1])
    return bool(np.max(np.abs(marginal - np.eye(dims.d_in) / dims.d_in)) <= tol)


def random_channel(dims: DimPair, k: int, rng: np.random.Generator) -> KrausChannel:
    """Kraus rank <= k channel from a Haar-random Stinespring isometry."""
    if not validate_rank_bounds(dims, k):
        raise RankBoundError(f"Kraus rank {k} is impossible for {dims}")
    v = sample_haar_isometry(dims.d_in, dims.d_out * k, rng)
    stacked = v.reshape(dims.d_out, k, dims.d_in)
    ops = [stacked[:, alpha, :] for alpha in range(k)]
    return KrausChannel(dims=dims, kraus_ops=ops)


def random_density(d: int, rank: int, rng: np.random.Generator) -> DensityOperator:
    psi = sample_haar_state(d * rank, rng).amplitudes.reshape(d, rank)
    return as_density(psi @ psi.conj().T)


def choi_input_marginal(
    j: ChoiOperator | np.ndarray, dims: DimPair | None = None
) -> DensityOperator:
    if isinstance(j, ChoiOperator):
        dims, m = j.dims, j.matrix
    else:
        m = np.asarray(j)
    if dims is None:
        raise DimensionMismatchError("dims are required for a bare matrix")
    marginal = partial_trace(m, [dims.d_out, dims.d_in], keep=[1])
    if np.linalg.eigvalsh(as_hermitian(marginal))[0] < PSD_TOL:
        raise NotCompletelyPositiveError("input marginal is not positive semidefinite")
    return as_density(marginal)


def unitary_channel(u: ComplexMatrix) -> KrausChannel:
    return KrausChannel.from_operators([u])
