# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Dense complex operator algebra.

Conventions used throughout the package:

* matrices are dense row-major `numpy` arrays of dtype complex128,
* `vec(|i><j|) = |i> (x) |j>`, i.e. a C-order flatten,
* bipartite operators on a channel live on `out (x) in`.
"""
import math
from typing import NewType
from typing import Sequence
from typing import TypeAlias

import numpy as np
import pydantic
import structlog
from numpy.typing import NDArray
from pydantic import PositiveInt
from pydantic import validator

from .config import CONTRACTION_TOL
from .config import HERMITIAN_TOL
from .config import NORM_TOL
from .config import PINV_CUTOFF
from .config import PSD_TOL
from .config import TRACE_TOL
from .exceptions import DimensionMismatchError
from .exceptions import NotHermitianError
from .exceptions import PreconditionError

ComplexMatrix: TypeAlias = NDArray[np.complex128]
ComplexVector: TypeAlias = NDArray[np.complex128]
HermitianOperator = NewType("HermitianOperator", np.ndarray)
DensityOperator = NewType("DensityOperator", np.ndarray)

logger = structlog.get_logger()


class DimPair(pydantic.BaseModel):
    d_out: PositiveInt
    d_in: PositiveInt
    # Only set for tripartite objects such as purified Choi states
    d_env: PositiveInt | None = None

    class Config:
        frozen = True

    @property
    def choi_dim(self) -> int:
        return self.d_out * self.d_in

    @property
    def total_dim(self) -> int:
        return self.d_out * self.d_in * (self.d_env or 1)


class PureState(pydantic.BaseModel):
    amplitudes: np.ndarray

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("amplitudes", pre=True)
    def unit_vector(cls, v):
        amplitudes = np.asarray(v, dtype=np.complex128).reshape(-1)
        if amplitudes.size == 0:
            raise ValueError("a pure state needs at least one amplitude")
        if not np.all(np.isfinite(amplitudes)):
            raise ValueError("amplitudes must be finite")
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"amplitudes must have unit norm, got {norm}")
        return amplitudes

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> ComplexMatrix:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    @classmethod
    def normalized(cls, v: Sequence[complex] | np.ndarray) -> "PureState":
        amplitudes = np.asarray(v, dtype=np.complex128).reshape(-1)
        return cls(amplitudes=amplitudes / np.linalg.norm(amplitudes))


def _check_square(x: np.ndarray, name: str = "operator") -> None:
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {x.shape}")


def is_hermitian(x: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(x), initial=0.0)))
    return bool(np.max(np.abs(x - x.conj().T), initial=0.0) <= tol * scale)


def as_hermitian(x: np.ndarray, tol: float = HERMITIAN_TOL) -> HermitianOperator:
    """Validate `x` as Hermitian and return its exactly symmetrised copy."""
    x = np.asarray(x, dtype=np.complex128)
    _check_square(x)
    if not np.all(np.isfinite(x)):
        raise NotHermitianError("operator has non-finite entries")
    if not is_hermitian(x, tol):
        raise NotHermitianError("operator is not Hermitian within tolerance")
    return HermitianOperator((x + x.conj().T) / 2)


def as_density(x: np.ndarray) -> DensityOperator:
    h = as_hermitian(x)
    eigenvalues = np.linalg.eigvalsh(h)
    if eigenvalues[0] < PSD_TOL:
        raise PreconditionError(
            f"density operator has negative eigenvalue {eigenvalues[0]:.3e}"
        )
    trace = float(np.real(np.trace(h)))
    if abs(trace - 1.0) > TRACE_TOL:
        raise PreconditionError(f"density operator has trace {trace}")
    return DensityOperator(h)


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return np.kron(a, b)


def partial_trace(
    x: ComplexMatrix, dims: Sequence[int], keep: Sequence[int]
) -> ComplexMatrix:
    """Trace out every subsystem of `x` not listed in `keep`.

    Args:
        x: Square operator on the tensor product of `dims`.
        dims: Local dimensions, in tensor order.
        keep: Indices of the subsystems to keep. Their relative order in the
            result is the order in `dims`, whatever order `keep` lists them in.

    Returns:
        The reduced operator on the kept subsystems.
    """
    x = np.asarray(x)
    dims = list(dims)
    total = math.prod(dims)
    if x.shape != (total, total):
        raise DimensionMismatchError(
            f"operator of shape {x.shape} does not match subsystem dims {dims}"
        )
    if any(i < 0 or i >= len(dims) for i in keep):
        raise DimensionMismatchError(f"keep={list(keep)} out of range for {dims}")

    tensor = x.reshape(dims + dims)
    n = len(dims)
    for i in sorted(set(range(n)) - set(keep), reverse=True):
        tensor = np.trace(tensor, axis1=i, axis2=i + n)
        n -= 1
    kept = math.prod(dims[i] for i in sorted(set(keep)))
    return tensor.reshape(kept, kept)


def vec(k: ComplexMatrix) -> ComplexVector:
    return np.asarray(k).reshape(-1)


def unvec(v: ComplexVector, d_out: int, d_in: int) -> ComplexMatrix:
    v = np.asarray(v)
    if v.size != d_out * d_in:
        raise DimensionMismatchError(
            f"vector of length {v.size} cannot be reshaped to {d_out}x{d_in}"
        )
    return v.reshape(d_out, d_in)


def maximally_entangled(d: int) -> ComplexMatrix:
    """The projector Omega onto vec(I)/sqrt(d)."""
    omega = vec(np.eye(d, dtype=np.complex128)) / math.sqrt(d)
    return np.outer(omega, omega.conj())


def schatten_norm(x: ComplexMatrix, p: float) -> float:
    if p not in (1, 2, math.inf):
        raise ValueError(f"unsupported Schatten index {p}")
    singular_values = np.linalg.svd(np.asarray(x), compute_uv=False)
    if singular_values.size == 0:
        return 0.0
    if p == math.inf:
        return float(singular_values[0])
    return float(np.linalg.norm(singular_values, ord=p))


def trace_norm(x: ComplexMatrix) -> float:
    return schatten_norm(x, 1)


def operator_norm(x: ComplexMatrix) -> float:
    return schatten_norm(x, math.inf)


def hermitian_eig(h: np.ndarray) -> tuple[NDArray[np.float64], ComplexMatrix]:
    """Eigen-decomposition with eigenvalues sorted in descending order."""
    h = as_hermitian(h)
    eigenvalues, eigenvectors = np.linalg.eigh(h)
    return eigenvalues[::-1].copy(), eigenvectors[:, ::-1].copy()


def psd_power(a: np.ndarray, power: float, cutoff: float = PINV_CUTOFF) -> ComplexMatrix:
    """Spectral power of a PSD operator restricted to its support.

    Eigenvalues at or below `cutoff * lambda_max` are treated as zero, so
    negative powers give the Moore-Penrose pseudo-inverse.
    """
    eigenvalues, eigenvectors = np.linalg.eigh(as_hermitian(a))
    lambda_max = max(float(eigenvalues[-1]), 0.0)
    support = eigenvalues > cutoff * lambda_max
    if lambda_max == 0.0 or not np.any(support):
        return np.zeros_like(eigenvectors)
    v = eigenvectors[:, support]
    return (v * eigenvalues[support] ** power) @ v.conj().T


def project_psd(h: np.ndarray, upper: float | None = None) -> HermitianOperator:
    """Clip the spectrum of `h` to [0, upper]."""
    eigenvalues, eigenvectors = np.linalg.eigh(as_hermitian(h))
    clipped = np.clip(eigenvalues, 0.0, upper)
    return HermitianOperator((eigenvectors * clipped) @ eigenvectors.conj().T)


def interval_contraction(a: np.ndarray, y: np.ndarray) -> HermitianOperator:
    """Find a Hermitian contraction K with `A^(1/2) K A^(1/2) = Y`.

    Requires `-A <= Y <= A`, which forces `ker(A)` into `ker(Y)`; K is built
    on the support of A from pseudo-inverse square roots and is zero on the
    kernel.
    """
    a = as_hermitian(a)
    y = as_hermitian(y)
    if a.shape != y.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {y.shape} differ")

    scale = max(1.0, operator_norm(a), operator_norm(y))
    lower = np.linalg.eigvalsh(a + y)[0]
    upper = np.linalg.eigvalsh(a - y)[0]
    if min(lower, upper) < -CONTRACTION_TOL * scale:
        raise PreconditionError(
            f"-A <= Y <= A violated (min eigenvalues {lower:.3e}, {upper:.3e})"
        )

    inv_sqrt = psd_power(a, -0.5)
    k = inv_sqrt @ y @ inv_sqrt
    k = (k + k.conj().T) / 2
    # Rounding can push eigenvalues marginally past +-1
    eigenvalues, eigenvectors = np.linalg.eigh(k)
    if np.max(np.abs(eigenvalues), initial=0.0) > 1.0:
        eigenvalues = np.clip(eigenvalues, -1.0, 1.0)
        k = (eigenvectors * eigenvalues) @ eigenvectors.conj().T
    return HermitianOperator(k)
