# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Haar-random states and unitaries, Beta overlap laws and concentration bounds."""
import math

import numpy as np
import pydantic
import structlog
from pydantic import conint
from pydantic import confloat

from .exceptions import DimensionMismatchError
from .exceptions import PreconditionError
from .exceptions import RankBoundError
from .operators import ComplexMatrix
from .operators import ComplexVector
from .operators import DimPair
from .operators import PureState

logger = structlog.get_logger()


class RngStream(pydantic.BaseModel):
    """A reproducible, independent random stream.

    Two streams with the same `(seed, stream_id)` produce bit-identical draws;
    different stream ids are statistically independent.
    """

    seed: conint(ge=0, lt=2**64)  # type: ignore
    stream_id: conint(ge=0) = 0  # type: ignore
    # Sub-streams split one stream further, e.g. per POVM element
    substream: conint(ge=0) = 0  # type: ignore

    class Config:
        frozen = True

    def generator(self) -> np.random.Generator:
        spawn_key = (self.stream_id, self.substream) if self.substream else (self.stream_id,)
        sequence = np.random.SeedSequence(self.seed, spawn_key=spawn_key)
        return np.random.Generator(np.random.PCG64(sequence))

    def child(self, substream: int) -> "RngStream":
        return RngStream(seed=self.seed, stream_id=self.stream_id, substream=substream + 1)


class TailBoundReport(pydantic.BaseModel):
    n: pydantic.PositiveInt
    s: pydantic.PositiveInt
    delta: confloat(gt=0, lt=1)  # type: ignore
    bound: confloat(ge=0)  # type: ignore


def sample_complex_gaussian(
    d: int, rng: np.random.Generator, size: tuple[int, ...] = ()
) -> ComplexVector:
    """Standard complex Gaussian: real and imaginary parts are N(0, 1/2)."""
    if d < 1:
        raise PreconditionError(f"dimension must be positive, got {d}")
    shape = size + (d,)
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / math.sqrt(2)


def sample_haar_state(d: int, rng: np.random.Generator) -> PureState:
    g = sample_complex_gaussian(d, rng)
    return PureState(amplitudes=g / np.linalg.norm(g))


def sample_haar_unitary(d: int, rng: np.random.Generator) -> ComplexMatrix:
    """QR of a Ginibre matrix, with the phases of R's diagonal moved into Q."""
    ginibre = sample_complex_gaussian(d, rng, size=(d,))
    q, r = np.linalg.qr(ginibre)
    diagonal = np.diag(r)
    phases = diagonal / np.abs(diagonal)
    return q * phases


def sample_haar_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> ComplexMatrix:
    if d_in > d_out:
        raise DimensionMismatchError(
            f"no isometry from dimension {d_in} into dimension {d_out}"
        )
    return sample_haar_unitary(d_out, rng)[:, :d_in]


def overlap_tail(epsilon: float, d: int) -> float:
    """Pr[|<v|psi>|^2 >= epsilon] for a Haar state psi in dimension d."""
    if d < 1:
        raise PreconditionError(f"dimension must be positive, got {d}")
    if not 0.0 <= epsilon <= 1.0:
        raise PreconditionError(f"epsilon must lie in [0, 1], got {epsilon}")
    if d == 1:
        return 1.0
    return (1.0 - epsilon) ** (d - 1)


def overlap_tail_relaxed(epsilon: float, d: int) -> float:
    return math.exp(-(d - 1) * epsilon)


def sample_beta_pair(
    alpha: float, beta: float, rng: np.random.Generator
) -> tuple[float, float]:
    """Draw X ~ Beta(alpha, beta) and return (X, 1 - X).

    Both coordinates come from the same pair of Gamma variates so `1 - X`
    keeps full relative precision when X is close to 1.
    """
    if alpha <= 0 or beta <= 0:
        raise PreconditionError(
            f"Beta parameters must be positive, got ({alpha}, {beta})"
        )
    ga = rng.standard_gamma(alpha)
    gb = rng.standard_gamma(beta)
    total = ga + gb
    return float(ga / total), float(gb / total)


def sample_beta(alpha: float, beta: float, rng: np.random.Generator) -> float:
    return sample_beta_pair(alpha, beta, rng)[0]


def reduced_opnorm_bound(n: int, s: int, delta: float) -> TailBoundReport:
    """High-probability bound on the operator norm of a reduced Haar state.

    For a Haar state on C^n (x) C^s with n <= s, the reduced state on the
    n-dimensional factor has operator norm at most the returned bound with
    probability at least 1 - delta.
    """
    if n > s:
        raise DimensionMismatchError(f"need n <= s, got n={n}, s={s}")
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    bound = (1 / math.sqrt(n) + (1 + math.sqrt(math.log(1 / delta) / n)) / math.sqrt(s)) ** 2
    return TailBoundReport(n=n, s=s, delta=delta, bound=bound)


def choi_marginal_bound(
    dims: DimPair, k: int, delta_haar: float, tight: bool = False
) -> float:
    """Bound on the operator norm of tr_out of a Haar-purified Choi state.

    The default is the simplified form; `tight=True` gives the sharper
    expression it is derived from.
    """
    d_in = dims.d_in
    s = k * dims.d_out
    if d_in > s:
        raise RankBoundError(f"d_in={d_in} exceeds k*d_out={s}")
    if not 0.0 < delta_haar <= 1.0:
        raise PreconditionError(f"delta_haar must lie in (0, 1], got {delta_haar}")
    log_term = math.log(1 / delta_haar)
    if tight:
        inner = 1 + (1 + math.sqrt(log_term / d_in)) * math.sqrt(d_in / s)
    else:
        inner = 2 + math.sqrt(log_term / s)
    return inner**2 / d_in


def haar_orthogonal_error(psi: PureState, rng: np.random.Generator) -> PureState:
    """A Haar-random state on the orthogonal complement of `psi`."""
    if psi.dim < 2:
        raise DimensionMismatchError("a one-dimensional state has no complement")
    v = psi.amplitudes
    while True:
        g = sample_haar_state(psi.dim, rng).amplitudes
        g = g - v * np.vdot(v, g)
        norm = np.linalg.norm(g)
        # A draw parallel to psi has probability zero
        if norm > 1e-8:
            break
    g = g / norm
    # Remove the residual overlap left by rounding
    g = g - v * np.vdot(v, g)
    return PureState(amplitudes=g / np.linalg.norm(g))
