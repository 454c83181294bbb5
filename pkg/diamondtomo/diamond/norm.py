# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Diamond norm of Hermiticity-preserving maps given by their Choi operator.

For a normalised Choi operator J on out (x) in the diamond norm is

    ||Phi||_<> = d_in * max tr(J Y)  over  -I (x) sigma <= Y <= I (x) sigma,

with sigma a density operator on the input. Writing P = I (x) sigma - Y and
Q = I (x) sigma + Y turns this into a block SDP in (P, Q, sigma).
"""
import math
from enum import Enum

import numpy as np
import pydantic
import structlog

from ..channels import ChoiOperator
from ..config import FEAS_TOL
from ..config import GAP_TOL
from ..config import NOT_CP_TOL
from ..exceptions import DimensionMismatchError
from ..exceptions import NotCompletelyPositiveError
from ..haar import sample_haar_state
from ..operators import as_hermitian
from ..operators import DimPair
from ..operators import operator_norm
from ..operators import partial_trace
from ..operators import PureState
from .solver import Embedding
from .solver import require_optimal
from .solver import SdpProblem
from .solver import SdpSolution
from .solver import solve_sdp

logger = structlog.get_logger()

ASCENT_STEPS = 50


class DiamondMethod(str, Enum):
    SDP = "sdp"
    POSITIVE_CLOSED_FORM = "positive-closed-form"
    BRUTEFORCE_LOWER = "bruteforce-lower"


class DiamondValue(pydantic.BaseModel):
    value: pydantic.confloat(ge=0)  # type: ignore
    method: DiamondMethod
    certificate: SdpSolution | None = None

    @property
    def gap(self) -> float:
        return self.certificate.duality_gap if self.certificate else 0.0


def choi_matrix(j: ChoiOperator | np.ndarray, d_in: int) -> tuple[np.ndarray, DimPair]:
    """The Hermitian matrix behind `j` and the dimensions it splits into."""
    m = j.matrix if isinstance(j, ChoiOperator) else np.asarray(as_hermitian(j))
    n = m.shape[0]
    if d_in < 1 or n % d_in:
        raise DimensionMismatchError(f"side {n} is not divisible by d_in={d_in}")
    return m, DimPair(d_out=n // d_in, d_in=d_in)


def identity_out_adjoint(d_out: int):
    """Adjoint of X -> tr_out(X), i.e. H -> I_out (x) H."""
    return lambda h: np.kron(np.eye(d_out), h)


def trace_out_adjoint(dims: DimPair):
    """Adjoint of sigma -> I_out (x) sigma, i.e. H -> tr_out(H)."""
    return lambda h: partial_trace(h, [dims.d_out, dims.d_in], keep=[1])


def diamond_primal_problem(m: np.ndarray, dims: DimPair) -> SdpProblem:
    n = dims.choi_dim
    problem = SdpProblem("diamond-primal")
    p = problem.add_block(n, "P")
    q = problem.add_block(n, "Q")
    sigma = problem.add_block(dims.d_in, "sigma")
    problem.set_objective(p, -dims.d_in * m / 2)
    problem.set_objective(q, dims.d_in * m / 2)
    tr_out = trace_out_adjoint(dims)
    problem.add_linear_equality(
        [(p, lambda h: h), (q, lambda h: h), (sigma, lambda h: -2 * tr_out(h))],
        np.zeros((n, n)),
    )
    problem.add_constraint({sigma: np.eye(dims.d_in)}, 1.0)
    return problem


def add_diamond_epigraph(
    problem: SdpProblem, dims: DimPair
) -> tuple[int, int, int]:
    """Blocks P, Q, t and the constraints `tr_out(P + Q) <= t I`.

    The caller ties P - Q to the operator whose norm is being bounded and
    minimises t (by maximising -t).
    """
    n = dims.choi_dim
    p = problem.add_block(n, "P")
    q = problem.add_block(n, "Q")
    slack = problem.add_block(dims.d_in, "W")
    t = problem.add_block(1, "t")
    embed = identity_out_adjoint(dims.d_out)
    problem.add_linear_equality(
        [
            (slack, lambda h: h),
            (p, embed),
            (q, embed),
            (t, lambda h: np.array([[-np.trace(h)]])),
        ],
        np.zeros((dims.d_in, dims.d_in)),
    )
    problem.set_objective(t, -np.ones((1, 1)))
    return p, q, t


def diamond_norm(
    j: ChoiOperator | np.ndarray,
    d_in: int,
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
    embedding: Embedding = Embedding.COMPLEX,
) -> DiamondValue:
    m, dims = choi_matrix(j, d_in)
    solution = require_optimal(
        solve_sdp(
            diamond_primal_problem(m, dims),
            gap_tol=gap_tol,
            feas_tol=feas_tol,
            embedding=embedding,
        ),
        "diamond-primal",
    )
    return DiamondValue(
        value=max(solution.value, 0.0), method=DiamondMethod.SDP, certificate=solution
    )


def diamond_norm_dual(
    j: ChoiOperator | np.ndarray,
    d_in: int,
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
) -> DiamondValue:
    """Diamond norm from the minimisation program

        min t  s.t.  P, Q >= 0,  P - Q = d_in J,  tr_out(P + Q) <= t I.
    """
    m, dims = choi_matrix(j, d_in)
    problem = SdpProblem("diamond-dual")
    p, q, _ = add_diamond_epigraph(problem, dims)
    problem.add_linear_equality(
        [(p, lambda h: h), (q, lambda h: -h)], dims.d_in * m
    )
    solution = require_optimal(
        solve_sdp(problem, gap_tol=gap_tol, feas_tol=feas_tol), "diamond-dual"
    )
    return DiamondValue(
        value=max(-solution.value, 0.0), method=DiamondMethod.SDP, certificate=solution
    )


def diamond_norm_positive(j: ChoiOperator | np.ndarray, d_in: int) -> DiamondValue:
    m, dims = choi_matrix(j, d_in)
    smallest = float(np.linalg.eigvalsh(m)[0])
    if smallest < NOT_CP_TOL:
        raise NotCompletelyPositiveError(
            f"Choi operator has eigenvalue {smallest:.3e}; use diamond_norm instead"
        )
    marginal = partial_trace(m, [dims.d_out, dims.d_in], keep=[1])
    return DiamondValue(
        value=dims.d_in * operator_norm(marginal),
        method=DiamondMethod.POSITIVE_CLOSED_FORM,
    )


def diamond_distance(
    j_a: ChoiOperator | np.ndarray,
    j_b: ChoiOperator | np.ndarray,
    d_in: int,
    gap_tol: float = GAP_TOL,
) -> float:
    a, _ = choi_matrix(j_a, d_in)
    b, _ = choi_matrix(j_b, d_in)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    return diamond_norm(a - b, d_in, gap_tol=gap_tol).value / 2


def _sign(h: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = np.linalg.eigh(h)
    return (eigenvectors * np.where(eigenvalues >= 0, 1.0, -1.0)) @ eigenvectors.conj().T


def diamond_lower_bound(
    j: ChoiOperator | np.ndarray,
    d_in: int,
    budget: int,
    rng: np.random.Generator,
    steps: int = ASCENT_STEPS,
) -> float:
    """Best ||(Phi (x) id)(psi)||_1 found over `budget` random pure inputs.

    Every input psi on in (x) ref is written as vec(B^T) with ||B||_2 = 1,
    which gives the output d_in (I (x) B) J (I (x) B^dagger). Each restart
    alternates between the optimal observable sign(output) and the input
    maximising tr(G output), the top eigenvector of a d_in^2 x d_in^2 form.
    """
    m, dims = choi_matrix(j, d_in)
    d_out = dims.d_out
    j4 = m.reshape(d_out, d_in, d_out, d_in)
    eye_out = np.eye(d_out)

    def output(b: np.ndarray) -> np.ndarray:
        lift = np.kron(eye_out, b)
        return d_in * lift @ m @ lift.conj().T

    def trace_norm(o: np.ndarray) -> float:
        return float(np.sum(np.abs(np.linalg.eigvalsh((o + o.conj().T) / 2))))

    best = 0.0
    for _ in range(budget):
        b = sample_haar_state(d_in * d_in, rng).amplitudes.reshape(d_in, d_in)
        value = trace_norm(output(b))
        for _ in range(steps):
            g4 = _sign(output(b)).reshape(d_out, d_in, d_out, d_in)
            form = np.einsum("sRqr,qasA->RAra", g4, j4).reshape(d_in * d_in, d_in * d_in)
            _, vectors = np.linalg.eigh((form + form.conj().T) / 2)
            b = vectors[:, -1].reshape(d_in, d_in)
            improved = trace_norm(output(b))
            if improved <= value + 1e-13:
                value = max(value, improved)
                break
            value = improved
        best = max(best, value)
    logger.debug("Diamond lower bound", value=best, budget=budget)
    return best


def diamond_cs_check(
    phi1: PureState, phi2: PureState, dims: DimPair, gap_tol: float = GAP_TOL
) -> tuple[float, float]:
    """Both sides of ||J12 + J21||_<> <= 2 sqrt(||J11||_<> ||J22||_<>).

    J_ij = tr_env |phi_i><phi_j| for purifications on out (x) in (x) env.
    """
    if dims.d_env is None:
        raise DimensionMismatchError("dims must carry an environment dimension")
    for phi in (phi1, phi2):
        if phi.dim != dims.total_dim:
            raise DimensionMismatchError(
                f"state of dimension {phi.dim} does not live on {dims}"
            )
    a = phi1.amplitudes.reshape(dims.choi_dim, dims.d_env)
    b = phi2.amplitudes.reshape(dims.choi_dim, dims.d_env)
    j12 = a @ b.conj().T
    cross = j12 + j12.conj().T
    lhs = diamond_norm(cross, dims.d_in, gap_tol=gap_tol).value
    n11 = diamond_norm_positive(a @ a.conj().T, dims.d_in).value
    n22 = diamond_norm_positive(b @ b.conj().T, dims.d_in).value
    return lhs, 2 * math.sqrt(n11 * n22)
