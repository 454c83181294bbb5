# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Block semidefinite programs in standard maximisation form.

    maximize    sum_b tr(C_b X_b)
    subject to  sum_b tr(A_ib X_b) = b_i    for every constraint i
                X_b >= 0                    for every block b

with Hermitian X_b, C_b and A_ib. The dual program is

    minimize    b . y
    subject to  Z_b = sum_i y_i A_ib - C_b >= 0,

so weak duality reads `b . y >= sum_b tr(C_b X_b)`.
"""
import time
from enum import Enum
from typing import Callable
from typing import Sequence

import cvxpy as cp
import numpy as np
import pydantic
import structlog

from ..config import FEAS_TOL
from ..config import GAP_TOL
from ..config import MAX_BLOCK_DIM
from ..config import MAX_ITER
from ..exceptions import PreconditionError
from ..exceptions import SolverError

logger = structlog.get_logger()

AdjointMap = Callable[[np.ndarray], np.ndarray]


class SdpStatus(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max-iter"
    INFEASIBLE = "infeasible"


class Embedding(str, Enum):
    COMPLEX = "complex"
    REAL = "real"


_CVXPY_STATUS = {
    cp.OPTIMAL: SdpStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SdpStatus.MAX_ITER,
    cp.USER_LIMIT: SdpStatus.MAX_ITER,
    cp.INFEASIBLE: SdpStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SdpStatus.INFEASIBLE,
    cp.UNBOUNDED: SdpStatus.INFEASIBLE,
    cp.UNBOUNDED_INACCURATE: SdpStatus.INFEASIBLE,
}


def hermitian_basis(n: int) -> list[np.ndarray]:
    """A real basis of the n x n Hermitian matrices (n^2 elements)."""
    basis = []
    for j in range(n):
        e = np.zeros((n, n), dtype=np.complex128)
        e[j, j] = 1.0
        basis.append(e)
    for j in range(n):
        for k in range(j + 1, n):
            sym = np.zeros((n, n), dtype=np.complex128)
            sym[j, k] = sym[k, j] = 1.0
            basis.append(sym)
            anti = np.zeros((n, n), dtype=np.complex128)
            anti[j, k] = 1j
            anti[k, j] = -1j
            basis.append(anti)
    return basis


class SdpProblem:
    """Builder for a block SDP.

    Blocks are added with `add_block`, which returns the block index used by
    `set_objective` and the constraint methods.
    """

    def __init__(self, name: str = "sdp") -> None:
        self.name = name
        self.block_dims: list[int] = []
        self.block_names: list[str] = []
        self.objective: dict[int, np.ndarray] = {}
        # One entry per scalar constraint: coefficient matrix per block, rhs
        self.constraints: list[tuple[dict[int, np.ndarray], float]] = []

    def add_block(self, dim: int, name: str = "") -> int:
        if dim < 1:
            raise PreconditionError(f"block dimension must be positive, got {dim}")
        self.block_dims.append(dim)
        self.block_names.append(name or f"X{len(self.block_dims) - 1}")
        return len(self.block_dims) - 1

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)

    def set_objective(self, block: int, c: np.ndarray) -> None:
        self._check_shape(block, c)
        self.objective[block] = np.asarray(c, dtype=np.complex128)

    def add_constraint(self, coefficients: dict[int, np.ndarray], rhs: float) -> None:
        for block, a in coefficients.items():
            self._check_shape(block, a)
        self.constraints.append(
            ({b: np.asarray(a, dtype=np.complex128) for b, a in coefficients.items()}, float(rhs))
        )

    def add_linear_equality(
        self, terms: Sequence[tuple[int, AdjointMap]], rhs: np.ndarray
    ) -> None:
        """Add the Hermitian matrix equation `sum_b L_b(X_b) = rhs`.

        Each term gives a block and the adjoint of its linear map L_b; the
        equation is imposed on every element of a Hermitian basis H as
        `sum_b tr(L_b^dagger(H) X_b) = tr(H rhs)`.
        """
        rhs = np.asarray(rhs, dtype=np.complex128)
        for h in hermitian_basis(rhs.shape[0]):
            coefficients = {block: adjoint(h) for block, adjoint in terms}
            self.add_constraint(coefficients, float(np.real(np.trace(h @ rhs))))

    def _check_shape(self, block: int, a: np.ndarray) -> None:
        n = self.block_dims[block]
        if np.shape(a) != (n, n):
            raise PreconditionError(
                f"coefficient of shape {np.shape(a)} for block {block} of dim {n}"
            )

    def coefficient_rows(self, block: int) -> np.ndarray:
        """Rows r_i with tr(A_ib X) == r_i . X.flatten() for Hermitian A_ib."""
        n = self.block_dims[block]
        rows = np.zeros((len(self.constraints), n * n), dtype=np.complex128)
        for i, (coefficients, _) in enumerate(self.constraints):
            if block in coefficients:
                rows[i] = coefficients[block].conj().reshape(-1)
        return rows

    @property
    def rhs(self) -> np.ndarray:
        return np.array([rhs for _, rhs in self.constraints])


class SdpSolution(pydantic.BaseModel):
    value: float
    primal_blocks: list[np.ndarray]
    multipliers: np.ndarray
    dual_value: float
    duality_gap: float
    primal_residual: float
    complementarity: float
    iterations: int
    status: SdpStatus
    solve_time: float

    class Config:
        arbitrary_types_allowed = True


def _real_embedding(a: np.ndarray) -> np.ndarray:
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def _compile(problem: SdpProblem, embedding: Embedding):
    variables = []
    blocks = []
    for n in problem.block_dims:
        if embedding is Embedding.COMPLEX:
            x = cp.Variable((n, n), hermitian=True)
            blocks.append(x)
        else:
            x = cp.Variable((2 * n, 2 * n), symmetric=True)
            x11, x12 = x[:n, :n], x[:n, n:]
            x21, x22 = x[n:, :n], x[n:, n:]
            blocks.append((x11 + x22) / 2 + 1j * (x21 - x12) / 2)
        variables.append(x)

    objective_terms = []
    lhs = []
    for b, x in enumerate(variables):
        n = problem.block_dims[b]
        if embedding is Embedding.COMPLEX:
            flat = cp.reshape(x, (n * n,), order="C")
            if b in problem.objective:
                objective_terms.append(
                    cp.real(cp.sum(cp.multiply(problem.objective[b].conj(), x)))
                )
            rows = problem.coefficient_rows(b)
            if np.any(rows):
                lhs.append(cp.real(rows @ flat))
        else:
            flat = cp.reshape(x, (4 * n * n,), order="C")
            if b in problem.objective:
                c = _real_embedding(problem.objective[b])
                objective_terms.append(cp.sum(cp.multiply(c, x)) / 2)
            rows = np.zeros((len(problem.constraints), 4 * n * n))
            for i, (coefficients, _) in enumerate(problem.constraints):
                if b in coefficients:
                    rows[i] = _real_embedding(coefficients[b]).reshape(-1) / 2
            if np.any(rows):
                lhs.append(rows @ flat)

    equality = sum(lhs[1:], lhs[0]) == problem.rhs
    objective = cp.Maximize(
        sum(objective_terms[1:], objective_terms[0]) if objective_terms else 0
    )
    constraints = [equality] + [x >> 0 for x in variables]
    return cp.Problem(objective, constraints), equality, blocks


def _certificate(problem: SdpProblem, blocks: list[np.ndarray], y: np.ndarray):
    """Primal value, dual value, residuals for candidate primal/dual points."""
    primal_value = sum(
        float(np.real(np.trace(c @ blocks[b]))) for b, c in problem.objective.items()
    )
    achieved = np.zeros(len(problem.constraints))
    for i, (coefficients, _) in enumerate(problem.constraints):
        achieved[i] = sum(
            float(np.real(np.trace(a @ blocks[b]))) for b, a in coefficients.items()
        )
    primal_residual = float(np.max(np.abs(achieved - problem.rhs), initial=0.0))
    for x in blocks:
        primal_residual = max(primal_residual, -float(np.linalg.eigvalsh(x)[0]))

    def slack(sign: float) -> list[np.ndarray]:
        z = []
        for b, n in enumerate(problem.block_dims):
            zb = -problem.objective.get(b, np.zeros((n, n), dtype=np.complex128))
            for i, (coefficients, _) in enumerate(problem.constraints):
                if b in coefficients:
                    zb = zb + sign * y[i] * coefficients[b]
            z.append((zb + zb.conj().T) / 2)
        return z

    # Solver back-ends disagree on the sign of equality multipliers; the
    # dual-feasible orientation is the one whose slack is PSD.
    candidates = [(s, slack(s)) for s in (1.0, -1.0)]
    sign, z = min(
        candidates,
        key=lambda item: -min(float(np.linalg.eigvalsh(zb)[0]) for zb in item[1]),
    )
    dual_value = float(sign * problem.rhs @ y)
    complementarity = sum(
        abs(float(np.real(np.trace(zb @ blocks[b])))) for b, zb in enumerate(z)
    )
    return primal_value, dual_value, primal_residual, complementarity, sign * y


def solve_sdp(
    problem: SdpProblem,
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
    max_iter: int = MAX_ITER,
    embedding: Embedding = Embedding.COMPLEX,
) -> SdpSolution:
    if problem.total_dim > MAX_BLOCK_DIM:
        raise PreconditionError(
            f"total block dimension {problem.total_dim} exceeds {MAX_BLOCK_DIM}"
        )
    if not problem.constraints:
        raise PreconditionError("an SDP needs at least one equality constraint")

    cvx_problem, equality, blocks = _compile(problem, embedding)
    start = time.perf_counter()
    try:
        cvx_problem.solve(
            solver=cp.CLARABEL,
            max_iter=max_iter,
            tol_gap_abs=gap_tol / 10,
            tol_gap_rel=gap_tol / 10,
            tol_feas=feas_tol,
        )
    except cp.error.SolverError as error:
        raise SolverError(f"{problem.name}: solver failed: {error}", status="failed") from error
    solve_time = time.perf_counter() - start

    status = _CVXPY_STATUS.get(cvx_problem.status, SdpStatus.INFEASIBLE)
    iterations = int(cvx_problem.solver_stats.num_iters or 0)
    if status is SdpStatus.INFEASIBLE or equality.dual_value is None:
        logger.warning("SDP infeasible", problem=problem.name, status=cvx_problem.status)
        return SdpSolution(
            value=float("nan"),
            primal_blocks=[],
            multipliers=np.zeros(len(problem.constraints)),
            dual_value=float("nan"),
            duality_gap=float("inf"),
            primal_residual=float("inf"),
            complementarity=float("inf"),
            iterations=iterations,
            status=SdpStatus.INFEASIBLE,
            solve_time=solve_time,
        )

    primal_blocks = [np.asarray(_value(x), dtype=np.complex128) for x in blocks]
    primal_blocks = [(x + x.conj().T) / 2 for x in primal_blocks]
    y = np.asarray(equality.dual_value, dtype=np.float64).reshape(-1)
    primal_value, dual_value, residual, complementarity, y = _certificate(
        problem, primal_blocks, y
    )
    gap = abs(dual_value - primal_value)
    if status is SdpStatus.OPTIMAL and gap > gap_tol * max(1.0, abs(primal_value)):
        logger.warning(
            "Recomputed duality gap above tolerance",
            problem=problem.name,
            gap=gap,
            gap_tol=gap_tol,
        )
        # An uncertified value is reported as a stalled solve
        status = SdpStatus.MAX_ITER
    logger.debug(
        "Solved SDP",
        problem=problem.name,
        embedding=embedding.value,
        value=primal_value,
        gap=gap,
        iterations=iterations,
        status=status.value,
    )
    return SdpSolution(
        value=primal_value,
        primal_blocks=primal_blocks,
        multipliers=y,
        dual_value=dual_value,
        duality_gap=gap,
        primal_residual=residual,
        complementarity=complementarity,
        iterations=iterations,
        status=status,
        solve_time=solve_time,
    )


def _value(expression) -> np.ndarray:
    value = expression.value
    return np.zeros(expression.shape) if value is None else value


def require_optimal(solution: SdpSolution, problem_name: str) -> SdpSolution:
    if solution.status is not SdpStatus.OPTIMAL:
        raise SolverError(
            f"{problem_name}: solver ended with status {solution.status.value}",
            status=solution.status.value,
            primal_value=solution.value,
            dual_value=solution.dual_value,
            best_iterate=solution.primal_blocks,
        )
    return solution
