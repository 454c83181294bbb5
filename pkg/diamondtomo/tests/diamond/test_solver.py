# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
import numpy as np
import pytest

from ...diamond import solver
from ...diamond.solver import Embedding
from ...diamond.solver import hermitian_basis
from ...diamond.solver import require_optimal
from ...diamond.solver import SdpProblem
from ...diamond.solver import SdpStatus
from ...diamond.solver import solve_sdp
from ...exceptions import PreconditionError
from ...exceptions import SolverError
from ..conftest import PAULI_X
from ..conftest import PAULI_Z


def largest_eigenvalue_problem(c: np.ndarray, trace: float = 1.0) -> SdpProblem:
    """max tr(C X) over X >= 0 with tr X = trace."""
    problem = SdpProblem("eig")
    x = problem.add_block(c.shape[0], "X")
    problem.set_objective(x, c)
    problem.add_constraint({x: np.eye(c.shape[0])}, trace)
    return problem


class TestHermitianBasis:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_size_and_hermiticity(self, n):
        basis = hermitian_basis(n)
        assert len(basis) == n * n
        assert all(np.array_equal(h, h.conj().T) for h in basis)

    def test_linearly_independent(self):
        stacked = np.array([h.reshape(-1) for h in hermitian_basis(3)])
        assert np.linalg.matrix_rank(stacked) == 9


class TestProblemBuilder:
    def test_shape_checked(self):
        problem = SdpProblem()
        x = problem.add_block(2)
        with pytest.raises(PreconditionError):
            problem.set_objective(x, np.eye(3))

    def test_block_dimension_positive(self):
        with pytest.raises(PreconditionError):
            SdpProblem().add_block(0)

    def test_linear_equality_adds_one_row_per_basis_element(self):
        problem = SdpProblem()
        x = problem.add_block(2)
        problem.add_linear_equality([(x, lambda h: h)], np.eye(2) / 2)
        assert len(problem.constraints) == 4
        assert problem.rhs.tolist() == pytest.approx([0.5, 0.5, 0.0, 0.0])

    def test_coefficient_rows(self):
        problem = largest_eigenvalue_problem(np.diag([1.0, 3.0]))
        assert np.array_equal(problem.coefficient_rows(0), [[1, 0, 0, 1]])


class TestSolve:
    @pytest.mark.parametrize("embedding", list(Embedding))
    def test_largest_eigenvalue(self, embedding):
        # Arrange
        c = np.diag([1.0, 3.0]) + 0.5j * (PAULI_X @ PAULI_Z)
        expected = np.linalg.eigvalsh(c)[-1]

        # Act
        solution = solve_sdp(largest_eigenvalue_problem(c), embedding=embedding)

        # Assert
        assert solution.status is SdpStatus.OPTIMAL
        assert solution.value == pytest.approx(expected, abs=1e-6)
        assert solution.dual_value >= solution.value - 1e-7
        assert solution.duality_gap < 1e-6

    def test_infeasible(self):
        solution = solve_sdp(largest_eigenvalue_problem(np.eye(2), trace=-1.0))
        assert solution.status is SdpStatus.INFEASIBLE
        assert solution.primal_blocks == []

    def test_require_optimal_raises(self):
        solution = solve_sdp(largest_eigenvalue_problem(np.eye(2), trace=-1.0))
        with pytest.raises(SolverError) as excinfo:
            require_optimal(solution, "eig")
        assert excinfo.value.exit_code == 2
        assert excinfo.value.status == "infeasible"

    def test_needs_constraints(self):
        problem = SdpProblem()
        problem.add_block(2)
        with pytest.raises(PreconditionError):
            solve_sdp(problem)

    def test_block_size_limit(self):
        problem = SdpProblem()
        x = problem.add_block(300)
        problem.add_constraint({x: np.eye(300)}, 1.0)
        with pytest.raises(PreconditionError):
            solve_sdp(problem)

    def test_uncertified_gap_is_not_optimal(self, monkeypatch: pytest.MonkeyPatch) -> None:
        # Arrange
        def wide_gap(problem, blocks, y):
            return 3.0, 3.5, 0.0, 0.0, y

        monkeypatch.setattr(solver, "_certificate", wide_gap)

        # Act
        solution = solve_sdp(largest_eigenvalue_problem(np.diag([1.0, 3.0])))

        # Assert
        assert solution.status is SdpStatus.MAX_ITER
        assert solution.duality_gap == pytest.approx(0.5)
        with pytest.raises(SolverError) as excinfo:
            require_optimal(solution, "eig")
        assert excinfo.value.status == "max-iter"
        assert len(excinfo.value.best_iterate) == 1
