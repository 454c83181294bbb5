# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
import numpy as np
import pytest

from ...channels import is_cptp
from ...channels import kraus_to_choi
from ...channels import KrausChannel
from ...channels import random_channel
from ...diamond import projection
from ...diamond.norm import diamond_norm
from ...diamond.projection import cptp_project
from ...diamond.projection import cptp_projection_problem
from ...diamond.projection import restore_cptp
from ...diamond.solver import SdpSolution
from ...diamond.solver import SdpStatus
from ...diamond.solver import solve_sdp
from ...exceptions import DimensionMismatchError
from ...exceptions import SolverError
from ...operators import DimPair
from ..conftest import random_hermitian
from .test_norm import assert_certified

QUBIT = DimPair(d_out=2, d_in=2)


def test_cptp_estimate_is_a_fixed_point(rng):
    # Arrange
    j = kraus_to_choi(random_channel(QUBIT, 2, rng)).matrix

    # Act
    projected, distance = cptp_project(j, QUBIT)

    # Assert
    assert distance == pytest.approx(0.0, abs=1e-5)
    assert np.allclose(projected.matrix, j, atol=1e-4)


def test_projection_of_perturbed_estimate(rng):
    # Arrange
    j = kraus_to_choi(random_channel(QUBIT, 2, rng)).matrix
    estimate = j + random_hermitian(4, rng, scale=0.05)

    # Act
    projected, distance = cptp_project(estimate, QUBIT)

    # Assert
    assert is_cptp(projected, QUBIT, tol=1e-6)
    # The true channel is a feasible point, so the projection is no farther
    assert distance <= diamond_norm(estimate - j, 2).value + 1e-5
    assert diamond_norm(projected.matrix - estimate, 2).value == pytest.approx(
        distance, abs=1e-4
    )


def test_restore_cptp(rng):
    j = kraus_to_choi(random_channel(QUBIT, 2, rng)).matrix
    restored = restore_cptp(j + 1e-9 * np.eye(4), QUBIT)
    assert restored.cp and restored.tp
    assert np.allclose(restored.matrix, j, atol=1e-7)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        cptp_project(np.eye(6) / 6, QUBIT)


def test_non_optimal_status_carries_fallback(rng, monkeypatch):
    # Arrange
    j = kraus_to_choi(random_channel(QUBIT, 2, rng)).matrix
    stalled = SdpSolution(
        value=float("nan"),
        primal_blocks=[],
        multipliers=np.zeros(1),
        dual_value=float("nan"),
        duality_gap=float("inf"),
        primal_residual=float("inf"),
        complementarity=float("inf"),
        iterations=200,
        status=SdpStatus.MAX_ITER,
        solve_time=0.0,
    )
    monkeypatch.setattr(projection, "solve_sdp", lambda *args, **kwargs: stalled)

    # Act
    with pytest.raises(SolverError) as excinfo:
        cptp_project(j, QUBIT)

    # Assert
    error = excinfo.value
    assert error.exit_code == 2
    assert error.status == "max-iter"
    assert is_cptp(error.best_iterate, QUBIT, tol=1e-6)
    assert error.primal_value == pytest.approx(0.0, abs=1e-5)


def test_projection_certificate(rng: np.random.Generator) -> None:
    # Arrange
    j = kraus_to_choi(random_channel(QUBIT, 2, rng)).matrix
    problem, _ = cptp_projection_problem(j + random_hermitian(4, rng, scale=0.05), QUBIT)

    # Act
    solution = solve_sdp(problem)

    # Assert
    assert_certified(solution)


def test_distance_recomputed_when_restore_moves_the_iterate(
    rng: np.random.Generator, monkeypatch: pytest.MonkeyPatch
) -> None:
    # Arrange
    j = kraus_to_choi(random_channel(QUBIT, 2, rng)).matrix
    identity = kraus_to_choi(KrausChannel.from_operators([np.eye(2)]))
    monkeypatch.setattr(projection, "restore_cptp", lambda m, dims: identity)

    # Act
    projected, distance = cptp_project(j, QUBIT)

    # Assert
    assert projected is identity
    assert distance == pytest.approx(diamond_norm(identity.matrix - j, 2).value, abs=1e-6)
