# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
import numpy as np
import structlog

from ..channels import ChoiOperator
from ..config import FEAS_TOL
from ..config import GAP_TOL
from ..exceptions import DimensionMismatchError
from ..exceptions import SolverError
from ..operators import DimPair
from ..operators import partial_trace
from ..operators import project_psd
from ..operators import psd_power
from .norm import add_diamond_epigraph
from .norm import choi_matrix
from .norm import diamond_norm
from .norm import identity_out_adjoint
from .solver import SdpProblem
from .solver import SdpStatus
from .solver import solve_sdp

logger = structlog.get_logger()


def restore_cptp(m: np.ndarray, dims: DimPair) -> ChoiOperator:
    """Clean an almost-CPTP Choi matrix up to exact CP and TP.

    Negative eigenvalues are clipped, then the input marginal is corrected
    by the congruence (I (x) T^-1/2) . (I (x) T^-1/2) with T = d_in tr_out J.
    """
    m = project_psd(m)
    marginal = dims.d_in * partial_trace(m, [dims.d_out, dims.d_in], keep=[1])
    correction = np.kron(np.eye(dims.d_out), psd_power(marginal, -0.5))
    return ChoiOperator(
        dims=dims, matrix=correction @ m @ correction.conj().T, cp=True, tp=True
    )


def cptp_projection_problem(m: np.ndarray, dims: DimPair) -> tuple[SdpProblem, int]:
    """min ||Phi_hat - Phi_est||_<> over CPTP Phi_hat as one block SDP.

    The diamond-norm epigraph ties P - Q = d_in (J_hat - J_est); J_hat is
    constrained to J_hat >= 0 and tr_out J_hat = I / d_in.
    """
    problem = SdpProblem("cptp-projection")
    p, q, _ = add_diamond_epigraph(problem, dims)
    j_hat = problem.add_block(dims.choi_dim, "J")
    problem.add_linear_equality(
        [(p, lambda h: h), (q, lambda h: -h), (j_hat, lambda h: -dims.d_in * h)],
        -dims.d_in * m,
    )
    problem.add_linear_equality(
        [(j_hat, identity_out_adjoint(dims.d_out))],
        np.eye(dims.d_in) / dims.d_in,
    )
    return problem, j_hat


def cptp_project(
    j_est: ChoiOperator | np.ndarray,
    dims: DimPair,
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
) -> tuple[ChoiOperator, float]:
    """Diamond-norm-nearest CPTP map to a Hermiticity-preserving estimate.

    Returns:
        The projected Choi operator and its certified diamond distance
        `||Phi_hat - Phi_est||_<>` to the estimate.
    """
    m, found = choi_matrix(j_est, dims.d_in)
    if found.d_out != dims.d_out:
        raise DimensionMismatchError(f"estimate of side {m.shape[0]} does not match {dims}")
    problem, j_block = cptp_projection_problem(m, dims)
    solution = solve_sdp(problem, gap_tol=gap_tol, feas_tol=feas_tol)

    if solution.status is not SdpStatus.OPTIMAL:
        source = solution.primal_blocks[j_block] if solution.primal_blocks else m
        fallback = restore_cptp(source, dims)
        try:
            distance = diamond_norm(fallback.matrix - m, dims.d_in).value
        except SolverError:
            distance = None
        logger.error(
            "CPTP projection did not converge",
            status=solution.status.value,
            fallback_distance=distance,
        )
        raise SolverError(
            f"cptp-projection: solver ended with status {solution.status.value}",
            status=solution.status.value,
            primal_value=distance,
            dual_value=-solution.dual_value if solution.primal_blocks else None,
            best_iterate=fallback,
        )

    raw = solution.primal_blocks[j_block]
    projected = restore_cptp(raw, dims)
    distance = max(-solution.value, 0.0)
    if np.max(np.abs(projected.matrix - raw)) > feas_tol:
        distance = diamond_norm(projected.matrix - m, dims.d_in, gap_tol=gap_tol).value
        logger.debug("Restoring CPTP moved the iterate", distance=distance)
    logger.debug("Projected estimate onto CPTP maps", distance=distance, gap=solution.duality_gap)
    return projected, distance
