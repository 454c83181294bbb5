# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
from typing import Any


class DiamondTomoError(Exception):
    """Base class for all errors raised by the toolkit.

    `stage` is filled in by the tomography pipeline when an error escapes
    one of its stages.
    """

    exit_code = 1

    def __init__(self, message: str, stage: str | None = None) -> None:
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        message = super().__str__()
        return f"[{self.stage}] {message}" if self.stage else message


class ValidationFailure(DiamondTomoError, ValueError):
    exit_code = 1


class DimensionMismatchError(ValidationFailure):
    pass


class NotHermitianError(ValidationFailure):
    pass


class NotCompletelyPositiveError(ValidationFailure):
    pass


class InvalidChannelError(ValidationFailure):
    pass


class RankBoundError(ValidationFailure):
    pass


class OutOfRegimeError(ValidationFailure):
    pass


class PreconditionError(ValidationFailure):
    pass


class MalformedResultsError(ValidationFailure):
    def __init__(self, message: str, row: int) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row


class SolverError(DiamondTomoError):
    """The SDP solver did not reach an optimal status.

    Carries whatever the solver produced so callers can still report
    certified bounds.
    """

    exit_code = 2

    def __init__(
        self,
        message: str,
        status: str,
        primal_value: float | None = None,
        dual_value: float | None = None,
        best_iterate: Any = None,
        stage: str | None = None,
    ) -> None:
        super().__init__(message, stage=stage)
        self.status = status
        self.primal_value = primal_value
        self.dual_value = dual_value
        self.best_iterate = best_iterate
