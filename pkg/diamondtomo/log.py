# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
import logging
from enum import Enum
from typing import Any

import numpy as np
import structlog
from structlog.processors import CallsiteParameter

# Libraries that log through the standard library at DEBUG and INFO
NOISY_LIBRARY_LOGGERS = ("__cvxpy__", "matplotlib", "PIL")


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


def _numpy_to_builtins(_: Any, __: str, event_dict: dict) -> dict:
    """Render numpy scalars as plain numbers and small arrays as nested lists.

    Arrays with more than 16 entries are replaced by their shape.
    """
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray):
            event_dict[key] = (
                value.tolist() if value.size <= 16 else f"ndarray{value.shape}"
            )
    return event_dict


def setup_logging(log_level: LogLevel) -> None:
    log_level_value = logging.getLevelName(log_level.value)
    for name in NOISY_LIBRARY_LOGGERS:
        logging.getLogger(name).setLevel(max(log_level_value, logging.WARNING))

    structlog.configure(
        processors=[
            structlog.processors.CallsiteParameterAdder(
                [CallsiteParameter.MODULE, CallsiteParameter.FUNC_NAME],
            ),
            _numpy_to_builtins,  # type: ignore
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.dev.set_exc_info,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(log_level_value),
    )
