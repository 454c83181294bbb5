# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
from pathlib import Path

from pydantic import BaseSettings

from .log import LogLevel


# Numerical tolerances shared by all modules
HERMITIAN_TOL = 1e-10
PSD_TOL = -1e-9
TRACE_TOL = 1e-9
NORM_TOL = 1e-10
TP_TOL = 1e-8
NOT_CP_TOL = -1e-7
RANK_CUTOFF = 1e-8
PINV_CUTOFF = 1e-10
CONTRACTION_TOL = 1e-8

# Semidefinite programming defaults
GAP_TOL = 1e-7
FEAS_TOL = 1e-8
MAX_ITER = 200
MAX_BLOCK_DIM = 256

# Statistical checks
KS_SIGNIFICANCE = 0.01
KS_RETRIES = 3

DEFAULT_SEED = 20240601


class DiamondTomoSettings(BaseSettings):
    # Directory where CSV results, summaries and plots are written
    out_dir: Path = Path("results")

    # Configures log level
    log_level: LogLevel = LogLevel.INFO

    # Configures Sentry error monitoring
    sentry_dsn: str | None = None

    class Config:
        env_prefix = "DIAMONDTOMO_"
        env_nested_delimiter = "__"


def get_settings(*args, **kwargs) -> DiamondTomoSettings:
    return DiamondTomoSettings(*args, **kwargs)
