# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Error bound and sample complexity of the diamond-distance tomography pipeline.

The failure budget delta is split as delta/2 for pure-state tomography,
delta/4 for the input-marginal norm event and delta/4 for the overlap event.
"""
import math

import pydantic
import structlog
from pydantic import confloat

from .channels import validate_rank_bounds
from .exceptions import OutOfRegimeError
from .exceptions import PreconditionError
from .exceptions import RankBoundError
from .operators import DimPair

logger = structlog.get_logger()

LEADING_CONSTANT = 256
HAYASHI_CONSTANT = 4

BOOSTING_ADVICE = (
    "Either enlarge the instance so that 4 exp(-d_tot) < delta, or run the "
    "protocol repeatedly at a constant failure probability and combine the "
    "estimates (median-of-means style boosting)."
)


class BoundComponents(pydantic.BaseModel):
    d_tot: pydantic.PositiveInt
    C_delta: float
    eps_ov: confloat(ge=0, le=1)  # type: ignore
    c_ov: confloat(ge=0)  # type: ignore
    S_delta: confloat(ge=0)  # type: ignore
    eps_pure_bound: confloat(ge=0, le=1)  # type: ignore
    total_bound: confloat(ge=0)  # type: ignore
    degenerate: bool = False
    regime_ok: bool = True


class SampleComplexity(pydantic.BaseModel):
    n: pydantic.PositiveInt
    leading: pydantic.PositiveInt
    d_tot: pydantic.PositiveInt


def in_regime(d_tot: int, delta: float) -> bool:
    return delta > 4 * math.exp(-d_tot)


def hayashi_rate(d: int, n: int, delta: float) -> float:
    """Trace-distance accuracy of Hayashi tomography with n copies.

    Solves n = 4 (d + ln(1/delta)) / eta for eta = eps_pure^2.
    """
    return math.sqrt(HAYASHI_CONSTANT * (d + math.log(1 / delta)) / n)


def theoretical_bound(
    dims: DimPair, k: int, delta: float, eps_pure: float
) -> BoundComponents:
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 <= eps_pure <= 1.0:
        raise PreconditionError(f"eps_pure must lie in [0, 1], got {eps_pure}")
    d_tot = dims.d_out * dims.d_in * k
    c_delta = 2 + math.sqrt(math.log(4 / delta) / (k * dims.d_out))
    if d_tot == 1:
        return BoundComponents(
            d_tot=1,
            C_delta=c_delta,
            eps_ov=0.0,
            c_ov=0.0,
            S_delta=0.0,
            eps_pure_bound=eps_pure,
            total_bound=0.0,
            degenerate=True,
            regime_ok=in_regime(d_tot, delta),
        )

    eps_ov = 1 - (delta / 4) ** (1 / (d_tot - 1))
    c_ov = math.sqrt(eps_ov / (1 - eps_ov))
    s_delta = (
        (1 / (1 - eps_ov) - 1)
        + 4 * c_ov
        + c_ov**2
        + 2 * (1 + c_ov) * (1 / math.sqrt(1 - eps_ov) - 1)
    )
    return BoundComponents(
        d_tot=d_tot,
        C_delta=c_delta,
        eps_ov=eps_ov,
        c_ov=c_ov,
        S_delta=s_delta,
        eps_pure_bound=eps_pure,
        total_bound=c_delta * (4 + s_delta) * eps_pure,
        regime_ok=in_regime(d_tot, delta),
    )


def sample_complexity(
    dims: DimPair, k: int, eps: float, delta: float
) -> SampleComplexity:
    """Smallest number of channel uses for which the bound certifies `eps`.

    `eps` bounds half the diamond distance. The pure-state rate is the
    Hayashi rate on d_tot = d_out d_in k with failure budget delta/2.
    """
    if not validate_rank_bounds(dims, k):
        raise RankBoundError(f"Kraus rank {k} is impossible for {dims}")
    if not 0.0 < eps <= 1.0:
        raise PreconditionError(f"eps must lie in (0, 1], got {eps}")
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    d_tot = dims.d_out * dims.d_in * k
    if not in_regime(d_tot, delta):
        raise OutOfRegimeError(
            f"delta={delta} is below 4 exp(-{d_tot}); {BOOSTING_ADVICE}"
        )

    prefactor = theoretical_bound(dims, k, delta, 1.0).total_bound
    rate_numerator = HAYASHI_CONSTANT * (d_tot + math.log(2 / delta))

    def certified(n: int) -> bool:
        eps_pure = min(1.0, math.sqrt(rate_numerator / n))
        return prefactor * eps_pure <= eps

    n = max(1, math.ceil(rate_numerator * (prefactor / eps) ** 2))
    while not certified(n):
        n += 1
    while n > 1 and certified(n - 1):
        n -= 1
    leading = math.ceil(LEADING_CONSTANT * dims.d_in * dims.d_out * k / eps**2)
    logger.debug("Sample complexity", dims=dims.dict(), k=k, n=n, leading=leading)
    return SampleComplexity(n=n, leading=leading, d_tot=d_tot)
