# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Property suites run by `diamond-tomo verify`.

These are scaled-down versions of the acceptance checks. Every property uses
fixed seeds, so a suite either always passes or always fails on a given
build. Kolmogorov-Smirnov checks get a fresh stream on each of up to
`KS_RETRIES` attempts.
"""
import itertools
from collections.abc import Callable
from enum import Enum

import numpy as np
import pydantic
import structlog
from more_itertools import unique_everseen
from scipy import stats
from tenacity import retry_if_result
from tenacity import Retrying
from tenacity import stop_after_attempt

from ..applications import BinaryPovm
from ..applications import learn_binary_povm
from ..applications import povm_diamond_identity
from ..applications import random_povm
from ..bounds import sample_complexity
from ..channels import kraus_to_choi
from ..channels import random_channel
from ..channels import random_density
from ..channels import unitary_channel
from ..config import DEFAULT_SEED
from ..config import KS_RETRIES
from ..config import KS_SIGNIFICANCE
from ..diamond.norm import diamond_cs_check
from ..diamond.norm import diamond_lower_bound
from ..diamond.norm import diamond_norm
from ..diamond.norm import diamond_norm_dual
from ..diamond.norm import diamond_norm_positive
from ..diamond.solver import Embedding
from ..haar import choi_marginal_bound
from ..haar import RngStream
from ..haar import sample_haar_state
from ..operators import DimPair
from ..operators import interval_contraction
from ..operators import operator_norm
from ..operators import psd_power
from ..operators import PureState
from ..tomography import hayashi_sample_size
from ..tomography import run_algorithm1
from ..tomography import simulate_covariant_pure_tomography
from ..tomography import TomographyConfig

logger = structlog.get_logger()


class Suite(str, Enum):
    SDP = "sdp"
    DISTRIBUTIONS = "distributions"
    LEMMAS = "lemmas"
    PIPELINE = "pipeline"
    POVM = "povm"
    ALL = "all"


class PropertyResult(pydantic.BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyReport(pydantic.BaseModel):
    suite: Suite
    results: list[PropertyResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


Property = Callable[[int], PropertyResult]


def _rng(seed: int, stream_id: int) -> np.random.Generator:
    return RngStream(seed=seed, stream_id=stream_id).generator()


def _random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (g + g.conj().T) / 2
    return h / np.linalg.norm(h)


def _random_dims(rng: np.random.Generator, largest: int = 3) -> DimPair:
    return DimPair(
        d_out=int(rng.integers(1, largest + 1)), d_in=int(rng.integers(1, largest + 1))
    )


def ks_pvalue(
    draw: Callable[[np.random.Generator], np.ndarray],
    cdf: Callable[[np.ndarray], np.ndarray],
    seed: int,
    stream_id: int = 1,
) -> float:
    """KS p-value of the last attempt; a p-value below the significance level is retried.

    Attempts draw from consecutive streams starting at `stream_id`.
    """
    streams = itertools.count(stream_id)
    retrying = Retrying(
        stop=stop_after_attempt(KS_RETRIES),
        retry=retry_if_result(lambda p: p < KS_SIGNIFICANCE),
        retry_error_callback=lambda state: state.outcome.result(),
    )
    return retrying(lambda: float(stats.kstest(draw(_rng(seed, next(streams))), cdf).pvalue))


# sdp


def cptp_norm_is_one(seed: int) -> PropertyResult:
    rng = _rng(seed, 1)
    worst = 0.0
    for _ in range(5):
        dims = _random_dims(rng)
        k = int(rng.integers(1, dims.choi_dim + 1))
        if k * dims.d_out < dims.d_in:
            k = dims.choi_dim
        choi = kraus_to_choi(random_channel(dims, k, rng))
        worst = max(worst, abs(diamond_norm(choi, dims.d_in).value - 1.0))
    return PropertyResult(
        name="cptp-norm-is-one", passed=worst <= 1e-5, detail=f"max |norm - 1| = {worst:.2e}"
    )


def positive_closed_form(seed: int) -> PropertyResult:
    rng = _rng(seed, 2)
    worst = 0.0
    for _ in range(5):
        dims = _random_dims(rng)
        j = random_density(dims.choi_dim, int(rng.integers(1, dims.choi_dim + 1)), rng)
        sdp = diamond_norm(j, dims.d_in).value
        worst = max(worst, abs(sdp - diamond_norm_positive(j, dims.d_in).value))
    return PropertyResult(
        name="positive-closed-form", passed=worst <= 1e-6, detail=f"max deviation {worst:.2e}"
    )


def dual_matches_primal(seed: int) -> PropertyResult:
    rng = _rng(seed, 3)
    worst = 0.0
    for _ in range(5):
        dims = _random_dims(rng)
        h = _random_hermitian(dims.choi_dim, rng)
        primal = diamond_norm(h, dims.d_in).value
        worst = max(worst, abs(primal - diamond_norm_dual(h, dims.d_in).value))
    return PropertyResult(
        name="dual-matches-primal",
        passed=worst <= 1e-6,
        detail=f"max |primal - dual| = {worst:.2e}",
    )


def embeddings_agree(seed: int) -> PropertyResult:
    rng = _rng(seed, 4)
    worst = 0.0
    for _ in range(3):
        dims = _random_dims(rng)
        h = _random_hermitian(dims.choi_dim, rng)
        complex_value = diamond_norm(h, dims.d_in).value
        real_value = diamond_norm(h, dims.d_in, embedding=Embedding.REAL).value
        worst = max(worst, abs(complex_value - real_value))
    return PropertyResult(
        name="embeddings-agree", passed=worst <= 1e-6, detail=f"max deviation {worst:.2e}"
    )


def oracle_sandwich(seed: int) -> PropertyResult:
    rng = _rng(seed, 5)
    worst = -np.inf
    for _ in range(5):
        dims = _random_dims(rng, largest=2)
        h = _random_hermitian(dims.choi_dim, rng)
        lower = diamond_lower_bound(h, dims.d_in, budget=4, rng=rng)
        worst = max(worst, lower - diamond_norm(h, dims.d_in).value)
    z = np.diag([1.0, -1.0]).astype(np.complex128)
    difference = (
        kraus_to_choi(unitary_channel(np.eye(2))).matrix
        - kraus_to_choi(unitary_channel(z)).matrix
    )
    sdp = diamond_norm(difference, 2).value
    lower = diamond_lower_bound(difference, 2, budget=4, rng=rng)
    passed = worst <= 1e-6 and abs(sdp - 2) <= 1e-3 and abs(lower - 2) <= 1e-3
    return PropertyResult(
        name="oracle-sandwich",
        passed=passed,
        detail=f"max(lower - sdp) = {worst:.2e}, I vs Z: sdp {sdp:.6f}, lower {lower:.6f}",
    )


# distributions


def haar_overlap_beta(seed: int) -> PropertyResult:
    pvalues = {}
    for d in (4, 8):

        def draw(rng: np.random.Generator, d: int = d) -> np.ndarray:
            return np.array(
                [abs(sample_haar_state(d, rng).amplitudes[0]) ** 2 for _ in range(2000)]
            )

        pvalues[d] = ks_pvalue(draw, stats.beta(1, d - 1).cdf, seed)
    return PropertyResult(
        name="haar-overlap-beta",
        passed=min(pvalues.values()) >= KS_SIGNIFICANCE,
        detail=", ".join(f"d={d}: p={p:.3f}" for d, p in pvalues.items()),
    )


def tomography_overlap_beta(seed: int) -> PropertyResult:
    n, d = 50, 8
    psi = PureState(amplitudes=np.eye(d)[0])

    def draw(rng: np.random.Generator) -> np.ndarray:
        return np.array(
            [simulate_covariant_pure_tomography(psi, n, rng).true_overlap_sq for _ in range(2000)]
        )

    pvalue = ks_pvalue(draw, stats.beta(n + 1, d - 1).cdf, seed)
    return PropertyResult(
        name="tomography-overlap-beta",
        passed=pvalue >= KS_SIGNIFICANCE,
        detail=f"N={n}, d={d}: p={pvalue:.3f}",
    )


def hayashi_guarantee(seed: int) -> PropertyResult:
    d, eta, delta = 8, 0.2, 0.1
    n = hayashi_sample_size(d, eta, delta)
    rng = _rng(seed, 6)
    psi = PureState(amplitudes=np.eye(d)[0])
    hits = [
        simulate_covariant_pure_tomography(psi, n, rng).true_overlap_sq >= 1 - eta
        for _ in range(500)
    ]
    frequency = float(np.mean(hits))
    return PropertyResult(
        name="hayashi-guarantee",
        passed=frequency >= 1 - delta,
        detail=f"N={n}: Pr[X >= 1 - eta] = {frequency:.3f}",
    )


# lemmas


def cauchy_schwarz(seed: int) -> PropertyResult:
    rng = _rng(seed, 7)
    dims = DimPair(d_out=2, d_in=2, d_env=2)
    worst = -np.inf
    for _ in range(10):
        phi1 = sample_haar_state(dims.total_dim, rng)
        phi2 = sample_haar_state(dims.total_dim, rng)
        lhs, rhs = diamond_cs_check(phi1, phi2, dims)
        worst = max(worst, lhs - rhs)
    return PropertyResult(
        name="diamond-cauchy-schwarz", passed=worst <= 1e-6, detail=f"max(lhs - rhs) = {worst:.2e}"
    )


def contraction_reconstruction(seed: int) -> PropertyResult:
    rng = _rng(seed, 8)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 5))
        a = random_density(d, int(rng.integers(1, d + 1)), rng)
        k = _random_hermitian(d, rng)
        k = k / max(operator_norm(k), 1.0)
        root = psd_power(a, 0.5)
        y = root @ k @ root
        y = (y + y.conj().T) / 2
        contraction = interval_contraction(a, y)
        worst = max(worst, float(np.max(np.abs(root @ contraction @ root - y))))
    return PropertyResult(
        name="interval-contraction", passed=worst <= 1e-8, detail=f"max residual {worst:.2e}"
    )


def choi_marginal_violations(seed: int) -> PropertyResult:
    rng = _rng(seed, 9)
    delta_haar = 0.25
    dims, k = DimPair(d_out=2, d_in=2), 2
    bound = choi_marginal_bound(dims, k, delta_haar)
    violations = 0
    draws = 2000
    for _ in range(draws):
        psi = sample_haar_state(dims.choi_dim * k, rng).amplitudes
        psi = psi.reshape(dims.d_out, dims.d_in, k)
        marginal = np.einsum("aib,ajb->ij", psi, psi.conj())
        violations += operator_norm(marginal) > bound
    frequency = violations / draws
    return PropertyResult(
        name="choi-marginal-bound",
        passed=frequency <= delta_haar,
        detail=f"violation frequency {frequency:.4f} at bound {bound:.4f}",
    )


# pipeline


def pipeline_trials(seed: int) -> PropertyResult:
    dims, k, eps, delta = DimPair(d_out=2, d_in=2), 1, 0.6, 0.2
    n = sample_complexity(dims, k, eps, delta).n
    channel = random_channel(dims, k, _rng(seed, 10))
    successes, factor_two = 0, 0
    trials = 3
    for trial in range(trials):
        cfg = TomographyConfig(
            dims=dims,
            k=k,
            n_copies=n,
            delta=delta,
            seed=RngStream(seed=seed, stream_id=100 + trial),
        )
        record = run_algorithm1(channel, cfg)
        successes += record.diamond_error_final / 2 <= eps
        factor_two += record.factor_two_holds
    return PropertyResult(
        name="pipeline-trials",
        passed=successes == trials and factor_two == trials,
        detail=f"N={n}: {successes}/{trials} successes, {factor_two}/{trials} within factor 2",
    )


def pipeline_deterministic(seed: int) -> PropertyResult:
    dims = DimPair(d_out=2, d_in=2)
    channel = random_channel(dims, 2, _rng(seed, 11))
    cfg = TomographyConfig(
        dims=dims, k=2, n_copies=1000, delta=0.2, seed=RngStream(seed=seed, stream_id=12)
    )
    first = run_algorithm1(channel, cfg)
    second = run_algorithm1(channel, cfg)
    same = (
        first.epsilon_pure_realized == second.epsilon_pure_realized
        and np.array_equal(first.projected_choi, second.projected_choi)
    )
    return PropertyResult(
        name="pipeline-deterministic",
        passed=same,
        detail=f"eps_pure {first.epsilon_pure_realized:.6g} vs {second.epsilon_pure_realized:.6g}",
    )


def sample_complexity_certifies(seed: int) -> PropertyResult:
    failures = []
    for d_in, d_out, k in ((2, 2, 1), (2, 2, 4), (1, 4, 2)):
        dims = DimPair(d_out=d_out, d_in=d_in)
        result = sample_complexity(dims, k, 0.6, 0.2)
        if result.leading != int(np.ceil(256 * d_in * d_out * k / 0.36)):
            failures.append(f"leading term for {(d_in, d_out, k)}")
        if result.n < result.leading:
            failures.append(f"N below leading term for {(d_in, d_out, k)}")
    return PropertyResult(
        name="sample-complexity",
        passed=not failures,
        detail="; ".join(failures) or "consistent",
    )


# povm


def povm_identity(seed: int) -> PropertyResult:
    rng = _rng(seed, 13)
    worst = 0.0
    for d in (2, 3):
        for _ in range(3):
            e = BinaryPovm(effect=random_povm(d, 2, rng).effects[0])
            f = BinaryPovm(effect=random_povm(d, 2, rng).effects[0])
            lhs, rhs = povm_diamond_identity(e, f)
            worst = max(worst, abs(lhs - rhs))
    return PropertyResult(
        name="povm-diamond-identity", passed=worst <= 1e-6, detail=f"max |lhs - rhs| = {worst:.2e}"
    )


def povm_learning(seed: int) -> PropertyResult:
    effect = BinaryPovm(effect=random_povm(2, 2, _rng(seed, 14)).effects[0])
    trials = 5
    errors = [
        learn_binary_povm(
            effect, 100_000, 0.1, RngStream(seed=seed, stream_id=200 + trial)
        ).opnorm_error
        for trial in range(trials)
    ]
    frequency = float(np.mean([error <= 0.1 for error in errors]))
    return PropertyResult(
        name="binary-povm-learning",
        passed=frequency >= 0.8,
        detail=f"max error {max(errors):.4f}, success frequency {frequency:.2f}",
    )


SUITES: dict[Suite, list[Property]] = {
    Suite.SDP: [
        cptp_norm_is_one,
        positive_closed_form,
        dual_matches_primal,
        embeddings_agree,
        oracle_sandwich,
    ],
    Suite.DISTRIBUTIONS: [haar_overlap_beta, tomography_overlap_beta, hayashi_guarantee],
    Suite.LEMMAS: [
        positive_closed_form,
        cauchy_schwarz,
        contraction_reconstruction,
        choi_marginal_violations,
    ],
    Suite.PIPELINE: [pipeline_trials, pipeline_deterministic, sample_complexity_certifies],
    Suite.POVM: [povm_identity, povm_learning],
}


def run_suite(suite: Suite, seed: int = DEFAULT_SEED) -> VerifyReport:
    properties = (
        unique_everseen(itertools.chain.from_iterable(SUITES.values()))
        if suite is Suite.ALL
        else SUITES[suite]
    )
    results = []
    for check in properties:
        result = check(seed)
        logger.info("Checked property", name=result.name, passed=result.passed)
        results.append(result)
    return VerifyReport(suite=suite, results=results)
