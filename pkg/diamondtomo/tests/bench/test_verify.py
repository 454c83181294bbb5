# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
import numpy as np
import pytest
from scipy import stats

from ...bench import verify
from ...bench.verify import contraction_reconstruction
from ...bench.verify import ks_pvalue
from ...bench.verify import PropertyResult
from ...bench.verify import run_suite
from ...bench.verify import sample_complexity_certifies
from ...bench.verify import Suite
from ...config import DEFAULT_SEED
from ...config import KS_RETRIES
from ...config import KS_SIGNIFICANCE
from ...haar import RngStream


def evenly_spaced(rng: np.random.Generator) -> np.ndarray:
    return (np.arange(500) + 0.5) / 500


def constant(rng: np.random.Generator) -> np.ndarray:
    return np.full(500, 0.5)


class TestKolmogorovSmirnov:
    def test_failed_attempt_is_retried_on_a_new_stream(self):
        # Arrange
        attempts = []

        def draw(rng: np.random.Generator) -> np.ndarray:
            attempts.append(rng.integers(2**32))
            return constant(rng) if len(attempts) == 1 else evenly_spaced(rng)

        # Act
        pvalue = ks_pvalue(draw, stats.uniform.cdf, DEFAULT_SEED)

        # Assert
        assert pvalue > KS_SIGNIFICANCE
        assert len(attempts) == 2
        assert attempts[0] != attempts[1]

    def test_gives_up_after_the_last_attempt(self):
        calls = []

        def draw(rng: np.random.Generator) -> np.ndarray:
            calls.append(1)
            return constant(rng)

        assert ks_pvalue(draw, stats.uniform.cdf, DEFAULT_SEED) < KS_SIGNIFICANCE
        assert len(calls) == KS_RETRIES

    def test_first_attempt_uses_the_given_stream(self) -> None:
        seen = []

        def draw(rng: np.random.Generator) -> np.ndarray:
            seen.append(rng.integers(2**32))
            return evenly_spaced(rng)

        ks_pvalue(draw, stats.uniform.cdf, DEFAULT_SEED, stream_id=40)
        expected = RngStream(seed=DEFAULT_SEED, stream_id=40).generator().integers(2**32)
        assert seen == [expected]


class TestSuites:
    def test_all_runs_each_property_once(self, monkeypatch):
        # Arrange
        def passing(seed: int) -> PropertyResult:
            return PropertyResult(name=f"pass-{seed}", passed=True, detail="")

        def failing(seed: int) -> PropertyResult:
            return PropertyResult(name="fail", passed=False, detail="")

        monkeypatch.setattr(
            verify, "SUITES", {Suite.SDP: [passing], Suite.POVM: [passing, failing]}
        )

        # Act
        report = run_suite(Suite.ALL, seed=3)

        # Assert
        assert [r.name for r in report.results] == ["pass-3", "fail"]
        assert not report.passed
        assert run_suite(Suite.SDP, seed=3).passed

    @pytest.mark.parametrize("check", [sample_complexity_certifies, contraction_reconstruction])
    def test_cheap_properties_pass(self, check):
        assert check(DEFAULT_SEED).passed

    def test_every_suite_is_registered(self):
        assert set(verify.SUITES) == set(Suite) - {Suite.ALL}
