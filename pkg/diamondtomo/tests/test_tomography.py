# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
import json

import numpy as np
import pydantic
import pytest
from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from ..channels import is_cptp
from ..channels import kraus_to_choi
from ..channels import KrausChannel
from ..channels import random_channel
from ..channels import validate_rank_bounds
from ..config import DEFAULT_SEED
from ..exceptions import DimensionMismatchError
from ..exceptions import PreconditionError
from ..exceptions import RankBoundError
from ..haar import RngStream
from ..haar import sample_haar_state
from ..operators import DimPair
from ..operators import PureState
from ..tomography import hayashi_sample_size
from ..tomography import purify_choi
from ..tomography import reduce_environment
from ..tomography import run_algorithm1
from ..tomography import simulate_covariant_pure_tomography
from ..tomography import STAGES
from ..tomography import TomographyConfig
from .conftest import dim_pairs

QUBIT = DimPair(d_out=2, d_in=2)


def make_config(dims: DimPair = QUBIT, k: int = 1, n: int = 2000, stream_id: int = 0):
    return TomographyConfig(
        dims=dims,
        k=k,
        n_copies=n,
        delta=0.2,
        seed=RngStream(seed=DEFAULT_SEED, stream_id=stream_id),
    )


class TestConfig:
    def test_rejects_impossible_rank(self):
        with pytest.raises(pydantic.ValidationError):
            make_config(k=5)

    def test_rejects_zero_copies(self):
        with pytest.raises(pydantic.ValidationError):
            make_config(n=0)

    def test_d_tot(self):
        assert make_config(k=3).d_tot == 12


class TestPurification:
    @given(dim_pairs(), st.integers(1, 4), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_environment_trace_recovers_choi(self, dims, k, seed):
        if not validate_rank_bounds(dims, k):
            return
        # Arrange
        rng = np.random.default_rng(seed)
        j = kraus_to_choi(random_channel(dims, k, rng))

        # Act
        psi = purify_choi(j, k, rng)

        # Assert
        assert psi.dim == dims.choi_dim * k
        assert np.allclose(reduce_environment(psi, dims, k), j.matrix, atol=1e-10)

    def test_rank_exceeding_environment(self, rng, qubit_dephasing):
        with pytest.raises(RankBoundError):
            purify_choi(kraus_to_choi(qubit_dephasing), 1, rng)

    def test_reduce_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            reduce_environment(sample_haar_state(5, rng), QUBIT, 1)


class TestCovariantTomography:
    def test_dimension_one_is_exact(self, rng):
        psi = PureState(amplitudes=[1.0])
        estimate = simulate_covariant_pure_tomography(psi, 10, rng)
        assert estimate.degenerate
        assert estimate.epsilon_pure_realized == 0.0

    def test_realized_error_matches_overlap(self, rng):
        # Arrange
        psi = sample_haar_state(6, rng)

        # Act
        estimate = simulate_covariant_pure_tomography(psi, 100, rng)

        # Assert
        overlap = abs(np.vdot(psi.amplitudes, estimate.estimate.amplitudes)) ** 2
        assert overlap == pytest.approx(estimate.true_overlap_sq)
        assert estimate.epsilon_pure_realized**2 == pytest.approx(1 - overlap, abs=1e-12)

    def test_more_copies_concentrate(self, rng):
        psi = sample_haar_state(4, rng)

        def mean_eps(n: int) -> float:
            return np.mean(
                [
                    simulate_covariant_pure_tomography(psi, n, rng).epsilon_pure_realized
                    for _ in range(200)
                ]
            )

        few = mean_eps(10)
        many = mean_eps(1000)
        assert many < few

    def test_needs_a_copy(self, rng):
        with pytest.raises(PreconditionError):
            simulate_covariant_pure_tomography(sample_haar_state(2, rng), 0, rng)


@pytest.mark.parametrize(
    "d,eta,delta,expected",
    [(4, 0.04, 0.1, 631), (8, 0.2, 0.1, 207)],
)
def test_hayashi_sample_size(d, eta, delta, expected):
    assert hayashi_sample_size(d, eta, delta) == expected


def test_hayashi_sample_size_rejects_bad_eta():
    with pytest.raises(PreconditionError):
        hayashi_sample_size(4, 1.5, 0.1)


@pytest.mark.parametrize("delta", [0.0, 1.0, 1.5])
def test_hayashi_sample_size_rejects_bad_delta(delta: float) -> None:
    with pytest.raises(PreconditionError):
        hayashi_sample_size(4, 0.2, delta)


class TestTrial:
    def test_identity_channel(self, qubit_identity):
        # Act
        record = run_algorithm1(qubit_identity, make_config())

        # Assert
        assert set(record.wall_ms) == set(STAGES)
        assert record.factor_two_holds
        assert is_cptp(record.projected_choi, QUBIT, tol=1e-6)
        assert record.diamond_error_final < 0.5
        assert record.bound.d_tot == 4

    def test_same_stream_same_record(self, rng):
        channel = random_channel(QUBIT, 2, rng)
        first = run_algorithm1(channel, make_config(k=2, stream_id=5))
        second = run_algorithm1(channel, make_config(k=2, stream_id=5))
        assert first.document(timings=False) == second.document(timings=False)

    def test_document_without_timings(self, qubit_identity):
        record = run_algorithm1(qubit_identity, make_config(n=50))
        document = json.loads(record.document(timings=False))
        assert "wall_ms" not in document
        assert "projected_choi" not in document
        assert "wall_ms" in json.loads(record.document())

    def test_stage_is_tagged(self):
        qutrit = KrausChannel.from_operators([np.eye(3)])
        with pytest.raises(DimensionMismatchError) as excinfo:
            run_algorithm1(qutrit, make_config())
        assert excinfo.value.stage == "choi"
