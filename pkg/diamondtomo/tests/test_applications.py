# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
import numpy as np
import pydantic
import pytest

from ..applications import BinaryPovm
from ..applications import extract_povm_effect
from ..applications import isometry_sample_complexity
from ..applications import learn_binary_povm
from ..applications import learn_isometry
from ..applications import learn_state
from ..applications import MultiPovm
from ..applications import povm_choi
from ..applications import povm_diamond_identity
from ..applications import povm_sample_complexity
from ..applications import povm_to_channel
from ..applications import random_povm
from ..applications import renormalize_effects
from ..applications import state_channel
from ..applications import state_sample_complexity
from ..channels import choi_to_kraus
from ..channels import Isometry
from ..channels import kraus_to_choi
from ..channels import KrausChannel
from ..config import DEFAULT_SEED
from ..exceptions import DimensionMismatchError
from ..exceptions import OutOfRegimeError
from ..exceptions import PreconditionError
from ..exceptions import RankBoundError
from ..haar import RngStream
from ..haar import sample_haar_isometry
from ..haar import sample_haar_unitary
from ..operators import DimPair
from ..operators import operator_norm
from ..tomography import purify_choi
from ..tomography import reduce_environment
from .conftest import random_hermitian

KET0 = np.diag([1.0, 0.0])


def stream(stream_id: int = 0) -> RngStream:
    return RngStream(seed=DEFAULT_SEED, stream_id=stream_id)


class TestPovmModels:
    def test_binary_effect_must_lie_between_zero_and_identity(self):
        with pytest.raises(pydantic.ValidationError):
            BinaryPovm(effect=np.diag([1.5, 0.0]))

    def test_binary_elements_complete(self):
        povm = BinaryPovm(effect=np.diag([0.3, 0.9]))
        assert np.allclose(sum(povm.elements), np.eye(2))

    def test_multi_must_sum_to_identity(self):
        with pytest.raises(pydantic.ValidationError):
            MultiPovm(effects=[KET0, KET0])

    def test_multi_needs_two_outcomes(self):
        with pytest.raises(pydantic.ValidationError):
            MultiPovm(effects=[np.eye(2)])

    def test_random_povm(self, rng):
        povm = random_povm(3, 4, rng)
        assert povm.outcomes == 4
        assert povm.dim == 3
        assert np.allclose(sum(povm.effects), np.eye(3))


class TestPovmChannel:
    def test_direct_choi_matches_kraus_form(self, rng):
        # Arrange
        effect = random_povm(3, 2, rng).effects[0]
        povm = BinaryPovm(effect=effect)

        # Act
        direct = povm_choi(povm)
        via_kraus = kraus_to_choi(povm_to_channel(povm)).matrix

        # Assert
        assert np.allclose(direct, via_kraus, atol=1e-10)

    def test_diamond_identity_for_perfectly_distinguishable_effects(self):
        lhs, rhs = povm_diamond_identity(
            BinaryPovm(effect=KET0), BinaryPovm(effect=np.zeros((2, 2)))
        )
        assert rhs == pytest.approx(2.0)
        assert lhs == pytest.approx(2.0, abs=1e-5)

    def test_diamond_identity_random(self, rng):
        e = BinaryPovm(effect=random_povm(2, 2, rng).effects[0])
        f = BinaryPovm(effect=random_povm(2, 2, rng).effects[0])
        lhs, rhs = povm_diamond_identity(e, f)
        assert lhs == pytest.approx(rhs, abs=1e-5)

    def test_diamond_identity_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            povm_diamond_identity(BinaryPovm(effect=KET0), BinaryPovm(effect=np.eye(3) / 2))

    def test_extract_effect(self, rng):
        povm = BinaryPovm(effect=random_povm(2, 3, rng).effects[1])
        assert np.allclose(extract_povm_effect(povm_choi(povm), 2).effect, povm.effect)

    def test_extract_effect_shape(self):
        with pytest.raises(DimensionMismatchError):
            extract_povm_effect(np.eye(6) / 6, 2)


class TestRenormalize:
    def test_complete_effects_unchanged(self, rng):
        effects = random_povm(2, 3, rng).effects
        assert all(np.allclose(a, b) for a, b in zip(renormalize_effects(effects), effects))

    def test_small_residual_is_shared(self):
        effects = [np.diag([0.5, 0.5]), np.diag([0.45, 0.49])]
        fixed = renormalize_effects(effects)
        assert np.allclose(sum(fixed), np.eye(2))
        assert np.allclose(fixed[0], np.diag([0.525, 0.505]))

    def test_congruence_fallback(self):
        # Sharing the residual would make the third effect negative
        effects = [np.diag([0.0, 0.9]), np.diag([0.0, 0.9]), np.diag([1.0, 0.0])]
        fixed = renormalize_effects(effects)
        assert np.allclose(sum(fixed), np.eye(2))
        assert all(np.linalg.eigvalsh(e)[0] >= -1e-12 for e in fixed)


class TestLearning:
    def test_state_channel_rank(self):
        with pytest.raises(RankBoundError):
            state_channel(np.eye(2) / 2, 1)

    def test_learn_pure_state(self):
        # Arrange
        rho = np.full((2, 2), 0.5)

        # Act
        result = learn_state(rho, 1, 100_000, 0.2, stream())

        # Assert
        assert np.trace(result.estimate).real == pytest.approx(1.0, abs=1e-6)
        assert result.trace_distance < 0.05

    def test_learn_isometry(self, rng):
        v = Isometry(dims=DimPair(d_out=3, d_in=2), matrix=sample_haar_isometry(2, 3, rng))
        result = learn_isometry(v, 50_000, 0.2, stream(1))
        assert result.estimate.dims == v.dims
        assert result.diamond_error < 0.1

    def test_learn_binary_povm(self):
        povm = BinaryPovm(effect=np.diag([0.9, 0.2]))
        result = learn_binary_povm(povm, 5_000, 0.2, stream(2))
        assert result.opnorm_error < 0.5
        assert result.opnorm_error == pytest.approx(
            operator_norm(result.estimate.effect - povm.effect)
        )

    def test_binary_povm_regime(self):
        # d = 1 gives 4 d^2 = 4 and 4 exp(-4) > 0.05
        with pytest.raises(OutOfRegimeError):
            learn_binary_povm(BinaryPovm(effect=np.eye(1) / 2), 100, 0.05, stream())


class TestSampleComplexity:
    def test_povm_is_the_channel_count(self):
        povm = povm_sample_complexity(2, 0.6, 0.2)
        assert povm.d_tot == 16

    def test_elements_share_delta(self):
        single = povm_sample_complexity(2, 0.6, 0.2).n
        shared = povm_sample_complexity(2, 0.6, 0.2, elements=4).n
        assert shared > single

    def test_needs_an_element(self):
        with pytest.raises(PreconditionError):
            povm_sample_complexity(2, 0.6, 0.2, elements=0)

    def test_state_and_isometry(self):
        assert state_sample_complexity(4, 1, 0.6, 0.2).d_tot == 4
        assert isometry_sample_complexity(2, 3, 0.6, 0.2).d_tot == 6


class TestLearningInvariants:
    @pytest.mark.parametrize("stream_id", [3, 4, 5])
    def test_state_distance_is_half_the_diamond_error(self, stream_id: int) -> None:
        # Arrange
        u = sample_haar_unitary(3, np.random.default_rng(stream_id))
        rho = u @ np.diag([0.7, 0.3, 0.0]) @ u.conj().T

        # Act
        result = learn_state(rho, 2, 50_000, 0.2, stream(stream_id))

        # Assert
        assert result.trace_distance == pytest.approx(
            result.record.diamond_error_final / 2, abs=1e-8
        )

    def test_state_estimate_is_a_density_operator(self) -> None:
        rho = np.diag([0.5, 0.5, 0.0])
        estimate = learn_state(rho, 2, 2_000, 0.2, stream(6)).estimate
        assert np.linalg.eigvalsh(estimate)[0] >= -1e-10
        assert np.trace(estimate).real == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    @pytest.mark.parametrize("scale", [0.02, 0.2])
    def test_clipping_never_increases_the_opnorm_error(self, seed: int, scale: float) -> None:
        # Arrange
        rng = np.random.default_rng(seed)
        povm = BinaryPovm(effect=random_povm(2, 2, rng).effects[0])
        noisy = povm_choi(povm) + random_hermitian(4, rng, scale=scale)
        block = 2 * noisy[:2, :2].T
        unclipped = (block + block.conj().T) / 2

        # Act
        clipped = extract_povm_effect(noisy, 2).effect

        # Assert
        assert operator_norm(clipped - povm.effect) <= (
            operator_norm(unclipped - povm.effect) + 1e-12
        )

    def test_rank_one_choi_passes_through_kraus_unchanged(self, rng) -> None:
        # Arrange
        v = sample_haar_isometry(2, 3, rng)
        j = kraus_to_choi(KrausChannel(dims=DimPair(d_out=3, d_in=2), kraus_ops=[v]))

        # Act
        channel = choi_to_kraus(j)

        # Assert
        assert len(channel.kraus_ops) == 1
        assert np.allclose(kraus_to_choi(channel).matrix, j.matrix, atol=1e-12)

    def test_single_environment_purification_draws_nothing(self, rng) -> None:
        v = sample_haar_isometry(2, 3, rng)
        j = kraus_to_choi(KrausChannel(dims=DimPair(d_out=3, d_in=2), kraus_ops=[v]))
        before = rng.bit_generator.state

        psi = purify_choi(j, 1, rng)

        assert rng.bit_generator.state == before
        assert np.allclose(reduce_environment(psi, j.dims, 1), j.matrix, atol=1e-12)
