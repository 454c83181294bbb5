# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from ..channels import kraus_to_choi
from ..channels import KrausChannel
from ..config import DEFAULT_SEED
from ..files import encode_matrix
from ..haar import RngStream
from ..operators import DimPair


PAULI_Z = np.diag([1.0, -1.0]).astype(np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (g + g.conj().T) / 2
    return scale * h / np.linalg.norm(h)


@st.composite
def dim_pairs(draw, largest: int = 3) -> DimPair:
    return DimPair(
        d_out=draw(st.integers(1, largest)), d_in=draw(st.integers(1, largest))
    )


@st.composite
def hermitian_matrices(draw, max_dim: int = 4) -> np.ndarray:
    n = draw(st.integers(1, max_dim))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_hermitian(n, np.random.default_rng(seed), scale=draw(st.floats(0.1, 10)))


@pytest.fixture
def rng() -> np.random.Generator:
    return RngStream(seed=DEFAULT_SEED, stream_id=1).generator()


@pytest.fixture
def qubit_identity() -> KrausChannel:
    return KrausChannel.from_operators([np.eye(2)])


@pytest.fixture
def qubit_dephasing() -> KrausChannel:
    """Z applied with probability 1/4."""
    return KrausChannel.from_operators(
        [np.sqrt(0.75) * np.eye(2), np.sqrt(0.25) * PAULI_Z]
    )


def write_kraus_document(path: Path, channel: KrausChannel) -> Path:
    path.write_text(
        json.dumps(
            {
                "d_in": channel.dims.d_in,
                "d_out": channel.dims.d_out,
                "kind": "kraus",
                "kraus": [encode_matrix(k) for k in channel.kraus_ops],
            }
        )
    )
    return path


def write_choi_document(path: Path, dims: DimPair, matrix: np.ndarray) -> Path:
    path.write_text(
        json.dumps(
            {
                "d_in": dims.d_in,
                "d_out": dims.d_out,
                "kind": "choi",
                "choi": encode_matrix(matrix),
            }
        )
    )
    return path


@pytest.fixture
def channel_files(tmp_path: Path, qubit_identity: KrausChannel) -> dict[str, Path]:
    z = KrausChannel.from_operators([PAULI_Z])
    dims = qubit_identity.dims
    return {
        "identity": write_kraus_document(tmp_path / "identity.json", qubit_identity),
        "identity-copy": write_kraus_document(tmp_path / "identity-copy.json", qubit_identity),
        "z": write_kraus_document(tmp_path / "z.json", z),
        "zero": write_choi_document(
            tmp_path / "zero.json", dims, np.zeros((dims.choi_dim, dims.choi_dim))
        ),
        "identity-choi": write_choi_document(
            tmp_path / "identity-choi.json", dims, kraus_to_choi(qubit_identity).matrix
        ),
    }
