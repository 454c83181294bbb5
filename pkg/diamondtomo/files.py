# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Channel and POVM documents.

Both are JSON documents whose matrices are nested arrays of `[re, im]`
pairs, row by row::

    {"d_in": 1, "d_out": 2, "kind": "kraus",
     "kraus": [[[[1, 0]], [[0, 0]]]]}
"""
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pydantic
import structlog
from pydantic import root_validator

from .applications import BinaryPovm
from .applications import MultiPovm
from .channels import ChoiOperator
from .channels import kraus_to_choi
from .channels import KrausChannel
from .config import NOT_CP_TOL
from .config import TP_TOL
from .operators import as_hermitian
from .operators import DimPair

logger = structlog.get_logger()

MatrixPayload = list[list[tuple[float, float]]]


class ChannelKind(str, Enum):
    KRAUS = "kraus"
    CHOI = "choi"


class ChannelDocument(pydantic.BaseModel):
    d_in: pydantic.PositiveInt
    d_out: pydantic.PositiveInt
    kind: ChannelKind
    kraus: list[MatrixPayload] | None = None
    choi: MatrixPayload | None = None

    @root_validator(skip_on_failure=True)
    def payload_matches_kind(cls, values):
        kind = values["kind"]
        if kind is ChannelKind.KRAUS and not values.get("kraus"):
            raise ValueError("kind 'kraus' needs a non-empty 'kraus' payload")
        if kind is ChannelKind.CHOI and values.get("choi") is None:
            raise ValueError("kind 'choi' needs a 'choi' payload")
        return values


class PovmDocument(pydantic.BaseModel):
    dim: pydantic.PositiveInt
    effects: list[MatrixPayload]


class LoadedChannel(NamedTuple):
    dims: DimPair
    choi: np.ndarray
    channel: KrausChannel | None
    rescaled: bool


def decode_matrix(payload: MatrixPayload) -> np.ndarray:
    pairs = np.asarray(payload, dtype=np.float64)
    if pairs.ndim != 3 or pairs.shape[-1] != 2:
        raise ValueError(f"matrix payload of shape {pairs.shape} is not rows of [re, im]")
    return pairs[..., 0] + 1j * pairs[..., 1]


def encode_matrix(m: np.ndarray) -> MatrixPayload:
    m = np.asarray(m, dtype=np.complex128)
    return [[(float(z.real), float(z.imag)) for z in row] for row in m]


def load_channel(path: Path) -> LoadedChannel:
    document = ChannelDocument.parse_file(path)
    dims = DimPair(d_out=document.d_out, d_in=document.d_in)

    if document.kind is ChannelKind.KRAUS:
        channel = KrausChannel(
            dims=dims, kraus_ops=[decode_matrix(k) for k in document.kraus or []]
        )
        return LoadedChannel(dims, kraus_to_choi(channel).matrix, channel, False)

    choi = ChoiOperator(dims=dims, matrix=decode_matrix(document.choi or [])).matrix
    trace = float(np.real(np.trace(choi)))
    positive = np.linalg.eigvalsh(choi)[0] >= NOT_CP_TOL
    if positive and trace > TP_TOL and abs(trace - 1.0) > TP_TOL:
        logger.warning("Rescaling unnormalised Choi operator", path=str(path), trace=trace)
        return LoadedChannel(dims, choi / trace, None, True)
    return LoadedChannel(dims, choi, None, False)


def save_channel(path: Path, channel: KrausChannel | ChoiOperator) -> None:
    if isinstance(channel, KrausChannel):
        document = ChannelDocument(
            d_in=channel.dims.d_in,
            d_out=channel.dims.d_out,
            kind=ChannelKind.KRAUS,
            kraus=[encode_matrix(k) for k in channel.kraus_ops],
        )
    else:
        document = ChannelDocument(
            d_in=channel.dims.d_in,
            d_out=channel.dims.d_out,
            kind=ChannelKind.CHOI,
            choi=encode_matrix(channel.matrix),
        )
    path.write_text(document.json(exclude_none=True, indent=2))


def load_povm(path: Path) -> MultiPovm:
    document = PovmDocument.parse_file(path)
    effects = [np.asarray(as_hermitian(decode_matrix(e))) for e in document.effects]
    if len(effects) == 1:
        # A single effect E stands for the binary POVM {E, I - E}
        effects.append(np.eye(document.dim) - effects[0])
    for e in effects:
        if e.shape != (document.dim, document.dim):
            raise ValueError(f"effect of shape {e.shape} in a POVM of dim {document.dim}")
    return MultiPovm(effects=effects)


def save_povm(path: Path, povm: MultiPovm | BinaryPovm) -> None:
    effects = list(povm.elements) if isinstance(povm, BinaryPovm) else povm.effects
    document = PovmDocument(dim=effects[0].shape[0], effects=[encode_matrix(e) for e in effects])
    path.write_text(document.json(indent=2))
