"""Word-side and emoji-side input features.

The word side looks up pretrained vectors and runs two stacked bidirectional
LSTM layers, concatenating the embedding layer and both LSTM outputs along
the feature axis (a skip connection, so later stages see every level). The
emoji side adds a fixed sinusoidal positional encoding to each emoji's
embedding, using the emoji's absolute position in the original mixed token
stream.

Sequence features are stored time-major: shape (length, features).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import ShapeError
from .tokenization import Token
from .vectors import read_vector_table


class WordEmbeddingTable:
    """Immutable word -> vector map; unknown words read as zero vectors."""

    def __init__(self, ids, matrix):
        self._rows = {word: matrix[i] for i, word in enumerate(ids)}
        self.dimension = matrix.shape[1]

    def __len__(self):
        return len(self._rows)

    def __contains__(self, word):
        return word in self._rows

    def get(self, word) -> np.ndarray | None:
        return self._rows.get(word)

    def lookup(self, word) -> np.ndarray:
        vec = self._rows.get(word)
        return vec if vec is not None else np.zeros(self.dimension)

    @classmethod
    def load(cls, path) -> "WordEmbeddingTable":
        ids, matrix = read_vector_table(path)
        return cls(ids, matrix)


def positional_encoding(pos: int, d_model: int, base: float = 1000.0) -> np.ndarray:
    """Sinusoidal position vector: sin at even entries, cos at odd entries.

    Entry 2i is sin(pos / base^(2i / d_model)) and entry 2i+1 the matching
    cos. The default base of 1000 is deliberate; switch it via `base` if a
    different scale is wanted.
    """
    if d_model % 2 != 0:
        raise ValueError(f"d_model must be even, got {d_model}")
    if pos < 0:
        raise ValueError(f"pos must be >= 0, got {pos}")
    out = np.empty(d_model, dtype=np.float64)
    for i in range(d_model // 2):
        angle = pos / base ** (2 * i / d_model)
        out[2 * i] = math.sin(angle)
        out[2 * i + 1] = math.cos(angle)
    return out


@dataclass(frozen=True)
class EmojiInputFeatures:
    """Emoji embedding rows plus positional encodings, duplicates preserved."""

    features: np.ndarray  # N x d_model
    positions: tuple[int, ...]

    @property
    def count(self) -> int:
        return self.features.shape[0]


def emoji_input_features(emojis: list[Token], embeddings, base: float = 1000.0) -> EmojiInputFeatures:
    """Embedding-plus-position row per emoji token (zeros for unknown emojis).

    Posts without emojis yield an empty (0, d) matrix; the model layer swaps
    in its learned placeholder there so attention always has a context.
    """
    dim = embeddings.dimension
    rows = np.zeros((len(emojis), dim), dtype=np.float64)
    positions = []
    for k, token in enumerate(emojis):
        vec = embeddings.get(token.surface)
        if vec is not None:
            rows[k] = vec
        rows[k] += positional_encoding(token.position, dim, base)
        positions.append(token.position)
    return EmojiInputFeatures(features=rows, positions=tuple(positions))


@dataclass
class LstmDirectionParams:
    """Packed gate weights, order (input, forget, cell, output) along columns."""

    w_x: Tensor  # f_in x 4h
    w_h: Tensor  # h x 4h
    b: Tensor    # 4h

    @classmethod
    def create(cls, f_in: int, hidden: int, rng) -> "LstmDirectionParams":
        return cls(
            w_x=ad.parameter((f_in, 4 * hidden), rng),
            w_h=ad.parameter((hidden, 4 * hidden), rng),
            b=ad.zeros_parameter((4 * hidden,)),
        )

    def as_list(self):
        return [self.w_x, self.w_h, self.b]


@dataclass
class BiLstmParams:
    forward: LstmDirectionParams
    backward: LstmDirectionParams
    hidden: int

    @classmethod
    def create(cls, f_in: int, hidden: int, rng) -> "BiLstmParams":
        return cls(
            forward=LstmDirectionParams.create(f_in, hidden, rng),
            backward=LstmDirectionParams.create(f_in, hidden, rng),
            hidden=hidden,
        )

    def as_list(self):
        return self.forward.as_list() + self.backward.as_list()


def _run_direction(inputs: Tensor, params: LstmDirectionParams, hidden: int, reverse: bool) -> list[Tensor]:
    length = inputs.data.shape[0]
    h = Tensor(np.zeros((1, hidden)))
    c = Tensor(np.zeros((1, hidden)))
    order = range(length - 1, -1, -1) if reverse else range(length)
    outputs: list[Tensor | None] = [None] * length
    for t in order:
        x_t = inputs[t:t + 1]
        gates = ad.matmul(x_t, params.w_x) + ad.matmul(h, params.w_h) + params.b
        i_gate = ad.sigmoid(gates[:, 0 * hidden:1 * hidden])
        f_gate = ad.sigmoid(gates[:, 1 * hidden:2 * hidden])
        g_cell = ad.tanh(gates[:, 2 * hidden:3 * hidden])
        o_gate = ad.sigmoid(gates[:, 3 * hidden:4 * hidden])
        c = ad.mul(f_gate, c) + ad.mul(i_gate, g_cell)
        h = ad.mul(o_gate, ad.tanh(c))
        outputs[t] = h
    return outputs  # aligned with input positions in both directions


def bilstm_layer(inputs, params: BiLstmParams) -> Tensor:
    """Both directions from zero states; output row t is [h_fwd(t), h_bwd(t)]."""
    inputs = ad.as_tensor(inputs)
    if inputs.data.ndim != 2 or inputs.data.shape[0] == 0:
        raise ShapeError(f"bilstm_layer needs a nonempty (L, f) input, got shape {inputs.data.shape}")
    fwd = _run_direction(inputs, params.forward, params.hidden, reverse=False)
    bwd = _run_direction(inputs, params.backward, params.hidden, reverse=True)
    rows = [ad.concat([f, b], axis=1) for f, b in zip(fwd, bwd)]
    return ad.concat(rows, axis=0)


@dataclass
class TextEncoderParams:
    layer1: BiLstmParams
    layer2: BiLstmParams

    @classmethod
    def create(cls, word_dim: int, hidden: int, rng) -> "TextEncoderParams":
        return cls(
            layer1=BiLstmParams.create(word_dim, hidden, rng),
            layer2=BiLstmParams.create(2 * hidden, hidden, rng),
        )

    def as_list(self):
        return self.layer1.as_list() + self.layer2.as_list()


@dataclass
class EncodedText:
    """Skip-connected text features; `stacked` concatenates all three levels."""

    embeddings: Tensor  # L x word_dim
    lstm1: Tensor       # L x 2h
    lstm2: Tensor       # L x 2h
    stacked: Tensor     # L x (word_dim + 4h)

    @property
    def length(self) -> int:
        return self.embeddings.data.shape[0]


def encode_text(words: list[Token], table: WordEmbeddingTable, params: TextEncoderParams) -> EncodedText:
    """Embedding lookups, two stacked Bi-LSTM layers, and their concatenation."""
    if not words:
        raise ShapeError("encode_text needs at least one word token")
    x = Tensor(np.stack([table.lookup(t.surface) for t in words]))
    h1 = bilstm_layer(x, params.layer1)
    h2 = bilstm_layer(h1, params.layer2)
    stacked = ad.concat([x, h1, h2], axis=1)
    return EncodedText(embeddings=x, lstm1=h1, lstm2=h2, stacked=stacked)
