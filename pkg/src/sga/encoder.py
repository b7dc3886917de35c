"""Multi-head attention over syntax graphs, stacked into encoder blocks.

The attention score between characters i and j adds pair-specific relation
biases to the content vectors before the query/key projections:

    s_ij = (x_i + fwd_ij) Wq^T Wk (x_j + bwd_ij)

which expands into four addressing terms -- pure content, a forward
relation bias, a backward relation bias, and a relation-only term --
exposed separately by `syntax_score_terms` for diagnostics. With zero
relation biases the score reduces exactly to the plain dot-product
attention, and the whole encoder reduces to a plain transformer encoder;
`baseline_forward` runs that reference path on the same parameters.

Blocks are post-norm: sublayer, residual add, then normalization. Forward
passes over frozen parameters are pure and may run concurrently across
sentences; a training step is single-writer over its parameter set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .autodiff import (
    Parameter,
    Tensor,
    add,
    concat_last,
    div_scalar,
    glorot_uniform,
    layer_norm,
    lift,
    matmul,
    mul,
    relu,
    reshape,
    softmax,
    sum_last,
    take_rows,
    transpose,
)
from .errors import CoverageError, ShapeError, VocabError
from .relation import RelationTensor

LAYER_NORM_EPS = 1e-6


@dataclass
class AttentionHeadParams:
    """Query/key/value projections plus this head's relation split matrix."""

    w_q: Parameter  # (d_head, d_model)
    w_k: Parameter  # (d_head, d_model)
    w_v: Parameter  # (d_head, d_model)
    w_r: Parameter  # (2 * d_model, 2 * d_h)

    @classmethod
    def create(cls, prefix, d_model, d_head, d_h, rng) -> "AttentionHeadParams":
        return cls(
            w_q=Parameter(f"{prefix}.w_q", glorot_uniform(rng, d_head, d_model)),
            w_k=Parameter(f"{prefix}.w_k", glorot_uniform(rng, d_head, d_model)),
            w_v=Parameter(f"{prefix}.w_v", glorot_uniform(rng, d_head, d_model)),
            w_r=Parameter(f"{prefix}.w_r", glorot_uniform(rng, 2 * d_model, 2 * d_h)),
        )

    @property
    def d_head(self) -> int:
        return self.w_q.data.shape[0]

    @property
    def d_model(self) -> int:
        return self.w_q.data.shape[1]

    def parameters(self) -> list[Parameter]:
        return [self.w_q, self.w_k, self.w_v, self.w_r]


@dataclass
class EncoderBlockParams:
    heads: tuple[AttentionHeadParams, ...]
    w_o: Parameter  # (d_model, d_model)
    ffn_w1: Parameter  # (d_ff, d_model)
    ffn_b1: Parameter
    ffn_w2: Parameter  # (d_model, d_ff)
    ffn_b2: Parameter
    norm1_gain: Parameter
    norm1_bias: Parameter
    norm2_gain: Parameter
    norm2_bias: Parameter

    @classmethod
    def create(cls, prefix, d_model, num_heads, d_ff, d_h, rng) -> "EncoderBlockParams":
        if d_model % num_heads != 0:
            raise ValueError(f"d_model {d_model} not divisible by {num_heads} heads")
        d_head = d_model // num_heads
        heads = tuple(
            AttentionHeadParams.create(f"{prefix}.head{h}", d_model, d_head, d_h, rng)
            for h in range(num_heads)
        )
        return cls(
            heads=heads,
            w_o=Parameter(f"{prefix}.w_o", glorot_uniform(rng, d_model, d_model)),
            ffn_w1=Parameter(f"{prefix}.ffn_w1", glorot_uniform(rng, d_ff, d_model)),
            ffn_b1=Parameter(f"{prefix}.ffn_b1", np.zeros(d_ff)),
            ffn_w2=Parameter(f"{prefix}.ffn_w2", glorot_uniform(rng, d_model, d_ff)),
            ffn_b2=Parameter(f"{prefix}.ffn_b2", np.zeros(d_model)),
            norm1_gain=Parameter(f"{prefix}.norm1_gain", np.ones(d_model)),
            norm1_bias=Parameter(f"{prefix}.norm1_bias", np.zeros(d_model)),
            norm2_gain=Parameter(f"{prefix}.norm2_gain", np.ones(d_model)),
            norm2_bias=Parameter(f"{prefix}.norm2_bias", np.zeros(d_model)),
        )

    @property
    def d_model(self) -> int:
        return self.w_o.data.shape[0]

    def parameters(self) -> list[Parameter]:
        out: list[Parameter] = []
        for head in self.heads:
            out.extend(head.parameters())
        out.extend([
            self.w_o, self.ffn_w1, self.ffn_b1, self.ffn_w2, self.ffn_b2,
            self.norm1_gain, self.norm1_bias, self.norm2_gain, self.norm2_bias,
        ])
        return out


@dataclass
class EncoderStackParams:
    blocks: tuple[EncoderBlockParams, ...]
    char_embedding: Parameter  # (vocab, d_model)
    use_positions: bool

    @classmethod
    def create(
        cls,
        char_vocab_size: int,
        d_model: int,
        num_heads: int,
        d_ff: int,
        d_h: int,
        n_blocks: int,
        rng: np.random.Generator,
        use_positions: bool = True,
        prefix: str = "enc",
    ) -> "EncoderStackParams":
        embedding = Parameter(
            f"{prefix}.char_embedding", glorot_uniform(rng, char_vocab_size, d_model)
        )
        blocks = tuple(
            EncoderBlockParams.create(f"{prefix}.block{b}", d_model, num_heads, d_ff, d_h, rng)
            for b in range(n_blocks)
        )
        return cls(blocks=blocks, char_embedding=embedding, use_positions=use_positions)

    @property
    def d_model(self) -> int:
        return self.char_embedding.data.shape[1]

    def parameters(self) -> list[Parameter]:
        out = [self.char_embedding]
        for block in self.blocks:
            out.extend(block.parameters())
        return out


@dataclass
class AttentionMap:
    """Scores and row-normalized weights for one block/head."""

    block: int
    head: int
    scores: np.ndarray
    weights: np.ndarray


# ---------------------------------------------------------------------------
# Per-pair reference scores (diagnostics and test oracles)
# ---------------------------------------------------------------------------


def _check_vector(name, v, dim):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (dim,):
        raise ShapeError(f"{name} has shape {v.shape}, expected ({dim},)")
    return v


def baseline_score(x_i, x_j, head: AttentionHeadParams) -> float:
    """Plain content score: query of x_i dotted with key of x_j."""
    d = head.d_model
    x_i = _check_vector("x_i", x_i, d)
    x_j = _check_vector("x_j", x_j, d)
    return float((head.w_q.data @ x_i) @ (head.w_k.data @ x_j))


def syntax_score(x_i, x_j, r_fwd, r_bwd, head: AttentionHeadParams) -> float:
    """Relation-biased score in factored form:
    (x_i + r_fwd) Wq^T Wk (x_j + r_bwd)."""
    d = head.d_model
    x_i = _check_vector("x_i", x_i, d)
    x_j = _check_vector("x_j", x_j, d)
    r_fwd = _check_vector("r_fwd", r_fwd, d)
    r_bwd = _check_vector("r_bwd", r_bwd, d)
    return float((head.w_q.data @ (x_i + r_fwd)) @ (head.w_k.data @ (x_j + r_bwd)))


def syntax_score_terms(
    x_i, x_j, r_fwd, r_bwd, head: AttentionHeadParams
) -> tuple[float, float, float, float]:
    """The four addressing terms whose sum equals the factored score:
    (content, forward bias, backward bias, relation-only)."""
    d = head.d_model
    x_i = _check_vector("x_i", x_i, d)
    x_j = _check_vector("x_j", x_j, d)
    r_fwd = _check_vector("r_fwd", r_fwd, d)
    r_bwd = _check_vector("r_bwd", r_bwd, d)
    q_x = head.w_q.data @ x_i
    q_r = head.w_q.data @ r_fwd
    k_x = head.w_k.data @ x_j
    k_r = head.w_k.data @ r_bwd
    return (
        float(q_x @ k_x),
        float(q_x @ k_r),
        float(q_r @ k_x),
        float(q_r @ k_r),
    )


def attention_weights(scores, d: int):
    """Row-wise softmax of scores / sqrt(d); each row sums to one."""
    if d <= 0:
        raise ValueError("scaling dimension must be positive")
    t = scores if isinstance(scores, Tensor) else Tensor(scores)
    if t.data.ndim != 2:
        raise ShapeError(f"scores must be a matrix, got shape {t.shape}")
    out = softmax(div_scalar(t, math.sqrt(d)))
    return out if isinstance(scores, Tensor) else out.data


# ---------------------------------------------------------------------------
# Vectorized layer and stack
# ---------------------------------------------------------------------------


def _pair_scores(
    x: Tensor, relations: Optional[RelationTensor], head: AttentionHeadParams
) -> Tensor:
    """All-pairs scores for one head as an (n, n) tensor.

    relations=None runs the content-only reference path; it feeds exact
    zero biases through the identical code so the reduction to plain
    attention is bit-for-bit.
    """
    n, d_model = x.data.shape
    if relations is None:
        r_fwd = Tensor(np.zeros((n, n, d_model)))
        r_bwd = Tensor(np.zeros((n, n, d_model)))
    else:
        r_fwd, r_bwd = relations.directional(head.w_r)
    rows = reshape(x, (n, 1, d_model))
    cols = reshape(x, (1, n, d_model))
    queries = matmul(add(rows, r_fwd), transpose(head.w_q))  # (n, n, d_head)
    keys = matmul(add(cols, r_bwd), transpose(head.w_k))
    return sum_last(mul(queries, keys))


def _check_relations(relations: RelationTensor, n: int) -> None:
    if relations.n != n:
        raise CoverageError(
            f"relation tensor covers {relations.n} characters, sequence has {n}"
        )
    if not relations.is_complete:
        raise CoverageError("relation tensor is missing entries for some pairs")


def _multi_head_attention(
    x: Tensor,
    relations: Optional[RelationTensor],
    block: EncoderBlockParams,
    block_index: int = 0,
    collect: Optional[list[AttentionMap]] = None,
) -> Tensor:
    head_outputs = []
    for h, head in enumerate(block.heads):
        scores = _pair_scores(x, relations, head)
        weights = attention_weights(scores, head.d_head)
        values = matmul(x, transpose(head.w_v))  # (n, d_head)
        head_outputs.append(matmul(weights, values))
        if collect is not None:
            collect.append(
                AttentionMap(
                    block=block_index,
                    head=h,
                    scores=scores.data.copy(),
                    weights=weights.data.copy(),
                )
            )
    return matmul(concat_last(head_outputs), transpose(block.w_o))


def graph_attention_layer(
    x, relations: RelationTensor, block: EncoderBlockParams
) -> Tensor:
    """One multi-head attention sublayer (no residual or normalization):
    relation-biased scores, row-softmax weights, per-head values,
    concatenation, output projection."""
    x = lift(x)
    _check_relations(relations, x.data.shape[0])
    return _multi_head_attention(x, relations, block)


def _block_forward(
    x: Tensor,
    relations: Optional[RelationTensor],
    block: EncoderBlockParams,
    block_index: int,
    collect: Optional[list[AttentionMap]],
) -> Tensor:
    attn = _multi_head_attention(x, relations, block, block_index, collect)
    x = layer_norm(add(x, attn), block.norm1_gain, block.norm1_bias, LAYER_NORM_EPS)
    hidden = relu(add(matmul(x, transpose(block.ffn_w1)), block.ffn_b1))
    ffn = add(matmul(hidden, transpose(block.ffn_w2)), block.ffn_b2)
    return layer_norm(add(x, ffn), block.norm2_gain, block.norm2_bias, LAYER_NORM_EPS)


def position_signal(n: int, d_model: int) -> np.ndarray:
    """Sinusoidal absolute-position signal, one row per position."""
    positions = np.arange(n, dtype=np.float64)[:, None]
    dims = np.arange(0, d_model, 2, dtype=np.float64)
    angles = positions / np.power(10000.0, dims / d_model)
    signal = np.zeros((n, d_model))
    signal[:, 0::2] = np.sin(angles)
    signal[:, 1::2] = np.cos(angles[:, : d_model // 2])
    return signal


def _embed(char_ids, stack: EncoderStackParams) -> Tensor:
    ids = np.asarray(char_ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("char_ids must be a non-empty 1-D sequence")
    vocab = stack.char_embedding.data.shape[0]
    bad = ids[(ids < 0) | (ids >= vocab)]
    if bad.size:
        raise VocabError(f"character id {int(bad[0])} outside vocabulary of {vocab}")
    x = take_rows(stack.char_embedding, ids)
    if stack.use_positions:
        x = add(x, Tensor(position_signal(ids.size, stack.d_model)))
    return x


def _forward(
    char_ids,
    relations: Optional[RelationTensor],
    stack: EncoderStackParams,
    collect_attention: bool,
):
    x = _embed(char_ids, stack)
    if relations is not None:
        _check_relations(relations, x.data.shape[0])
    maps: Optional[list[AttentionMap]] = [] if collect_attention else None
    for b, block in enumerate(stack.blocks):
        x = _block_forward(x, relations, block, b, maps)
    if collect_attention:
        return x, maps
    return x


def encoder_forward(
    char_ids,
    relations: RelationTensor,
    stack: EncoderStackParams,
    collect_attention: bool = False,
):
    """Embed characters (plus optional position signal) and apply every
    block: relation-biased attention, then feed-forward, each with residual
    and post-normalization. Returns the final (n, d_model) embeddings, and
    the per-block/head attention maps when requested."""
    return _forward(char_ids, relations, stack, collect_attention)


def baseline_forward(
    char_ids,
    stack: EncoderStackParams,
    collect_attention: bool = False,
):
    """Content-only reference encoder on the same parameters (no relation
    machinery anywhere in the pass)."""
    return _forward(char_ids, None, stack, collect_attention)
