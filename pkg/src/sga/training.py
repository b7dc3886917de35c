"""Toy training: Adam, deterministic pseudo-targets, and an overfitting loop.

The objective is synthetic on purpose: each character gets a fixed target
vector derived from a hash of its word and offset, and a linear head on top
of the encoder regresses onto it. This demonstrates that gradients flow end
to end through the relation encoder and the attention stack; it involves no
audio or external data.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autodiff import (
    Parameter,
    Tensor,
    add,
    backward,
    glorot_uniform,
    matmul,
    mean_all,
    mul,
    sub,
    transpose,
    zero_gradients,
)
from .pipeline import Model, Sentence

DEFAULT_TARGET_DIM = 4


@dataclass
class Adam:
    """Adam with bias correction; defaults match the transformer recipe."""

    params: list[Parameter]
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9
    step_count: int = 0
    _m: dict = field(default_factory=dict)
    _v: dict = field(default_factory=dict)

    def __post_init__(self):
        for p in self.params:
            self._m[p.name] = np.zeros_like(p.data)
            self._v[p.name] = np.zeros_like(p.data)

    def step(self, lr: Optional[float] = None):
        rate = self.lr if lr is None else lr
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        correct1 = 1.0 - b1 ** self.step_count
        correct2 = 1.0 - b2 ** self.step_count
        for p in self.params:
            g = p.grad
            m = self._m[p.name]
            v = self._v[p.name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = (m / correct1) / (np.sqrt(v / correct2) + self.eps)
            p.assign(p.data - rate * update)

    def zero_grad(self):
        zero_gradients(self.params)


def warmup_lr(step: int, d_model: int, warmup_steps: int) -> float:
    """Inverse-sqrt schedule with linear warmup."""
    step = max(step, 1)
    return (d_model ** -0.5) * min(step ** -0.5, step * warmup_steps ** -1.5)


def pseudo_targets(sentence: Sentence, dim: int = DEFAULT_TARGET_DIM) -> np.ndarray:
    """Per-character target vectors in [-1, 1], derived from a stable hash
    of (word form, offset within word); identical across runs and platforms."""
    targets = np.zeros((sentence.n_chars, dim))
    word_chars = sentence.alignment.word_chars
    offsets: dict[int, int] = {}
    for row, (_, word_idx) in enumerate(word_chars):
        offset = offsets.get(word_idx, 0)
        offsets[word_idx] = offset + 1
        form = sentence.tree.form(word_idx)
        digest = hashlib.sha256(f"{form}|{offset}".encode("utf-8")).digest()
        for k in range(dim):
            chunk = digest[(4 * k) % 28 : (4 * k) % 28 + 4]
            value = int.from_bytes(chunk, "little") / 0xFFFFFFFF
            targets[row, k] = 2.0 * value - 1.0
    return targets


@dataclass
class RegressionHead:
    w: Parameter
    b: Parameter

    @classmethod
    def create(cls, d_model: int, target_dim: int, rng: np.random.Generator):
        return cls(
            w=Parameter("head.w", glorot_uniform(rng, target_dim, d_model)),
            b=Parameter("head.b", np.zeros(target_dim)),
        )

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]

    def __call__(self, x: Tensor) -> Tensor:
        return add(matmul(x, transpose(self.w)), self.b)


def sentence_loss(model: Model, head: RegressionHead, sentence: Sentence,
                  targets: np.ndarray) -> Tensor:
    predicted = head(model.forward(sentence))
    diff = sub(predicted, Tensor(targets))
    return mean_all(mul(diff, diff))


def toy_train(
    model: Model,
    sentences: Sequence[Sentence],
    epochs: int,
    lr: float = 1e-2,
    warmup_steps: Optional[int] = None,
    target_dim: int = DEFAULT_TARGET_DIM,
) -> list[float]:
    """Overfit the encoder plus a linear head onto the pseudo-targets.

    Returns one loss per row of the loss curve: index 0 is the initial
    full-corpus loss before any update, index e > 0 the mean per-step
    training loss during epoch e. Deterministic for a fixed model seed.
    """
    if not sentences:
        raise ValueError("toy training needs a non-empty corpus")
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    head = RegressionHead.create(
        model.config.d_model, target_dim, np.random.default_rng(model.config.seed + 1)
    )
    params = model.parameters() + head.parameters()
    optimizer = Adam(params, lr=lr)
    all_targets = [pseudo_targets(s, target_dim) for s in sentences]

    initial = sum(
        sentence_loss(model, head, s, t).item()
        for s, t in zip(sentences, all_targets)
    ) / len(sentences)
    curve = [initial]

    step = 0
    for _ in range(epochs):
        epoch_total = 0.0
        for sentence, targets in zip(sentences, all_targets):
            optimizer.zero_grad()
            loss = sentence_loss(model, head, sentence, targets)
            epoch_total += loss.item()
            backward(loss)
            step += 1
            rate = (
                warmup_lr(step, model.config.d_model, warmup_steps)
                if warmup_steps
                else None
            )
            optimizer.step(lr=rate)
        curve.append(epoch_total / len(sentences))
    return curve


def write_loss_curve(path, curve: Sequence[float]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(curve):
            fh.write(f"{epoch},{loss!r}\n")
