"""Glue: vocabularies, per-sentence preparation, and the assembled model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .autodiff import Parameter
from .config import PipelineConfig
from .conllu import CharAlignment, DependencyTree, align_characters
from .encoder import EncoderStackParams, baseline_forward, encoder_forward
from .relation import LabelVocab, RelationEncoderParams, RelationTensor
from .syntax_graph import (
    CharRelationMap,
    SyntaxGraph,
    build_syntax_graph,
    expand_to_characters,
)


def build_char_vocab(trees: Sequence[DependencyTree]) -> dict[str, int]:
    """Dense id per distinct word character across the corpus (sorted)."""
    chars = sorted({c for tree in trees for form in tree.forms for c in form})
    if not chars:
        raise ValueError("cannot build a character vocabulary from no trees")
    return {c: i for i, c in enumerate(chars)}


@dataclass
class Sentence:
    """Structure derived from one parse, independent of any parameters."""

    tree: DependencyTree
    alignment: CharAlignment
    graph: SyntaxGraph
    char_map: CharRelationMap
    char_ids: np.ndarray
    chars: tuple[str, ...]

    @classmethod
    def prepare(
        cls,
        tree: DependencyTree,
        char_vocab: dict[str, int],
        max_chars: int = 400,
    ) -> "Sentence":
        alignment = align_characters(tree, max_chars=max_chars)
        graph = build_syntax_graph(tree)
        char_map = expand_to_characters(graph, alignment)
        word_chars = alignment.word_chars
        missing = [c for c, _ in word_chars if c not in char_vocab]
        if missing:
            raise ValueError(
                f"characters {sorted(set(missing))!r} missing from the vocabulary"
            )
        ids = np.asarray([char_vocab[c] for c, _ in word_chars], dtype=np.int64)
        return cls(
            tree=tree,
            alignment=alignment,
            graph=graph,
            char_map=char_map,
            char_ids=ids,
            chars=tuple(c for c, _ in word_chars),
        )

    @property
    def n_chars(self) -> int:
        return int(self.char_ids.size)


@dataclass
class Model:
    """Relation encoder plus graph encoder over shared vocabularies."""

    config: PipelineConfig
    char_vocab: dict[str, int]
    label_vocab: LabelVocab
    relation: RelationEncoderParams
    stack: EncoderStackParams

    @classmethod
    def create(
        cls,
        config: PipelineConfig,
        trees: Sequence[DependencyTree],
        seed: Optional[int] = None,
    ) -> "Model":
        char_vocab = build_char_vocab(trees)
        graphs = [build_syntax_graph(tree) for tree in trees]
        label_vocab = LabelVocab.build(graphs)
        rng = np.random.default_rng(config.seed if seed is None else seed)
        relation = RelationEncoderParams.create(
            len(label_vocab), config.d_e, config.d_h, rng
        )
        stack = EncoderStackParams.create(
            char_vocab_size=len(char_vocab),
            d_model=config.d_model,
            num_heads=config.heads,
            d_ff=config.d_ff,
            d_h=config.d_h,
            n_blocks=config.n_blocks,
            rng=rng,
            use_positions=config.use_positions,
        )
        return cls(
            config=config,
            char_vocab=char_vocab,
            label_vocab=label_vocab,
            relation=relation,
            stack=stack,
        )

    def parameters(self) -> list[Parameter]:
        return self.relation.parameters() + self.stack.parameters()

    def prepare(self, tree: DependencyTree) -> Sentence:
        return Sentence.prepare(tree, self.char_vocab, self.config.max_chars)

    def encode_relations(self, sentence: Sentence) -> RelationTensor:
        return RelationTensor.from_char_map(
            sentence.char_map, self.relation, self.label_vocab
        )

    def forward(
        self,
        sentence: Sentence,
        collect_attention: bool = False,
        zero_relations: bool = False,
        baseline: bool = False,
    ):
        """Run the encoder on one prepared sentence.

        `baseline` skips the relation machinery entirely; `zero_relations`
        runs it but with all-zero encodings (the two agree bit for bit).
        """
        if baseline:
            return baseline_forward(sentence.char_ids, self.stack, collect_attention)
        relations = self.encode_relations(sentence)
        if zero_relations:
            relations = relations.zeroed()
        return encoder_forward(
            sentence.char_ids, relations, self.stack, collect_attention
        )
