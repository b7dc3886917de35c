"""Read dependency parses from CoNLL-U text and align characters to words.

Only the ID, FORM, HEAD and DEPREL columns are consumed. Multiword-token
ranges (``3-4``) and empty nodes (``5.1``) are skipped; enhanced dependency
graphs are out of scope. Parsing itself happens upstream -- this module
ingests its output.

All functions here are pure over immutable inputs and safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ParseError, StructureError

DEFAULT_MAX_CHARS = 400


@dataclass(frozen=True)
class Edge:
    head: int
    dependent: int
    label: str


@dataclass(frozen=True)
class DependencyTree:
    """Words of one sentence (1-based indices) plus labeled head->dependent edges."""

    forms: tuple[str, ...]
    edges: tuple[Edge, ...]
    root_index: int

    @property
    def n(self) -> int:
        return len(self.forms)

    def form(self, index: int) -> str:
        return self.forms[index - 1]

    def head_of(self, index: int) -> Optional[Edge]:
        for edge in self.edges:
            if edge.dependent == index:
                return edge
        return None


@dataclass(frozen=True)
class CharAlignment:
    """Characters of the rendered sentence mapped back to word indices.

    `char_to_word[k]` is the 1-based word index owning character k, or None
    for inter-word separator characters.
    """

    chars: str
    char_to_word: tuple[Optional[int], ...]

    @property
    def word_chars(self) -> tuple[tuple[str, int], ...]:
        """(character, word index) pairs excluding separators -- the
        positions that become attention nodes."""
        return tuple(
            (c, w) for c, w in zip(self.chars, self.char_to_word) if w is not None
        )


def _is_token_id(field: str) -> bool:
    # Plain token ids are integers; ranges like 3-4 and empty nodes like
    # 5.1 carry no tree structure of their own.
    return field.isdigit()


def _finish_sentence(rows, sent_index: int, first_line: int) -> DependencyTree:
    ident = f"sentence {sent_index} (starting at line {first_line})"
    forms = tuple(form for _, form, _, _ in rows)
    n = len(forms)
    roots = [tid for tid, _, head, _ in rows if head == 0]
    if len(roots) != 1:
        raise StructureError(
            f"{ident}: expected exactly one root token, found {len(roots)}"
        )
    edges = []
    for tid, _, head, deprel in rows:
        if head == tid:
            raise StructureError(f"{ident}: token {tid} is its own head")
        if head > n or head < 0:
            raise StructureError(f"{ident}: token {tid} has head {head} out of range")
        if head != 0:
            edges.append(Edge(head=head, dependent=tid, label=deprel))
    tree = DependencyTree(forms=forms, edges=tuple(edges), root_index=roots[0])

    # Reject cycles / disconnected parses: every word must hang off the root.
    children: dict[int, list[int]] = {}
    for edge in tree.edges:
        children.setdefault(edge.head, []).append(edge.dependent)
    seen = {tree.root_index}
    frontier = [tree.root_index]
    while frontier:
        node = frontier.pop()
        for child in children.get(node, ()):
            if child in seen:
                raise StructureError(f"{ident}: cycle through token {child}")
            seen.add(child)
            frontier.append(child)
    if len(seen) != n:
        raise StructureError(
            f"{ident}: {n - len(seen)} token(s) unreachable from the root (cycle)"
        )
    return tree


def read_conllu(text: str) -> list[DependencyTree]:
    """Parse CoNLL-U text into one DependencyTree per sentence.

    Sentences are blank-line separated; comment lines start with '#'.
    Token lines must carry 10 tab-separated columns with integer HEAD and
    non-empty DEPREL. Errors name the offending line or sentence.
    """
    trees: list[DependencyTree] = []
    rows: list[tuple[int, str, int, str]] = []
    first_line = 0

    def finish():
        nonlocal rows
        if rows:
            expected = list(range(1, len(rows) + 1))
            if [r[0] for r in rows] != expected:
                raise StructureError(
                    f"sentence {len(trees) + 1} (starting at line {first_line}): "
                    f"token ids are not 1..{len(rows)}"
                )
            trees.append(_finish_sentence(rows, len(trees) + 1, first_line))
            rows = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            finish()
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(
                f"expected 10 tab-separated columns, found {len(cols)}", line=lineno
            )
        token_id, form, head, deprel = cols[0], cols[1], cols[6], cols[7]
        if not _is_token_id(token_id):
            continue  # multiword range or empty node
        if not rows:
            first_line = lineno
        if head in ("", "_"):
            raise ParseError("missing HEAD field", line=lineno)
        if not head.lstrip("-").isdigit():
            raise ParseError(f"HEAD is not an integer: {head!r}", line=lineno)
        if deprel in ("", "_"):
            raise ParseError("missing DEPREL field", line=lineno)
        if not form:
            raise ParseError("empty FORM field", line=lineno)
        rows.append((int(token_id), form, int(head), deprel))
    finish()
    return trees


def to_conllu(tree: DependencyTree) -> str:
    """Serialize the columns this package consumes (ID, FORM, HEAD, DEPREL)."""
    head_of = {e.dependent: e for e in tree.edges}
    lines = []
    for i, form in enumerate(tree.forms, start=1):
        edge = head_of.get(i)
        head = 0 if edge is None else edge.head
        deprel = "root" if edge is None else edge.label
        lines.append(f"{i}\t{form}\t_\t_\t_\t_\t{head}\t{deprel}\t_\t_")
    return "\n".join(lines) + "\n"


def align_characters(
    tree: DependencyTree,
    separator: str = " ",
    max_chars: int = DEFAULT_MAX_CHARS,
) -> CharAlignment:
    """Render the sentence (words joined by `separator`) and map every
    character position back to its word; separator positions map to None."""
    if tree.n == 0:
        raise ValueError("cannot align an empty tree")
    rendered = separator.join(tree.forms)
    if len(rendered) > max_chars:
        raise ValueError(
            f"rendered sentence has {len(rendered)} characters, exceeding the "
            f"configured maximum of {max_chars}"
        )
    mapping: list[Optional[int]] = []
    for i, form in enumerate(tree.forms, start=1):
        if i > 1:
            mapping.extend([None] * len(separator))
        mapping.extend([i] * len(form))
    return CharAlignment(chars=rendered, char_to_word=tuple(mapping))
