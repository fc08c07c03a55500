"""Deterministic tokenization, vocabulary management and clause segmentation.

Everything in this module is pure and immutable after construction, so all
of it is safe for unrestricted concurrent use.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyInput

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1

# Punctuation marks detached as their own tokens.
SPLIT_PUNCT = ".,;:!?—"
# Subset that closes a clause (boundary opens after these).
CLAUSE_PUNCT = frozenset({",", ";", ":", "."})
# Coordinators that open a clause (boundary opens before these).
DEFAULT_CONJUNCTIONS = frozenset({"and", "but", "or", "because", "so"})

_CHUNK_RE = re.compile(r"\S+")
_PIECE_RE = re.compile("[%s]|[^%s]+" % (re.escape(SPLIT_PUNCT), re.escape(SPLIT_PUNCT)))


def tokenize_spans(text: str) -> list[tuple[str, int, int]]:
    """Tokenize ``text`` keeping character offsets into the original string.

    Returns a list of ``(token, start, end)`` triples where
    ``text[start:end]`` is the raw surface the (casefolded) token came from.
    Splits on whitespace, then detaches each punctuation mark in
    ``SPLIT_PUNCT`` as its own token.
    """
    out: list[tuple[str, int, int]] = []
    for chunk in _CHUNK_RE.finditer(text):
        base = chunk.start()
        for piece in _PIECE_RE.finditer(chunk.group()):
            out.append((piece.group().casefold(), base + piece.start(), base + piece.end()))
    return out


def tokenize(text: str) -> list[str]:
    """Lowercase and split ``text`` into word/punctuation tokens.

    Empty input yields an empty list.
    """
    return [tok for tok, _, _ in tokenize_spans(text)]


@dataclass(frozen=True)
class Vocab:
    """Token <-> id bijection with reserved PAD (0) and UNK (1) entries."""

    token_of: tuple[str, ...]
    id_of: dict[str, int] = field(repr=False)
    min_count: int = 1

    @property
    def size(self) -> int:
        return len(self.token_of)

    def lookup(self, token: str) -> int:
        return self.id_of.get(token, UNK_ID)


def build_vocab(corpus: Iterable[Sequence[str]], min_count: int = 1) -> Vocab:
    """Build a vocabulary over ``corpus`` keeping tokens seen >= ``min_count`` times.

    Ids are assigned by descending frequency, lexicographic tie-break, after
    the two reserved entries; the result is deterministic for identical input.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for seq in corpus:
        counts.update(seq)
    tokens = [PAD_TOKEN, UNK_TOKEN]
    for tok, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        if counts[tok] >= min_count and tok not in (PAD_TOKEN, UNK_TOKEN):
            tokens.append(tok)
    return Vocab(token_of=tuple(tokens), id_of={t: i for i, t in enumerate(tokens)}, min_count=min_count)


def encode_ids(tokens: Sequence[str], vocab: Vocab) -> list[int]:
    """Map tokens to ids; out-of-vocabulary tokens map to UNK."""
    return [vocab.lookup(t) for t in tokens]


@dataclass(frozen=True)
class Clause:
    """A contiguous run of tokens; ``source_span`` is a half-open token range."""

    tokens: tuple[str, ...]
    source_span: tuple[int, int]

    def text(self) -> str:
        return " ".join(self.tokens)


def segment_clauses(
    tokens: Sequence[str],
    conjunctions: frozenset[str] | set[str] = DEFAULT_CONJUNCTIONS,
) -> list[Clause]:
    """Split a token sequence into clauses.

    A boundary opens after each of ``, ; : .`` (punctuation stays attached to
    the preceding clause) and before each conjunction that is not the first
    token.  Clause spans partition the input; no clause is empty.
    """
    if not tokens:
        raise EmptyInput("cannot segment an empty token sequence")
    n = len(tokens)
    boundaries = set()
    for i in range(1, n):
        if tokens[i - 1] in CLAUSE_PUNCT:
            boundaries.add(i)
        if tokens[i] in conjunctions:
            boundaries.add(i)
    cuts = [0] + sorted(boundaries) + [n]
    return [
        Clause(tokens=tuple(tokens[a:b]), source_span=(a, b))
        for a, b in zip(cuts, cuts[1:])
    ]
