"""Inference-time suggestion ranking.

Every response is scored as dot(message_embedding, reply_vector) plus an
alpha-weighted popularity term, the top n1 survive, near-duplicates are
merged by greedy token-set Jaccard clustering, intent diversity is forced
at the second pick, and the top n2 come back as suggestions.  All ties
break by ascending entry index, so outputs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encoder import MESSAGE, EncoderParams, encode
from .errors import EmptyInput
from .responseset import ResponseSet
from .textproc import Vocab, encode_ids, tokenize


@dataclass(frozen=True)
class RankConfig:
    alpha: float = 0.3
    n1: int = 30
    n2: int = 3
    jaccard_threshold: float = 0.5

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not self.n1 >= self.n2 >= 1:
            raise ValueError("need n1 >= n2 >= 1")
        if not 0.0 <= self.jaccard_threshold <= 1.0:
            raise ValueError("jaccard_threshold must lie in [0, 1]")


@dataclass(frozen=True)
class Suggestion:
    text: str
    score: float
    intent_id: int
    entry_index: int


def score_all(message_embedding: np.ndarray, rset: ResponseSet, alpha: float) -> np.ndarray:
    """score[k] = dot(m, v_k) + alpha * lm_score_k for every entry."""
    return rset.vectors @ message_embedding + alpha * rset.lm_scores


def top_n1(scores: np.ndarray, n1: int) -> list[int]:
    """Indices of the n1 highest scores, descending, lower index wins ties."""
    if n1 < 1:
        raise ValueError("n1 must be >= 1")
    scores = np.asarray(scores)
    order = np.lexsort((np.arange(len(scores)), -scores))
    return [int(i) for i in order[:n1]]


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 1.0


def lexical_dedup(candidates: Sequence[int], rset: ResponseSet, threshold: float) -> list[int]:
    """Greedy clustering in score order; returns cluster representatives.

    A candidate joins the first cluster whose representative's token set has
    Jaccard >= threshold with its own, else it founds a new cluster.  The
    representatives therefore sit pairwise below the threshold.
    """
    reps: list[int] = []
    rep_tokens: list[frozenset[str]] = []
    for idx in candidates:
        toks = frozenset(tokenize(rset.entries[idx].text))
        if not any(_jaccard(toks, seen) >= threshold for seen in rep_tokens):
            reps.append(idx)
            rep_tokens.append(toks)
    return reps


def diversify(reps: Sequence[int], rset: ResponseSet, n2: int) -> list[int]:
    """Down-select to n2 picks, forcing a second intent as soon as possible.

    While every pick so far shares one intent and a differently-intended
    representative remains, the next pick is the best-scored such
    representative; all other slots fill by score.  The result is returned
    in score order (the representatives' original order).
    """
    remaining = list(reps)
    picks: list[int] = []
    while remaining and len(picks) < n2:
        intents = {rset.entries[i].intent_id for i in picks}
        choice = remaining[0]
        if len(intents) == 1:
            other = next(
                (i for i in remaining if rset.entries[i].intent_id not in intents), None
            )
            if other is not None:
                choice = other
        picks.append(choice)
        remaining.remove(choice)
    rank = {idx: pos for pos, idx in enumerate(reps)}
    return sorted(picks, key=lambda i: rank[i])


def suggest(
    message_text: str,
    params: EncoderParams,
    vocab: Vocab,
    rset: ResponseSet,
    cfg: RankConfig = RankConfig(),
) -> list[Suggestion]:
    """Full pipeline: encode, score, pre-select, dedup, diversify."""
    tokens = tokenize(message_text)
    if not tokens:
        raise EmptyInput("message tokenizes to nothing")
    emb = encode(params, encode_ids(tokens, vocab), MESSAGE)
    scores = score_all(emb, rset, cfg.alpha)
    candidates = top_n1(scores, cfg.n1)
    reps = lexical_dedup(candidates, rset, cfg.jaccard_threshold)
    final = diversify(reps, rset, cfg.n2)
    return [
        Suggestion(
            text=rset.entries[i].text,
            score=float(scores[i]),
            intent_id=rset.entries[i].intent_id,
            entry_index=i,
        )
        for i in final
    ]
