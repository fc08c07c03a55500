"""The precomputed response set: candidate replies, popularity scores, intents.

Replies are normalized (tokenize-then-join) so surface variants merge,
counted, frequency-filtered, embedded reply-side, and clustered into
intents.  The popularity term lm_score is the log relative frequency over
the kept entries, so exp(lm_score) sums to one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codeswitch import MRPair, SENTIMENTS
from .encoder import REPLY, EncoderParams, encode
from .errors import EmptyResponseSet, IntegrityError, TooFewPoints
from .provenance import fingerprint_text
from .textproc import Vocab, encode_ids, tokenize

RESPONSE_SET_VERSION = 1

INTENT_KMEANS = "kmeans"
INTENT_SENTIMENT = "sentiment"


@dataclass(frozen=True)
class ResponseEntry:
    text: str
    token_ids: tuple[int, ...]
    vector: np.ndarray  # unit-norm reply-side embedding
    count: int
    lm_score: float     # log(count / total over kept entries), <= 0
    intent_id: int


@dataclass(frozen=True)
class ResponseSet:
    entries: tuple[ResponseEntry, ...]
    built_from: str     # fingerprint of the source corpus content
    k_intents: int

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def vectors(self) -> np.ndarray:
        """(|R|, d_out) matrix of entry vectors; cached, treat as read-only."""
        return np.stack([e.vector for e in self.entries])

    @cached_property
    def lm_scores(self) -> np.ndarray:
        return np.array([e.lm_score for e in self.entries])

    @cached_property
    def _text_index(self) -> dict[str, int]:
        return {e.text: i for i, e in enumerate(self.entries)}

    def index_of(self, normalized_text: str) -> int | None:
        return self._text_index.get(normalized_text)


def _kmeans(
    vectors: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100
) -> tuple[np.ndarray, list[float]]:
    """Seeded k-means++ over unit vectors with mean-then-renormalize updates.

    Empty clusters are reseeded to the point farthest from its assigned
    center.  Returns (labels, per-iteration objective history); the
    objective is non-increasing across iterations.
    """
    n = vectors.shape[0]
    centers = np.empty((k, vectors.shape[1]))
    # k-means++ seeding
    first = int(rng.integers(n))
    centers[0] = vectors[first]
    d2 = np.sum((vectors - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = vectors[idx]
        d2 = np.minimum(d2, np.sum((vectors - centers[j]) ** 2, axis=1))

    sq = np.sum(vectors**2, axis=1)
    labels = np.full(n, -1, dtype=np.intp)
    history: list[float] = []
    for _ in range(max_iter):
        dist = np.maximum(
            sq[:, None] + np.sum(centers**2, axis=1)[None, :] - 2.0 * (vectors @ centers.T),
            0.0,
        )
        new_labels = dist.argmin(axis=1)
        for j in range(k):
            if not np.any(new_labels == j):
                far = int(np.argmax(dist[np.arange(n), new_labels]))
                centers[j] = vectors[far]
                new_labels[far] = j
        history.append(float(np.sum((vectors - centers[new_labels]) ** 2)))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = vectors[labels == j]
            if len(members) == 0:
                continue
            mean = members.mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm > 1e-12:
                centers[j] = mean / norm
    return labels, history


def assign_intents(vectors: np.ndarray, k: int, seed: int = 42) -> list[int]:
    """Cluster unit vectors into k intents; deterministic per seed."""
    if len(vectors) < k:
        raise TooFewPoints(f"{len(vectors)} vectors for {k} clusters")
    if k == 1:
        return [0] * len(vectors)
    labels, _ = _kmeans(np.asarray(vectors), k, np.random.default_rng(seed))
    return [int(x) for x in labels]


def _sentiment_intents(
    normalized: Sequence[str], votes: dict[str, dict[str, int]]
) -> tuple[list[int], int]:
    """Intent = majority sentiment of a reply's occurrences (ties break
    alphabetically; replies with no vote fall back to the corpus majority)."""
    label_of = {s: i for i, s in enumerate(SENTIMENTS)}
    overall: dict[str, int] = {}
    for tally in votes.values():
        for s, c in tally.items():
            overall[s] = overall.get(s, 0) + c
    if not overall:
        raise EmptyResponseSet("sentiment intents requested but no record carries a sentiment")
    fallback = min(overall, key=lambda s: (-overall[s], s))
    intents = []
    for text in normalized:
        tally = votes.get(text, {})
        winner = min(tally, key=lambda s: (-tally[s], s)) if tally else fallback
        intents.append(label_of[winner])
    return intents, len(SENTIMENTS)


def build_response_set(
    corpus: Iterable[MRPair],
    params: EncoderParams,
    vocab: Vocab,
    min_count: int = 1,
    max_size: int = 10000,
    k_intents: int = 8,
    seed: int = 42,
    intent_source: str = INTENT_KMEANS,
) -> ResponseSet:
    """Count, filter, embed and cluster the corpus replies into a ResponseSet.

    Keeps the ``max_size`` most frequent normalized replies seen at least
    ``min_count`` times (count desc, text asc); lm_score is computed over
    the kept set.  When fewer replies survive than ``k_intents``, the
    cluster count shrinks to match.  Deterministic for fixed inputs and
    seed.
    """
    if min_count < 1 or max_size < k_intents or k_intents < 1:
        raise ValueError("need min_count >= 1 and max_size >= k_intents >= 1")
    counts: dict[str, int] = {}
    votes: dict[str, dict[str, int]] = {}
    digest_parts: list[str] = []
    for pair in corpus:
        norm = " ".join(tokenize(pair.reply))
        counts[norm] = counts.get(norm, 0) + 1
        if pair.sentiment is not None:
            tally = votes.setdefault(norm, {})
            tally[pair.sentiment] = tally.get(pair.sentiment, 0) + 1
        digest_parts.append(json.dumps(pair.to_record(), ensure_ascii=False))
    built_from = fingerprint_text("\n".join(digest_parts))

    kept = sorted(
        ((t, c) for t, c in counts.items() if c >= min_count),
        key=lambda tc: (-tc[1], tc[0]),
    )[:max_size]
    if not kept:
        raise EmptyResponseSet("no reply met the frequency threshold")

    total = sum(c for _, c in kept)
    texts = [t for t, _ in kept]
    id_lists = [tuple(encode_ids(t.split(" "), vocab)) for t in texts]
    vectors = np.stack([encode(params, ids, REPLY) for ids in id_lists])

    if intent_source == INTENT_SENTIMENT:
        intents, k_eff = _sentiment_intents(texts, votes)
    elif intent_source == INTENT_KMEANS:
        k_eff = min(k_intents, len(texts))
        intents = assign_intents(vectors, k_eff, seed=seed)
    else:
        raise ValueError(f"unknown intent source {intent_source!r}")

    entries = tuple(
        ResponseEntry(
            text=texts[i],
            token_ids=id_lists[i],
            vector=vectors[i],
            count=kept[i][1],
            lm_score=float(np.log(kept[i][1] / total)),
            intent_id=intents[i],
        )
        for i in range(len(texts))
    )
    return ResponseSet(entries=entries, built_from=built_from, k_intents=k_eff)


# --- persistence -------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_response_set(path: str | Path, rset: ResponseSet, meta: dict | None = None) -> None:
    lines = ["{"]
    lines.append(f'  "version": {RESPONSE_SET_VERSION},')
    if meta is not None:
        lines.append(f'  "meta": {json.dumps(meta, ensure_ascii=False, sort_keys=True)},')
    lines.append(f'  "k_intents": {rset.k_intents},')
    lines.append(f'  "built_from": {json.dumps(rset.built_from)},')
    entry_lines = []
    for e in rset.entries:
        vec = "[" + ", ".join(_fmt(v) for v in e.vector) + "]"
        entry_lines.append(
            "    {"
            + f'"text": {json.dumps(e.text, ensure_ascii=False)}, '
            + f'"count": {e.count}, '
            + f'"lm_score": {_fmt(e.lm_score)}, '
            + f'"intent_id": {e.intent_id}, '
            + f'"vector": {vec}'
            + "}"
        )
    lines.append('  "entries": [\n' + ",\n".join(entry_lines) + "\n  ]")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_response_set(path: str | Path, vocab: Vocab | None = None) -> ResponseSet:
    """Load and validate a response-set file.

    Rejects files whose unit norms, lm_score bookkeeping, or intent ids do
    not hold (IntegrityError names the offending field).
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != RESPONSE_SET_VERSION:
        raise IntegrityError("version", f"expected {RESPONSE_SET_VERSION}, got {doc.get('version')!r}")
    for key in ("k_intents", "built_from", "entries"):
        if key not in doc:
            raise IntegrityError(key, "field missing")
    raw_entries = doc["entries"]
    if not raw_entries:
        raise IntegrityError("entries", "response set is empty")
    k = int(doc["k_intents"])
    total = sum(int(e["count"]) for e in raw_entries)
    seen: set[str] = set()
    entries = []
    for e in raw_entries:
        text = e["text"]
        if text in seen:
            raise IntegrityError("text", f"duplicate entry {text!r}")
        seen.add(text)
        vector = np.asarray(e["vector"], dtype=np.float64)
        if abs(float(np.linalg.norm(vector)) - 1.0) > 1e-6:
            raise IntegrityError("vector", f"entry {text!r} is not unit-norm")
        count = int(e["count"])
        if count < 1:
            raise IntegrityError("count", f"entry {text!r} has count {count}")
        lm = float(e["lm_score"])
        if abs(lm - float(np.log(count / total))) > 1e-9:
            raise IntegrityError("lm_score", f"entry {text!r} inconsistent with counts")
        intent = int(e["intent_id"])
        if not 0 <= intent < k:
            raise IntegrityError("intent_id", f"entry {text!r} outside [0, {k})")
        ids = tuple(encode_ids(text.split(" "), vocab)) if vocab is not None else tuple()
        entries.append(
            ResponseEntry(
                text=text, token_ids=ids, vector=vector,
                count=count, lm_score=lm, intent_id=intent,
            )
        )
    return ResponseSet(entries=tuple(entries), built_from=doc["built_from"], k_intents=k)
