"""Code-switched corpus synthesis via clause substitution.

English message-reply pairs are clause-segmented and, per clause, the
second-language rendering from an offline phrase table is substituted with
a configurable probability.  Substitution splices replacement text into the
original character stream, so untouched clauses (and all whitespace between
clauses) survive byte-for-byte and p_switch=0 is the identity transform.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator, TextIO

from .errors import ParseError
from .textproc import (
    DEFAULT_CONJUNCTIONS,
    Clause,
    segment_clauses,
    tokenize,
    tokenize_spans,
)

LANG_EN = "en"
LANG_CS = "cs"
LANG_L2 = "l2"
LANGS = frozenset({LANG_EN, LANG_CS, LANG_L2})

# Topical Chat sentiment labels carried on message-reply pairs.
SENTIMENTS = (
    "Angry",
    "Curious to Dive Deeper",
    "Disguised",
    "Fearful",
    "Happy",
    "Sad",
    "Surprised",
)

_PUNCT_TOKENS = frozenset(".,;:!?—")


@dataclass(frozen=True)
class MRPair:
    """One message-reply training example."""

    id: str
    message: str
    reply: str
    lang: str = LANG_EN
    message_translation: str | None = None
    reply_translation: str | None = None
    sentiment: str | None = None

    def __post_init__(self):
        if self.lang not in LANGS:
            raise ValueError(f"unknown lang {self.lang!r}")
        if not tokenize(self.message) or not tokenize(self.reply):
            raise ValueError(f"pair {self.id!r} has an empty message or reply")
        if self.sentiment is not None and self.sentiment not in SENTIMENTS:
            raise ValueError(f"pair {self.id!r} has unknown sentiment {self.sentiment!r}")

    def to_record(self) -> dict:
        rec: dict = {"id": self.id, "message": self.message, "reply": self.reply, "lang": self.lang}
        if self.message_translation is not None:
            rec["message_translation"] = self.message_translation
        if self.reply_translation is not None:
            rec["reply_translation"] = self.reply_translation
        if self.sentiment is not None:
            rec["sentiment"] = self.sentiment
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "MRPair":
        return cls(
            id=rec["id"],
            message=rec["message"],
            reply=rec["reply"],
            lang=rec["lang"],
            message_translation=rec.get("message_translation"),
            reply_translation=rec.get("reply_translation"),
            sentiment=rec.get("sentiment"),
        )


def read_corpus(path: str | Path) -> Iterator[MRPair]:
    """Stream message-reply pairs from a JSONL corpus file.

    A leading ``{"_meta": ...}`` provenance line, if present, is skipped.
    """
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc}") from exc
            if "_meta" in rec:
                continue
            try:
                yield MRPair.from_record(rec)
            except (KeyError, ValueError, TypeError) as exc:
                raise ParseError(line_no, str(exc)) from exc


def write_corpus(pairs: Iterable[MRPair], out: TextIO, meta: dict | None = None) -> int:
    """Write pairs as JSONL; returns the number of records written."""
    if meta is not None:
        out.write(json.dumps({"_meta": meta}, ensure_ascii=False) + "\n")
    n = 0
    for pair in pairs:
        out.write(json.dumps(pair.to_record(), ensure_ascii=False) + "\n")
        n += 1
    return n


@dataclass(frozen=True)
class PhraseTable:
    """Offline bilingual mapping: exact clause translations plus word fallbacks."""

    clause_map: dict[str, str] = field(default_factory=dict)
    word_map: dict[str, str] = field(default_factory=dict)


def load_phrase_table(path: str | Path) -> tuple[PhraseTable, int]:
    """Load a 2-column UTF-8 TSV phrase table.

    Multi-token left sides become clause entries, single-token ones word
    entries; keys are normalized by tokenize-then-join.  Later duplicates
    override earlier ones (last wins); the override count is returned
    alongside the table.  Lines starting with '#' and blank lines are
    ignored.
    """
    clause_map: dict[str, str] = {}
    word_map: dict[str, str] = {}
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(line_no, f"expected 2 tab-separated columns, got {len(cols)}")
            src_tokens = tokenize(cols[0])
            target = cols[1].strip()
            if not src_tokens or not target:
                raise ParseError(line_no, "empty source or target phrase")
            key = " ".join(src_tokens)
            dest = clause_map if len(src_tokens) > 1 else word_map
            if key in dest:
                duplicates += 1
            dest[key] = target
    return PhraseTable(clause_map=clause_map, word_map=word_map), duplicates


@dataclass(frozen=True)
class SwitchConfig:
    """Per-clause substitution probability and RNG seed."""

    p_switch: float = 0.3
    rng_seed: int = 42

    def __post_init__(self):
        if not 0.0 <= self.p_switch <= 1.0:
            raise ValueError("p_switch must lie in [0, 1]")


def substitute_clause(clause: Clause, table: PhraseTable) -> tuple[str, bool]:
    """Render one clause through the phrase table.

    Exact clause-map hits (looked up with punctuation stripped) win and keep
    the clause's trailing punctuation; otherwise individual tokens found in
    the word map are replaced.  Returns the rendered text and whether
    anything changed.
    """
    content = [t for t in clause.tokens if t not in _PUNCT_TOKENS]
    key = " ".join(content)
    if key and key in table.clause_map:
        trailing = []
        for tok in reversed(clause.tokens):
            if tok in _PUNCT_TOKENS:
                trailing.append(tok)
            else:
                break
        rendered = " ".join([table.clause_map[key]] + trailing[::-1])
        return rendered, True
    out = [table.word_map.get(t, t) for t in clause.tokens]
    switched = out != list(clause.tokens)
    return " ".join(out), switched


def _switch_text(
    text: str,
    table: PhraseTable,
    decide: Callable[[], bool],
    conjunctions: frozenset[str],
) -> tuple[str, int, int]:
    """Rewrite ``text`` clause by clause; returns (text, clauses, switched).

    ``decide`` is called once per clause, in order, and returns whether the
    clause is a substitution candidate.  Replacements are spliced into the
    original character stream so everything else is preserved verbatim.
    """
    spans = tokenize_spans(text)
    if not spans:
        return text, 0, 0
    clauses = segment_clauses([t for t, _, _ in spans], conjunctions)
    pieces: list[str] = []
    cursor = 0
    switched = 0
    for clause in clauses:
        start = spans[clause.source_span[0]][1]
        end = spans[clause.source_span[1] - 1][2]
        attempt = decide()
        if attempt:
            rendered, changed = substitute_clause(clause, table)
            if changed:
                pieces.append(text[cursor:start])
                pieces.append(rendered)
                cursor = end
                switched += 1
    pieces.append(text[cursor:])
    return "".join(pieces), len(clauses), switched


def translate_text(
    text: str,
    table: PhraseTable,
    conjunctions: frozenset[str] | None = None,
) -> str:
    """Render every clause of ``text`` through the table (full substitution)."""
    conj = DEFAULT_CONJUNCTIONS if conjunctions is None else conjunctions
    rendered, _, _ = _switch_text(text, table, lambda: True, conj)
    return rendered


def synthesize_pair(
    pair: MRPair,
    table: PhraseTable,
    cfg: SwitchConfig,
    rng: random.Random,
    conjunctions: frozenset[str] | None = None,
) -> tuple[MRPair, int, int]:
    """Produce the code-switched variant of an English pair.

    One Bernoulli(p_switch) draw is consumed per clause, message clauses
    before reply clauses.  Returns the CS pair plus (clause, switched)
    counts for statistics.
    """
    if pair.lang != LANG_EN:
        raise ValueError("synthesize_pair requires an EN-language pair")
    conj = conjunctions if conjunctions is not None else DEFAULT_CONJUNCTIONS
    decide = lambda: rng.random() < cfg.p_switch
    message, n_mc, s_mc = _switch_text(pair.message, table, decide, conj)
    reply, n_rc, s_rc = _switch_text(pair.reply, table, decide, conj)
    cs = replace(pair, id=pair.id + "-cs", message=message, reply=reply, lang=LANG_CS)
    return cs, n_mc + n_rc, s_mc + s_rc


@dataclass
class SynthesisStats:
    pairs_in: int = 0
    records_out: int = 0
    clauses_total: int = 0
    clauses_switched: int = 0

    @property
    def switch_rate(self) -> float:
        return self.clauses_switched / self.clauses_total if self.clauses_total else 0.0

    def to_dict(self) -> dict:
        return {
            "pairs_in": self.pairs_in,
            "records_out": self.records_out,
            "clauses_total": self.clauses_total,
            "clauses_switched": self.clauses_switched,
            "switch_rate": self.switch_rate,
        }


def synthesize_corpus(
    pairs: Iterable[MRPair],
    table: PhraseTable,
    cfg: SwitchConfig,
    out: TextIO,
    meta: dict | None = None,
    conjunctions: frozenset[str] | None = None,
) -> SynthesisStats:
    """Emit, per input pair, the EN original and its CS variant (streaming).

    Missing second-language translations are filled by rendering every
    clause through the table (the offline stand-in for a machine-translation
    pass).  Deterministic for a fixed seed.
    """
    rng = random.Random(cfg.rng_seed)
    stats = SynthesisStats()

    def generate() -> Iterator[MRPair]:
        for pair in pairs:
            stats.pairs_in += 1
            filled = replace(
                pair,
                message_translation=pair.message_translation
                or translate_text(pair.message, table, conjunctions),
                reply_translation=pair.reply_translation
                or translate_text(pair.reply, table, conjunctions),
            )
            cs, n_clauses, n_switched = synthesize_pair(filled, table, cfg, rng, conjunctions)
            stats.clauses_total += n_clauses
            stats.clauses_switched += n_switched
            yield filled
            yield cs

    stats.records_out = write_corpus(generate(), out, meta=meta)
    return stats
