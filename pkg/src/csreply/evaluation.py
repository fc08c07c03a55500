"""Experiment harness: reciprocal-rank scoring, the closed-form random
baseline, per-query latency, and report serialization.

The rank of the reference reply uses the optimistic tie rule: rank = 1 +
(number of strictly greater scores), so ties never worsen a rank.  The
random baseline is the exact expectation H_n / n of the reciprocal of a
uniform rank over n candidates.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .codeswitch import MRPair
from .encoder import MESSAGE, EncoderParams, encode
from .errors import EmptyCorpus, EmptyRanks, TruthNotInSet
from .ranker import score_all
from .responseset import ResponseSet
from .textproc import Vocab, encode_ids, tokenize


@dataclass
class EvalReport:
    model_name: str
    mrr: float
    n_queries: int
    n_skipped: int
    response_set_size: int
    latency_mean_ms: float
    latency_p95_ms: float
    baseline_mrr_closed_form: float
    ranks: list[int] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "mrr": self.mrr,
            "n_queries": self.n_queries,
            "n_skipped": self.n_skipped,
            "response_set_size": self.response_set_size,
            "latency_mean_ms": self.latency_mean_ms,
            "latency_p95_ms": self.latency_p95_ms,
            "baseline_mrr_closed_form": self.baseline_mrr_closed_form,
            "ranks": self.ranks,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


def rank_of_truth(
    message: str,
    true_reply_text: str,
    params: EncoderParams,
    vocab: Vocab,
    rset: ResponseSet,
    alpha: float,
) -> int:
    """1-based rank of the reference reply among all scored entries."""
    truth_idx = rset.index_of(" ".join(tokenize(true_reply_text)))
    if truth_idx is None:
        raise TruthNotInSet(true_reply_text)
    emb = encode(params, encode_ids(tokenize(message), vocab), MESSAGE)
    scores = score_all(emb, rset, alpha)
    return 1 + int(np.sum(scores > scores[truth_idx]))


def mrr(ranks: Iterable[int]) -> float:
    """Arithmetic mean of reciprocal ranks."""
    ranks = list(ranks)
    if not ranks:
        raise EmptyRanks("no ranks to average")
    if any(r < 1 for r in ranks):
        raise ValueError("ranks must be >= 1")
    return sum(1.0 / r for r in ranks) / len(ranks)


def random_baseline_mrr(set_size: int) -> float:
    """Expected MRR of a uniform-random ranking: H_n / n."""
    if set_size < 1:
        raise ValueError("set_size must be >= 1")
    return sum(1.0 / r for r in range(1, set_size + 1)) / set_size


def run_eval(
    test_corpus: Iterable[MRPair],
    params: EncoderParams,
    vocab: Vocab,
    rset: ResponseSet,
    alpha: float = 0.3,
    model_name: str = "bi-encoder",
) -> EvalReport:
    """Rank every held-out pair, timing each query; skipped queries (reply
    not in the response set) are counted, not fatal."""
    ranks: list[int] = []
    latencies: list[float] = []
    skipped = 0
    n_total = 0
    for pair in test_corpus:
        n_total += 1
        t0 = time.perf_counter()
        try:
            rank = rank_of_truth(pair.message, pair.reply, params, vocab, rset, alpha)
        except TruthNotInSet:
            skipped += 1
            continue
        latencies.append((time.perf_counter() - t0) * 1000.0)
        ranks.append(rank)
    if n_total == 0:
        raise EmptyCorpus("evaluation corpus is empty")
    if not ranks:
        raise EmptyCorpus("every evaluation query was skipped (no truth in set)")
    lat = np.array(latencies)
    return EvalReport(
        model_name=model_name,
        mrr=mrr(ranks),
        n_queries=len(ranks),
        n_skipped=skipped,
        response_set_size=len(rset),
        latency_mean_ms=float(lat.mean()),
        latency_p95_ms=float(np.percentile(lat, 95)),
        baseline_mrr_closed_form=random_baseline_mrr(len(rset)),
        ranks=ranks,
    )


def write_report_json(path: str | Path, report: EvalReport, meta: dict | None = None) -> None:
    doc = report.to_dict()
    if meta is not None:
        doc = {"version": 1, "meta": meta, **doc}
    Path(path).write_text(
        json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def read_report_json(path: str | Path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_report_csv(path: str | Path, report: EvalReport) -> None:
    """Two-row model/MRR/latency table: the random baseline, then the model."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "mrr", "latency_mean_ms"])
        writer.writerow(["random", repr(report.baseline_mrr_closed_form), ""])
        writer.writerow([report.model_name, repr(report.mrr), repr(report.latency_mean_ms)])
