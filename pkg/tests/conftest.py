"""Shared fixtures: trained engines at several scales, reused across modules."""

from __future__ import annotations

import time

import numpy as np
import pytest

from csreply.codeswitch import MRPair
from csreply.encoder import Dims, init_params
from csreply.responseset import build_response_set
from csreply.textproc import build_vocab, tokenize
from csreply.trainer import TrainConfig, train


def separable_corpus(n_groups=500, variants=4, seed=0):
    """2,000 synthetic pairs in 500 groups; the group's key token appears in
    every message of the group and in its (unique) reply.  Variant 0 of each
    group is held out."""
    rng = np.random.default_rng(seed)
    greet = ["hey", "so", "well", "oh", "right", "hmm"]
    verbs = ["tell", "ask", "warn", "update"]
    tails = ["please", "now", "today", "soon", "friend", "quick"]
    train_pairs, held_out = [], []
    for j in range(n_groups):
        key = f"topic{j:03d}"
        reply = f"sure {key} sounds good"
        for v in range(variants):
            msg = " ".join(
                [
                    greet[int(rng.integers(len(greet)))],
                    verbs[int(rng.integers(len(verbs)))],
                    "me about",
                    key,
                    tails[int(rng.integers(len(tails)))],
                ]
            )
            pair = MRPair(id=f"g{j}v{v}", message=msg, reply=reply)
            (held_out if v == 0 else train_pairs).append(pair)
    return train_pairs, held_out


@pytest.fixture(scope="session")
def separable_run():
    """Train on the separable corpus with default config; |R| = 500."""
    train_pairs, held_out = separable_corpus()
    vocab = build_vocab(
        [tokenize(p.message) for p in train_pairs] + [tokenize(p.reply) for p in train_pairs]
    )
    t0 = time.perf_counter()
    params, log = train(train_pairs, vocab, TrainConfig())
    rset = build_response_set(train_pairs, params, vocab, min_count=1, max_size=10000, k_intents=8, seed=42)
    elapsed = time.perf_counter() - t0
    return {
        "train_pairs": train_pairs,
        "held_out": held_out,
        "vocab": vocab,
        "params": params,
        "log": log,
        "rset": rset,
        "elapsed_s": elapsed,
    }


FOOD_WORDS = ["pizza", "sushi", "tacos", "pasta", "salad", "curry", "soup", "noodles"]


def food_corpus():
    return [
        MRPair(
            id=f"p{i}",
            message=f"do you want {w} tonight, or something else?",
            reply=f"yes {w} sounds great!",
        )
        for i, w in enumerate(FOOD_WORDS)
    ]


@pytest.fixture(scope="session")
def tiny_engine():
    """Small trained engine for ranker/service tests (memorizes 8 pairs)."""
    pairs = food_corpus()
    vocab = build_vocab([tokenize(p.message) for p in pairs] + [tokenize(p.reply) for p in pairs])
    params, log = train(pairs, vocab, TrainConfig(epochs=30, batch_size=4, seed=3), dims=Dims(16, 24, 16))
    rset = build_response_set(pairs, params, vocab, k_intents=3, seed=5)
    return {"pairs": pairs, "vocab": vocab, "params": params, "rset": rset, "log": log}


@pytest.fixture(scope="session")
def big_rset():
    """10,000-entry response set over an untrained encoder, d_out = 64."""
    pairs = [
        MRPair(id=f"q{i}", message=f"query {i}", reply=f"reply number {i} about thing{i % 997}")
        for i in range(10000)
    ]
    vocab = build_vocab([tokenize(p.reply) for p in pairs], min_count=1)
    params = init_params(vocab.size, Dims(64, 128, 64), seed=11)
    t0 = time.perf_counter()
    rset = build_response_set(pairs, params, vocab, min_count=1, max_size=10000, k_intents=8, seed=1)
    build_s = time.perf_counter() - t0
    return {"params": params, "vocab": vocab, "rset": rset, "build_s": build_s}
