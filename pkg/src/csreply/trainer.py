"""Symmetric-loss training of the bi-encoder with exact analytic gradients.

The matching objective treats every other in-batch pair as a negative, on
both the message and the reply axis:

    s_ij = exp(e_i_msg . e_j_reply)
    p_i  = s_ii / (sum_j s_ij + sum_k s_ki - s_ii)
    L_mr = -(1/B) * sum_i log p_i

The auxiliary translation task pushes the translated message embedding
(through the square head T) onto the embedding of the second-language
rendering of the same message:

    L_tr = (1/B) * sum_i (1 - normalize(T e_i_en) . e_i_l2)

All gradients are derived by hand and checked against central finite
differences in the test suite; optimization is plain Adam.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codeswitch import MRPair
from .encoder import MESSAGE, REPLY, Dims, EncoderParams, init_params
from .errors import EmptyCorpus, MissingTranslations, NumericalError
from .textproc import Vocab, encode_ids, tokenize

IdSeq = Sequence[int]


@dataclass(frozen=True)
class Batch:
    """Aligned id sequences for one minibatch; translations optional."""

    message_ids: list[IdSeq]
    reply_ids: list[IdSeq]
    translation_ids: list[IdSeq] | None = None

    def __post_init__(self):
        b = len(self.message_ids)
        if b < 1:
            raise ValueError("batch must contain at least one pair")
        if len(self.reply_ids) != b:
            raise ValueError("message/reply lists differ in length")
        if self.translation_ids is not None and len(self.translation_ids) != b:
            raise ValueError("translation list differs in length")
        lists = [self.message_ids, self.reply_ids] + (
            [self.translation_ids] if self.translation_ids is not None else []
        )
        for seqs in lists:
            if any(len(s) == 0 for s in seqs):
                raise ValueError("batch contains an empty id sequence")

    @property
    def size(self) -> int:
        return len(self.message_ids)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 30
    batch_size: int = 32
    lambda_tr: float = 0.5
    seed: int = 42
    shuffle: bool = True

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.lambda_tr < 0:
            raise ValueError("lambda_tr must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    mr_loss: float
    tr_loss: float


# --- forward helpers ---------------------------------------------------------


class _SideCache:
    """Intermediate activations of one encoder application over a batch."""

    __slots__ = ("ids", "H", "Z", "U", "norms", "out")

    def __init__(self, params: EncoderParams, ids_list: list[IdSeq], side: str):
        W, b = (params.Wm, params.bm) if side == MESSAGE else (params.Wr, params.br)
        self.ids = [np.asarray(ids, dtype=np.intp) for ids in ids_list]
        self.H = np.stack([params.E[ids].mean(axis=0) for ids in self.ids])
        self.Z = np.tanh(self.H @ params.W1.T + params.b1)
        self.U = self.Z @ W.T + b
        self.norms = np.linalg.norm(self.U, axis=1)
        self.out = self.U / self.norms[:, None]


def _encode_batch(params: EncoderParams, ids_list: list[IdSeq], side: str) -> _SideCache:
    return _SideCache(params, ids_list, side)


def similarity_matrix(params: EncoderParams, batch: Batch) -> np.ndarray:
    """s[i, j] = exp(embed(m_i) . embed(r_j)); entries lie in [1/e, e]."""
    em = _encode_batch(params, batch.message_ids, MESSAGE).out
    er = _encode_batch(params, batch.reply_ids, REPLY).out
    return np.exp(em @ er.T)


def symmetric_loss(s: np.ndarray) -> float:
    """Mean negative log of p_i = s_ii / (row_i + col_i - s_ii)."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("similarity matrix must be square")
    if not np.all(s > 0):
        raise ValueError("similarity matrix must be strictly positive")
    diag = np.diag(s)
    denom = s.sum(axis=1) + s.sum(axis=0) - diag
    if np.any(denom <= 0):
        raise NumericalError("non-positive symmetric-loss denominator")
    return float(-np.mean(np.log(diag / denom)))


def translation_loss(params: EncoderParams, batch: Batch) -> float:
    """Mean (1 - cos) alignment error of translated message embeddings."""
    if batch.translation_ids is None:
        raise MissingTranslations("batch carries no translation ids")
    em = _encode_batch(params, batch.message_ids, MESSAGE).out
    et = _encode_batch(params, batch.translation_ids, MESSAGE).out
    v = em @ params.T.T
    t = v / np.linalg.norm(v, axis=1)[:, None]
    return float(np.mean(1.0 - np.sum(t * et, axis=1)))


# --- gradients ---------------------------------------------------------------


def _zero_grads(params: EncoderParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.tensors().items()}


def _backprop_side(
    params: EncoderParams,
    cache: _SideCache,
    d_out: np.ndarray,
    side: str,
    grads: dict[str, np.ndarray],
) -> None:
    """Push upstream gradient on normalized outputs back to all tensors."""
    wkey, bkey = ("Wm", "bm") if side == MESSAGE else ("Wr", "br")
    W = params.tensors()[wkey]
    # through e = u / ||u||:  du = (g - (g.e) e) / ||u||
    dU = (d_out - np.sum(d_out * cache.out, axis=1, keepdims=True) * cache.out)
    dU /= cache.norms[:, None]
    grads[wkey] += dU.T @ cache.Z
    grads[bkey] += dU.sum(axis=0)
    dZ = dU @ W
    dA = dZ * (1.0 - cache.Z**2)
    grads["W1"] += dA.T @ cache.H
    grads["b1"] += dA.sum(axis=0)
    dH = dA @ params.W1
    for i, ids in enumerate(cache.ids):
        np.add.at(grads["E"], ids, dH[i] / len(ids))


def grad(
    params: EncoderParams, batch: Batch, cfg: TrainConfig
) -> tuple[LossBreakdown, dict[str, np.ndarray]]:
    """Loss and exact analytic gradient of mr_loss + lambda_tr * tr_loss."""
    b = batch.size
    msg = _encode_batch(params, batch.message_ids, MESSAGE)
    rep = _encode_batch(params, batch.reply_ids, REPLY)

    cos = msg.out @ rep.out.T
    s = np.exp(cos)
    diag = np.diag(s)
    denom = s.sum(axis=1) + s.sum(axis=0) - diag
    if np.any(denom <= 0):
        raise NumericalError("non-positive symmetric-loss denominator")
    mr_loss = float(np.mean(np.log(denom) - np.diag(cos)))

    # dL/ds_ab = (1/B) (1/D_a + 1/D_b) off-diagonal, (1/B)(1/D_a - 1/s_aa) on it;
    # chain through s = exp(cos).
    inv_d = 1.0 / denom
    gamma = (inv_d[:, None] + inv_d[None, :]) * s
    np.fill_diagonal(gamma, diag * inv_d - 1.0)
    gamma /= b

    grads = _zero_grads(params)
    d_em = gamma @ rep.out
    d_er = gamma.T @ msg.out

    tr_loss = 0.0
    use_translation = batch.translation_ids is not None and cfg.lambda_tr > 0
    if use_translation:
        tra = _encode_batch(params, batch.translation_ids, MESSAGE)
        v = msg.out @ params.T.T
        nv = np.linalg.norm(v, axis=1)
        t = v / nv[:, None]
        tr_loss = float(np.mean(1.0 - np.sum(t * tra.out, axis=1)))
        dt = -(cfg.lambda_tr / b) * tra.out
        dV = (dt - np.sum(dt * t, axis=1, keepdims=True) * t) / nv[:, None]
        grads["T"] += dV.T @ msg.out
        d_em += dV @ params.T
        d_et = -(cfg.lambda_tr / b) * t
        _backprop_side(params, tra, d_et, MESSAGE, grads)

    _backprop_side(params, msg, d_em, MESSAGE, grads)
    _backprop_side(params, rep, d_er, REPLY, grads)

    total = mr_loss + cfg.lambda_tr * tr_loss
    return LossBreakdown(total=total, mr_loss=mr_loss, tr_loss=tr_loss), grads


# --- optimization loop -------------------------------------------------------


class AdamState:
    """Per-tensor first/second moment accumulators."""

    def __init__(self, params: EncoderParams):
        self.m = _zero_grads(params)
        self.v = _zero_grads(params)
        self.t = 0

    def step(self, params: EncoderParams, grads: dict[str, np.ndarray], cfg: TrainConfig) -> None:
        self.t += 1
        tensors = params.tensors()
        bc1 = 1.0 - cfg.beta1**self.t
        bc2 = 1.0 - cfg.beta2**self.t
        for k, g in grads.items():
            self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * g * g
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            tensors[k] -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)


@dataclass
class EpochLoss:
    epoch: int
    mr_loss: float
    tr_loss: float
    total: float


def make_examples(
    corpus: Iterable[MRPair], vocab: Vocab
) -> list[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...] | None]]:
    """Tokenize and encode a corpus into (message, reply, translation?) id triples."""
    examples = []
    for pair in corpus:
        mids = tuple(encode_ids(tokenize(pair.message), vocab))
        rids = tuple(encode_ids(tokenize(pair.reply), vocab))
        if not mids or not rids:
            continue
        tids: tuple[int, ...] | None = None
        if pair.message_translation:
            cand = tuple(encode_ids(tokenize(pair.message_translation), vocab))
            tids = cand or None
        examples.append((mids, rids, tids))
    return examples


def train(
    corpus: Iterable[MRPair],
    vocab: Vocab,
    cfg: TrainConfig = TrainConfig(),
    dims: Dims = Dims(),
    params: EncoderParams | None = None,
) -> tuple[EncoderParams, list[EpochLoss]]:
    """Run Adam over shuffled minibatches; returns params and per-epoch losses.

    A trailing batch of size 1 is dropped (it carries no matching signal).
    Batches use translations only when every member has one.  Deterministic
    for a fixed seed.
    """
    examples = make_examples(corpus, vocab)
    if len(examples) < 2:
        raise EmptyCorpus("need at least 2 usable pairs to train")
    if params is None:
        params = init_params(vocab.size, dims, seed=cfg.seed)
    else:
        params = params.copy()

    rng = np.random.default_rng(cfg.seed)
    state = AdamState(params)
    log: list[EpochLoss] = []
    order = np.arange(len(examples))
    for epoch in range(1, cfg.epochs + 1):
        if cfg.shuffle:
            order = rng.permutation(len(examples))
        sums = np.zeros(3)
        n_batches = 0
        for lo in range(0, len(order), cfg.batch_size):
            chunk = [examples[i] for i in order[lo : lo + cfg.batch_size]]
            if len(chunk) < 2:
                continue
            translations = [t for _, _, t in chunk]
            batch = Batch(
                message_ids=[m for m, _, _ in chunk],
                reply_ids=[r for _, r, _ in chunk],
                translation_ids=translations if all(t is not None for t in translations) else None,
            )
            loss, grads = grad(params, batch, cfg)
            state.step(params, grads, cfg)
            sums += (loss.mr_loss, loss.tr_loss, loss.total)
            n_batches += 1
        if n_batches == 0:
            raise EmptyCorpus("every batch degenerated to a single pair")
        means = sums / n_batches
        log.append(
            EpochLoss(
                epoch=epoch,
                mr_loss=float(means[0]),
                tr_loss=float(means[1]),
                total=float(means[2]),
            )
        )
    return params, log


def write_loss_log(path: str | Path, log: list[EpochLoss]) -> None:
    """CSV with header epoch,mr_loss,tr_loss,total."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mr_loss", "tr_loss", "total"])
        for row in log:
            writer.writerow([row.epoch, repr(row.mr_loss), repr(row.tr_loss), repr(row.total)])
