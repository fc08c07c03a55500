"""The bi-encoder: parameters and the deterministic forward pass.

Architecture: shared token embeddings are mean-pooled, pushed through one
shared tanh hidden layer, then through a per-side linear head (message or
reply), and finally unit-normalized.  Because outputs live on the unit
sphere, the dot product between a message and a reply embedding is their
cosine similarity and always lies in [-1, 1].

A square translation head maps message embeddings across languages for the
auxiliary training task.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateVector, EmptyInput, IntegrityError
from .textproc import Vocab

NORM_FLOOR = 1e-12

MESSAGE = "message"
REPLY = "reply"


@dataclass(frozen=True)
class Dims:
    d_emb: int = 64
    d_hid: int = 128
    d_out: int = 64

    def __post_init__(self):
        if min(self.d_emb, self.d_hid, self.d_out) < 1:
            raise ValueError("all dims must be >= 1")


@dataclass
class EncoderParams:
    """All trainable tensors.  Mutated only by the trainer, which owns them."""

    E: np.ndarray   # (vocab_size, d_emb) token embeddings
    W1: np.ndarray  # (d_hid, d_emb) shared hidden projection
    b1: np.ndarray  # (d_hid,)
    Wm: np.ndarray  # (d_out, d_hid) message head
    bm: np.ndarray  # (d_out,)
    Wr: np.ndarray  # (d_out, d_hid) reply head
    br: np.ndarray  # (d_out,)
    T: np.ndarray   # (d_out, d_out) translation head
    dims: Dims

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "E": self.E, "W1": self.W1, "b1": self.b1,
            "Wm": self.Wm, "bm": self.bm, "Wr": self.Wr, "br": self.br,
            "T": self.T,
        }

    @property
    def vocab_size(self) -> int:
        return self.E.shape[0]

    def validate(self) -> None:
        d = self.dims
        expected = {
            "E": (self.E.shape[0], d.d_emb),
            "W1": (d.d_hid, d.d_emb), "b1": (d.d_hid,),
            "Wm": (d.d_out, d.d_hid), "bm": (d.d_out,),
            "Wr": (d.d_out, d.d_hid), "br": (d.d_out,),
            "T": (d.d_out, d.d_out),
        }
        for name, arr in self.tensors().items():
            if arr.shape != expected[name]:
                raise ValueError(f"{name} has shape {arr.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            **{k: v.copy() for k, v in self.tensors().items()}, dims=self.dims
        )


def init_params(vocab_size: int, dims: Dims = Dims(), seed: int = 42) -> EncoderParams:
    """Seeded initialization: weights uniform in [-0.1, 0.1], biases zero,
    translation head at identity.  Draw order E, W1, Wm, Wr is fixed."""
    if vocab_size < 1:
        raise ValueError("vocab_size must be >= 1")
    rng = np.random.default_rng(seed)
    u = lambda *shape: rng.uniform(-0.1, 0.1, size=shape)
    params = EncoderParams(
        E=u(vocab_size, dims.d_emb),
        W1=u(dims.d_hid, dims.d_emb),
        b1=np.zeros(dims.d_hid),
        Wm=u(dims.d_out, dims.d_hid),
        bm=np.zeros(dims.d_out),
        Wr=u(dims.d_out, dims.d_hid),
        br=np.zeros(dims.d_out),
        T=np.eye(dims.d_out),
        dims=dims,
    )
    params.validate()
    return params


def _normalize(u: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(u))
    if norm < NORM_FLOOR:
        raise DegenerateVector(f"vector norm {norm} below {NORM_FLOOR}")
    return u / norm


def encode(params: EncoderParams, ids: Sequence[int], side: str) -> np.ndarray:
    """Embed a token-id sequence on the given side ("message" or "reply").

    h = mean(E[ids]); z = tanh(W1 h + b1); u = W_side z + b_side; output
    u / ||u||.  Pure and deterministic.
    """
    if len(ids) == 0:
        raise EmptyInput("cannot encode an empty id sequence")
    if side == MESSAGE:
        W, b = params.Wm, params.bm
    elif side == REPLY:
        W, b = params.Wr, params.br
    else:
        raise ValueError(f"side must be {MESSAGE!r} or {REPLY!r}")
    h = params.E[np.asarray(ids, dtype=np.intp)].mean(axis=0)
    z = np.tanh(params.W1 @ h + params.b1)
    return _normalize(W @ z + b)


def translate_embed(params: EncoderParams, e: np.ndarray) -> np.ndarray:
    """Apply the translation head and re-normalize."""
    return _normalize(params.T @ e)


# --- checkpoint file format -------------------------------------------------
#
# JSON object {version, meta?, vocab_size, dims, vocab, arrays} with every
# array stored as a flat row-major list of float64 values written with 17
# significant digits, which round-trips each double bit-exactly.

CHECKPOINT_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _emit_array(arr: np.ndarray) -> str:
    return "[" + ", ".join(_fmt(v) for v in arr.ravel(order="C")) + "]"


def save_checkpoint(
    path: str | Path,
    params: EncoderParams,
    vocab: Vocab,
    meta: dict | None = None,
) -> None:
    params.validate()
    if vocab.size != params.vocab_size:
        raise ValueError("vocab size does not match embedding rows")
    d = params.dims
    lines = ["{"]
    lines.append(f'  "version": {CHECKPOINT_VERSION},')
    if meta is not None:
        lines.append(f'  "meta": {json.dumps(meta, ensure_ascii=False, sort_keys=True)},')
    lines.append(f'  "vocab_size": {params.vocab_size},')
    lines.append(
        f'  "dims": {{"d_emb": {d.d_emb}, "d_hid": {d.d_hid}, "d_out": {d.d_out}}},'
    )
    lines.append(f'  "vocab": {json.dumps(list(vocab.token_of), ensure_ascii=False)},')
    lines.append(f'  "min_count": {vocab.min_count},')
    arrays = params.tensors()
    body = ",\n".join(f'    "{name}": {_emit_array(arr)}' for name, arr in arrays.items())
    lines.append('  "arrays": {\n' + body + "\n  }")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[EncoderParams, Vocab, dict | None]:
    """Read a checkpoint; returns (params, vocab, meta)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != CHECKPOINT_VERSION:
        raise IntegrityError("version", f"expected {CHECKPOINT_VERSION}, got {doc.get('version')!r}")
    try:
        dims = Dims(**doc["dims"])
        vocab_size = int(doc["vocab_size"])
        tokens = tuple(doc["vocab"])
        raw = doc["arrays"]
    except (KeyError, TypeError) as exc:
        raise IntegrityError("checkpoint", f"missing field: {exc}") from exc
    if len(tokens) != vocab_size:
        raise IntegrityError("vocab", "token list length does not match vocab_size")
    shapes = {
        "E": (vocab_size, dims.d_emb),
        "W1": (dims.d_hid, dims.d_emb), "b1": (dims.d_hid,),
        "Wm": (dims.d_out, dims.d_hid), "bm": (dims.d_out,),
        "Wr": (dims.d_out, dims.d_hid), "br": (dims.d_out,),
        "T": (dims.d_out, dims.d_out),
    }
    arrays = {}
    for name, shape in shapes.items():
        if name not in raw:
            raise IntegrityError(name, "array missing from checkpoint")
        flat = np.asarray(raw[name], dtype=np.float64)
        if flat.size != int(np.prod(shape)):
            raise IntegrityError(name, f"expected {int(np.prod(shape))} values, got {flat.size}")
        arrays[name] = flat.reshape(shape)
    params = EncoderParams(**arrays, dims=dims)
    try:
        params.validate()
    except ValueError as exc:
        raise IntegrityError("arrays", str(exc)) from exc
    vocab = Vocab(
        token_of=tokens,
        id_of={t: i for i, t in enumerate(tokens)},
        min_count=int(doc.get("min_count", 1)),
    )
    return params, vocab, doc.get("meta")
