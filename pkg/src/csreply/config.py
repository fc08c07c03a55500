"""Flat engine configuration: one key = value per line, '#' comments.

Every tunable of the pipeline lives here with its default; CLI flags
override file values.  Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .encoder import Dims
from .errors import ConfigError
from .provenance import fingerprint_text
from .ranker import RankConfig
from .responseset import INTENT_KMEANS, INTENT_SENTIMENT
from .textproc import DEFAULT_CONJUNCTIONS
from .trainer import TrainConfig


@dataclass
class EngineConfig:
    # synthesis
    p_switch: float = 0.3
    seed: int = 42
    conjunctions: str = ",".join(sorted(DEFAULT_CONJUNCTIONS))
    # encoder dims
    d_emb: int = 64
    d_hid: int = 128
    d_out: int = 64
    # training
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 30
    batch_size: int = 32
    lambda_tr: float = 0.5
    shuffle: bool = True
    vocab_min_count: int = 1
    # response set
    response_min_count: int = 1
    response_max_size: int = 10000
    k_intents: int = 8
    intent_source: str = INTENT_KMEANS
    # ranking
    alpha: float = 0.3
    n1: int = 30
    n2: int = 3
    jaccard_threshold: float = 0.5
    # service
    host: str = "127.0.0.1"
    port: int = 8707

    def conjunction_set(self) -> frozenset[str]:
        return frozenset(t for t in self.conjunctions.split(",") if t)

    def dims(self) -> Dims:
        return Dims(d_emb=self.d_emb, d_hid=self.d_hid, d_out=self.d_out)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps,
            epochs=self.epochs, batch_size=self.batch_size,
            lambda_tr=self.lambda_tr, seed=self.seed, shuffle=self.shuffle,
        )

    def rank_config(self) -> RankConfig:
        return RankConfig(
            alpha=self.alpha, n1=self.n1, n2=self.n2,
            jaccard_threshold=self.jaccard_threshold,
        )

    def validate(self) -> None:
        try:
            self.dims()
            self.train_config()
            self.rank_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 <= self.p_switch <= 1.0:
            raise ConfigError("p_switch must lie in [0, 1]")
        if self.vocab_min_count < 1 or self.response_min_count < 1:
            raise ConfigError("min counts must be >= 1")
        if not self.response_max_size >= self.k_intents >= 1:
            raise ConfigError("need response_max_size >= k_intents >= 1")
        if self.intent_source not in (INTENT_KMEANS, INTENT_SENTIMENT):
            raise ConfigError(f"unknown intent_source {self.intent_source!r}")
        if not 1 <= self.port <= 65535:
            raise ConfigError("port must lie in [1, 65535]")

    def fingerprint(self) -> str:
        canonical = "\n".join(
            f"{f.name} = {getattr(self, f.name)}" for f in sorted(fields(self), key=lambda f: f.name)
        )
        return fingerprint_text(canonical)


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _coerce(name: str, kind: type, raw: str):
    raw = raw.strip()
    try:
        if kind is bool:
            return _BOOL_VALUES[raw.lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}") from exc


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> EngineConfig:
    """Build an EngineConfig from defaults, an optional file, and overrides."""
    cfg = EngineConfig()
    kinds = {f.name: type(getattr(cfg, f.name)) for f in fields(cfg)}
    if path is not None:
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {line_no}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in kinds:
                raise ConfigError(f"line {line_no}: unknown key {key!r}")
            setattr(cfg, key, _coerce(key, kinds[key], raw))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in kinds:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    cfg.validate()
    return cfg
