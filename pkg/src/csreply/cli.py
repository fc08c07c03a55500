"""Command-line pipeline: synthesize -> train -> build-responses -> eval ->
suggest -> serve.

Every command is reproducible from the engine config file alone; flags
override config keys and the effective config's fingerprint is echoed into
each artifact's metadata header.  Exit codes: 0 success, 1 domain/input
error, 2 usage error.
"""

from __future__ import annotations

import functools
import json
from pathlib import Path

import click

from . import codeswitch, encoder, evaluation, ranker, responseset, trainer
from .config import EngineConfig, load_config
from .errors import EngineError
from .provenance import artifact_meta, fingerprint_file
from .service import LoadedEngine, create_app
from .textproc import build_vocab, tokenize


def engine_errors(fn):
    """Map domain and I/O failures to exit code 1 with a message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (EngineError, OSError, ValueError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load(config_path: str | None, **overrides) -> EngineConfig:
    return load_config(config_path, overrides)


def _meta(cfg: EngineConfig, inputs: dict[str, str]) -> dict:
    return artifact_meta(cfg.fingerprint(), {k: fingerprint_file(v) for k, v in inputs.items()})


def _load_engine(cfg: EngineConfig, model: str, responses: str) -> LoadedEngine:
    params, vocab, _ = encoder.load_checkpoint(model)
    rset = responseset.load_response_set(responses, vocab=vocab)
    return LoadedEngine(
        params=params,
        vocab=vocab,
        rset=rset,
        rank_cfg=cfg.rank_config(),
        model_id=fingerprint_file(model),
    )


@click.group()
def main():
    """Smart-reply engine for code-switched conversations."""


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(), help="EN message-reply corpus (JSONL).")
@click.option("--table", required=True, type=click.Path(), help="Bilingual phrase table (TSV).")
@click.option("--out", required=True, type=click.Path(), help="Output corpus path.")
@click.option("--p-switch", type=float, default=None, help="Per-clause substitution probability.")
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@engine_errors
def synthesize(in_path, table, out, p_switch, seed, config_path):
    """Emit the EN original plus a code-switched variant per input pair."""
    cfg = _load(config_path, p_switch=p_switch, seed=seed)
    phrase_table, duplicates = codeswitch.load_phrase_table(table)
    switch_cfg = codeswitch.SwitchConfig(p_switch=cfg.p_switch, rng_seed=cfg.seed)
    meta = _meta(cfg, {"corpus": in_path, "table": table})
    with open(out, "w", encoding="utf-8") as fh:
        stats = codeswitch.synthesize_corpus(
            codeswitch.read_corpus(in_path), phrase_table, switch_cfg, fh,
            meta=meta, conjunctions=cfg.conjunction_set(),
        )
    payload = stats.to_dict()
    payload["duplicate_table_keys"] = duplicates
    click.echo(json.dumps(payload))


@main.command()
@click.option("--corpus", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Checkpoint path.")
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--lambda-tr", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@engine_errors
def train(corpus, out, epochs, batch_size, lr, lambda_tr, seed, config_path):
    """Train the bi-encoder; writes checkpoint, loss-log CSV and loss figure."""
    cfg = _load(
        config_path,
        epochs=epochs, batch_size=batch_size, lr=lr, lambda_tr=lambda_tr, seed=seed,
    )
    pairs = list(codeswitch.read_corpus(corpus))
    sequences = []
    for pair in pairs:
        sequences.append(tokenize(pair.message))
        sequences.append(tokenize(pair.reply))
        if pair.message_translation:
            sequences.append(tokenize(pair.message_translation))
    vocab = build_vocab(sequences, min_count=cfg.vocab_min_count)
    params, log = trainer.train(pairs, vocab, cfg.train_config(), dims=cfg.dims())
    encoder.save_checkpoint(out, params, vocab, meta=_meta(cfg, {"corpus": corpus}))
    base = Path(out)
    loss_csv = base.with_name(base.stem + "_loss.csv")
    trainer.write_loss_log(loss_csv, log)
    from .figures import plot_loss_curve

    plot_loss_curve(log, base.with_name(base.stem + "_loss.png"))
    click.echo(
        json.dumps(
            {
                "checkpoint": str(out),
                "loss_log": str(loss_csv),
                "epochs": len(log),
                "final_total_loss": log[-1].total,
            }
        )
    )


@main.command("build-responses")
@click.option("--corpus", required=True, type=click.Path())
@click.option("--model", required=True, type=click.Path(), help="Checkpoint path.")
@click.option("--out", required=True, type=click.Path(), help="Response-set path.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@engine_errors
def build_responses(corpus, model, out, config_path):
    """Precompute the scored response set from corpus replies."""
    cfg = _load(config_path)
    params, vocab, _ = encoder.load_checkpoint(model)
    rset = responseset.build_response_set(
        codeswitch.read_corpus(corpus), params, vocab,
        min_count=cfg.response_min_count, max_size=cfg.response_max_size,
        k_intents=cfg.k_intents, seed=cfg.seed, intent_source=cfg.intent_source,
    )
    responseset.save_response_set(out, rset, meta=_meta(cfg, {"corpus": corpus, "model": model}))
    click.echo(json.dumps({"entries": len(rset), "k_intents": rset.k_intents, "out": str(out)}))


@main.command("eval")
@click.option("--corpus", required=True, type=click.Path(), help="Held-out test corpus.")
@click.option("--model", required=True, type=click.Path())
@click.option("--responses", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Report JSON path.")
@click.option("--model-name", default="bi-encoder")
@click.option("--config", "config_path", type=click.Path(), default=None)
@engine_errors
def eval_cmd(corpus, model, responses, out, model_name, config_path):
    """Rank held-out replies; writes report JSON, Table-shaped CSV, figures."""
    cfg = _load(config_path)
    eng = _load_engine(cfg, model, responses)
    report = evaluation.run_eval(
        codeswitch.read_corpus(corpus), eng.params, eng.vocab, eng.rset,
        alpha=cfg.alpha, model_name=model_name,
    )
    meta = _meta(cfg, {"corpus": corpus, "model": model, "responses": responses})
    evaluation.write_report_json(out, report, meta=meta)
    base = Path(out)
    evaluation.write_report_csv(base.with_suffix(".csv"), report)
    from .figures import plot_mrr_bars, plot_rank_histogram

    plot_rank_histogram(report, base.with_name(base.stem + "_ranks.png"))
    plot_mrr_bars(report, base.with_name(base.stem + "_mrr.png"))
    click.echo(
        json.dumps(
            {
                "mrr": report.mrr,
                "baseline_mrr_closed_form": report.baseline_mrr_closed_form,
                "n_queries": report.n_queries,
                "n_skipped": report.n_skipped,
                "latency_mean_ms": report.latency_mean_ms,
            }
        )
    )


@main.command()
@click.option("--message", required=True, help="Incoming message to answer.")
@click.option("--model", required=True, type=click.Path())
@click.option("--responses", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@engine_errors
def suggest(message, model, responses, config_path):
    """Print ranked reply suggestions for one message as JSON."""
    cfg = _load(config_path)
    eng = _load_engine(cfg, model, responses)
    suggestions = ranker.suggest(message, eng.params, eng.vocab, eng.rset, eng.rank_cfg)
    click.echo(
        json.dumps(
            [
                {
                    "text": s.text,
                    "score": s.score,
                    "intent_id": s.intent_id,
                    "entry_index": s.entry_index,
                }
                for s in suggestions
            ],
            ensure_ascii=False,
        )
    )


@main.command()
@click.option("--model", required=True, type=click.Path())
@click.option("--responses", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Directory with the built chat UI bundle.")
@engine_errors
def serve(model, responses, config_path, port, host, static_dir):
    """Serve /api/suggest, /api/health, /api/config (and the chat UI)."""
    import uvicorn

    cfg = _load(config_path, port=port, host=host)
    eng = _load_engine(cfg, model, responses)
    app = create_app(eng, static_dir=static_dir)
    click.echo(f"serving on http://{cfg.host}:{cfg.port} (model {eng.model_id[:12]})")
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")


if __name__ == "__main__":
    main()
