"""Pipeline commands: behavior, exit codes, artifact provenance."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from csreply.cli import main
from csreply.codeswitch import read_corpus
from csreply.encoder import Dims, init_params, load_checkpoint

DATA = Path(__file__).resolve().parent.parent / "data"
SAMPLE = DATA / "sample_en.jsonl"
TABLE = DATA / "phrase_table_hi.tsv"


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


def run_ok(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


@pytest.fixture(scope="module")
def pipeline(runner, tmp_path_factory):
    """synthesize -> train -> build-responses once; shared by read-only tests."""
    root = tmp_path_factory.mktemp("pipeline")
    corpus = root / "corpus.jsonl"
    ckpt = root / "model.json"
    rset = root / "responses.json"
    run_ok(runner, [
        "synthesize", "--in", str(SAMPLE), "--table", str(TABLE),
        "--out", str(corpus), "--p-switch", "0.4", "--seed", "7",
    ])
    run_ok(runner, [
        "train", "--corpus", str(corpus), "--out", str(ckpt),
        "--epochs", "12", "--batch-size", "8", "--seed", "7",
    ])
    run_ok(runner, ["build-responses", "--corpus", str(corpus), "--model", str(ckpt), "--out", str(rset)])
    return {"root": root, "corpus": corpus, "ckpt": ckpt, "rset": rset}


class TestSynthesize:
    def test_two_records_per_pair_and_stats(self, runner, tmp_path):
        out = tmp_path / "out.jsonl"
        result = run_ok(runner, [
            "synthesize", "--in", str(SAMPLE), "--table", str(TABLE), "--out", str(out),
        ])
        stats = json.loads(result.output.strip().splitlines()[-1])
        n_in = len(SAMPLE.read_text(encoding="utf-8").splitlines())
        assert stats["pairs_in"] == n_in
        assert stats["records_out"] == 2 * n_in
        assert len(list(read_corpus(out))) == 2 * n_in

    def test_missing_table_exits_1(self, runner, tmp_path):
        result = runner.invoke(main, [
            "synthesize", "--in", str(SAMPLE), "--table", str(tmp_path / "nope.tsv"),
            "--out", str(tmp_path / "o.jsonl"),
        ])
        assert result.exit_code == 1

    def test_p_switch_zero_is_identity(self, runner, tmp_path):
        out = tmp_path / "out.jsonl"
        run_ok(runner, [
            "synthesize", "--in", str(SAMPLE), "--table", str(TABLE),
            "--out", str(out), "--p-switch", "0",
        ])
        originals = {p.id: p for p in read_corpus(SAMPLE)}
        for pair in read_corpus(out):
            src = originals[pair.id.removesuffix("-cs")]
            assert pair.message == src.message and pair.reply == src.reply

    def test_meta_header_carries_fingerprints(self, runner, tmp_path):
        out = tmp_path / "out.jsonl"
        run_ok(runner, ["synthesize", "--in", str(SAMPLE), "--table", str(TABLE), "--out", str(out)])
        meta = json.loads(out.read_text(encoding="utf-8").splitlines()[0])["_meta"]
        assert meta["version"] == 1
        assert set(meta["input_fingerprints"]) == {"corpus", "table"}
        assert len(meta["config_fingerprint"]) == 64

    def test_usage_error_exits_2(self, runner):
        assert runner.invoke(main, ["synthesize", "--in", "x"]).exit_code == 2


class TestTrain:
    def test_checkpoint_reloads_and_sidecars_exist(self, pipeline):
        params, vocab, meta = load_checkpoint(pipeline["ckpt"])
        assert params.vocab_size == vocab.size
        assert meta["config_fingerprint"]
        assert (pipeline["root"] / "model_loss.csv").exists()
        assert (pipeline["root"] / "model_loss.png").exists()
        header = (pipeline["root"] / "model_loss.csv").read_text().splitlines()[0]
        assert header == "epoch,mr_loss,tr_loss,total"

    def test_zero_lr_keeps_init_params(self, runner, pipeline, tmp_path):
        ckpt = tmp_path / "frozen.json"
        run_ok(runner, [
            "train", "--corpus", str(pipeline["corpus"]), "--out", str(ckpt),
            "--epochs", "1", "--lr", "0", "--seed", "7",
        ])
        params, vocab, _ = load_checkpoint(ckpt)
        fresh = init_params(vocab.size, Dims(64, 128, 64), seed=7)
        for k, arr in params.tensors().items():
            assert np.array_equal(arr, fresh.tensors()[k]), k

    def test_empty_corpus_exits_1(self, runner, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        result = runner.invoke(main, [
            "train", "--corpus", str(empty), "--out", str(tmp_path / "m.json"),
        ])
        assert result.exit_code == 1


class TestBuildResponsesAndEval:
    def test_eval_beats_random_baseline_on_train_split(self, runner, pipeline, tmp_path):
        report_path = tmp_path / "report.json"
        result = run_ok(runner, [
            "eval", "--corpus", str(pipeline["corpus"]), "--model", str(pipeline["ckpt"]),
            "--responses", str(pipeline["rset"]), "--out", str(report_path),
        ])
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary["mrr"] > summary["baseline_mrr_closed_form"]
        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert report["meta"]["config_fingerprint"]
        assert (tmp_path / "report.csv").exists()
        assert (tmp_path / "report_ranks.png").exists()
        assert (tmp_path / "report_mrr.png").exists()

    def test_metadata_in_response_set(self, pipeline):
        doc = json.loads(pipeline["rset"].read_text(encoding="utf-8"))
        assert doc["meta"]["version"] == 1
        assert set(doc["meta"]["input_fingerprints"]) == {"corpus", "model"}


class TestSuggest:
    def test_prints_json_suggestions(self, runner, pipeline):
        result = run_ok(runner, [
            "suggest", "--message", "are you free tonight?",
            "--model", str(pipeline["ckpt"]), "--responses", str(pipeline["rset"]),
        ])
        suggestions = json.loads(result.output.strip().splitlines()[-1])
        assert 1 <= len(suggestions) <= 3
        assert all(set(s) == {"text", "score", "intent_id", "entry_index"} for s in suggestions)

    def test_empty_message_exits_1(self, runner, pipeline):
        result = runner.invoke(main, [
            "suggest", "--message", "   ",
            "--model", str(pipeline["ckpt"]), "--responses", str(pipeline["rset"]),
        ])
        assert result.exit_code == 1


class TestConfigFile:
    def test_config_overrides_and_unknown_key(self, runner, tmp_path):
        cfg = tmp_path / "engine.cfg"
        cfg.write_text("# demo\np_switch = 0.0\nseed = 11\n")
        out = tmp_path / "o.jsonl"
        run_ok(runner, [
            "synthesize", "--in", str(SAMPLE), "--table", str(TABLE),
            "--out", str(out), "--config", str(cfg),
        ])
        stats = json.loads(out.read_text(encoding="utf-8").splitlines()[0])
        cfg.write_text("not_a_real_key = 1\n")
        result = runner.invoke(main, [
            "synthesize", "--in", str(SAMPLE), "--table", str(TABLE),
            "--out", str(out), "--config", str(cfg),
        ])
        assert result.exit_code == 1
        assert "not_a_real_key" in result.output
