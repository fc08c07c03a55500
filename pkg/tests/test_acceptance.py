"""Acceptance suite: one test per release criterion, stated tolerances pinned.

Each criterion prints a single PASS line with the measured numbers (run with
-s to see them); a failing assert is the fail line.
"""

import json
import math
import random
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from csreply.cli import main as cli_main
from csreply.codeswitch import MRPair, PhraseTable, SwitchConfig, synthesize_pair
from csreply.encoder import Dims, EncoderParams
from csreply.errors import NumericalError
from csreply.evaluation import mrr, random_baseline_mrr, run_eval
from csreply.ranker import RankConfig, diversify, lexical_dedup, score_all, suggest, top_n1
from csreply.responseset import ResponseEntry, ResponseSet
from csreply.textproc import tokenize
from csreply.trainer import Batch, TrainConfig, grad, similarity_matrix, symmetric_loss, translation_loss

DATA = Path(__file__).resolve().parent.parent / "data"


def report(name, detail):
    print(f"\nACCEPTANCE PASS: {name}: {detail}", flush=True)


class TestGradientCorrectness:
    def test_gradient_matches_central_finite_differences(self):
        """Analytic gradients of matching + translation loss vs h=1e-5
        central differences, rel err <= 1e-4, vocab 20 / dims 4-6-4 / B=3."""
        t0 = time.perf_counter()
        dims = Dims(4, 6, 4)
        rng = np.random.default_rng(123)
        u = lambda *s: rng.uniform(-1.0, 1.0, size=s)
        params = EncoderParams(
            E=u(20, 4), W1=u(6, 4), b1=u(6), Wm=u(4, 6), bm=u(4),
            Wr=u(4, 6), br=u(4), T=u(4, 4), dims=dims,
        )
        params.validate()
        batch = Batch(
            message_ids=[[1, 2, 3], [4, 5], [6, 7, 8, 9]],
            reply_ids=[[10, 11], [12], [13, 14, 15]],
            translation_ids=[[16, 17], [18], [19, 1]],
        )
        cfg = TrainConfig(lambda_tr=0.5)
        _, analytic = grad(params, batch, cfg)

        def total_loss():
            return symmetric_loss(similarity_matrix(params, batch)) + cfg.lambda_tr * translation_loss(
                params, batch
            )

        h = 1e-5
        worst = 0.0
        for name, arr in params.tensors().items():
            numeric = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                lp = total_loss()
                arr[idx] = orig - h
                lm = total_loss()
                arr[idx] = orig
                numeric[idx] = (lp - lm) / (2 * h)
            # rtol 1e-4 with a 1e-8 floor for exactly-zero components
            assert np.allclose(analytic[name], numeric, rtol=1e-4, atol=1e-8), name
            denom = np.maximum(np.maximum(np.abs(numeric), np.abs(analytic[name])), 1e-8)
            worst = max(worst, float(np.max(np.abs(analytic[name] - numeric) / denom)))
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0
        report("gradient correctness", f"max rel err {worst:.2e} (<=1e-4), runtime {elapsed:.2f}s (<5s)")


class TestSymmetricLossOracle:
    def test_symmetric_loss_equals_brute_force(self):
        def brute(s):
            b = s.shape[0]
            acc = 0.0
            for i in range(b):
                denom = sum(s[i][j] for j in range(b)) + sum(s[k][i] for k in range(b)) - s[i][i]
                acc += -math.log(s[i][i] / denom)
            return acc / b

        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(200):
            s = rng.uniform(0.05, 4.0, size=(3, 3))
            worst = max(worst, abs(symmetric_loss(s) - brute(s)))
            assert worst < 1e-12
        assert symmetric_loss(np.array([[3.14]])) == 0.0
        assert abs(symmetric_loss(np.full((2, 2), 1.7)) - math.log(3)) < 1e-12
        report(
            "symmetric loss oracle equivalence",
            f"200 random 3x3 within 1e-12 (worst {worst:.2e}); B=1 loss 0 exact; B=2 equal-entry ln3",
        )


class TestLearningSignal:
    def test_heldout_mrr_beats_random_baseline_20x(self, separable_run):
        baseline = random_baseline_mrr(500)
        rep = run_eval(
            separable_run["held_out"],
            separable_run["params"],
            separable_run["vocab"],
            separable_run["rset"],
            alpha=0.3,
        )
        assert len(separable_run["rset"]) == 500
        assert separable_run["elapsed_s"] < 300.0
        assert rep.mrr >= 20.0 * baseline
        report(
            "end-to-end learning signal",
            f"held-out MRR {rep.mrr:.4f} = {rep.mrr / baseline:.1f}x baseline {baseline:.6f} "
            f"(>=20x), train+build {separable_run['elapsed_s']:.1f}s (<300s)",
        )


class TestMrrHarness:
    def test_exact_value_and_monte_carlo(self):
        assert mrr([1, 2, 4]) == (1 + 0.5 + 0.25) / 3
        n, draws = 500, 10000
        expected = random_baseline_mrr(n)
        second_moment = sum(1.0 / r**2 for r in range(1, n + 1)) / n
        sigma = math.sqrt((second_moment - expected**2) / draws)
        rng = np.random.default_rng(99)
        empirical = float(np.mean(1.0 / rng.integers(1, n + 1, size=draws)))
        assert abs(empirical - expected) <= 3 * sigma
        report(
            "mrr harness",
            f"mrr([1,2,4])=0.58333... exact; MC {empirical:.6f} vs H500/500 {expected:.6f} "
            f"within 3 sigma ({3 * sigma:.6f})",
        )


class TestCodeSwitchRate:
    def make_pairs(self, n):
        table = PhraseTable(clause_map={f"k{i}": "sub" for i in range(10)})
        msg = "k0 , k1 , k2 , k3 , k4"
        rpl = "k5 , k6 , k7 , k8 , k9"
        return [MRPair(id=f"c{i}", message=msg, reply=rpl) for i in range(n)], table

    def test_rate_within_binomial_band_and_p0_identity(self):
        pairs, table = self.make_pairs(1000)
        rng = random.Random(4242)
        total = switched = 0
        for pair in pairs:
            _, n, s = synthesize_pair(pair, table, SwitchConfig(0.3, 4242), rng)
            total += n
            switched += s
        rate = switched / total
        assert total >= 10000
        assert abs(rate - 0.3) <= 0.014

        rng0 = random.Random(1)
        for pair in pairs[:50]:
            cs, _, s0 = synthesize_pair(pair, table, SwitchConfig(0.0, 1), rng0)
            assert cs.message == pair.message and cs.reply == pair.reply and s0 == 0
        report(
            "code-switch rate",
            f"{total} clauses at p=0.3 -> observed {rate:.4f} within +/-0.014; p=0 byte-identical",
        )


def random_response_set(rng, n_entries, d=16, k_intents=4):
    pool = ["ok", "sure", "yes", "no", "later", "soon", "great", "thanks", "maybe", "call", "home", "now"]
    entries = []
    seen = set()
    while len(entries) < n_entries:
        words = rng.choice(pool, size=int(rng.integers(1, 5)), replace=False)
        text = " ".join(words)
        if text in seen:
            continue
        seen.add(text)
        v = rng.normal(size=d)
        entries.append(
            ResponseEntry(
                text=text,
                token_ids=(),
                vector=v / np.linalg.norm(v),
                count=int(rng.integers(1, 50)),
                lm_score=float(-rng.uniform(0.05, 4.0)),
                intent_id=int(rng.integers(0, k_intents)),
            )
        )
    return ResponseSet(entries=tuple(entries), built_from="fixture", k_intents=k_intents)


class TestRankingPipelineGuarantees:
    def test_thousand_randomized_trials(self):
        rng = np.random.default_rng(2024)
        cfg = RankConfig(alpha=0.3, n1=20, n2=3, jaccard_threshold=0.5)
        diversity_checked = 0
        for _ in range(1000):
            rset = random_response_set(rng, n_entries=int(rng.integers(8, 40)))
            m = rng.normal(size=16)
            m /= np.linalg.norm(m)
            scores = score_all(m, rset, cfg.alpha)
            candidates = top_n1(scores, cfg.n1)
            reps = lexical_dedup(candidates, rset, cfg.jaccard_threshold)
            final = diversify(reps, rset, cfg.n2)

            # dedup guarantee: pairwise token-set Jaccard below threshold
            sets = [frozenset(tokenize(rset.entries[i].text)) for i in final]
            for i in range(len(sets)):
                for j in range(i + 1, len(sets)):
                    jac = len(sets[i] & sets[j]) / len(sets[i] | sets[j])
                    assert jac < cfg.jaccard_threshold

            # diversity guarantee
            rep_intents = {rset.entries[i].intent_id for i in reps}
            if len(rep_intents) >= 2 and cfg.n2 >= 2:
                diversity_checked += 1
                assert len({rset.entries[i].intent_id for i in final}) >= 2

            # argmax invariance under a constant lm shift
            shift = float(rng.uniform(-3.0, 3.0))
            shifted = ResponseSet(
                entries=tuple(
                    ResponseEntry(
                        text=e.text, token_ids=e.token_ids, vector=e.vector,
                        count=e.count, lm_score=e.lm_score + shift, intent_id=e.intent_id,
                    )
                    for e in rset.entries
                ),
                built_from=rset.built_from,
                k_intents=rset.k_intents,
            )
            scores2 = score_all(m, shifted, cfg.alpha)
            final2 = diversify(
                lexical_dedup(top_n1(scores2, cfg.n1), shifted, cfg.jaccard_threshold),
                shifted,
                cfg.n2,
            )
            assert final2 == final
        assert diversity_checked > 100
        report(
            "ranking pipeline guarantees",
            f"1000 trials: dedup pairwise < 0.5, diversity held in {diversity_checked} "
            "eligible trials, lm-shift left selections unchanged",
        )


class TestSuggestLatency:
    def test_mean_under_10ms_p95_under_25ms(self, big_rset):
        params, vocab, rset = big_rset["params"], big_rset["vocab"], big_rset["rset"]
        assert len(rset) == 10000 and params.dims.d_out == 64
        cfg = RankConfig()
        messages = [f"reply number {i} about thing{i % 997}" for i in range(0, 3000, 10)]
        suggest(messages[0], params, vocab, rset, cfg)  # warm-up
        times = []
        for msg in messages:
            t0 = time.perf_counter()
            suggest(msg, params, vocab, rset, cfg)
            times.append((time.perf_counter() - t0) * 1000.0)
        mean = float(np.mean(times))
        p95 = float(np.percentile(times, 95))
        assert mean < 10.0
        assert p95 < 25.0
        report(
            "suggest latency",
            f"|R|=10000, d_out=64, {len(times)} calls: mean {mean:.2f}ms (<10), p95 {p95:.2f}ms (<25)",
        )


def strip_latency(doc):
    doc = dict(doc)
    doc.pop("latency_mean_ms", None)
    doc.pop("latency_p95_ms", None)
    return doc


class TestArtifactDeterminism:
    def run_pipeline(self, runner, root):
        corpus = root / "corpus.jsonl"
        ckpt = root / "model.json"
        rset = root / "responses.json"
        rep = root / "report.json"
        steps = [
            ["synthesize", "--in", str(DATA / "sample_en.jsonl"), "--table",
             str(DATA / "phrase_table_hi.tsv"), "--out", str(corpus), "--seed", "5"],
            ["train", "--corpus", str(corpus), "--out", str(ckpt), "--epochs", "3",
             "--batch-size", "8", "--seed", "5"],
            ["build-responses", "--corpus", str(corpus), "--model", str(ckpt), "--out", str(rset)],
            ["eval", "--corpus", str(corpus), "--model", str(ckpt), "--responses", str(rset),
             "--out", str(rep)],
        ]
        for step in steps:
            result = runner.invoke(cli_main, step, catch_exceptions=False)
            assert result.exit_code == 0, result.output
        return corpus, ckpt, rset, rep

    def test_reruns_are_byte_identical(self, tmp_path):
        runner = CliRunner()
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir(), b.mkdir()
        arts_a = self.run_pipeline(runner, a)
        arts_b = self.run_pipeline(runner, b)

        corpus_a, ckpt_a, rset_a, rep_a = arts_a
        corpus_b, ckpt_b, rset_b, rep_b = arts_b
        assert corpus_a.read_bytes() == corpus_b.read_bytes()
        assert ckpt_a.read_bytes() == ckpt_b.read_bytes()
        assert rset_a.read_bytes() == rset_b.read_bytes()
        assert (a / "model_loss.csv").read_bytes() == (b / "model_loss.csv").read_bytes()

        doc_a = strip_latency(json.loads(rep_a.read_text(encoding="utf-8")))
        doc_b = strip_latency(json.loads(rep_b.read_text(encoding="utf-8")))
        assert doc_a == doc_b

        rows_a = (a / "report.csv").read_text().splitlines()
        rows_b = (b / "report.csv").read_text().splitlines()
        assert [r.rsplit(",", 1)[0] for r in rows_a] == [r.rsplit(",", 1)[0] for r in rows_b]
        report(
            "artifact determinism",
            "synthesize/train/build-responses/eval reruns byte-identical (latency fields exempt)",
        )
