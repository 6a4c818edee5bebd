"""System-level acceptance gate.

Each test covers one acceptance criterion and prints a PASS line on
success (run with -s to see them). The transfer and convergence tests
train real models and take several minutes on a laptop CPU.
"""

import os
import string
import time

import numpy as np
import pytest

from tigmt import corpus as C
from tigmt import model as M
from tigmt import pipeline as P
from tigmt import subword as S
from tigmt import trainer as T
from tigmt.metrics import EvalPair, bleu, chrf
from tests.oracles import (
    apply_bpe_replay,
    bleu_bruteforce,
    chrf_bruteforce,
    patience_check_bruteforce,
)


def report(name):
    print(f"\n[PASS] {name}")


class TestMetricOracleEquivalence:
    def test_fuzz_against_bruteforce(self):
        started = time.monotonic()
        rng = np.random.default_rng(2024)
        alphabet = ["a", "b", "c", "ab", "the", "cat"]
        for _ in range(500):
            n = int(rng.integers(1, 6))
            pairs = []
            for _ in range(n):
                hyp = [alphabet[k] for k in rng.integers(0, len(alphabet),
                                                         rng.integers(0, 7))]
                ref = [alphabet[k] for k in rng.integers(0, len(alphabet),
                                                         rng.integers(1, 7))]
                pairs.append(EvalPair(hyp, ref))
            if all(len(p.hypothesis) == 0 for p in pairs):
                pairs[0] = EvalPair(["a"], pairs[0].reference)
            assert bleu(pairs) == pytest.approx(bleu_bruteforce(pairs), abs=1e-9)
            assert chrf(pairs) == pytest.approx(chrf_bruteforce(pairs), abs=1e-9)
            identity = [EvalPair(list(p.reference), list(p.reference))
                        for p in pairs]
            assert bleu(identity) == 100.0
            assert chrf(identity) == 100.0
        elapsed = time.monotonic() - started
        assert elapsed < 30.0
        report(f"metric oracle equivalence (500 corpora, {elapsed:.1f}s)")


class TestBpeRoundtrip:
    def test_handtraced_merge_sequence(self):
        counts = {"low": 5, "lower": 2, "newest": 6, "widest": 3}
        model = S.train_bpe(counts, 5)
        assert model.merges == [
            ("e", "s"), ("es", "t"), ("est", "</w>"), ("l", "o"), ("lo", "w"),
        ]
        report("BPE hand-traced merge sequence")

    def test_roundtrip_fuzz(self):
        rng = np.random.default_rng(7)
        letters = list(string.ascii_lowercase[:8])
        sentences_per_model = 50  # 20 models x 50 = 1,000 sentences
        for model_i in range(20):
            # fuzz a model by training on a random word-frequency table
            table = {}
            for _ in range(int(rng.integers(3, 12))):
                word = "".join(letters[k] for k in
                               rng.integers(0, len(letters), rng.integers(1, 7)))
                table[word] = int(rng.integers(1, 50))
            model = S.train_bpe(table, int(rng.integers(0, 15)))
            for _ in range(sentences_per_model):
                sentence = []
                for _ in range(int(rng.integers(1, 8))):
                    word = "".join(letters[k] for k in
                                   rng.integers(0, len(letters),
                                                rng.integers(1, 9)))
                    sentence.append(word)
                segmented = S.apply_bpe(sentence, model)
                assert S.decode_bpe(segmented, model.eow_marker) == sentence
                replayed = [sym for word in sentence
                            for sym in apply_bpe_replay(
                                word, model.merges, model.eow_marker)]
                assert segmented == replayed
        report("BPE roundtrip (1,000 sentences x 20 fuzzed models)")


class TestGradientCheck:
    def test_finite_differences(self):
        started = time.monotonic()
        cfg = M.ModelConfig(layers=2, heads=2, d_model=64, d_ff=256,
                            src_vocab=20, tgt_vocab=20, dropout=0.0,
                            label_smoothing=0.1, max_position=32)
        sv = [f"s{i}" for i in range(20)]
        tv = [f"t{i}" for i in range(20)]
        worst = 0.0
        for seed in range(5):
            ckpt = M.init_checkpoint(cfg, sv, tv, seed=seed, dtype=np.float64)
            rng = np.random.default_rng(100 + seed)
            pairs = [
                ([int(x) for x in rng.integers(4, 20, rng.integers(2, 6))],
                 [int(x) for x in rng.integers(4, 20, rng.integers(2, 6))])
                for _ in range(2)
            ]
            batch = M.make_batch(pairs)
            grads, _, _ = M.gradients(ckpt, batch, train_mode=False)

            def mean_loss():
                logits = M.forward(ckpt, batch)
                total, count = M.loss(
                    logits, batch.tgt_out, batch.tgt_mask, cfg.label_smoothing
                )
                return total / count

            names = rng.choice(sorted(ckpt.params), size=20, replace=False)
            h = 1e-6
            for name in names:
                arr = ckpt.params[name]
                idx = tuple(int(rng.integers(0, d)) for d in arr.shape)
                orig = arr[idx]
                arr[idx] = orig + h
                up = mean_loss()
                arr[idx] = orig - h
                down = mean_loss()
                arr[idx] = orig
                fd = (up - down) / (2 * h)
                analytic = grads[name][idx]
                if abs(fd) < 1e-8 and abs(analytic) < 1e-8:
                    # zero-gradient direction (e.g. attention key biases
                    # cancel in softmax); FD only yields rounding noise
                    continue
                rel = abs(fd - analytic) / max(abs(fd), abs(analytic))
                worst = max(worst, rel)
                assert rel < 1e-4, f"{name}{idx}: fd={fd} analytic={analytic}"
        elapsed = time.monotonic() - started
        assert elapsed < 120.0
        report(f"gradient check (20 params x 5 seeds, worst rel err "
               f"{worst:.2e}, {elapsed:.1f}s)")


class TestEarlyStopping:
    def test_1000_random_traces(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            length = int(rng.integers(1, 25))
            # mix smooth decays with noisy plateaus so both outcomes occur
            base = float(rng.uniform(2, 50))
            trend = rng.choice([-0.5, 0.0, 0.3])
            ppls = [max(1.0, base + trend * i + float(rng.normal(0, 2)))
                    for i in range(length)]
            if rng.random() < 0.3:
                ppls = [round(p, 1) for p in ppls]  # force ties
            patience = int(rng.integers(1, 7)) if rng.random() < 0.5 else 5
            log = T.TrainLog()
            for i, p in enumerate(ppls, 1):
                log.append(T.ValidationRecord(i * 10, p, 1e-3, i))
            got = T.early_stop_check(log, patience)
            assert got.stop == patience_check_bruteforce(ppls, patience)
        report("early stopping vs brute force (1,000 traces)")


N_WORDS = 300


def _gen_rows(rng, n, prefix):
    rows = []
    for _ in range(n):
        ids = rng.integers(0, N_WORDS, int(rng.integers(3, 9)))
        rows.append((" ".join(f"{prefix}{k}" for k in ids),
                     " ".join(f"y{k}" for k in ids)))
    return rows


def _write(dirpath, name, rows):
    src = os.path.join(dirpath, f"{name}.src")
    tgt = os.path.join(dirpath, f"{name}.tgt")
    with open(src, "w", encoding="utf-8") as fh:
        fh.write("\n".join(r[0] for r in rows) + "\n")
    with open(tgt, "w", encoding="utf-8") as fh:
        fh.write("\n".join(r[1] for r in rows) + "\n")
    return src, tgt


@pytest.fixture(scope="module")
def transfer_datasets(tmp_path_factory):
    d = str(tmp_path_factory.mktemp("transfer"))
    rng = np.random.default_rng(1234)
    a = _write(d, "lang_a", _gen_rows(rng, 50000, "x"))
    bg = _write(d, "b_general", _gen_rows(rng, 300, "z"))
    bd = _write(d, "b_domain", _gen_rows(rng, 260, "z"))
    return [
        C.DatasetSpec("lang_a", C.Language.AMHARIC, *a),
        C.DatasetSpec("b_general", C.Language.TIGRINYA, *bg),
        C.DatasetSpec("b_domain", C.Language.TIGRINYA, *bd),
    ]


def transfer_config(datasets, seed):
    stages = [
        T.StageConfig(name="multilingual", token_batch=1024, max_steps=250,
                      validation_interval=50, patience=3, warmup=100,
                      seed=seed),
        T.StageConfig(name="tigrinya", token_batch=512, max_steps=80,
                      validation_interval=20, patience=3, warmup=100,
                      seed=seed + 1, languages=["tigrinya"], dev_size=50),
        T.StageConfig(name="in_domain", token_batch=512, max_steps=60,
                      validation_interval=20, patience=3, warmup=100,
                      seed=seed + 2, datasets=["b_domain"], dev_size=40),
    ]
    return P.PipelineConfig(
        datasets=datasets, stages=stages,
        model=P.ModelSettings(layers=2, heads=2, d_model=64, d_ff=256),
        bpe_merges=0, test_dataset="b_domain", test_size=60, dev_size=500,
        split_seed=seed, init_seed=seed, eval_max_len=40,
    )


class TestTransferLearning:
    def test_pretraining_beats_baseline(self, transfer_datasets):
        started = time.monotonic()
        wins = 0
        scores = []
        for seed in range(5):
            rows = P.run_experiment(transfer_config(transfer_datasets,
                                                    seed * 100))
            baseline, staged = rows[0].bleu, rows[-1].bleu
            scores.append((staged, baseline))
            wins += staged >= baseline
        elapsed = time.monotonic() - started
        assert wins >= 4, f"staged arm won only {wins}/5 seeds: {scores}"
        assert elapsed < 1800.0
        report(f"transfer learning ({wins}/5 seeds, "
               + " ".join(f"{s:.1f}vs{b:.1f}" for s, b in scores)
               + f", {elapsed / 60:.1f}min)")


class TestPipelineDeterminism:
    def test_bit_identical_runs(self, transfer_datasets):
        # small stages, but the full staged codepath
        cfg = transfer_config(transfer_datasets, 9)
        for stage in cfg.stages:
            stage.max_steps = 6
            stage.validation_interval = 3
        cfg.dev_size = 100
        a = P.run_pipeline(cfg)
        b = P.run_pipeline(cfg)
        for ra, rb in zip(a, b):
            for name in ra.checkpoint.params:
                np.testing.assert_array_equal(ra.checkpoint.params[name],
                                              rb.checkpoint.params[name])
                np.testing.assert_array_equal(ra.checkpoint.opt_m[name],
                                              rb.checkpoint.opt_m[name])
            assert ra.checkpoint.step == rb.checkpoint.step
            assert ra.log.records == rb.log.records
            assert ra.log.stop_reason == rb.log.stop_reason
            assert ra.report == rb.report
        report("pipeline determinism (bit-identical checkpoints and logs)")


class TestCopyTaskConvergence:
    def test_dev_perplexity_under_threshold(self):
        rng = np.random.default_rng(55)
        vocab_size = 30
        pairs = []
        for _ in range(5000):
            ids = [int(x) for x in rng.integers(4, vocab_size,
                                                int(rng.integers(3, 11)))]
            pairs.append((ids, ids))
        train, dev = pairs[:4800], pairs[4800:]
        cfg = M.ModelConfig(layers=2, heads=2, d_model=64, d_ff=256,
                            src_vocab=vocab_size, tgt_vocab=vocab_size,
                            dropout=0.1, label_smoothing=0.1, max_position=32)
        names = [f"w{i}" for i in range(vocab_size)]
        ckpt = M.init_checkpoint(cfg, names, names, seed=3)
        stage = T.StageConfig(name="copy", token_batch=1024, max_steps=600,
                              validation_interval=100, patience=5, warmup=200,
                              seed=3)
        best, log = T.run_stage(ckpt, stage, train, dev)
        best_ppl = min(r.perplexity for r in log.records)
        assert log.records[-1].step <= 5000
        assert best_ppl < 1.5, f"best dev perplexity {best_ppl}"
        report(f"copy-task convergence (ppl {best_ppl:.3f} "
               f"by step {best.step})")


class TestServeContract:
    def test_http_contract(self, tmp_path):
        from fastapi.testclient import TestClient

        from tigmt.serve import TranslationEngine, build_app

        vocab = ["<unk>", "<s>", "</s>", "<pad>", "a</w>", "b</w>"]
        cfg = M.ModelConfig(layers=1, heads=2, d_model=8, d_ff=16,
                            src_vocab=6, tgt_vocab=6, dropout=0.0,
                            max_position=8)
        ckpt = M.init_checkpoint(cfg, vocab, vocab, seed=2)
        ckpt_path = str(tmp_path / "toy.ckpt")
        M.save_checkpoint(ckpt, ckpt_path)
        bpe_path = str(tmp_path / "toy.bpe")
        S.save_model(S.BpeModel(merges=[]), bpe_path)
        engine = TranslationEngine.load(ckpt_path, bpe_path, bpe_path)
        client = TestClient(build_app(engine))

        ok = client.post("/translate", json={"text": "a b", "max_len": 4})
        assert ok.status_code == 200
        body = ok.json()
        assert set(body) == {"translation", "tokens", "model_id", "latency_ms"}

        assert client.post("/translate", json={"text": ""}).status_code == 400
        assert client.post("/translate",
                           json={"text": "a " * 20}).status_code == 413
        report("serve contract (200 / 400 / 413)")
