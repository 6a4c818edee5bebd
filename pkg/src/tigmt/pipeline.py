"""Staged transfer-learning orchestration.

Runs the full development pipeline: load and tokenize the corpora,
hold out a test set, train one BPE model per script on the stage-1
mix, build the shared vocabularies, then execute the training stages
in order, feeding each stage's best checkpoint into the next and
scoring the test set after every stage. Baseline mode drops the first
(multilingual) stage and trains on the remaining stages only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Optional

import yaml

from . import corpus as C
from . import model as M
from . import subword as S
from . import trainer as T
from .metrics import EvalPair, MetricReport, bleu, chrf, meteor_lite
from .textnorm import tokenize_geez, tokenize_latin


class ConfigInvalid(Exception):
    pass


@dataclass(frozen=True)
class ModelSettings:
    """Architecture hyperparameters (vocab sizes are derived from BPE)."""

    layers: int = 2
    heads: int = 2
    d_model: int = 64
    d_ff: int = 256
    dropout: float = 0.1
    label_smoothing: float = 0.1
    max_position: int = 512


@dataclass
class PipelineConfig:
    datasets: list[C.DatasetSpec]
    stages: list[T.StageConfig]
    model: ModelSettings = field(default_factory=ModelSettings)
    bpe_merges: int = 6000
    baseline_mode: bool = False
    test_dataset: Optional[str] = None
    test_size: int = 200
    dev_size: int = 1000
    split_seed: int = 1
    init_seed: int = 1
    eval_max_len: int = 64
    output_dir: Optional[str] = None

    def __post_init__(self):
        if not self.stages:
            raise ConfigInvalid("pipeline needs at least one stage")
        if self.baseline_mode and len(self.stages) < 2:
            raise ConfigInvalid("baseline mode drops the first stage; need >= 2")


@dataclass
class StageResult:
    stage_name: str
    checkpoint: M.Checkpoint
    log: T.TrainLog
    report: MetricReport


def tokenize_pair(pair: C.SentencePair) -> C.SentencePair:
    """Ge'ez tokenization for the source side, Moses-style for the
    English target side."""
    return C.SentencePair(
        source=list(tokenize_geez(pair.source)),
        target=list(tokenize_latin(pair.target)),
        dataset=pair.dataset,
        language=pair.language,
    )


def _encode_side(tokens, bpe: S.BpeModel, index: dict[str, int]) -> list[int]:
    return [index.get(sym, M.UNK_ID) for sym in S.apply_bpe(tokens, bpe)]


def encode_pairs(
    pairs,
    src_bpe: S.BpeModel,
    tgt_bpe: S.BpeModel,
    src_index: dict[str, int],
    tgt_index: dict[str, int],
) -> list[T.IdPair]:
    return [
        (
            _encode_side(p.source, src_bpe, src_index),
            _encode_side(p.target, tgt_bpe, tgt_index),
        )
        for p in pairs
    ]


def _select(pool: C.ParallelCorpus, stage: T.StageConfig) -> C.ParallelCorpus:
    pairs = pool.pairs
    if stage.languages is not None:
        wanted = {C.Language(lang) for lang in stage.languages}
        pairs = [p for p in pairs if p.language in wanted]
    if stage.datasets is not None:
        pairs = [p for p in pairs if p.dataset in stage.datasets]
    return C.ParallelCorpus(list(pairs))


@dataclass
class PreparedData:
    """Tokenized pool with held-out test set, BPE models and vocabularies."""

    pool: C.ParallelCorpus
    test: C.ParallelCorpus
    src_bpe: S.BpeModel
    tgt_bpe: S.BpeModel
    src_vocab: list[str]
    tgt_vocab: list[str]
    src_index: dict[str, int]
    tgt_index: dict[str, int]


def prepare_data(config: PipelineConfig) -> PreparedData:
    tokenized: list[C.SentencePair] = []
    test_pairs: list[C.SentencePair] = []
    for spec in config.datasets:
        loaded = C.load_parallel(spec)
        pairs = C.ParallelCorpus([tokenize_pair(p) for p in loaded])
        if config.test_dataset is not None and spec.name == config.test_dataset:
            train, _, test = C.split(pairs, config.test_size, 0, config.split_seed)
            tokenized.extend(train)
            test_pairs.extend(test)
        else:
            tokenized.extend(pairs)
    pool = C.ParallelCorpus(tokenized)
    if config.test_dataset is not None and not test_pairs:
        raise ConfigInvalid(f"test dataset {config.test_dataset!r} not in manifest")

    # One BPE model per script, trained on the full stage-1 mix so every
    # stage (and the baseline arm) shares a single vocabulary.
    src_counts = S.count_words(p.source for p in pool)
    tgt_counts = S.count_words(p.target for p in pool)
    src_bpe = S.train_bpe(src_counts, config.bpe_merges)
    tgt_bpe = S.train_bpe(tgt_counts, config.bpe_merges)
    src_vocab = S.vocabulary(src_bpe, src_counts)
    tgt_vocab = S.vocabulary(tgt_bpe, tgt_counts)
    return PreparedData(
        pool=pool,
        test=C.ParallelCorpus(test_pairs),
        src_bpe=src_bpe,
        tgt_bpe=tgt_bpe,
        src_vocab=src_vocab,
        tgt_vocab=tgt_vocab,
        src_index={s: i for i, s in enumerate(src_vocab)},
        tgt_index={s: i for i, s in enumerate(tgt_vocab)},
    )


def evaluate_checkpoint(
    ckpt: M.Checkpoint,
    data: PreparedData,
    system_name: str,
    max_len: int = 64,
) -> MetricReport:
    """Greedy-decode the held-out test set and score the token output."""
    pairs = []
    for p in data.test:
        src_ids = _encode_side(p.source, data.src_bpe, data.src_index)
        out_ids = M.greedy_decode(ckpt, src_ids, max_len=max_len)
        symbols = [ckpt.tgt_vocab[i] for i in out_ids]
        hyp = S.decode_bpe(symbols, data.tgt_bpe.eow_marker)
        pairs.append(EvalPair(hyp, list(p.target)))
    return MetricReport(
        bleu=bleu(pairs),
        chrf=chrf(pairs),
        meteor=meteor_lite(pairs),
        system_name=system_name,
    )


def run_pipeline(config: PipelineConfig) -> list[StageResult]:
    """Execute the configured stages in order and score each stage."""
    data = prepare_data(config)
    cfg = M.ModelConfig(
        layers=config.model.layers,
        heads=config.model.heads,
        d_model=config.model.d_model,
        d_ff=config.model.d_ff,
        src_vocab=len(data.src_vocab),
        tgt_vocab=len(data.tgt_vocab),
        dropout=config.model.dropout,
        label_smoothing=config.model.label_smoothing,
        max_position=config.model.max_position,
    )
    ckpt = M.init_checkpoint(
        cfg, data.src_vocab, data.tgt_vocab, seed=config.init_seed
    )
    stages = config.stages[1:] if config.baseline_mode else config.stages

    results: list[StageResult] = []
    for stage in stages:
        stage_corpus = _select(data.pool, stage)
        dev_size = stage.dev_size if stage.dev_size is not None else config.dev_size
        dev_size = min(dev_size, max(len(stage_corpus) - 1, 0))
        train_c, dev_c, _ = C.split(stage_corpus, 0, dev_size, seed=stage.seed)
        train_ids = encode_pairs(
            train_c, data.src_bpe, data.tgt_bpe, data.src_index, data.tgt_index
        )
        dev_ids = encode_pairs(
            dev_c, data.src_bpe, data.tgt_bpe, data.src_index, data.tgt_index
        )
        ckpt, log = T.run_stage(
            ckpt, stage, train_ids, dev_ids,
            src_vocab=data.src_vocab, tgt_vocab=data.tgt_vocab,
        )
        if len(data.test):
            report = evaluate_checkpoint(
                ckpt, data, stage.name, max_len=config.eval_max_len
            )
        else:
            report = MetricReport(0.0, 0.0, 0.0, stage.name)
        results.append(StageResult(stage.name, ckpt, log, report))
        if config.output_dir:
            os.makedirs(config.output_dir, exist_ok=True)
            M.save_checkpoint(
                ckpt, os.path.join(config.output_dir, f"{stage.name}.ckpt")
            )
            with open(
                os.path.join(config.output_dir, f"{stage.name}.log"),
                "w", encoding="utf-8",
            ) as fh:
                fh.write(T.format_train_log(log))
    return results


def run_experiment(config: PipelineConfig) -> list[MetricReport]:
    """Both arms of the transfer experiment: the staged pipeline plus the
    baseline that skips the multilingual stage. Returns the results-table
    rows: the baseline arm's final system, then one row per stage."""
    staged = run_pipeline(replace(config, baseline_mode=False))
    baseline = run_pipeline(replace(config, baseline_mode=True))
    final_baseline = baseline[-1].report
    rows = [replace(final_baseline, system_name="baseline")]
    rows.extend(r.report for r in staged)
    return rows


def load_pipeline_config(path: str) -> PipelineConfig:
    """Parse the declarative YAML pipeline config."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigInvalid("pipeline config must be a mapping")
    try:
        if "manifest" in raw:
            datasets = C.load_manifest(os.path.join(base, raw["manifest"]))
        else:
            datasets = [
                C.DatasetSpec(
                    name=d["name"],
                    language=C.Language(d["language"]),
                    source_path=os.path.join(base, d["source_path"]),
                    target_path=os.path.join(base, d["target_path"]),
                    expected_count=d.get("expected_count"),
                )
                for d in raw["datasets"]
            ]
        stages = [T.StageConfig(**s) for s in raw["stages"]]
        model = ModelSettings(**raw.get("model", {}))
        extras = {
            k: raw[k]
            for k in (
                "bpe_merges", "baseline_mode", "test_dataset", "test_size",
                "dev_size", "split_seed", "init_seed", "eval_max_len",
            )
            if k in raw
        }
        output_dir = raw.get("output_dir")
        if output_dir is not None:
            output_dir = os.path.join(base, output_dir)
        return PipelineConfig(
            datasets=datasets, stages=stages, model=model,
            output_dir=output_dir, **extras,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"invalid pipeline config: {exc}") from exc
