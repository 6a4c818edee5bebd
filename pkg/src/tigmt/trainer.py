"""Token-batched training loop with Noam learning-rate schedule, Adam,
and perplexity-patience early stopping.

A stage trains one checkpoint on one corpus until the development-set
perplexity stops improving (patience rule) or a step budget runs out,
and returns the checkpoint snapshotted at the best validation. The
step counter lives in the checkpoint, so the learning-rate schedule
continues across fine-tuning stages unless a stage resets it.
Everything is seeded and single-threaded: identical configs reproduce
bit-identical logs and checkpoints.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import model as M
from .metrics import EmptyCorpus, perplexity

logger = logging.getLogger(__name__)

IdPair = tuple[list[int], list[int]]


class VocabularyMismatch(Exception):
    pass


def noam_lr(step: int, d_model: int, warmup: int = 4000) -> float:
    """Inverse-sqrt schedule with linear warm-up; peaks at step == warmup."""
    if step < 1:
        raise ValueError("step must be >= 1")
    return d_model ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    m: dict[str, np.ndarray],
    v: dict[str, np.ndarray],
    t: int,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place (t is the 1-based step)."""
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise M.ShapeMismatch(f"gradient shape mismatch for {name}")
        m[name] *= beta1
        m[name] += (1.0 - beta1) * g
        v[name] *= beta2
        v[name] += (1.0 - beta2) * (g * g)
        p -= lr * (m[name] / bc1) / (np.sqrt(v[name] / bc2) + eps)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale gradients so their global L2 norm is at most max_norm."""
    total = math.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def _fisher_yates(n: int, rng) -> list[int]:
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def _pair_cost_len(pair: IdPair) -> int:
    # padded length of the longer side, before BOS/EOS framing
    return max(len(pair[0]), len(pair[1]))


def make_token_batches(
    pairs: Sequence[IdPair], max_tokens: int, seed: int
) -> list[M.Batch]:
    """Partition an epoch into batches capped by padded token count.

    Pairs are shuffled, then stably sorted by length so batches pad
    tightly; a batch closes when adding the next pair would push
    sentences x max(padded source, padded target) over max_tokens.
    Batch order is itself shuffled. Every pair appears exactly once.
    """
    if not pairs:
        return []
    rng = np.random.Generator(np.random.PCG64(seed))
    order = _fisher_yates(len(pairs), rng)
    order.sort(key=lambda i: _pair_cost_len(pairs[i]))
    groups: list[list[IdPair]] = []
    current: list[IdPair] = []
    width = 0
    for i in order:
        pair = pairs[i]
        new_width = max(width, _pair_cost_len(pair))
        if current and (len(current) + 1) * new_width > max_tokens:
            groups.append(current)
            current, width = [], 0
            new_width = _pair_cost_len(pair)
        if not current and new_width > max_tokens:
            logger.warning(
                "sentence of %d padded tokens exceeds token batch %d; "
                "emitting singleton batch", new_width, max_tokens,
            )
            groups.append([pair])
            continue
        current.append(pair)
        width = new_width
    if current:
        groups.append(current)
    batch_order = _fisher_yates(len(groups), rng)
    return [M.make_batch(groups[i]) for i in batch_order]


@dataclass(frozen=True)
class ValidationRecord:
    step: int
    perplexity: float
    learning_rate: float
    tokens_seen: int


@dataclass
class TrainLog:
    records: list[ValidationRecord] = field(default_factory=list)
    stop_reason: str = ""
    best_step: int = -1

    def append(self, record: ValidationRecord) -> None:
        if self.records and record.step <= self.records[-1].step:
            raise ValueError("validation steps must be strictly increasing")
        self.records.append(record)


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    best_step: Optional[int] = None


def early_stop_check(log: TrainLog, patience: int = 5) -> StopDecision:
    """Patience rule on development perplexity.

    Stop when the most recent `patience` validations all failed to
    improve on the best perplexity recorded before them; the returned
    best_step is the globally best validation (earliest on ties).
    """
    if patience < 1:
        raise ValueError("patience must be >= 1")
    ppls = [r.perplexity for r in log.records]
    if not ppls:
        raise ValueError("empty training log")
    if len(ppls) <= patience:
        return StopDecision(stop=False)
    prior_best = min(ppls[:-patience])
    if min(ppls[-patience:]) >= prior_best:
        best_idx = ppls.index(min(ppls))
        return StopDecision(stop=True, best_step=log.records[best_idx].step)
    return StopDecision(stop=False)


@dataclass
class StageConfig:
    """One training stage: corpus selection plus loop hyperparameters.

    languages/datasets are provenance filters applied by the pipeline
    when assembling this stage's training corpus (None = no filter).
    """

    name: str
    token_batch: int
    patience: int = 5
    validation_interval: int = 1000
    max_steps: Optional[int] = None
    seed: int = 0
    warmup: int = 4000
    reset_lr: bool = False
    clip_norm: float = 5.0
    languages: Optional[list[str]] = None
    datasets: Optional[list[str]] = None
    dev_size: Optional[int] = None

    def __post_init__(self):
        if self.token_batch < 1:
            raise ValueError("token_batch must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.validation_interval < 1:
            raise ValueError("validation_interval must be >= 1")


def clone_checkpoint(ckpt: M.Checkpoint) -> M.Checkpoint:
    return M.Checkpoint(
        config=ckpt.config,
        params={k: v.copy() for k, v in ckpt.params.items()},
        opt_m={k: v.copy() for k, v in ckpt.opt_m.items()},
        opt_v={k: v.copy() for k, v in ckpt.opt_v.items()},
        step=ckpt.step,
        src_vocab=list(ckpt.src_vocab),
        tgt_vocab=list(ckpt.tgt_vocab),
    )


def dev_perplexity(ckpt: M.Checkpoint, dev_batches: Sequence[M.Batch]) -> float:
    """Development-set perplexity with dropout off and no smoothing."""
    nll_total = 0.0
    tokens = 0
    for batch in dev_batches:
        logits = M.forward(ckpt, batch, train_mode=False)
        nll, count = M.loss(logits, batch.tgt_out, batch.tgt_mask, 0.0)
        nll_total += nll
        tokens += count
    if tokens == 0:
        raise EmptyCorpus("development set has no target tokens")
    return perplexity(nll_total, tokens)


def run_stage(
    start: M.Checkpoint,
    stage: StageConfig,
    train_pairs: Sequence[IdPair],
    dev_pairs: Sequence[IdPair],
    src_vocab: Optional[list[str]] = None,
    tgt_vocab: Optional[list[str]] = None,
) -> tuple[M.Checkpoint, TrainLog]:
    """Train one stage; return the checkpoint at the best validation.

    Validates every validation_interval steps (plus once at a max_steps
    cutoff); stops per early_stop_check or the step budget.
    """
    if src_vocab is not None and list(src_vocab) != list(start.src_vocab):
        raise VocabularyMismatch("stage source vocabulary differs from checkpoint")
    if tgt_vocab is not None and list(tgt_vocab) != list(start.tgt_vocab):
        raise VocabularyMismatch("stage target vocabulary differs from checkpoint")
    if stage.max_steps is not None and stage.max_steps == 0:
        return clone_checkpoint(start), TrainLog(stop_reason="max_steps")
    if not train_pairs:
        raise EmptyCorpus(f"stage {stage.name} has no training pairs")
    if not dev_pairs:
        raise EmptyCorpus(f"stage {stage.name} has no development pairs")

    ckpt = clone_checkpoint(start)
    cfg = ckpt.config
    dev_batches = make_token_batches(dev_pairs, stage.token_batch, seed=0)
    drop_rng = np.random.Generator(np.random.PCG64([stage.seed, 0x5EED]))

    log = TrainLog()
    best: Optional[M.Checkpoint] = None
    best_ppl = math.inf
    steps_done = 0
    tokens_seen = 0
    lr_base = ckpt.step if stage.reset_lr else 0
    since_validation = 0
    stop = False
    epoch = 0

    def validate() -> None:
        nonlocal best, best_ppl, stop, since_validation
        ppl = dev_perplexity(ckpt, dev_batches)
        lr = noam_lr(max(ckpt.step - lr_base, 1), cfg.d_model, stage.warmup)
        log.append(ValidationRecord(ckpt.step, ppl, lr, tokens_seen))
        since_validation = 0
        if ppl < best_ppl:
            best_ppl = ppl
            best = clone_checkpoint(ckpt)
        decision = early_stop_check(log, stage.patience)
        if decision.stop:
            log.stop_reason = "early_stop"
            log.best_step = decision.best_step
            stop = True

    while not stop:
        batches = make_token_batches(
            train_pairs, stage.token_batch, seed=stage.seed + 7919 * epoch
        )
        for batch in batches:
            ckpt.step += 1
            steps_done += 1
            grads, _, count = M.gradients(ckpt, batch, train_mode=True, rng=drop_rng)
            tokens_seen += count
            clip_gradients(grads, stage.clip_norm)
            lr = noam_lr(max(ckpt.step - lr_base, 1), cfg.d_model, stage.warmup)
            adam_step(ckpt.params, grads, ckpt.opt_m, ckpt.opt_v, ckpt.step, lr)
            since_validation += 1
            if since_validation >= stage.validation_interval:
                validate()
            if not stop and stage.max_steps is not None and steps_done >= stage.max_steps:
                if since_validation > 0:
                    validate()
                if not log.stop_reason:
                    log.stop_reason = "max_steps"
                stop = True
            if stop:
                break
        epoch += 1

    if best is None:
        best = ckpt
    if log.best_step < 0 and log.records:
        ppls = [r.perplexity for r in log.records]
        log.best_step = log.records[ppls.index(min(ppls))].step
    return best, log


def format_train_log(log: TrainLog) -> str:
    """Append-only line-oriented record format."""
    lines = [
        f"step={r.step} ppl={r.perplexity:.6f} lr={r.learning_rate:.8f} "
        f"tokens={r.tokens_seen}"
        for r in log.records
    ]
    if log.stop_reason:
        lines.append(f"# stop_reason={log.stop_reason} best_step={log.best_step}")
    return "\n".join(lines) + ("\n" if lines else "")
