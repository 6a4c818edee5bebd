"""Corpus-level MT evaluation: BLEU, ChrF, Meteor-lite, perplexity.

All metrics consume pre-tokenized sentences (tokenization policy lives
in textnorm) and return scores in [0, 100]. Meteor is the "lite"
variant: exact-match unigram alignment only, no stemming or synonymy,
reported separately from full Meteor to avoid claiming parity.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence


@dataclass(frozen=True)
class MetricReport:
    """One system's corpus-level scores (a results-table row)."""

    bleu: float
    chrf: float
    meteor: float
    system_name: str
    perplexity: Optional[float] = None

    def __post_init__(self):
        for name in ("bleu", "chrf", "meteor"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"{name} score {value} outside [0, 100]")


class EvalPair(NamedTuple):
    hypothesis: Sequence[str]
    reference: Sequence[str]


class EmptyCorpus(Exception):
    pass


class ZeroTokens(Exception):
    pass


def _ngrams(seq: Sequence, n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def bleu(pairs: Sequence[EvalPair], max_n: int = 4) -> float:
    """Corpus BLEU: geometric mean of clipped n-gram precisions times the
    brevity penalty, scaled to [0, 100]. Any zero pooled precision gives 0
    (no smoothing)."""
    pairs = [EvalPair(*p) for p in pairs]
    if not pairs:
        raise EmptyCorpus("bleu needs at least one hypothesis/reference pair")
    for p in pairs:
        if len(p.reference) == 0:
            raise EmptyCorpus("empty reference")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = sum(len(p.hypothesis) for p in pairs)
    ref_len = sum(len(p.reference) for p in pairs)
    for hyp, ref in pairs:
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            ref_counts = _ngrams(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            matches[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in hyp_counts.items()
            )
    if hyp_len == 0:
        return 0.0
    # Orders longer than every hypothesis have no n-grams at all; they are
    # skipped rather than counted as zero precision so that identical
    # corpora always score 100 regardless of sentence length.
    pooled = [(m, t) for m, t in zip(matches, totals) if t > 0]
    if not pooled or any(m == 0 for m, _ in pooled):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in pooled) / len(pooled)
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    return bp * math.exp(log_precision) * 100.0


def chrf(pairs: Sequence[EvalPair], max_n: int = 6, beta: float = 2.0) -> float:
    """Character n-gram F-score, pooled over the corpus, whitespace
    excluded from the character stream."""
    pairs = [EvalPair(*p) for p in pairs]
    if not pairs:
        raise EmptyCorpus("chrf needs at least one hypothesis/reference pair")
    matches = [0] * max_n
    hyp_totals = [0] * max_n
    ref_totals = [0] * max_n
    for hyp, ref in pairs:
        hyp_chars = "".join(hyp)
        ref_chars = "".join(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp_chars, n)
            ref_counts = _ngrams(ref_chars, n)
            hyp_totals[n - 1] += sum(hyp_counts.values())
            ref_totals[n - 1] += sum(ref_counts.values())
            matches[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in hyp_counts.items()
            )
    precisions, recalls = [], []
    for n in range(max_n):
        if hyp_totals[n] == 0 and ref_totals[n] == 0:
            continue  # order longer than every sentence on both sides
        precisions.append(matches[n] / hyp_totals[n] if hyp_totals[n] else 0.0)
        recalls.append(matches[n] / ref_totals[n] if ref_totals[n] else 0.0)
    if not precisions:
        return 0.0
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    denom = beta * beta * p + r
    if denom == 0.0:
        return 0.0
    return (1 + beta * beta) * p * r / denom * 100.0


def _align(hyp: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """Leftmost-greedy exact unigram alignment: each hypothesis token takes
    the leftmost unmatched identical reference token."""
    pos_by_word: dict[str, list[int]] = {}
    for j, w in enumerate(ref):
        pos_by_word.setdefault(w, []).append(j)
    cursor: dict[str, int] = {}
    alignment = []
    for i, w in enumerate(hyp):
        slots = pos_by_word.get(w)
        if not slots:
            continue
        k = cursor.get(w, 0)
        if k < len(slots):
            alignment.append((i, slots[k]))
            cursor[w] = k + 1
    return alignment


def _chunks(alignment: list[tuple[int, int]]) -> int:
    """Maximal runs contiguous in both hypothesis and reference order."""
    if not alignment:
        return 0
    alignment = sorted(alignment)
    chunks = 1
    for (i0, j0), (i1, j1) in zip(alignment, alignment[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            chunks += 1
    return chunks


def meteor_lite(
    pairs: Sequence[EvalPair],
    alpha: float = 0.9,
    beta: float = 3.0,
    gamma: float = 0.5,
) -> float:
    """Exact-match Meteor variant: per-sentence harmonic-mean F with a
    fragmentation penalty, corpus score as the reference-length-weighted
    mean, scaled to [0, 100]."""
    pairs = [EvalPair(*p) for p in pairs]
    if not pairs:
        raise EmptyCorpus("meteor_lite needs at least one pair")
    total_weight = 0.0
    total_score = 0.0
    for hyp, ref in pairs:
        if len(ref) == 0:
            raise EmptyCorpus("empty reference")
        weight = len(ref)
        total_weight += weight
        alignment = _align(hyp, ref)
        m = len(alignment)
        if m == 0 or len(hyp) == 0:
            continue
        p = m / len(hyp)
        r = m / len(ref)
        f = p * r / (alpha * p + (1 - alpha) * r)
        penalty = gamma * (_chunks(alignment) / m) ** beta
        total_score += weight * f * (1.0 - penalty)
    return total_score / total_weight * 100.0


def perplexity(nll_sum: float, token_count: int) -> float:
    """exp of mean per-token negative log-likelihood (nats)."""
    if token_count <= 0:
        raise ZeroTokens("perplexity needs a positive token count")
    return math.exp(nll_sum / token_count)
