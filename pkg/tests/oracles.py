"""Independent brute-force reference implementations used to freeze and
cross-check expected values. Deliberately naive: list scans and
exhaustive enumeration instead of the production code paths."""

import math


def _ngram_list(seq, n):
    return [tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)]


def bleu_bruteforce(pairs, max_n=4):
    hyp_len = sum(len(h) for h, _ in pairs)
    ref_len = sum(len(r) for _, r in pairs)
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    orders = 0
    for n in range(1, max_n + 1):
        clipped = 0
        total = 0
        for hyp, ref in pairs:
            hyp_grams = _ngram_list(hyp, n)
            ref_grams = _ngram_list(ref, n)
            total += len(hyp_grams)
            for gram in set(hyp_grams):
                clipped += min(hyp_grams.count(gram), ref_grams.count(gram))
        if total == 0:
            continue
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total)
        orders += 1
    if orders == 0:
        return 0.0
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    return bp * math.exp(log_sum / orders) * 100.0


def chrf_bruteforce(pairs, max_n=6, beta=2.0):
    precisions = []
    recalls = []
    for n in range(1, max_n + 1):
        overlap = 0
        hyp_total = 0
        ref_total = 0
        for hyp, ref in pairs:
            hyp_grams = _ngram_list("".join(hyp), n)
            ref_grams = _ngram_list("".join(ref), n)
            hyp_total += len(hyp_grams)
            ref_total += len(ref_grams)
            for gram in set(hyp_grams):
                overlap += min(hyp_grams.count(gram), ref_grams.count(gram))
        if hyp_total == 0 and ref_total == 0:
            continue
        precisions.append(overlap / hyp_total if hyp_total else 0.0)
        recalls.append(overlap / ref_total if ref_total else 0.0)
    if not precisions:
        return 0.0
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    if beta * beta * p + r == 0:
        return 0.0
    return (1 + beta * beta) * p * r / (beta * beta * p + r) * 100.0


def meteor_align_bruteforce(hyp, ref):
    """Leftmost-greedy alignment by explicit scanning."""
    taken = [False] * len(ref)
    alignment = []
    for i, word in enumerate(hyp):
        for j, ref_word in enumerate(ref):
            if not taken[j] and ref_word == word:
                taken[j] = True
                alignment.append((i, j))
                break
    return alignment


def apply_bpe_replay(token, merges, eow="</w>"):
    """Literal replay of the merge list in model order."""
    symbols = list(token) + [eow]
    for left, right in merges:
        out = []
        i = 0
        while i < len(symbols):
            if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
                out.append(left + right)
                i += 2
            else:
                out.append(symbols[i])
                i += 1
        symbols = out
    return symbols


def patience_check_bruteforce(ppls, patience):
    """True when the last `patience` validations set no new global best."""
    if len(ppls) <= patience:
        return False
    best = ppls[0]
    improved_at = [True]
    for value in ppls[1:]:
        improved_at.append(value < best)
        if value < best:
            best = value
    return not any(improved_at[-patience:])
