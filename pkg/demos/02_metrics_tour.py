"""Tour of the evaluation metrics on small worked examples.

Each metric is corpus-level and takes (hypothesis tokens, reference
tokens) pairs.
"""

from tigmt.metrics import EvalPair, bleu, chrf, meteor_lite

pairs_perfect = [EvalPair("the cat sat on the mat".split(),
                          "the cat sat on the mat".split())]
pairs_swap = [EvalPair("on the mat the cat sat".split(),
                       "the cat sat on the mat".split())]
pairs_short = [EvalPair("the cat".split(),
                        "the cat sat on the mat".split())]

for name, pairs in (("identical", pairs_perfect),
                    ("reordered", pairs_swap),
                    ("truncated", pairs_short)):
    print(f"{name:>10}:  BLEU={bleu(pairs):6.2f}  ChrF={chrf(pairs):6.2f}  "
          f"Meteor={meteor_lite(pairs):6.2f}")

# BLEU is corpus-level: pooled n-gram counts, not averaged sentence scores
corpus = pairs_perfect + pairs_short
print(f"\npooled 2-sentence corpus: BLEU={bleu(corpus):.2f}")

# ChrF looks at character n-grams, so it rewards partial word overlap
stems = [EvalPair(["translating"], ["translation"])]
print(f"shared stem, different suffix: BLEU={bleu(stems):.2f} "
      f"ChrF={chrf(stems):.2f}")
