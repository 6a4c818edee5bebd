"""Desk-scale Tigrinya-to-English NMT toolkit.

Subpackages cover the full development pipeline: script-aware
tokenization (:mod:`tigmt.textnorm`), per-script byte-pair encoding
(:mod:`tigmt.subword`), parallel-corpus handling (:mod:`tigmt.corpus`),
MT evaluation metrics (:mod:`tigmt.metrics`), a numpy transformer with
exact gradients (:mod:`tigmt.model`), the staged training loop
(:mod:`tigmt.trainer`, :mod:`tigmt.pipeline`), and a CLI plus demo
HTTP service (:mod:`tigmt.cli`, :mod:`tigmt.serve`).
"""

__version__ = "0.1.0"
