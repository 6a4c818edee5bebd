"""Parallel-corpus ingestion, provenance tagging, mixing, and splitting.

Corpora live on disk as two aligned line files (one sentence per line).
Every pair carries the dataset name and source language it came from,
and keeps those tags through mixing, filtering, and splitting. All
seeded operations use an explicit Fisher-Yates shuffle over a PCG64
generator so results reproduce bit-exactly across runs and platforms.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

import numpy as np
import yaml


class Language(enum.Enum):
    TIGRINYA = "tigrinya"
    AMHARIC = "amharic"
    GEEZ = "geez"


class CorpusError(Exception):
    """Base class for corpus-loading and splitting failures."""


class LineCountMismatch(CorpusError):
    def __init__(self, source_lines: int, target_lines: int):
        super().__init__(
            f"source has {source_lines} lines but target has {target_lines}"
        )
        self.source_lines = source_lines
        self.target_lines = target_lines


class ExpectedCountMismatch(CorpusError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"expected {expected} pairs, loaded {actual}")
        self.expected = expected
        self.actual = actual


class InvalidUtf8(CorpusError):
    def __init__(self, path: str, line_no: int):
        super().__init__(f"{path}: invalid UTF-8 at line {line_no}")
        self.path = path
        self.line_no = line_no


class SplitTooLarge(CorpusError):
    pass


@dataclass(frozen=True)
class SentencePair:
    """One aligned sentence pair with provenance tags.

    source/target are raw strings before tokenization and token lists
    afterwards; the corpus operations only care about alignment.
    """

    source: object
    target: object
    dataset: str
    language: Language


@dataclass
class ParallelCorpus:
    pairs: list[SentencePair] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[SentencePair]:
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    language: Language
    source_path: str
    target_path: str
    expected_count: Optional[int] = None

    def __post_init__(self):
        if self.source_path == self.target_path:
            raise ValueError("source and target paths must differ")
        if self.expected_count is not None and self.expected_count <= 0:
            raise ValueError("expected_count must be positive")


def _read_lines(path: str) -> list[str]:
    with open(path, "rb") as fh:
        raw = fh.read()
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    out = []
    for i, line in enumerate(lines, start=1):
        try:
            out.append(line.decode("utf-8").rstrip("\r"))
        except UnicodeDecodeError:
            raise InvalidUtf8(path, i) from None
    return out


def load_parallel(spec: DatasetSpec) -> ParallelCorpus:
    """Load aligned line files into a tagged corpus.

    Blank-blank line pairs are dropped; a line count mismatch or a
    failed expected_count check is an error.
    """
    src_lines = _read_lines(spec.source_path)
    tgt_lines = _read_lines(spec.target_path)
    if len(src_lines) != len(tgt_lines):
        raise LineCountMismatch(len(src_lines), len(tgt_lines))
    pairs = [
        SentencePair(src, tgt, spec.name, spec.language)
        for src, tgt in zip(src_lines, tgt_lines)
        if src.strip() or tgt.strip()
    ]
    if spec.expected_count is not None and len(pairs) != spec.expected_count:
        raise ExpectedCountMismatch(spec.expected_count, len(pairs))
    return ParallelCorpus(pairs)


def _permutation(n: int, seed: int) -> list[int]:
    """Fisher-Yates permutation of range(n) driven by PCG64(seed)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def mix_and_shuffle(corpora: Sequence[ParallelCorpus], seed: int) -> ParallelCorpus:
    """Concatenate corpora and shuffle the pairs deterministically."""
    pool = [pair for corpus in corpora for pair in corpus]
    order = _permutation(len(pool), seed)
    return ParallelCorpus([pool[i] for i in order])


def filter_by_language(corpus: ParallelCorpus, language: Language) -> ParallelCorpus:
    return ParallelCorpus([p for p in corpus if p.language == language])


def split(
    corpus: ParallelCorpus, test_size: int = 200, dev_size: int = 0, seed: int = 0
) -> tuple[ParallelCorpus, ParallelCorpus, ParallelCorpus]:
    """Hold out seeded random test/dev sets; returns (train, dev, test).

    Each part keeps the original corpus order; the three parts are
    disjoint and their union is the input multiset.
    """
    n = len(corpus)
    if test_size + dev_size > n:
        raise SplitTooLarge(
            f"test {test_size} + dev {dev_size} exceeds corpus size {n}"
        )
    order = _permutation(n, seed)
    test_idx = set(order[:test_size])
    dev_idx = set(order[test_size : test_size + dev_size])
    train = [p for i, p in enumerate(corpus) if i not in test_idx and i not in dev_idx]
    dev = [p for i, p in enumerate(corpus) if i in dev_idx]
    test = [p for i, p in enumerate(corpus) if i in test_idx]
    return ParallelCorpus(train), ParallelCorpus(dev), ParallelCorpus(test)


def _side_len(side) -> int:
    if isinstance(side, str):
        return len(side.split())
    return len(side)


def length_ratio_filter(
    corpus: ParallelCorpus, max_len: int = 200, max_ratio: float = 9.0
) -> ParallelCorpus:
    """Drop pairs that are over-long or badly length-mismatched."""
    if max_len <= 0:
        raise ValueError("max_len must be positive")
    if max_ratio < 1:
        raise ValueError("max_ratio must be >= 1")
    kept = []
    for pair in corpus:
        ls, lt = _side_len(pair.source), _side_len(pair.target)
        if ls > max_len or lt > max_len:
            continue
        if min(ls, lt) == 0 or max(ls, lt) / min(ls, lt) > max_ratio:
            continue
        kept.append(pair)
    return ParallelCorpus(kept)


def load_manifest(path: str) -> list[DatasetSpec]:
    """Read a declarative corpus manifest (YAML list of dataset entries).

    Relative source/target paths resolve against the manifest's
    directory.
    """
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8") as fh:
        entries = yaml.safe_load(fh)
    if not isinstance(entries, list):
        raise CorpusError("manifest must be a list of dataset entries")
    specs = []
    for entry in entries:
        specs.append(
            DatasetSpec(
                name=entry["name"],
                language=Language(entry["language"]),
                source_path=os.path.join(base, entry["source_path"]),
                target_path=os.path.join(base, entry["target_path"]),
                expected_count=entry.get("expected_count"),
            )
        )
    return specs


def write_corpus(corpus: ParallelCorpus, source_path: str, target_path: str) -> None:
    """Emit aligned line files (inverse of load_parallel for raw text)."""

    def side_text(side) -> str:
        if isinstance(side, str):
            return side
        return " ".join(side)

    with open(source_path, "w", encoding="utf-8", newline="\n") as src:
        with open(target_path, "w", encoding="utf-8", newline="\n") as tgt:
            for pair in corpus:
                src.write(side_text(pair.source) + "\n")
                tgt.write(side_text(pair.target) + "\n")
