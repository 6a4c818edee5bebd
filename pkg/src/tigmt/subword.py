"""Byte-pair encoding: training, application, inversion, vocabulary.

One model is trained per script (all Ge'ez-script text pooled, all
Latin-script text pooled) so that later fine-tuning stages inherit the
same subword vocabulary. Training is single-threaded and deterministic;
application and decoding are pure.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

DEFAULT_EOW = "</w>"

# Reserved vocabulary entries at fixed indices.
UNK, BOS, EOS, PAD = "<unk>", "<s>", "</s>", "<pad>"
RESERVED = (UNK, BOS, EOS, PAD)

FORMAT_VERSION = 1


@dataclass
class BpeModel:
    """An ordered merge list plus the end-of-word marker."""

    merges: list[tuple[str, str]] = field(default_factory=list)
    eow_marker: str = DEFAULT_EOW
    version: int = FORMAT_VERSION
    _ranks: dict[tuple[str, str], int] = field(
        default_factory=dict, repr=False, compare=False
    )
    _memo: dict[str, tuple[str, ...]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self):
        if len(set(self.merges)) != len(self.merges):
            raise ValueError("duplicate merge pairs in model")
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}

    def encode_word(self, token: str) -> tuple[str, ...]:
        """Segment one token into subword symbols."""
        cached = self._memo.get(token)
        if cached is None:
            cached = _merge_word(list(token) + [self.eow_marker], self._ranks)
            self._memo[token] = cached
        return cached


def _merge_word(symbols: list[str], ranks: Mapping[tuple[str, str], int]) -> tuple[str, ...]:
    # Repeatedly apply the earliest-trained merge present. For models
    # produced by train_bpe this is equivalent to replaying the merge
    # list in order (a merge can never re-enable an earlier one).
    while len(symbols) > 1:
        best_rank = None
        best_pair = None
        for pair in zip(symbols, symbols[1:]):
            rank = ranks.get(pair)
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank, best_pair = rank, pair
        if best_pair is None:
            break
        symbols = _merge_pair(symbols, best_pair)
    return tuple(symbols)


def _merge_pair(symbols: Sequence[str], pair: tuple[str, str]) -> list[str]:
    """Fuse every adjacent occurrence of pair, left to right."""
    left, right = pair
    out: list[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def count_words(corpus: Iterable[Sequence[str]]) -> Counter:
    """Exact token frequency table over tokenized sentences."""
    counts: Counter = Counter()
    for sentence in corpus:
        counts.update(sentence)
    return counts


def train_bpe(counts: Mapping[str, int], num_merges: int, eow_marker: str = DEFAULT_EOW) -> BpeModel:
    """Learn a BPE merge list from a word-frequency table.

    Each word starts as its characters plus a trailing end-of-word
    symbol. The most frequent adjacent symbol pair (weighted by word
    count, ties broken by lexicographic pair order) is merged, for
    num_merges rounds or until no adjacent pair remains.
    """
    if num_merges < 0:
        raise ValueError("num_merges must be >= 0")
    words: list[tuple[list[str], int]] = [
        (list(word) + [eow_marker], freq) for word, freq in sorted(counts.items())
    ]
    stats: Counter = Counter()
    where: dict[tuple[str, str], set[int]] = {}
    for idx, (symbols, freq) in enumerate(words):
        for pair in zip(symbols, symbols[1:]):
            stats[pair] += freq
            where.setdefault(pair, set()).add(idx)

    # Ties break by lexicographic (left, right) order, with the end-of-word
    # marker ordered after every ordinary symbol.
    def sym_key(sym: str):
        return (1, "") if sym == eow_marker else (0, sym)

    merges: list[tuple[str, str]] = []
    best_pair: tuple[str, str] | None
    for _ in range(num_merges):
        best_key = None
        best_pair = None
        for pair, freq in stats.items():
            if freq <= 0:
                continue
            key = (-freq, sym_key(pair[0]), sym_key(pair[1]))
            if best_key is None or key < best_key:
                best_key, best_pair = key, pair
        if best_pair is None:
            break
        pair = best_pair
        merges.append(pair)
        for idx in sorted(where.get(pair, ())):
            symbols, freq = words[idx]
            if len(symbols) < 2:
                continue
            for old in zip(symbols, symbols[1:]):
                stats[old] -= freq
                if stats[old] <= 0:
                    del stats[old]
                    where.pop(old, None)
            new_symbols = _merge_pair(symbols, pair)
            words[idx] = (new_symbols, freq)
            for new in zip(new_symbols, new_symbols[1:]):
                stats[new] += freq
                where.setdefault(new, set()).add(idx)
    return BpeModel(merges=merges, eow_marker=eow_marker)


def apply_bpe(sentence: Iterable[str], model: BpeModel) -> list[str]:
    """Segment a tokenized sentence into subword symbols."""
    out: list[str] = []
    for token in sentence:
        out.extend(model.encode_word(token))
    return out


def decode_bpe(subwords: Iterable[str], eow_marker: str = DEFAULT_EOW) -> list[str]:
    """Invert apply_bpe: concatenate symbols, splitting words at end-of-word
    markers. A dangling final word without a marker is emitted as-is."""
    words: list[str] = []
    buf: list[str] = []
    for sym in subwords:
        if sym.endswith(eow_marker):
            buf.append(sym[: -len(eow_marker)])
            word = "".join(buf)
            buf.clear()
            if word:
                words.append(word)
        else:
            buf.append(sym)
    if buf:
        tail = "".join(buf)
        if tail:
            words.append(tail)
    return words


def vocabulary(model: BpeModel, counts: Mapping[str, int]) -> list[str]:
    """Fixed symbol inventory: reserved symbols at indices 0..3, then every
    symbol apply_bpe can produce over the given words, by descending
    frequency then lexicographic order."""
    freqs: Counter = Counter()
    for word, count in counts.items():
        for sym in model.encode_word(word):
            freqs[sym] += count
    ordered = sorted(freqs.items(), key=lambda kv: (-kv[1], kv[0]))
    return list(RESERVED) + [sym for sym, _ in ordered]


def save_model(model: BpeModel, path: str) -> None:
    """Write the bit-exact text model format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#bpe v{model.version} eow={model.eow_marker}\n")
        for left, right in model.merges:
            fh.write(f"{left} {right}\n")


def load_model(path: str) -> BpeModel:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("#bpe v"):
            raise ValueError(f"not a BPE model file: {path}")
        version_str, _, eow_part = header[len("#bpe v"):].partition(" ")
        if not eow_part.startswith("eow="):
            raise ValueError(f"malformed BPE header: {header!r}")
        merges = []
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            left, sep, right = line.partition(" ")
            if not sep or not left or not right:
                raise ValueError(f"malformed merge at line {line_no}: {line!r}")
            merges.append((left, right))
    return BpeModel(
        merges=merges, eow_marker=eow_part[len("eow="):], version=int(version_str)
    )
