"""Script-aware sentence tokenization for Latin and Ge'ez text.

Latin text gets lowercased and punctuation-detached in the style of the
Moses tokenizer (simplified: no nonbreaking-prefix tables). Ge'ez text
is split on whitespace and the Ethiopic wordspace, with Ethiopic and
ASCII punctuation detached into standalone tokens. All input is NFC
normalized first so behaviour is deterministic for composed/decomposed
variants.

All functions are pure and thread-safe.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass, field

# Ethiopic wordspace: a word delimiter, consumed during tokenization.
ETHIOPIC_WORDSPACE = "፡"
# Ethiopic sentence-level punctuation, kept as standalone tokens.
ETHIOPIC_PUNCT = frozenset(chr(c) for c in range(0x1362, 0x1369))

# Punctuation that closes a clause: no space before it when detokenizing.
_CLOSING_PUNCT = frozenset(".,!?;:" + "።፣፤፥፦፧")

_ASCII_LOWER = {ord(c): ord(c) + 32 for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZ"}


class Script(enum.Enum):
    LATIN = "latin"
    GEEZ = "geez"


@dataclass(frozen=True)
class TokenizedSentence:
    """An ordered list of non-empty, whitespace-free tokens."""

    tokens: list[str] = field(default_factory=list)
    script: Script = Script.LATIN

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __post_init__(self):
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(f"invalid token: {tok!r}")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize_latin(text: str) -> TokenizedSentence:
    """Lowercase and tokenize a Latin-script sentence.

    Punctuation becomes standalone tokens, except apostrophes and
    hyphens between word characters ("don't", "re-use") and decimal
    points between digits ("3.14").
    """
    text = unicodedata.normalize("NFC", text).translate(_ASCII_LOWER)
    tokens: list[str] = []
    for chunk in text.split():
        buf: list[str] = []
        for i, ch in enumerate(chunk):
            if _is_punct(ch) and not _is_interior(chunk, i):
                if buf:
                    tokens.append("".join(buf))
                    buf = []
                tokens.append(ch)
            else:
                buf.append(ch)
        if buf:
            tokens.append("".join(buf))
    return TokenizedSentence(tokens, Script.LATIN)


def _is_interior(chunk: str, i: int) -> bool:
    """True when punctuation at position i stays attached to its word."""
    ch = chunk[i]
    if i == 0 or i == len(chunk) - 1:
        return False
    prev, nxt = chunk[i - 1], chunk[i + 1]
    if ch in ("'", "’", "-"):
        return not _is_punct(prev) and not _is_punct(nxt)
    if ch == ".":
        return prev.isdigit() and nxt.isdigit()
    return False


def tokenize_geez(text: str) -> TokenizedSentence:
    """Tokenize a Ge'ez-script sentence.

    The Ethiopic wordspace (U+1361) acts as a delimiter and is consumed;
    Ethiopic punctuation U+1362..U+1368 and every ASCII punctuation mark
    become standalone tokens. Ge'ez has no case, so nothing is folded.
    """
    text = unicodedata.normalize("NFC", text)
    tokens: list[str] = []
    buf: list[str] = []

    def flush():
        if buf:
            tokens.append("".join(buf))
            buf.clear()

    for ch in text:
        if ch.isspace() or ch == ETHIOPIC_WORDSPACE:
            flush()
        elif ch in ETHIOPIC_PUNCT or (ord(ch) < 128 and _is_punct(ch)):
            flush()
            tokens.append(ch)
        else:
            buf.append(ch)
    flush()
    return TokenizedSentence(tokens, Script.GEEZ)


def detokenize(tokens) -> str:
    """Join tokens for display, closing up space before trailing punctuation.

    Best-effort inverse of the tokenizers, intended for presenting model
    output; it does not restore case or consumed wordspaces.
    """
    out: list[str] = []
    for tok in tokens:
        if out and tok in _CLOSING_PUNCT:
            out[-1] += tok
        else:
            out.append(tok)
    return " ".join(out)
