"""Post tokenization, modality splitting, vocabularies, and corpus loading.

Posts are split into word and emoji tokens that keep their absolute position
in the original stream, so the two modalities can be separated and later
re-interleaved exactly. Emoji detection is range-based over the Unicode emoji
blocks, with ZWJ sequences kept as single tokens and skin-tone modifiers
folded into the base emoji.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .exceptions import CorpusError

logger = logging.getLogger("emofuse")

WORD = "word"
EMOJI = "emoji"

# Emoji scalar ranges: pictographs, emoticons, transport, supplemental symbols,
# extended pictographs, misc/dingbat symbols, arrows-and-shapes extras, and
# regional indicators. Intentionally excludes bare digits/# (keycap bases).
_EMOJI_RANGES = (
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x1FA70, 0x1FAFF),
    (0x2600, 0x26FF),
    (0x2700, 0x27BF),
    (0x2B00, 0x2BFF),
    (0x1F1E6, 0x1F1FF),
)
_ZWJ = 0x200D
_VARIATION_SELECTORS = {0xFE0E, 0xFE0F}
_SKIN_TONES = set(range(0x1F3FB, 0x1F400))
_REGIONAL_INDICATORS = (0x1F1E6, 0x1F1FF)


def _is_regional_indicator(cp: int) -> bool:
    return _REGIONAL_INDICATORS[0] <= cp <= _REGIONAL_INDICATORS[1]


def is_emoji_scalar(cp: int) -> bool:
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def fold_emoji(surface: str) -> str:
    """Canonical emoji key: variation selectors and skin tones stripped."""
    return "".join(
        ch for ch in surface
        if ord(ch) not in _VARIATION_SELECTORS and ord(ch) not in _SKIN_TONES
    )


@dataclass(frozen=True)
class Token:
    kind: str  # WORD or EMOJI
    surface: str
    position: int


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class RawPost:
    text: str
    label: int | None = None


def _flush_words(buffer: list[str], out: list[tuple[str, str]]):
    if not buffer:
        return
    run = "".join(buffer).lower()
    word = "".join(ch if ch.isalnum() else " " for ch in run)
    for piece in word.split():
        out.append((WORD, piece))
    buffer.clear()


def tokenize(text: str) -> TokenSequence:
    """Split text into lowercased word tokens and canonical emoji tokens.

    Positions are assigned contiguously from 0 in stream order. A ZWJ
    sequence of emoji scalars is one token; skin tones and variation
    selectors never survive into the token surface.
    """
    raw: list[tuple[str, str]] = []
    word_buffer: list[str] = []
    chars = text
    i = 0
    n = len(chars)
    while i < n:
        cp = ord(chars[i])
        if is_emoji_scalar(cp):
            _flush_words(word_buffer, raw)
            parts = [chars[i]]
            i += 1
            # flags are exactly two regional indicators
            if _is_regional_indicator(cp) and i < n and _is_regional_indicator(ord(chars[i])):
                raw.append((EMOJI, parts[0] + chars[i]))
                i += 1
                continue
            while i < n:
                nxt = ord(chars[i])
                if nxt in _VARIATION_SELECTORS or nxt in _SKIN_TONES:
                    parts.append(chars[i])
                    i += 1
                    continue
                if nxt == _ZWJ and i + 1 < n and is_emoji_scalar(ord(chars[i + 1])):
                    parts.append(chars[i])
                    parts.append(chars[i + 1])
                    i += 2
                    continue
                break
            surface = fold_emoji("".join(parts))
            if surface:
                raw.append((EMOJI, surface))
        elif cp in _VARIATION_SELECTORS or cp == _ZWJ:
            i += 1  # stray joiner outside an emoji sequence
        else:
            word_buffer.append(chars[i])
            i += 1
    _flush_words(word_buffer, raw)
    tokens = tuple(Token(kind, surface, pos) for pos, (kind, surface) in enumerate(raw))
    return TokenSequence(tokens)


def split_modalities(seq: TokenSequence) -> tuple[list[Token], list[Token]]:
    """Separate word tokens from emoji tokens, both keeping original positions."""
    words = [t for t in seq if t.kind == WORD]
    emojis = [t for t in seq if t.kind == EMOJI]
    return words, emojis


def load_labeled_dataset(path) -> tuple[list[RawPost], list[tuple[int, str]]]:
    """Read a JSON-lines corpus of {"text": ..., "label": ...} objects.

    Returns the posts in file order plus a list of (line_number, message)
    for malformed lines. Raises CorpusError on I/O failure or when a
    nonempty file yields no valid post at all.
    """
    posts: list[RawPost] = []
    errors: list[tuple[int, str]] = []
    saw_content = False
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                saw_content = True
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as err:
                    errors.append((line_no, f"invalid JSON: {err.msg}"))
                    continue
                if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
                    errors.append((line_no, 'expected object with "text" and "label"'))
                    continue
                text, label = obj["text"], obj["label"]
                if not isinstance(text, str) or not isinstance(label, int) or isinstance(label, bool) or label < 0:
                    errors.append((line_no, "text must be a string and label a non-negative integer"))
                    continue
                posts.append(RawPost(text=text, label=label))
    except OSError as err:
        raise CorpusError(f"cannot read labeled corpus {path}: {err}") from err
    if saw_content and not posts:
        raise CorpusError(f"no valid posts in {path} ({len(errors)} malformed lines)")
    for line_no, message in errors:
        logger.warning("%s:%d: %s", path, line_no, message)
    return posts, errors


def load_unlabeled_corpus(path) -> Iterator[str]:
    """Yield one post per nonempty line of a plain-text corpus."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield line
    except OSError as err:
        raise CorpusError(f"cannot read corpus {path}: {err}") from err


PAD_INDEX = 0
UNK_INDEX = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


@dataclass
class Vocab:
    """Bijective word/index maps with reserved padding and unknown slots."""

    word_to_index: dict[str, int] = field(default_factory=dict)
    index_to_word: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.index_to_word)

    def index(self, word: str) -> int:
        return self.word_to_index.get(word, UNK_INDEX)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_index


def build_vocab(corpus: Iterable[TokenSequence], min_count: int = 1) -> Vocab:
    """Retain words seen at least min_count times.

    Index order is deterministic: descending frequency, ties broken
    lexicographically, after the reserved padding/unknown indices 0 and 1.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    for seq in corpus:
        counts.update(t.surface for t in seq if t.kind == WORD)
    vocab = Vocab()
    vocab.index_to_word = [PAD_TOKEN, UNK_TOKEN]
    vocab.word_to_index = {PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX}
    retained = sorted(
        (w for w, c in counts.items() if c >= min_count),
        key=lambda w: (-counts[w], w),
    )
    for word in retained:
        vocab.word_to_index[word] = len(vocab.index_to_word)
        vocab.index_to_word.append(word)
    return vocab
