"""Emoji sense inventory: TF-IDF sense vectors and averaged keyword attributes.

Each inventory entry carries the emoji's name, shortcode, description,
keywords, and sense definitions. Sense definitions feed the TF-IDF vectors
that weight graph edges; keywords feed the averaged word-vector node
attributes.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InventoryError
from .tokenization import fold_emoji, tokenize, WORD

logger = logging.getLogger("emofuse")

_MANDATORY_KEYS = ("unicode", "name", "shortcode", "description", "keywords", "senses")


@dataclass(frozen=True)
class EmojiSenseEntry:
    codepoints: str  # canonical emoji character sequence
    name: str
    shortcode: str
    description: str
    keywords: tuple[str, ...]
    senses: tuple[str, ...]
    image_refs: tuple[str, ...] = ()
    related: tuple[str, ...] = ()
    category: str = ""

    @property
    def degraded(self) -> bool:
        """True when the entry has no senses or no keywords to work with."""
        return not self.senses or not self.keywords


@dataclass
class SenseInventory:
    entries: dict[str, EmojiSenseEntry] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, emoji: str) -> bool:
        return fold_emoji(emoji) in self.entries

    def get(self, emoji: str) -> EmojiSenseEntry | None:
        return self.entries.get(fold_emoji(emoji))


def _parse_codepoints(value: str) -> str:
    """Accept "U+1F355"-style notation (space separated) or a literal emoji."""
    value = value.strip()
    if not value:
        return ""
    if value.upper().startswith("U+"):
        try:
            chars = [chr(int(part[2:], 16)) for part in value.split()]
        except ValueError as err:
            raise InventoryError(f"bad unicode field {value!r}: {err}") from err
        return fold_emoji("".join(chars))
    return fold_emoji(value)


def load_emojinet(path) -> SenseInventory:
    """Load a JSON array of sense-inventory entries keyed by emoji.

    Raises InventoryError for I/O problems, duplicate emoji keys, or entries
    missing mandatory fields. Entries with empty senses load but are flagged
    degraded.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise InventoryError(f"cannot read inventory {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise InventoryError(f"inventory {path} is not valid JSON: {err}") from err
    if not isinstance(data, list):
        raise InventoryError(f"inventory {path} must be a JSON array of entries")
    inventory = SenseInventory()
    for pos, item in enumerate(data):
        if not isinstance(item, dict):
            raise InventoryError(f"inventory entry {pos} is not an object")
        missing = [k for k in _MANDATORY_KEYS if k not in item]
        if missing:
            raise InventoryError(f"inventory entry {pos} missing keys: {', '.join(missing)}")
        key = _parse_codepoints(str(item["unicode"]))
        if not key:
            raise InventoryError(f"inventory entry {pos} has an empty unicode field")
        if key in inventory.entries:
            raise InventoryError(f"duplicate inventory key {key!r} at entry {pos}")
        entry = EmojiSenseEntry(
            codepoints=key,
            name=str(item["name"]),
            shortcode=str(item["shortcode"]),
            description=str(item["description"]),
            keywords=tuple(str(k) for k in item["keywords"]),
            senses=tuple(str(s) for s in item["senses"]),
            image_refs=tuple(str(x) for x in item.get("images", ())),
            related=tuple(str(x) for x in item.get("related", ())),
            category=str(item.get("category", "")),
        )
        if entry.degraded:
            logger.warning("inventory entry %s is degraded (empty senses or keywords)", key)
        inventory.entries[key] = entry
    return inventory


def _sense_terms(entry: EmojiSenseEntry) -> list[str]:
    doc = " ".join(entry.senses)
    return [t.surface for t in tokenize(doc) if t.kind == WORD]


def tfidf_sense_vectors(inventory: SenseInventory) -> dict[str, dict[str, float]]:
    """Per-emoji sparse TF-IDF vectors over the sense documents.

    tf is the raw term count in the emoji's concatenated senses; idf is
    ln(total_documents / document_frequency) with no smoothing, so terms in
    every document drop out. Emojis without senses get the empty vector.
    Entry order does not affect the result.
    """
    docs = {key: _sense_terms(entry) for key, entry in inventory.entries.items()}
    total = len(docs)
    df: dict[str, int] = {}
    for terms in docs.values():
        for term in set(terms):
            df[term] = df.get(term, 0) + 1
    vectors: dict[str, dict[str, float]] = {}
    for key, terms in docs.items():
        tf: dict[str, int] = {}
        for term in terms:
            tf[term] = tf.get(term, 0) + 1
        vec = {}
        for term, count in tf.items():
            weight = count * math.log(total / df[term])
            if weight != 0.0:
                vec[term] = weight
        vectors[key] = vec
    return vectors


def cosine_similarity(a: dict[str, float], b: dict[str, float]) -> float:
    """Cosine of two sparse non-negative vectors; 0 when either norm is 0."""
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def node_attribute(entry: EmojiSenseEntry, word_table) -> np.ndarray:
    """Mean word vector over the entry's keyword words; zeros when none are known."""
    found = []
    for keyword in entry.keywords:
        for token in tokenize(keyword):
            if token.kind != WORD:
                continue
            vec = word_table.get(token.surface)
            if vec is not None:
                found.append(vec)
    if not found:
        return np.zeros(word_table.dimension)
    return np.mean(found, axis=0)
