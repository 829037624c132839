import json
import os

import numpy as np
import pytest

from emofuse.senses import load_emojinet
from emofuse.text_encoder import WordEmbeddingTable
from emofuse.tokenization import RawPost

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data")
INVENTORY_PATH = os.path.normpath(os.path.join(DATA_DIR, "sample_inventory.json"))
WORD_VECTORS_PATH = os.path.normpath(os.path.join(DATA_DIR, "toy_word_vectors.txt"))

POSITIVE_EMOJIS = ["\U0001F600", "\U0001F389"]  # grinning face, party popper
NEGATIVE_EMOJIS = ["\U0001F622", "\U0001F494"]  # crying face, broken heart

FILLER_WORDS = [
    "happy", "sad", "love", "rain", "sun", "party", "dog", "music", "fire",
    "think", "today", "really", "very", "people", "friend", "song", "food",
    "sleep", "hope", "idea",
]


@pytest.fixture(scope="session")
def inventory():
    return load_emojinet(INVENTORY_PATH)


@pytest.fixture(scope="session")
def word_table():
    return WordEmbeddingTable.load(WORD_VECTORS_PATH)


def make_emoji_labeled_posts(n, seed, words=None):
    """Posts whose label is a pure function of the attached emoji group.

    Posts come in matched pairs: the same filler words carry a positive
    emoji in one variant and a negative one in the other, so the words are
    uninformative by construction and only the emoji decides the label.
    """
    rng = np.random.default_rng(seed)
    words = words or FILLER_WORDS
    posts = []
    while len(posts) < n:
        count = int(rng.integers(4, 9))
        tokens = [words[i] for i in rng.integers(0, len(words), count)]
        for label, group in ((1, POSITIVE_EMOJIS), (0, NEGATIVE_EMOJIS)):
            emoji = group[int(rng.integers(0, len(group)))]
            posts.append(RawPost(text=" ".join([emoji] + tokens), label=label))
    return posts[:n]


def write_jsonl(path, posts):
    with open(path, "w", encoding="utf-8") as fh:
        for post in posts:
            fh.write(json.dumps({"text": post.text, "label": post.label}, ensure_ascii=False) + "\n")
