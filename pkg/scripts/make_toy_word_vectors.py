#!/usr/bin/env python3
"""Generate the 200-word toy embedding table shipped for tests.

Vectors are seeded uniform noise; only the vocabulary and the file format
matter for the test suite. Rerunning reproduces the committed file exactly.
"""

import os

import numpy as np

WORDS = """
happy smile face joy laugh tears funny hilarious cheerful glad
sad cry sorrow grief upset miserable unhappy blue weep gloomy
angry mad rage fury furious annoyed hate irritated temper bitter
love heart romance affection adore darling sweet dear kiss hug
approve agree good thumbs yes okay fine nice accept support
reject disagree bad down no awful poor refuse against worst
pizza food cheese slice eat tasty delicious hungry snack dinner
party celebrate win fun confetti birthday gift winner cheer festive
scared fear scream horror spooky ghost shock panic afraid terror
hundred percent perfect score full total complete absolute top excellent
fire hot flame burn lit blaze heat spicy ember smoke
rain rainy weather cloud wet storm drizzle umbrella puddle damp
sun sunny warm bright shine light summer glow clear sky
music song sing dance melody tune rhythm concert band note
dog puppy pet cute animal loyal bark tail fetch friend
pray hope thanks grateful bless wish faith peace amen kind
sleep tired rest nap dream bed night snore yawn cozy
think wonder question idea curious ponder hmm maybe guess doubt
broken hurt loss pain ache lonely miss regret tear apart
today great awesome amazing really very just now always people
""".split()

DIM = 300
SEED = 20240817


def main():
    assert len(WORDS) == 200, f"expected 200 words, got {len(WORDS)}"
    rng = np.random.default_rng(SEED)
    matrix = rng.uniform(-0.5, 0.5, size=(len(WORDS), DIM)).round(4)
    out = os.path.join(os.path.dirname(__file__), "..", "data", "toy_word_vectors.txt")
    out = os.path.normpath(out)
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"{len(WORDS)} {DIM}\n")
        for word, row in zip(WORDS, matrix):
            fh.write(word)
            for value in row:
                fh.write(f" {float(value)!r}")
            fh.write("\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
