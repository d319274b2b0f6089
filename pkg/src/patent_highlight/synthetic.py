"""Seeded synthetic 3-class corpus with class-determining keywords.

Used by the test suite and for trying the CLI without USPTO data. Every
document mixes shared filler words with keywords drawn from its class's own
pool; about half open with that class's signature phrase.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, Sample

SIGNATURES = {
    1: "according to the present invention",
    2: "an object of the present invention",
    0: "in one aspect of the present invention",
}

KEYWORDS = {
    1: "advantage improved efficiency reduced cost durable reliable faster simpler lighter stable "
       "enhanced excellent effectively suppressed prevented achieved benefit superior",
    2: "problem drawback difficult deteriorate insufficient failure defect complicated expensive "
       "unstable leakage damage limitation disadvantage inconvenience conventional",
    0: "comprising configured wherein disposed member housing layer portion unit provided "
       "connected arranged includes formed surface plurality",
}

FILLER = ("device method system apparatus material structure signal control process module element "
          "substrate circuit vehicle sensor data user display film resin composition water heat").split()


def synthetic_texts(n_per_class: int = 100, seed: int = 0, length: int = 40,
                    keyword_rate: float = 0.2, signature_rate: float = 0.5) -> list[tuple[str, int]]:
    """``(text, label)`` pairs, classes interleaved 0, 1, 2, 0, 1, 2, ..."""
    rng = np.random.default_rng(seed)
    pools = {c: words.split() for c, words in KEYWORDS.items()}
    out = []
    for i in range(n_per_class):
        for c in (0, 1, 2):
            words = []
            for _ in range(length):
                pool = pools[c] if rng.random() < keyword_rate else FILLER
                words.append(pool[int(rng.integers(len(pool)))])
            opener = f"{SIGNATURES[c].capitalize()}, " if rng.random() < signature_rate else ""
            text = opener + " ".join(words) + "."
            out.append((text[0].upper() + text[1:], c))
    return out


def synthetic_corpus(n_per_class: int = 100, seed: int = 0, **kwargs) -> Corpus:
    samples = [
        Sample(f"SYN{i:05d}", f"synthetic grant {i}", text, label)
        for i, (text, label) in enumerate(synthetic_texts(n_per_class, seed, **kwargs))
    ]
    return Corpus(samples)
