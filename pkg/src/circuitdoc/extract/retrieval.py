"""Lexical retrieval: tf-idf weighted cosine over lowercase word tokens."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

_TOKEN = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Corpus:
    docs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        keys = [k for k, _ in self.docs]
        if len(set(keys)) != len(keys):
            dup = next(k for k, n in Counter(keys).items() if n > 1)
            raise ValueError(f"duplicate doc key {dup!r}")

    @classmethod
    def from_pairs(cls, pairs) -> "Corpus":
        return cls(tuple((str(k), str(v)) for k, v in pairs))

    def __len__(self) -> int:
        return len(self.docs)

    def text(self, key: str) -> str:
        for k, v in self.docs:
            if k == key:
                return v
        raise KeyError(key)


def _idf(corpus: Corpus) -> dict[str, float]:
    # Document frequency is taken over distinct texts, so adding a copy of an
    # existing document under a new key leaves every other score unchanged.
    distinct = {text for _, text in corpus.docs}
    n = len(distinct)
    df: Counter = Counter()
    for text in distinct:
        df.update(set(tokenize(text)))
    return {term: math.log((1 + n) / (1 + count)) + 1.0 for term, count in df.items()}


def score_documents(query_text: str, corpus: Corpus) -> dict[str, float]:
    """Cosine similarity between the tf-idf vectors of the query and each document."""
    if not corpus.docs:
        return {}
    idf = _idf(corpus)
    unseen = math.log(1 + len({t for _, t in corpus.docs})) + 1.0
    q_tf = Counter(tokenize(query_text))
    q_vec = {t: c * idf.get(t, unseen) for t, c in q_tf.items()}
    q_norm = math.sqrt(sum(v * v for v in q_vec.values()))
    scores = {}
    for key, text in corpus.docs:
        d_vec = {t: c * idf[t] for t, c in Counter(tokenize(text)).items()}
        d_norm = math.sqrt(sum(v * v for v in d_vec.values()))
        if q_norm == 0.0 or d_norm == 0.0:
            scores[key] = 0.0
            continue
        dot = sum(w * d_vec.get(t, 0.0) for t, w in q_vec.items())
        scores[key] = dot / (q_norm * d_norm)
    return scores


def retrieve(query_text: str, corpus: Corpus, k: int) -> list[str]:
    """Top-``k`` document keys by descending score, ties by ascending key."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = score_documents(query_text, corpus)
    ranked = sorted(scores, key=lambda key: (-scores[key], key))
    return ranked[:k]
