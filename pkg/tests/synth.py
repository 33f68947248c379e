"""Synthetic corpora with planted relevance for simulation tests."""
from __future__ import annotations

import numpy as np

from fast2.corpus import Corpus, Document, build_features

N_TOPICS = 6
TOPIC_WORDS = 25
COMMON_WORDS = 60

TARGET_QUERY = ("topic0word0", "topic0word1", "topic0word2")


def synthetic_corpus(n_docs: int, prevalence: float, seed: int,
                     max_features: int = 4000) -> Corpus:
    """Featurized corpus where relevant documents share the topic-0 vocabulary.

    Documents draw ~55% of their tokens from their topic's word list and the
    rest from a shared common pool, so classes are separable but not trivial.
    """
    rng = np.random.default_rng(seed)
    n_relevant = max(1, round(n_docs * prevalence))
    topics = np.concatenate([
        np.zeros(n_relevant, dtype=int),
        rng.integers(1, N_TOPICS, size=n_docs - n_relevant),
    ])
    rng.shuffle(topics)

    docs = []
    for i, topic in enumerate(topics):
        length = int(rng.integers(15, 40))
        words = []
        for _ in range(length):
            if rng.random() < 0.55:
                words.append(f"topic{topic}word{rng.integers(TOPIC_WORDS)}")
            else:
                words.append(f"common{rng.integers(COMMON_WORDS)}")
        docs.append(Document(
            id=f"doc{i:05d}",
            title=" ".join(words[:3]),
            abstract=" ".join(words[3:]),
            ground_truth=bool(topic == 0),
        ))
    return build_features(Corpus(documents=docs), max_features=max_features)


def corpus_from_matrix(x, ground_truth=None) -> Corpus:
    """Corpus with hand-made features, for tests that need exact decision values."""
    import scipy.sparse as sp

    x = sp.csr_matrix(np.asarray(x, dtype=np.float64))
    n, d = x.shape
    gt = ground_truth if ground_truth is not None else [None] * n
    docs = [Document(id=f"d{i}", title=f"doc {i}", abstract="body", ground_truth=gt[i])
            for i in range(n)]
    lengths = np.ones(n, dtype=np.int64)
    return Corpus(
        documents=docs,
        vocabulary=[f"t{j}" for j in range(d)],
        doc_term_counts=x.copy(),
        doc_lengths=lengths,
        avg_doc_length=1.0,
        features=x,
    )
