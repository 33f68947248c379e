"""Independent oracles the acceptance gate checks the library against."""
from __future__ import annotations

import math

import numpy as np

from fast2.corpus import Query, bm25_scores
from fast2.estimator import semi_estimate, stop_semi
from fast2.learner import LabelState, presume, query, train

BM25_K1 = 1.5
BM25_B = 0.75


def bm25_brute_force(token_lists, query_terms, k1=BM25_K1, b=BM25_B):
    """Literal transcription of the ranking formula from raw token lists."""
    n = len(token_lists)
    lens = [len(ts) for ts in token_lists]
    avgdl = sum(lens) / n
    scores = []
    for i, ts in enumerate(token_lists):
        s = 0.0
        for q in query_terms:
            f = ts.count(q)
            n_q = sum(1 for other in token_lists if q in other)
            if n_q == 0:
                continue
            idf = math.log((n - n_q + 0.5) / (n_q + 0.5))
            s += idf * f / (f + k1 * (1 - b + b * lens[i] / avgdl))
        scores.append(s)
    return scores


def literal_pipeline(corpus, query_terms, seed, target_recall=0.95, seed_batch=10):
    """Plain top-to-bottom transcription of the seeded review loop.

    Uses the same mathematical primitives as the engine but none of its
    bookkeeping (no session, no reviewer model, no correction hooks); serves as
    the bitwise reference trajectory for an error-free review.
    """
    rng = np.random.default_rng(seed)
    state = LabelState()
    truth = {d.id: bool(d.ground_truth) for d in corpus.documents}
    order = np.argsort(-bm25_scores(corpus, Query(query_terms)), kind="stable")
    ranking = [corpus.documents[i].id for i in order]
    trajectory = []
    estimates = []
    while True:
        pool = state.unlabeled_ids(corpus)
        if not pool:
            break
        if not state.labeled_relevant or len(state.labeled) < seed_batch:
            doc = next(d for d in ranking if not state.is_labeled(d))
        else:
            presumed = presume(state, corpus, rng)
            model = train(corpus, state, presumed)
            estimate = (semi_estimate(model, corpus, state)
                        if len(state.labeled) > len(state.labeled_relevant) else None)
            if estimate is not None:
                estimates.append(estimate.estimated_relevant)
            if stop_semi(state, estimate, target_recall):
                break
            doc = query(model, corpus, state)
        state.include(doc, truth[doc])
        trajectory.append((doc, truth[doc]))
    return trajectory, estimates
