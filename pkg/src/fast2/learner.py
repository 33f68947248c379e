"""Active-learning core: presumptive negatives, weighted linear SVM, query strategy.

The SVM is a soft-margin linear machine (hinge loss, L2 penalty) solved by
deterministic epoch-ordered coordinate descent on the dual, with the bias
folded in as a constant augmented feature.  Exact coordinate updates make the
dual objective monotone, which the tests assert sweep by sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus

SVM_C = 1.0
SVM_TOL = 1e-6
SVM_MAX_EPOCHS = 1000
BIAS_FEATURE = 1.0
UNDERSAMPLE_AT = 30
UNCERTAINTY_UNTIL = 10

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


class TrainingError(Exception):
    """Training set lacks one of the two classes; caller should keep seeding."""


@dataclass(frozen=True)
class LabelEvent:
    """One labeling act. ordinal = position of the document in first-review order."""

    doc_id: str
    label: bool
    ordinal: int


@dataclass
class LabelState:
    """Evolving review bookkeeping: L, L_R, Fixed, and the full label history."""

    labeled: list[str] = field(default_factory=list)
    labeled_relevant: set[str] = field(default_factory=set)
    fixed: set[str] = field(default_factory=set)
    history: list[LabelEvent] = field(default_factory=list)
    _labeled_set: set[str] = field(default_factory=set, repr=False)
    _ordinals: dict[str, int] = field(default_factory=dict, repr=False)

    @property
    def effort(self) -> int:
        return len(self.history)

    @property
    def labeled_irrelevant(self) -> set[str]:
        return self._labeled_set - self.labeled_relevant

    def is_labeled(self, doc_id: str) -> bool:
        return doc_id in self._labeled_set

    def ordinal_of(self, doc_id: str) -> int:
        return self._ordinals[doc_id]

    def unlabeled_ids(self, corpus: Corpus) -> list[str]:
        return [d.id for d in corpus.documents if d.id not in self._labeled_set]

    def _apply(self, doc_id: str, label: bool) -> None:
        if label:
            self.labeled_relevant.add(doc_id)
        else:
            self.labeled_relevant.discard(doc_id)

    def include(self, doc_id: str, label: bool) -> None:
        """Record one review. Relabeling an already-labeled id moves it into fixed."""
        if doc_id in self._labeled_set:
            self.fixed.add(doc_id)
        else:
            self.labeled.append(doc_id)
            self._labeled_set.add(doc_id)
            self._ordinals[doc_id] = len(self.labeled)
        self._apply(doc_id, label)
        self.history.append(LabelEvent(doc_id, label, self._ordinals[doc_id]))

    def record_vote(self, doc_id: str, draws: list[bool], final: bool) -> None:
        """Record a majority-vote review: one history event per reviewer draw."""
        if doc_id not in self._labeled_set:
            self.labeled.append(doc_id)
            self._labeled_set.add(doc_id)
            self._ordinals[doc_id] = len(self.labeled)
        ordinal = self._ordinals[doc_id]
        for d in draws:
            self.history.append(LabelEvent(doc_id, d, ordinal))
        self._apply(doc_id, final)

    @classmethod
    def from_history(cls, events: Iterable[LabelEvent]) -> "LabelState":
        """Rebuild the state by replaying events; L_R follows each id's last label."""
        state = cls()
        for e in events:
            if e.doc_id in state._labeled_set:
                state.fixed.add(e.doc_id)
            else:
                state.labeled.append(e.doc_id)
                state._labeled_set.add(e.doc_id)
                state._ordinals[e.doc_id] = len(state.labeled)
            state._apply(e.doc_id, e.label)
            state.history.append(LabelEvent(e.doc_id, e.label, state._ordinals[e.doc_id]))
        return state


@dataclass
class LinearModel:
    """Linear decision function weights.x + bias over the corpus vocabulary.

    class_weight_ratio is the relevant/non-relevant example-weight ratio of the
    returned model (1.0 after the undersampled retrain); phase1_weight_ratio
    always keeps the balanced-phase ratio, which the recheck threshold needs.
    """

    weights: np.ndarray
    bias: float
    class_weight_ratio: float
    phase1_weight_ratio: float = 1.0

    def decision(self, features: sp.csr_matrix) -> np.ndarray:
        return np.asarray(features @ self.weights).ravel() + self.bias

    def to_json(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "class_weight_ratio": self.class_weight_ratio,
            "phase1_weight_ratio": self.phase1_weight_ratio,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LinearModel":
        return cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=float(data["bias"]),
            class_weight_ratio=float(data["class_weight_ratio"]),
            phase1_weight_ratio=float(data.get("phase1_weight_ratio", data["class_weight_ratio"])),
        )


@njit(cache=True)
def _dual_cd_kernel(data, indices, indptr, y, cost, n_features, max_epochs, tol):
    """Epoch-ordered dual coordinate descent for the L2-regularized hinge SVM.

    Features are implicitly augmented with a constant bias column of 1.0, so the
    result vector has n_features + 1 entries (bias last).  Returns the weight
    vector, the per-epoch dual objective history, and the epoch count.
    """
    n = len(y)
    w = np.zeros(n_features + 1)
    alpha = np.zeros(n)
    qii = np.empty(n)
    for i in range(n):
        s = 1.0  # bias column contributes 1.0**2
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * data[k]
        qii[i] = s
    history = np.empty(max_epochs)
    obj_prev = 0.0
    epochs = 0
    for epoch in range(max_epochs):
        for i in range(n):
            dot = w[n_features]  # bias feature is constant 1.0
            for k in range(indptr[i], indptr[i + 1]):
                dot += data[k] * w[indices[k]]
            g = y[i] * dot - 1.0
            a_new = alpha[i] - g / qii[i]
            if a_new < 0.0:
                a_new = 0.0
            elif a_new > cost[i]:
                a_new = cost[i]
            delta = a_new - alpha[i]
            if delta != 0.0:
                alpha[i] = a_new
                step = delta * y[i]
                for k in range(indptr[i], indptr[i + 1]):
                    w[indices[k]] += step * data[k]
                w[n_features] += step
        obj = 0.5 * np.dot(w, w) - alpha.sum()
        history[epoch] = obj
        epochs = epoch + 1
        if epoch > 0 and abs(obj - obj_prev) <= tol * max(1.0, abs(obj_prev)):
            break
        obj_prev = obj
    return w, history, epochs


def svm_fit(features: sp.csr_matrix, labels: np.ndarray, costs: np.ndarray,
            max_epochs: int = SVM_MAX_EPOCHS, tol: float = SVM_TOL):
    """Fit the linear SVM. labels in {-1,+1}; costs = per-example hinge weights.

    Returns (weights, bias, objective_history).
    """
    x = sp.csr_matrix(features)
    w_aug, history, epochs = _dual_cd_kernel(
        x.data.astype(np.float64),
        x.indices.astype(np.int64),
        x.indptr.astype(np.int64),
        labels.astype(np.float64),
        costs.astype(np.float64),
        x.shape[1],
        max_epochs,
        tol,
    )
    return w_aug[:-1], float(w_aug[-1]) * BIAS_FEATURE, history[:epochs].copy()


def svm_primal_objective(features: sp.csr_matrix, labels: np.ndarray, costs: np.ndarray,
                         weights: np.ndarray, bias: float) -> float:
    """Primal value 0.5*(||w||^2 + b^2) + sum_i cost_i * hinge_i (bias regularized)."""
    margin = labels * (np.asarray(features @ weights).ravel() + bias)
    hinge = np.maximum(0.0, 1.0 - margin)
    return 0.5 * (float(weights @ weights) + bias * bias) + float(costs @ hinge)


def presume(state: LabelState, corpus: Corpus, rng: np.random.Generator) -> set[str]:
    """Sample min(|L|, |unlabeled|) ids uniformly without replacement from the pool.

    The sample is treated as non-relevant for the next training call only and
    never enters the LabelState.
    """
    pool = state.unlabeled_ids(corpus)
    k = min(len(state.labeled), len(pool))
    if k == 0:
        return set()
    picked = rng.choice(len(pool), size=k, replace=False)
    return {pool[i] for i in picked}


def _training_rows(corpus: Corpus, state: LabelState, presumed: set[str]):
    rel = sorted((corpus.index_of(d) for d in state.labeled_relevant))
    non_ids = state.labeled_irrelevant | presumed
    non = sorted(corpus.index_of(d) for d in non_ids)
    return np.array(rel, dtype=np.int64), np.array(non, dtype=np.int64)


def undersampled_negatives(corpus: Corpus, weights: np.ndarray, bias: float,
                           non_idx: np.ndarray, keep: int) -> np.ndarray:
    """Row indices of the `keep` most confidently negative examples (ties: corpus order)."""
    neg_scores = np.asarray(corpus.features[non_idx] @ weights).ravel() + bias
    order = np.argsort(neg_scores, kind="stable")[:keep]
    return np.sort(non_idx[order])


def train(corpus: Corpus, state: LabelState, presumed: set[str],
          undersample_at: int = UNDERSAMPLE_AT) -> LinearModel:
    """Two-phase training per the active-learning recipe.

    Phase 1 fits a balanced-weighted SVM on L plus the presumed negatives.
    Once |L_R| >= undersample_at, phase 2 keeps only the |L_R| most confidently
    negative training examples and refits unweighted (aggressive undersampling).
    """
    rel_idx, non_idx = _training_rows(corpus, state, presumed)
    n_rel, n_non = len(rel_idx), len(non_idx)
    if n_rel == 0 or n_non == 0:
        raise TrainingError("need at least one relevant and one non-relevant example; keep seeding")

    n = n_rel + n_non
    w_rel = n / (2.0 * n_rel)
    w_non = n / (2.0 * n_non)
    phase1_ratio = w_rel / w_non

    rows = np.concatenate([rel_idx, non_idx])
    x = corpus.features[rows]
    y = np.concatenate([np.ones(n_rel), -np.ones(n_non)])
    costs = SVM_C * np.concatenate([np.full(n_rel, w_rel), np.full(n_non, w_non)])
    weights, bias, _ = svm_fit(x, y, costs)

    if n_rel >= undersample_at:
        kept_idx = undersampled_negatives(corpus, weights, bias, non_idx, n_rel)
        rows2 = np.concatenate([rel_idx, kept_idx])
        x2 = corpus.features[rows2]
        y2 = np.concatenate([np.ones(n_rel), -np.ones(len(kept_idx))])
        costs2 = np.full(len(rows2), SVM_C)
        weights, bias, _ = svm_fit(x2, y2, costs2)
        return LinearModel(weights, bias, class_weight_ratio=1.0, phase1_weight_ratio=phase1_ratio)

    return LinearModel(weights, bias, class_weight_ratio=phase1_ratio, phase1_weight_ratio=phase1_ratio)


def query(model: LinearModel, corpus: Corpus, state: LabelState,
          uncertainty_until: int = UNCERTAINTY_UNTIL) -> str:
    """Pick the next document to review.

    Below uncertainty_until relevant labels, return the unlabeled document
    closest to the decision boundary; afterwards the one scored most relevant.
    Ties break in corpus order.
    """
    pool = state.unlabeled_ids(corpus)
    if not pool:
        raise TrainingError("no unlabeled documents left")
    idx = np.array([corpus.index_of(d) for d in pool], dtype=np.int64)
    scores = model.decision(corpus.features[idx])
    if len(state.labeled_relevant) < uncertainty_until:
        pick = int(np.argmin(np.abs(scores)))
    else:
        pick = int(np.argmax(scores))
    return pool[pick]


def decision_scores(model: LinearModel, corpus: Corpus, ids: Iterable[str]) -> dict[str, float]:
    """weights.x + bias for each requested document id."""
    id_list = list(ids)
    idx = np.array([corpus.index_of(d) for d in id_list], dtype=np.int64)
    if len(idx) == 0:
        return {}
    scores = model.decision(corpus.features[idx])
    return {d: float(s) for d, s in zip(id_list, scores)}
