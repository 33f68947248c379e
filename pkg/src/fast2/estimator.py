"""Semi-supervised estimation of the remaining relevant count, plus stopping rules.

The estimator fits an L2-regularized logistic regression of the temporary
labels on the single feature D(x) (the SVM decision score), then re-labels the
unlabeled pool by walking it in descending predicted probability and marking
one document each time the cumulative probability mass crosses the next
integer.  The temporary-relevant count grows monotonically, so the fixpoint
loop terminates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .corpus import Corpus
from .learner import LabelState, LinearModel, njit

SEMI_MAX_ITERATIONS = 100
ROS_WINDOW = 50
KNEE_RHO = 6.0


class EstimationError(Exception):
    """Raised when the estimator's preconditions do not hold."""


@dataclass
class Estimate:
    """Output of the semi-supervised estimator.

    estimated_relevant = sum of temporary labels; regressor keeps the fitted
    (coef, intercept) so the recheck logic can calibrate probabilities.
    """

    estimated_relevant: int
    temp_labels: dict[str, int]
    iterations: int
    converged: bool = True
    regressor: tuple[float, float] = (0.0, 0.0)

    def to_json(self) -> dict:
        return {
            "estimated_relevant": self.estimated_relevant,
            "iterations": self.iterations,
            "converged": self.converged,
            "regressor": list(self.regressor),
        }


@dataclass
class RecallCurve:
    """Ordered (papers reviewed, relevant found) pairs, one per pool review."""

    points: list[tuple[int, int]] = field(default_factory=list)

    def append(self, n_reviewed: int, n_relevant: int) -> None:
        if self.points and n_reviewed <= self.points[-1][0]:
            raise ValueError("papers-reviewed coordinate must be strictly increasing")
        self.points.append((n_reviewed, n_relevant))

    def __len__(self) -> int:
        return len(self.points)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@njit(cache=True)
def _logistic_eval(w, b, d, y, strength):
    """Objective, gradient, and Hessian of the penalized log-likelihood."""
    obj = 0.0
    gw = 0.0
    gb = 0.0
    h11 = 0.0
    h12 = 0.0
    h22 = 0.0
    for i in range(d.shape[0]):
        f = w * d[i] + b
        # log(1 + e^f) - y*f, computed stably
        if f > 0.0:
            obj += f + math.log1p(math.exp(-f)) - y[i] * f
            p = 1.0 / (1.0 + math.exp(-f))
        else:
            obj += math.log1p(math.exp(f)) - y[i] * f
            ef = math.exp(f)
            p = ef / (1.0 + ef)
        r = p - y[i]
        gw += r * d[i]
        gb += r
        s = p * (1.0 - p)
        h11 += s * d[i] * d[i]
        h12 += s * d[i]
        h22 += s
    obj += strength * w * w / 2.0
    gw += strength * w
    h11 += strength
    return obj, gw, gb, h11, h12, h22


def logistic_objective_grad(params: np.ndarray, d: np.ndarray, y: np.ndarray,
                            strength: float):
    """Regularized negative log-likelihood and its gradient.

    params = (coef, intercept); penalty strength*coef^2/2 on the coefficient
    only (larger strength means a stronger pull toward a flat fit).
    """
    obj, gw, gb, _, _, _ = _logistic_eval(
        float(params[0]), float(params[1]),
        np.ascontiguousarray(d, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64), strength)
    return obj, np.array([gw, gb])


def logistic_fit(d: np.ndarray, y: np.ndarray, strength: float,
                 max_iter: int = 100, tol: float = 1e-10) -> tuple[float, float]:
    """Damped-Newton fit of the one-feature logistic regression. Deterministic."""
    if strength <= 0:
        raise ValueError("regularization strength must be positive")
    d = np.ascontiguousarray(d, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w, b = 0.0, 0.0
    obj, gw, gb, h11, h12, h22 = _logistic_eval(w, b, d, y, strength)
    for _ in range(max_iter):
        if max(abs(gw), abs(gb)) <= tol * max(1.0, len(d)):
            break
        det = h11 * h22 - h12 * h12
        if det <= 1e-12 * max(1.0, h11 * h22):
            denom = max(h11, h22, 1.0)
            step_w, step_b = gw / denom, gb / denom
        else:
            step_w = (h22 * gw - h12 * gb) / det
            step_b = (h11 * gb - h12 * gw) / det
        scale = 1.0
        accepted = False
        for _ in range(20):
            cand = _logistic_eval(w - scale * step_w, b - scale * step_b, d, y, strength)
            if cand[0] <= obj:
                w, b = w - scale * step_w, b - scale * step_b
                gained = obj - cand[0]
                obj, gw, gb, h11, h12, h22 = cand
                accepted = gained > 1e-14 * (1.0 + abs(obj))
                break
            scale *= 0.5
        if not accepted:  # stalled at numerical precision
            break
    return float(w), float(b)


def temporary_label(probabilities: dict[str, float], temp_labels: dict[str, int]) -> dict[str, int]:
    """Re-label the unlabeled pool by cumulative predicted probability.

    Walk the pool in descending probability (insertion order breaks ties,
    callers pass corpus order), accumulating the probabilities; every time the
    running total reaches the next integer target, mark the first document of
    the current candidate group as temporarily relevant.  Only keys present in
    `probabilities` are ever modified.
    """
    updated = dict(temp_labels)
    items = sorted(enumerate(probabilities.items()), key=lambda e: (-e[1][1], e[0]))
    count = 0.0
    target = 1
    group_head: Optional[str] = None
    for _, (doc_id, p) in items:
        count += p
        if group_head is None:
            group_head = doc_id
        if count >= target:
            updated[group_head] = 1
            target += 1
            group_head = None
    return updated


@njit(cache=True)
def _label_walk(probs_sorted: np.ndarray) -> np.ndarray:
    """Positions (in sorted order) that the cumulative-count walk marks relevant."""
    n = probs_sorted.shape[0]
    marked = np.empty(n, dtype=np.int64)
    m = 0
    count = 0.0
    target = 1.0
    head = -1
    for i in range(n):
        count += probs_sorted[i]
        if head < 0:
            head = i
        if count >= target:
            marked[m] = head
            m += 1
            target += 1.0
            head = -1
    return marked[:m]


def _temporary_label_pass(probs: np.ndarray, y: np.ndarray, unl_idx: np.ndarray) -> None:
    """Array-core of temporary_label operating in place on the full label vector."""
    order = np.argsort(-probs, kind="stable")
    heads = _label_walk(np.ascontiguousarray(probs[order]))
    y[unl_idx[order[heads]]] = 1.0


def semi_estimate(model: LinearModel, corpus: Corpus, state: LabelState,
                  max_iterations: int = SEMI_MAX_ITERATIONS) -> Estimate:
    """Estimate the total number of relevant papers in the pool.

    Iterates logistic fit -> temporary re-label until the estimated count stops
    changing, with regularization strength estimate / (|L| - |L_R|).  Scaling
    the penalty by the positive/negative label ratio keeps the fit conservative
    while negatives are scarce and lets it sharpen as the review matures.
    """
    n_labeled = len(state.labeled)
    n_rel = len(state.labeled_relevant)
    if n_labeled == n_rel:
        raise EstimationError("need at least one non-relevant label (C undefined otherwise)")

    n = len(corpus)
    d = model.decision(corpus.features)
    y_base = np.zeros(n)
    for doc_id in state.labeled_relevant:
        y_base[corpus.index_of(doc_id)] = 1.0
    unl_idx = np.array([corpus.index_of(i) for i in state.unlabeled_ids(corpus)], dtype=np.int64)

    estimate = int(y_base.sum())
    iterations = 0
    converged = estimate == 0
    coef, intercept = 0.0, 0.0
    y_fit = y_base
    while iterations < max_iterations and not converged:
        strength = estimate / (n_labeled - n_rel)
        coef, intercept = logistic_fit(d, y_fit, strength)
        # temporary labels are recomputed from the human labels every pass;
        # the previous pass feeds back only through the fit
        y_fit = y_base.copy()
        if len(unl_idx):
            probs = _sigmoid(coef * d[unl_idx] + intercept)
            _temporary_label_pass(probs, y_fit, unl_idx)
        iterations += 1
        new_estimate = int(y_fit.sum())
        if new_estimate == estimate:
            converged = True
        estimate = new_estimate

    temp = {doc.id: int(y_fit[i]) for i, doc in enumerate(corpus.documents)}
    return Estimate(estimated_relevant=estimate, temp_labels=temp,
                    iterations=iterations, converged=converged,
                    regressor=(coef, intercept))


def stop_semi(state: LabelState, estimate: Optional[Estimate], target_recall: float) -> bool:
    """True once |L_R| >= target_recall * estimated_relevant. No estimate -> False."""
    if estimate is None:
        return False
    return len(state.labeled_relevant) >= target_recall * estimate.estimated_relevant


def stop_ros(state: LabelState, window: int = ROS_WINDOW) -> bool:
    """True once the most recent `window` label events are all non-relevant."""
    if len(state.history) < window:
        return False
    return all(not e.label for e in state.history[-window:])


def stop_knee(curve: RecallCurve, rho: Union[float, str] = KNEE_RHO) -> tuple[bool, int]:
    """Knee test on the recall curve.

    The knee is the point with maximum perpendicular distance to the chord from
    first to last point.  Stop once slope-before / slope-after exceeds rho,
    where slope-after is floored to one relevant paper over the remaining
    reviews.  rho="adaptive" uses 156 - min(relevant found, 150).
    """
    pts = curve.points
    last = len(pts) - 1
    if len(pts) < 3:
        return False, last
    x = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.array([p[1] for p in pts], dtype=np.float64)
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    chord = math.hypot(dx, dy)
    dist = np.abs(dy * (x - x[0]) - dx * (y - y[0])) / chord
    if np.max(dist) <= 1e-12:
        return False, last
    knee = int(np.argmax(dist))
    if rho == "adaptive":
        rho_val = 156.0 - min(float(y[-1]), 150.0)
    else:
        rho_val = float(rho)
    if x[knee] == 0 or knee == last:
        return False, knee
    slope_before = y[knee] / x[knee]
    span = x[-1] - x[knee]
    slope_after = max((y[-1] - y[knee]) / span, 1.0 / span)
    return slope_before / slope_after > rho_val, knee
