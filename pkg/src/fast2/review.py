"""Session engine: seed-rank, label, retrain, estimate, query, and recheck loops.

One Session owns one review. In simulated mode a fallible reviewer model
produces the labels and corrections run inline; in interactive mode candidates
and recheck batches are surfaced to the caller (the HTTP service).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .corpus import Corpus, Query, bm25_scores
from .estimator import (
    Estimate,
    RecallCurve,
    _sigmoid,
    semi_estimate,
    stop_knee,
    stop_ros,
    stop_semi,
)
from .learner import (
    UNCERTAINTY_UNTIL,
    UNDERSAMPLE_AT,
    LabelEvent,
    LabelState,
    LinearModel,
    presume,
    query,
    train,
)

SEED_BATCH = 10

SEEDINGS = ("rank_bm25", "auto_bm25", "random")
STOPPINGS = ("semi", "ros", "knee")
CORRECTIONS = ("none", "disagree", "kuhrmann", "cormack17")


class SessionError(Exception):
    """Session-level contract violation (bad mode, unknown document, ...)."""


class SimulationError(SessionError):
    """Simulated labeling requested without ground truth or reviewer model."""


@dataclass(frozen=True)
class ReviewerModel:
    """Simulated human with the given screening precision and recall."""

    precision: float = 1.0
    recall: float = 1.0

    def __post_init__(self) -> None:
        for name, v in (("precision", self.precision), ("recall", self.recall)):
            if not 0.0 < v <= 1.0:
                raise ValueError(f"reviewer {name} must be in (0, 1], got {v}")

    def false_positive_probability(self, n_relevant: int, n_total: int) -> float:
        """Chance a non-relevant paper gets labeled relevant, as the error model prints it."""
        return (n_relevant / (n_total - n_relevant)) * (self.recall / self.precision - self.precision)


@dataclass(frozen=True)
class SessionConfig:
    query_terms: tuple[str, ...] = ()
    target_recall: float = 0.95
    seeding: str = "rank_bm25"
    stopping: str = "semi"
    knee_rho: Union[float, str] = 6.0
    ros_window: int = 50
    correction: str = "none"
    recheck_interval: int = 50
    recheck_cap: Optional[int] = None
    uncertainty_until: int = UNCERTAINTY_UNTIL
    undersample_at: int = UNDERSAMPLE_AT
    seed_batch: int = SEED_BATCH

    def __post_init__(self) -> None:
        if not 0.0 < self.target_recall <= 1.0:
            raise ValueError("target_recall must be in (0, 1]")
        if self.recheck_interval < 1:
            raise ValueError("recheck_interval must be >= 1")
        if self.seeding not in SEEDINGS:
            raise ValueError(f"seeding must be one of {SEEDINGS}")
        if self.stopping not in STOPPINGS:
            raise ValueError(f"stopping must be one of {STOPPINGS}")
        if self.correction not in CORRECTIONS:
            raise ValueError(f"correction must be one of {CORRECTIONS}")
        if self.correction == "cormack17" and self.stopping != "knee":
            raise ValueError("cormack17 correction requires knee stopping")
        if self.seeding != "random" and not self.query_terms:
            raise ValueError("BM25 seeding requires query terms")
        object.__setattr__(self, "query_terms", tuple(self.query_terms))

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "SessionConfig":
        data = dict(data)
        data["query_terms"] = tuple(data.get("query_terms", ()))
        return cls(**data)


@dataclass(frozen=True)
class NextOutcome:
    """What the engine proposes next: a candidate, a stop signal, or a reseed advisory."""

    kind: str  # candidate | stopped | reseed
    doc_id: Optional[str] = None
    rationale: Optional[str] = None
    reason: Optional[str] = None

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "NextOutcome":
        return cls(**data)


class Session:
    """One review in progress. Not thread-safe; callers hold exclusive access."""

    def __init__(self, corpus: Corpus, config: SessionConfig, seed: int = 0,
                 mode: str = "interactive", reviewer: Optional[ReviewerModel] = None):
        if mode not in ("interactive", "simulated"):
            raise ValueError("mode must be interactive or simulated")
        if mode == "interactive" and reviewer is not None:
            raise ValueError("interactive sessions take labels from humans, not a reviewer model")
        if not corpus.is_featurized:
            raise SessionError("corpus must be featurized")
        self.corpus = corpus
        self.config = config
        self.mode = mode
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.reviewer = reviewer if reviewer is not None else (
            ReviewerModel() if mode == "simulated" else None)
        self.state = LabelState()
        self.curve = RecallCurve()
        self.model: Optional[LinearModel] = None
        self.estimate: Optional[Estimate] = None
        self.status = "seeding"
        self.stop_reason: Optional[str] = None
        self.knee_reviewed: Optional[int] = None
        self.recheck_queue: list[str] = []
        self.pending: Optional[NextOutcome] = None
        self.reseed_raised = False
        self.last_recheck_at = 0
        self._bm25_order: Optional[list[str]] = None
        self._fp_prob: Optional[float] = None

    # ------------------------------------------------------------------ seeds

    def _bm25_ranking(self) -> list[str]:
        if self._bm25_order is None:
            scores = bm25_scores(self.corpus, Query(self.config.query_terms))
            order = np.argsort(-scores, kind="stable")
            self._bm25_order = [self.corpus.documents[i].id for i in order]
        return self._bm25_order

    def _top_bm25_unlabeled(self) -> str:
        for doc_id in self._bm25_ranking():
            if not self.state.is_labeled(doc_id):
                return doc_id
        raise SessionError("pool exhausted")

    # ------------------------------------------------------------- main loop

    def next_candidate(self, force: bool = False) -> NextOutcome:
        """Propose the next document (idempotent until a label arrives).

        force=True re-evaluates a stopped session, skipping the stopping rule
        (stopping is advisory to a human who wants to continue).
        """
        if self.pending is not None and not force:
            return self.pending
        out = self._compute_next(force)
        if out.kind != "reseed":  # advisories are one-shot, never cached
            self.pending = out
        return out

    def _seeding_done(self) -> bool:
        if self.config.seeding == "rank_bm25":
            # the reviewer screens a full seed batch before learning starts
            return (bool(self.state.labeled_relevant)
                    and len(self.state.labeled) >= self.config.seed_batch)
        return bool(self.state.labeled_relevant)

    def _compute_next(self, force: bool) -> NextOutcome:
        if self.status == "stopped" and not force:
            return NextOutcome("stopped", reason=self.stop_reason)
        if not self.state.unlabeled_ids(self.corpus):
            self.status = "stopped"
            self.stop_reason = "exhausted"
            return NextOutcome("stopped", reason="exhausted")

        if not self._seeding_done():
            if self.config.seeding == "auto_bm25":
                top = self._top_bm25_unlabeled()
                self.state.include(top, True)
                self.curve.append(len(self.state.labeled), len(self.state.labeled_relevant))
                self.status = "learning"
            elif self.config.seeding == "random":
                pool = self.state.unlabeled_ids(self.corpus)
                pick = pool[int(self.rng.integers(len(pool)))]
                return NextOutcome("candidate", doc_id=pick, rationale="random-seed")
            else:
                if (len(self.state.labeled) >= self.config.seed_batch
                        and not self.state.labeled_relevant
                        and not self.reseed_raised):
                    self.reseed_raised = True
                    return NextOutcome("reseed",
                                       reason="no relevant paper in the first seed batch; "
                                              "consider different query terms")
                return NextOutcome("candidate", doc_id=self._top_bm25_unlabeled(),
                                   rationale="bm25-seed")

        return self._advance(skip_stop=force)

    def _advance(self, skip_stop: bool = False) -> NextOutcome:
        state = self.state
        presumed = presume(state, self.corpus, self.rng)
        self.model = train(self.corpus, state, presumed, self.config.undersample_at)
        if len(state.labeled) > len(state.labeled_relevant):
            self.estimate = semi_estimate(self.model, self.corpus, state)
        else:
            self.estimate = None

        if (self.config.correction == "disagree"
                and len(state.labeled) % self.config.recheck_interval == 0
                and self.last_recheck_at != len(state.labeled)):
            self.last_recheck_at = len(state.labeled)
            batch = disagree_recheck(self)
            if self.mode == "interactive":
                self.recheck_queue = batch

        if not skip_stop and self._stop_fires():
            self.status = "stopped"
            return NextOutcome("stopped", reason=self.stop_reason)

        pick = query(self.model, self.corpus, state, self.config.uncertainty_until)
        rationale = ("uncertainty"
                     if len(state.labeled_relevant) < self.config.uncertainty_until
                     else "certainty")
        return NextOutcome("candidate", doc_id=pick, rationale=rationale)

    def _stop_fires(self) -> bool:
        cfg = self.config
        if cfg.stopping == "semi":
            if stop_semi(self.state, self.estimate, cfg.target_recall):
                self.stop_reason = "target-recall"
                return True
        elif cfg.stopping == "ros":
            if stop_ros(self.state, cfg.ros_window):
                self.stop_reason = "consecutive-non-relevant"
                return True
        elif cfg.stopping == "knee":
            fired, knee = stop_knee(self.curve, cfg.knee_rho)
            if fired:
                self.knee_reviewed = self.curve.points[knee][0]
                self.stop_reason = "knee"
                return True
        return False

    # ---------------------------------------------------------------- labels

    def submit_label(self, doc_id: str, label: bool) -> LabelState:
        """Record one human decision. Relabeling a labeled id moves it into Fixed."""
        self.corpus.index_of(doc_id)  # raises KeyError for unknown ids
        if not self.state.is_labeled(doc_id):
            issued = self.pending is not None and self.pending.doc_id == doc_id
            if not issued and doc_id not in self.recheck_queue:
                raise SessionError(f"document {doc_id!r} was not proposed for review")
        self._apply_label(doc_id, label)
        return self.state

    def _apply_label(self, doc_id: str, label: bool) -> None:
        new_doc = not self.state.is_labeled(doc_id)
        self.state.include(doc_id, label)
        if new_doc:
            self.curve.append(len(self.state.labeled), len(self.state.labeled_relevant))
        if doc_id in self.recheck_queue:
            self.recheck_queue.remove(doc_id)
        if self.status == "seeding" and self.state.labeled_relevant:
            self.status = "learning"
        self.pending = None

    def counts(self) -> dict:
        return {
            "labeled": len(self.state.labeled),
            "relevant": len(self.state.labeled_relevant),
            "effort": self.state.effort,
        }

    # ------------------------------------------------------------- snapshots

    def to_snapshot(self) -> dict:
        return {
            "config": self.config.to_json(),
            "mode": self.mode,
            "seed": self.seed,
            "reviewer": (None if self.mode == "interactive"
                         else {"precision": self.reviewer.precision, "recall": self.reviewer.recall}),
            "history": [[e.doc_id, e.label, e.ordinal] for e in self.state.history],
            "fixed": sorted(self.state.fixed),
            "rng_state": self.rng.bit_generator.state,
            "model": self.model.to_json() if self.model else None,
            "estimate": self.estimate.to_json() if self.estimate else None,
            "status": self.status,
            "stop_reason": self.stop_reason,
            "knee_reviewed": self.knee_reviewed,
            "curve": [[n, r] for n, r in self.curve.points],
            "recheck_queue": list(self.recheck_queue),
            "pending": self.pending.to_json() if self.pending else None,
            "reseed_raised": self.reseed_raised,
            "last_recheck_at": self.last_recheck_at,
        }

    @classmethod
    def from_snapshot(cls, corpus: Corpus, snap: dict) -> "Session":
        reviewer = snap.get("reviewer")
        session = cls(
            corpus,
            SessionConfig.from_json(snap["config"]),
            seed=snap.get("seed", 0),
            mode=snap.get("mode", "interactive"),
            reviewer=ReviewerModel(**reviewer) if reviewer else None,
        )
        session.state = LabelState.from_history(
            LabelEvent(d, bool(l), int(o)) for d, l, o in snap["history"])
        session.state.fixed = set(snap.get("fixed", ()))
        session.rng.bit_generator.state = snap["rng_state"]
        model = snap.get("model")
        if model:
            session.model = LinearModel.from_json(model)
        est = snap.get("estimate")
        if est:
            session.estimate = Estimate(
                estimated_relevant=est["estimated_relevant"],
                temp_labels={},
                iterations=est["iterations"],
                converged=est["converged"],
                regressor=tuple(est.get("regressor", (0.0, 0.0))),
            )
        session.status = snap["status"]
        session.stop_reason = snap.get("stop_reason")
        session.knee_reviewed = snap.get("knee_reviewed")
        session.curve = RecallCurve([tuple(p) for p in snap.get("curve", [])])
        session.recheck_queue = list(snap.get("recheck_queue", ()))
        pending = snap.get("pending")
        session.pending = NextOutcome.from_json(pending) if pending else None
        session.reseed_raised = bool(snap.get("reseed_raised", False))
        session.last_recheck_at = int(snap.get("last_recheck_at", 0))
        return session


# ---------------------------------------------------------- simulated review


def simulate_label(session: Session, doc_id: str) -> bool:
    """One fallible-reviewer decision for a ground-truth document.

    A relevant paper is labeled relevant with probability recall; a
    non-relevant one with the model's printed false-positive probability.
    Probabilities that are exactly 0 or 1 are decided without consuming
    randomness, so an error-free reviewer leaves the rng stream untouched.
    """
    if session.mode != "simulated":
        raise SimulationError("simulate_label requires a simulated session")
    doc = session.corpus.documents[session.corpus.index_of(doc_id)]
    if doc.ground_truth is None:
        raise SimulationError(f"document {doc_id!r} has no ground truth")
    if session._fp_prob is None:
        n_rel = len(session.corpus.relevant_ids())
        session._fp_prob = session.reviewer.false_positive_probability(n_rel, len(session.corpus))
    p = session.reviewer.recall if doc.ground_truth else session._fp_prob
    if p >= 1.0:
        return True
    if p <= 0.0:
        return False
    return bool(session.rng.random() < p)


def apply_simulated_label(session: Session, doc_id: str) -> bool:
    """Draw one simulated label and record it."""
    label = simulate_label(session, doc_id)
    session._apply_label(doc_id, label)
    return label


def kuhrmann_vote(session: Session, doc_id: str) -> bool:
    """Majority vote of two (or three, on disagreement) simulated reviewers.

    Every draw costs one unit of effort; the recorded label is the majority.
    """
    draws = [simulate_label(session, doc_id), simulate_label(session, doc_id)]
    if draws[0] != draws[1]:
        draws.append(simulate_label(session, doc_id))
    final = draws.count(True) > draws.count(False)
    new_doc = not session.state.is_labeled(doc_id)
    session.state.record_vote(doc_id, draws, final)
    if new_doc:
        session.curve.append(len(session.state.labeled), len(session.state.labeled_relevant))
    if session.status == "seeding" and session.state.labeled_relevant:
        session.status = "learning"
    session.pending = None
    return final


def recheck_probabilities(session: Session) -> tuple[dict[str, float], float]:
    """Calibrated relevance probability for every labeled, not yet fixed paper.

    Uses the estimator's fitted regressor over the current decision scores; the
    disagreement threshold is 1/(1 + phase-1 class weight ratio).
    """
    model = session.model
    coef, intercept = session.estimate.regressor
    threshold = 1.0 / (1.0 + model.phase1_weight_ratio)
    check = [d for d in session.state.labeled if d not in session.state.fixed]
    if not check:
        return {}, threshold
    idx = np.array([session.corpus.index_of(d) for d in check], dtype=np.int64)
    scores = model.decision(session.corpus.features[idx])
    probs = _sigmoid(coef * scores + intercept)
    return dict(zip(check, probs.tolist())), threshold


def disagree_recheck(session: Session) -> list[str]:
    """Papers whose human label the model disputes most, ordered by disagreement.

    In simulated mode each batch member is immediately relabeled with a fresh
    reviewer draw and enters Fixed; in interactive mode the batch is returned
    for the UI to surface.
    """
    if session.model is None or session.estimate is None:
        return []
    probs, threshold = recheck_probabilities(session)
    relevant = session.state.labeled_relevant
    batch = [d for d, p in probs.items()
             if (p < threshold if d in relevant else p > threshold)]
    batch.sort(key=lambda d: (-abs(probs[d] - threshold), session.corpus.index_of(d)))
    if session.config.recheck_cap is not None:
        batch = batch[:session.config.recheck_cap]
    if session.mode == "simulated":
        for doc_id in batch:
            label = simulate_label(session, doc_id)
            session.state.include(doc_id, label)
    return batch


def cormack17_recheck(session: Session, knee_reviewed: int) -> list[str]:
    """Post-stop recheck of late inclusions and early exclusions.

    Relevant-labeled papers first reviewed after the knee and non-relevant ones
    first reviewed before it are relabeled once each (simulated) or returned
    (interactive).
    """
    state = session.state
    batch = [d for d in state.labeled
             if (state.ordinal_of(d) > knee_reviewed if d in state.labeled_relevant
                 else state.ordinal_of(d) < knee_reviewed)]
    if session.mode == "simulated":
        for doc_id in batch:
            label = simulate_label(session, doc_id)
            session.state.include(doc_id, label)
    return batch
