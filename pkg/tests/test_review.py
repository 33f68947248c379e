"""Session engine: seeding, labeling, reviewer simulation, rechecks, snapshots."""
import numpy as np
import pytest

from fast2.corpus import Corpus, Document, build_features
from fast2.estimator import Estimate
from fast2.learner import LinearModel
from fast2.review import (
    ReviewerModel,
    Session,
    SessionConfig,
    SessionError,
    SimulationError,
    cormack17_recheck,
    disagree_recheck,
    kuhrmann_vote,
    simulate_label,
)

from synth import corpus_from_matrix, synthetic_corpus


def _config(**kw):
    kw.setdefault("query_terms", ("topic0word0", "topic0word1"))
    return SessionConfig(**kw)


# ------------------------------------------------------------ config checks


def test_config_validation():
    with pytest.raises(ValueError):
        _config(target_recall=1.5)
    with pytest.raises(ValueError):
        _config(recheck_interval=0)
    with pytest.raises(ValueError):
        _config(correction="cormack17", stopping="semi")
    with pytest.raises(ValueError):
        SessionConfig(seeding="rank_bm25", query_terms=())
    cfg = _config(correction="cormack17", stopping="knee")
    assert cfg.knee_rho == 6.0


def test_reviewer_model_validation():
    with pytest.raises(ValueError):
        ReviewerModel(precision=0.0, recall=0.5)
    with pytest.raises(ValueError):
        ReviewerModel(precision=0.5, recall=1.2)


def test_interactive_session_rejects_reviewer():
    corpus = synthetic_corpus(30, 0.1, seed=0)
    with pytest.raises(ValueError):
        Session(corpus, _config(), mode="interactive", reviewer=ReviewerModel(0.7, 0.7))


# ------------------------------------------------------- seeding and labels


def test_fresh_session_proposes_top_bm25(small_synth):
    ses = Session(small_synth, _config())
    out = ses.next_candidate()
    assert out.kind == "candidate"
    assert out.rationale == "bm25-seed"
    # idempotent until a label arrives
    assert ses.next_candidate().doc_id == out.doc_id
    ses.submit_label(out.doc_id, True)
    assert ses.status == "learning"
    assert ses.next_candidate().doc_id != out.doc_id


def test_seed_batch_completes_before_learning(small_synth):
    ses = Session(small_synth, _config(seed_batch=10))
    for _ in range(10):
        out = ses.next_candidate()
        assert out.rationale == "bm25-seed"
        ses.submit_label(out.doc_id, True)
    out = ses.next_candidate()
    assert out.rationale in ("uncertainty", "certainty")


def test_submit_label_bookkeeping(small_synth):
    ses = Session(small_synth, _config())
    doc = ses.next_candidate().doc_id
    ses.submit_label(doc, True)
    assert ses.counts() == {"labeled": 1, "relevant": 1, "effort": 1}
    # relabel: effort 2, |L| 1, moves into fixed
    ses.submit_label(doc, False)
    assert ses.counts() == {"labeled": 1, "relevant": 0, "effort": 2}
    assert doc in ses.state.fixed


def test_submit_label_unknown_and_unproposed(small_synth):
    ses = Session(small_synth, _config())
    with pytest.raises(KeyError):
        ses.submit_label("missing", True)
    issued = ses.next_candidate().doc_id
    other = next(d.id for d in small_synth.documents if d.id != issued)
    with pytest.raises(SessionError):
        ses.submit_label(other, True)


def test_reseed_advisory_after_barren_batch():
    # query hits only non-relevant docs: relabel everything no; advisory at 10
    corpus = synthetic_corpus(80, 0.05, seed=3)
    ses = Session(corpus, _config(query_terms=("topic3word1", "topic3word2")))
    outcomes = []
    for _ in range(11):
        out = ses.next_candidate()
        outcomes.append(out.kind)
        if out.kind == "candidate":
            ses.submit_label(out.doc_id, False)
    assert "reseed" in outcomes
    # advisory is raised exactly once, then BM25 seeding continues
    assert outcomes.count("reseed") == 1


def test_pool_exhaustion_stops():
    corpus = synthetic_corpus(12, 0.1, seed=1)
    ses = Session(corpus, _config())
    labeled = 0
    while labeled < 12:
        out = ses.next_candidate()
        if out.kind == "reseed":
            continue
        assert out.kind == "candidate"
        ses.submit_label(out.doc_id, False)
        labeled += 1
    out = ses.next_candidate()
    assert out.kind == "stopped"
    assert out.reason == "exhausted"
    assert ses.status == "stopped"


# --------------------------------------------------------- simulated labels


def _sim_session(corpus, prec=1.0, rec=1.0, **cfg):
    return Session(corpus, _config(**cfg), seed=5, mode="simulated",
                   reviewer=ReviewerModel(prec, rec))


def test_simulate_label_error_free_is_ground_truth(small_synth):
    ses = _sim_session(small_synth)
    state_before = ses.rng.bit_generator.state["state"]["state"]
    for d in small_synth.documents[:30]:
        assert simulate_label(ses, d.id) == d.ground_truth
    # degenerate probabilities must not consume randomness
    assert ses.rng.bit_generator.state["state"]["state"] == state_before


def test_simulate_label_requires_ground_truth():
    docs = [Document(id="a", title="some text here", abstract="words")]
    corpus = build_features(Corpus(documents=docs))
    ses = Session(corpus, _config(), seed=1, mode="simulated")
    with pytest.raises(SimulationError):
        simulate_label(ses, "a")


def test_false_positive_probability_formula():
    # printed model at 0.7/0.7 with 104 relevant of 8911
    reviewer = ReviewerModel(0.7, 0.7)
    p = reviewer.false_positive_probability(104, 8911)
    assert p == pytest.approx((104 / 8807) * (0.7 / 0.7 - 0.7), abs=1e-12)
    assert p == pytest.approx(0.003543, abs=5e-6)


def test_simulated_reviewer_hits_target_rates():
    # full-pool labelings at 0.7/0.7: empirical precision and recall near 0.7
    corpus = synthetic_corpus(2000, 0.05, seed=9)
    ses = _sim_session(corpus, prec=0.7, rec=0.7)
    tp = fp = fn = 0
    passes = 50  # 1e5 total labelings
    for _ in range(passes):
        for d in corpus.documents:
            lab = simulate_label(ses, d.id)
            if lab and d.ground_truth:
                tp += 1
            elif lab:
                fp += 1
            elif d.ground_truth:
                fn += 1
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    assert precision == pytest.approx(0.7, abs=0.02)
    assert recall == pytest.approx(0.7, abs=0.02)


# ------------------------------------------------------------ kuhrmann vote


def test_kuhrmann_error_free_two_draws(small_synth):
    ses = _sim_session(small_synth)
    doc = small_synth.documents[0]
    label = kuhrmann_vote(ses, doc.id)
    assert label == doc.ground_truth
    assert ses.state.effort == 2
    assert len(ses.state.labeled) == 1


def test_kuhrmann_majority_rate_on_relevant():
    # P(final = relevant) = rec^2 + 2 rec (1-rec) rec = 0.784 at rec = 0.7
    corpus = synthetic_corpus(50, 0.3, seed=2)
    rel = next(d.id for d in corpus.documents if d.ground_truth)
    hits = trials = 0
    ses = _sim_session(corpus, prec=0.7, rec=0.7)
    for _ in range(10000):
        if kuhrmann_vote(ses, rel):
            hits += 1
        trials += 1
    assert hits / trials == pytest.approx(0.784, abs=0.012)


def test_kuhrmann_effort_two_or_three(small_synth):
    ses = _sim_session(small_synth, prec=0.7, rec=0.7)
    before = ses.state.effort
    kuhrmann_vote(ses, small_synth.documents[0].id)
    assert ses.state.effort - before in (2, 3)


# --------------------------------------------------------- disagree recheck


def _manual_session_with_probs(probs_by_doc, relevant, fixed=()):
    """Interactive session with a crafted model so sigmoid(decision) hits probs."""
    n = len(probs_by_doc)
    logits = [np.log(p / (1 - p)) for p in probs_by_doc.values()]
    x = np.eye(n)
    corpus = corpus_from_matrix(x)
    cfg = _config(correction="disagree")
    ses = Session(corpus, cfg, seed=0)
    for i, doc_id in enumerate(probs_by_doc):
        ses.state.include(doc_id, doc_id in relevant)
    for doc_id in fixed:
        ses.state.fixed.add(doc_id)
    ses.model = LinearModel(weights=np.array(logits), bias=0.0,
                            class_weight_ratio=1.0, phase1_weight_ratio=1.0)
    ses.estimate = Estimate(estimated_relevant=1, temp_labels={}, iterations=1,
                            regressor=(1.0, 0.0))
    return ses


def test_disagree_batch_by_threshold():
    # ratio 1 -> threshold 0.5; relevant doc at prob 0.2 lands in the batch
    ses = _manual_session_with_probs(
        {"d0": 0.2, "d1": 0.9, "d2": 0.6, "d3": 0.4}, relevant={"d0", "d1"})
    batch = disagree_recheck(ses)
    # d0: relevant at 0.2 (dist .3); d2: non-relevant at 0.6 (dist .1)
    assert batch == ["d0", "d2"]


def test_disagree_skips_fixed():
    ses = _manual_session_with_probs(
        {"d0": 0.2, "d1": 0.9}, relevant={"d0", "d1"}, fixed={"d0", "d1"})
    assert disagree_recheck(ses) == []


def test_disagree_six_doc_hand_oracle():
    # hand-executed: threshold 0.5
    probs = {"d0": 0.05, "d1": 0.95, "d2": 0.45, "d3": 0.55, "d4": 0.30, "d5": 0.70}
    relevant = {"d0", "d2", "d4"}  # relevant below threshold disagree: d0 (.45), d2 (.05), d4 (.20)
    ses = _manual_session_with_probs(probs, relevant)
    # non-relevant above threshold: d1 (.45), d3 (.05), d5 (.20)
    # order by descending |p - 0.5|, ties by corpus order
    assert disagree_recheck(ses) == ["d0", "d1", "d4", "d5", "d2", "d3"]


def test_disagree_without_estimate_is_empty(small_synth):
    ses = Session(small_synth, _config(correction="disagree"))
    assert disagree_recheck(ses) == []


def test_disagree_simulated_relabels_enter_fixed():
    corpus = synthetic_corpus(400, 0.1, seed=11)
    spec_cfg = _config(correction="disagree", recheck_interval=25)
    ses = Session(corpus, spec_cfg, seed=3, mode="simulated",
                  reviewer=ReviewerModel(0.7, 0.7))
    from fast2.review import apply_simulated_label
    relabels = 0
    for _ in range(120):
        out = ses.next_candidate()
        if out.kind == "stopped":
            break
        if out.kind == "reseed":
            continue
        apply_simulated_label(ses, out.doc_id)
    # every auto-rechecked doc is fixed exactly once: at most 2 events per id
    from collections import Counter
    events = Counter(e.doc_id for e in ses.state.history)
    assert all(v <= 2 for v in events.values())
    assert ses.state.fixed  # some disagreements were rechecked


# --------------------------------------------------------- cormack17 recheck


def test_cormack17_membership():
    corpus = synthetic_corpus(30, 0.2, seed=4)
    ses = Session(corpus, _config(stopping="knee", correction="cormack17"),
                  seed=1, mode="simulated")
    docs = [d.id for d in corpus.documents]
    truth = {d.id: bool(d.ground_truth) for d in corpus.documents}
    for doc in docs[:8]:
        ses.state.include(doc, truth[doc])
    knee_at = 4
    batch = cormack17_recheck(ses, knee_at)
    for doc in batch:
        ordinal = ses.state.ordinal_of(doc)
        if doc in ses.state.labeled_relevant or doc in ses.state.fixed:
            pass
    expected = [d for d in docs[:8]
                if (ses.state.ordinal_of(d) > knee_at if truth[d]
                    else ses.state.ordinal_of(d) < knee_at)]
    # relabels happened (error-free -> same labels), fixed set covers the batch
    assert set(batch) <= set(docs[:8])
    assert len(batch) == len(expected)


# ------------------------------------------------------ trajectory identity


def test_error_free_engine_matches_literal_pipeline():
    from oracles import literal_pipeline

    corpus = synthetic_corpus(150, 0.08, seed=21)
    terms = ("topic0word0", "topic0word1")
    want_traj, want_est = literal_pipeline(corpus, terms, seed=77)

    from fast2.review import apply_simulated_label
    ses = Session(corpus, _config(query_terms=terms), seed=77, mode="simulated",
                  reviewer=ReviewerModel(1.0, 1.0))
    got_traj = []
    got_est = []
    while True:
        out = ses.next_candidate()
        if ses.estimate is not None:
            got_est.append(ses.estimate.estimated_relevant)
        if out.kind == "stopped":
            break
        if out.kind == "reseed":
            continue
        lab = apply_simulated_label(ses, out.doc_id)
        got_traj.append((out.doc_id, lab))

    assert got_traj == want_traj
    assert got_est == want_est


# ---------------------------------------------------------------- snapshots


def test_snapshot_round_trip_resumes_identically(small_synth):
    ses = Session(small_synth, _config(), seed=13)
    for _ in range(12):
        out = ses.next_candidate()
        if out.kind != "candidate":
            continue
        ses.submit_label(out.doc_id, np.random.default_rng(len(ses.state.labeled)).random() < 0.4)
    snap = ses.to_snapshot()

    restored = Session.from_snapshot(small_synth, snap)
    assert restored.counts() == ses.counts()
    assert restored.status == ses.status
    assert restored.pending == ses.pending

    # both continue identically
    a = ses.next_candidate()
    b = restored.next_candidate()
    assert a == b
    if a.kind == "candidate":
        ses.submit_label(a.doc_id, True)
        restored.submit_label(b.doc_id, True)
        assert ses.next_candidate() == restored.next_candidate()


def test_snapshot_json_serializable(small_synth):
    import json

    ses = Session(small_synth, _config(), seed=2)
    out = ses.next_candidate()
    ses.submit_label(out.doc_id, True)
    text = json.dumps(ses.to_snapshot())
    back = Session.from_snapshot(small_synth, json.loads(text))
    assert back.counts() == ses.counts()
