"""FAST2: active-learning support for screening large pools of candidate papers."""

from .corpus import (
    Corpus,
    CorpusError,
    Document,
    EmptyCorpusError,
    FeaturizationError,
    IntegrityError,
    Query,
    SchemaError,
    bm25_rank,
    bm25_scores,
    build_features,
    load_corpus,
    tokenize,
)
from .estimator import (
    Estimate,
    EstimationError,
    RecallCurve,
    semi_estimate,
    stop_knee,
    stop_ros,
    stop_semi,
    temporary_label,
)
from .experiments import (
    RunResult,
    TreatmentSpec,
    bootstrap_significant,
    cliffs_delta,
    run_experiments,
    scott_knott,
    simulate_run,
    wss95,
    x95,
)
from .learner import (
    LabelEvent,
    LabelState,
    LinearModel,
    TrainingError,
    decision_scores,
    presume,
    query,
    train,
)
from .review import (
    NextOutcome,
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

__version__ = "0.1.0"
