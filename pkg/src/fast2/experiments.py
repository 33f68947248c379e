"""Batch simulation harness: treatments, repeats, metrics, statistical ranking.

Runs are pure functions of (corpus, treatment, seed); per-run seeds derive from
a hash of (master seed, treatment id, repeat) so results never depend on
worker scheduling.
"""
from __future__ import annotations

import csv
import hashlib
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .corpus import Corpus
from .estimator import RecallCurve
from .review import (
    CORRECTIONS,
    SEEDINGS,
    STOPPINGS,
    ReviewerModel,
    Session,
    SessionConfig,
    apply_simulated_label,
    cormack17_recheck,
    kuhrmann_vote,
)

CLIFF_NEGLIGIBLE = 0.147
BOOTSTRAP_RESAMPLES = 1000
BOOTSTRAP_CONFIDENCE = 0.99

TREATMENT_GRAMMAR = ("seeding:<rank_bm25|auto_bm25|random>,"
                     "stop:<semi[:recall]|ros[:window]|knee[:rho|adaptive]>,"
                     "correct:<none|disagree|kuhrmann|cormack17>,"
                     "reviewer:<precision>/<recall>[,query:<term+term+...>]")


class MetricError(Exception):
    """A metric was requested on inputs where it is undefined."""


class TreatmentError(ValueError):
    """Malformed treatment specification."""


@dataclass(frozen=True)
class TreatmentSpec:
    """One cell of the evaluation matrix."""

    seeding: str = "rank_bm25"
    stopping: str = "semi"
    target_recall: float = 0.95
    knee_rho: Union[float, str] = 6.0
    ros_window: int = 50
    correction: str = "none"
    reviewer_precision: float = 1.0
    reviewer_recall: float = 1.0
    recheck_interval: int = 50
    query_terms: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.seeding not in SEEDINGS:
            raise TreatmentError(f"seeding must be one of {SEEDINGS}")
        if self.stopping not in STOPPINGS:
            raise TreatmentError(f"stopping must be one of {STOPPINGS}")
        if self.correction not in CORRECTIONS:
            raise TreatmentError(f"correction must be one of {CORRECTIONS}")
        if self.correction == "cormack17" and self.stopping != "knee":
            raise TreatmentError("cormack17 correction requires knee stopping")
        object.__setattr__(self, "query_terms", tuple(self.query_terms))

    @property
    def treatment_id(self) -> str:
        if self.stopping == "semi":
            stop = f"semi:{self.target_recall:g}"
        elif self.stopping == "ros":
            stop = f"ros:{self.ros_window}"
        else:
            rho = self.knee_rho if isinstance(self.knee_rho, str) else f"{self.knee_rho:g}"
            stop = f"knee:{rho}"
        return (f"seeding:{self.seeding},stop:{stop},correct:{self.correction},"
                f"reviewer:{self.reviewer_precision:g}/{self.reviewer_recall:g}")

    @classmethod
    def parse(cls, text: str) -> "TreatmentSpec":
        """Parse the compact treatment grammar (see TREATMENT_GRAMMAR)."""
        kwargs: dict = {}
        try:
            for clause in text.split(","):
                key, _, value = clause.strip().partition(":")
                if not value:
                    raise TreatmentError(f"clause {clause!r} needs a value")
                if key == "seeding":
                    kwargs["seeding"] = value.replace("-", "_")
                elif key == "stop":
                    name, _, param = value.partition(":")
                    kwargs["stopping"] = name
                    if name == "semi" and param:
                        kwargs["target_recall"] = float(param)
                    elif name == "ros" and param:
                        kwargs["ros_window"] = int(param)
                    elif name == "knee" and param:
                        kwargs["knee_rho"] = "adaptive" if param == "adaptive" else float(param)
                elif key == "correct":
                    kwargs["correction"] = value
                elif key == "reviewer":
                    prec, _, rec = value.partition("/")
                    kwargs["reviewer_precision"] = float(prec)
                    kwargs["reviewer_recall"] = float(rec)
                elif key == "query":
                    kwargs["query_terms"] = tuple(t for t in value.split("+") if t)
                else:
                    raise TreatmentError(f"unknown clause {key!r}")
            return cls(**kwargs)
        except (ValueError, TypeError) as exc:
            raise TreatmentError(
                f"bad treatment string {text!r} ({exc}); expected {TREATMENT_GRAMMAR}") from None

    def session_config(self) -> SessionConfig:
        return SessionConfig(
            query_terms=self.query_terms,
            target_recall=self.target_recall,
            seeding=self.seeding,
            stopping=self.stopping,
            knee_rho=self.knee_rho,
            ros_window=self.ros_window,
            correction=self.correction,
            recheck_interval=self.recheck_interval,
        )


@dataclass
class RunResult:
    """Metrics of one simulated review."""

    treatment: str
    dataset: str
    seed: int
    x95: Optional[int]
    wss95: Optional[float]
    final_recall: float
    final_precision: float
    effort: int
    reviewed: int
    stop_reason: str
    curve: RecallCurve
    tp_curve: RecallCurve

    def csv_row(self) -> dict:
        return {
            "treatment": self.treatment,
            "dataset": self.dataset,
            "seed": self.seed,
            "x95": "" if self.x95 is None else self.x95,
            "wss95": "" if self.wss95 is None else f"{self.wss95:.6f}",
            "recall": f"{self.final_recall:.6f}",
            "precision": f"{self.final_precision:.6f}",
            "effort": self.effort,
        }


RESULT_COLUMNS = ("treatment", "dataset", "seed", "x95", "wss95", "recall", "precision", "effort")


def derive_seed(master_seed: int, treatment_id: str, repeat: int) -> int:
    """Stable per-run seed, independent of scheduling."""
    digest = hashlib.sha256(f"{master_seed}|{treatment_id}|{repeat}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def x95(curve: RecallCurve, total_relevant: int) -> Optional[int]:
    """Smallest review count at which 95% of the relevant papers were found."""
    if total_relevant <= 0:
        raise MetricError("x95 undefined for a pool with no relevant papers")
    threshold = 0.95 * total_relevant
    for reviewed, found in curve.points:
        if found >= threshold:
            return reviewed
    return None


def wss95(x95_value: int, pool_size: int) -> float:
    """Work saved over random screening at 95% recall."""
    return 0.95 - x95_value / pool_size


def simulate_run(corpus: Corpus, spec: TreatmentSpec, seed: int,
                 dataset: str = "") -> RunResult:
    """Drive one simulated review to its stopping rule (or pool exhaustion)."""
    if not corpus.has_ground_truth():
        raise ValueError("simulation requires ground-truth labels on every document")
    relevant = frozenset(corpus.relevant_ids())
    session = Session(
        corpus, spec.session_config(), seed=seed, mode="simulated",
        reviewer=ReviewerModel(spec.reviewer_precision, spec.reviewer_recall),
    )
    tp_curve = RecallCurve()
    while True:
        outcome = session.next_candidate()
        if outcome.kind == "stopped":
            break
        if outcome.kind == "reseed":
            continue  # a single query per run: keep walking the same ranking
        if spec.correction == "kuhrmann":
            kuhrmann_vote(session, outcome.doc_id)
        else:
            apply_simulated_label(session, outcome.doc_id)
        tp = len(session.state.labeled_relevant & relevant)
        tp_curve.append(len(session.state.labeled), tp)

    if spec.correction == "cormack17" and session.stop_reason == "knee":
        cormack17_recheck(session, session.knee_reviewed)

    tp = len(session.state.labeled_relevant & relevant)
    n_rel_labeled = len(session.state.labeled_relevant)
    x = x95(tp_curve, len(relevant)) if relevant else None
    return RunResult(
        treatment=spec.treatment_id,
        dataset=dataset,
        seed=seed,
        x95=x,
        wss95=None if x is None else wss95(x, len(corpus)),
        final_recall=tp / len(relevant) if relevant else 0.0,
        final_precision=tp / n_rel_labeled if n_rel_labeled else 0.0,
        effort=session.state.effort,
        reviewed=len(session.state.labeled),
        stop_reason=session.stop_reason or "",
        curve=session.curve,
        tp_curve=tp_curve,
    )


_WORKER_CORPUS: Optional[Corpus] = None


def _init_worker(corpus: Corpus) -> None:
    global _WORKER_CORPUS
    _WORKER_CORPUS = corpus


def _run_task(spec: TreatmentSpec, seed: int, dataset: str) -> RunResult:
    return simulate_run(_WORKER_CORPUS, spec, seed, dataset)


def default_workers() -> int:
    cap = os.environ.get("FAST2_THREADS")
    hardware = os.cpu_count() or 1
    if cap:
        return max(1, min(int(cap), hardware))
    return hardware


def run_experiments(corpus: Corpus, specs: list[TreatmentSpec], repeats: int,
                    master_seed: int, dataset: str = "",
                    workers: Optional[int] = None) -> list[RunResult]:
    """Fan repeats out across workers; output order is schedule-independent."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    tasks = [(spec, derive_seed(master_seed, spec.treatment_id, r))
             for spec in specs for r in range(repeats)]
    workers = workers if workers is not None else default_workers()
    if workers <= 1 or len(tasks) == 1:
        results = [simulate_run(corpus, spec, seed, dataset) for spec, seed in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(corpus,)) as pool:
            futures = [pool.submit(_run_task, spec, seed, dataset) for spec, seed in tasks]
            results = [f.result() for f in futures]
    return results


# ------------------------------------------------------------- statistics


def cliffs_delta(a, b) -> float:
    """(#{a_i > b_j} - #{a_i < b_j}) / (|a| |b|)."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("samples must be non-empty")
    diff = np.sign(np.subtract.outer(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))
    return float(diff.sum() / (len(a) * len(b)))


def bootstrap_significant(a, b, confidence: float = BOOTSTRAP_CONFIDENCE,
                          resamples: int = BOOTSTRAP_RESAMPLES,
                          rng: Optional[np.random.Generator] = None) -> bool:
    """Two-sided bootstrap test of the median difference."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("samples must be non-empty")
    rng = rng if rng is not None else np.random.default_rng(0)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    observed = abs(np.median(a) - np.median(b))
    if observed == 0.0:
        return False
    pooled = np.concatenate([a, b])
    ra = np.median(rng.choice(pooled, size=(resamples, len(a))), axis=1)
    rb = np.median(rng.choice(pooled, size=(resamples, len(b))), axis=1)
    extreme = int(np.count_nonzero(np.abs(ra - rb) >= observed))
    return extreme / resamples <= 1.0 - confidence


@dataclass(frozen=True)
class RankRow:
    rank: int
    treatment: str
    median: float
    iqr: float
    n: int


@dataclass
class RankingTable:
    rows: list[RankRow] = field(default_factory=list)


def _iqr(values: np.ndarray) -> float:
    return float(np.percentile(values, 75) - np.percentile(values, 25))


def _sk_clusters(groups: list[tuple[str, np.ndarray]],
                 rng: np.random.Generator) -> list[list[tuple[str, np.ndarray]]]:
    if len(groups) < 2:
        return [groups]
    pooled = np.concatenate([vals for _, vals in groups])
    grand = np.median(pooled)
    best_i, best_bss = 1, -np.inf
    for i in range(1, len(groups)):
        left = np.concatenate([vals for _, vals in groups[:i]])
        right = np.concatenate([vals for _, vals in groups[i:]])
        bss = (len(left) * (np.median(left) - grand) ** 2
               + len(right) * (np.median(right) - grand) ** 2)
        if bss > best_bss:
            best_i, best_bss = i, bss
    left = np.concatenate([vals for _, vals in groups[:best_i]])
    right = np.concatenate([vals for _, vals in groups[best_i:]])
    if (abs(cliffs_delta(left, right)) >= CLIFF_NEGLIGIBLE
            and bootstrap_significant(left, right, rng=rng)):
        return _sk_clusters(groups[:best_i], rng) + _sk_clusters(groups[best_i:], rng)
    return [groups]


def scott_knott(samples: dict[str, list[float]],
                rng: Optional[np.random.Generator] = None,
                ascending: bool = True) -> RankingTable:
    """Cluster treatments whose performance is statistically indistinguishable.

    Treatments are sorted by median and recursively split where the
    between-group sum of squares of medians peaks; a split only stands when
    both the bootstrap test and Cliff's delta call it a real difference.
    Rank 1 is the best cluster (lowest median when ascending).
    """
    if not samples:
        raise ValueError("need at least one treatment")
    rng = rng if rng is not None else np.random.default_rng(0)
    sign = 1.0 if ascending else -1.0
    groups = [(name, sign * np.asarray(vals, dtype=float))
              for name, vals in samples.items()]
    groups.sort(key=lambda g: (np.median(g[1]), g[0]))
    clusters = _sk_clusters(groups, rng)
    table = RankingTable()
    for rank, cluster in enumerate(clusters, start=1):
        for name, vals in cluster:
            original = sign * vals
            table.rows.append(RankRow(rank=rank, treatment=name,
                                      median=float(np.median(original)),
                                      iqr=_iqr(original), n=len(original)))
    return table


# ----------------------------------------------------------------- CSV I/O


def results_to_csv(results: list[RunResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in sorted(results, key=lambda r: (r.dataset, r.treatment, r.seed)):
        writer.writerow(r.csv_row())
    return buf.getvalue()


def curve_to_csv(result: RunResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["reviewed", "relevant_labeled", "true_positives"])
    tp = dict(result.tp_curve.points)
    for reviewed, found in result.curve.points:
        writer.writerow([reviewed, found, tp.get(reviewed, "")])
    return buf.getvalue()


def read_results_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for col in RESULT_COLUMNS:
        if rows and col not in rows[0]:
            raise MetricError(f"results file {path} missing column {col!r}")
    return rows


def ranking_to_csv(tables: dict[tuple[str, str], RankingTable]) -> str:
    """One row per (dataset, metric, treatment), mirroring the ranked-table layout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "metric", "rank", "treatment", "median", "iqr", "n"])
    for (dataset, metric), table in sorted(tables.items()):
        for row in table.rows:
            writer.writerow([dataset, metric, row.rank, row.treatment,
                             f"{row.median:.6g}", f"{row.iqr:.6g}", row.n])
    return buf.getvalue()
