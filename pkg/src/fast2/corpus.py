"""Dataset ingestion, tokenization, sparse tf-idf features, and BM25 ranking.

A corpus is built in two steps: :func:`load_corpus` reads a CSV of candidate
papers, then :func:`build_features` produces the featurized (immutable) corpus
that the learner and the BM25 seeder share.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
import scipy.sparse as sp

BM25_K1 = 1.5
BM25_B = 0.75
DEFAULT_MAX_FEATURES = 4000

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class CorpusError(Exception):
    """Base class for corpus construction failures."""


class SchemaError(CorpusError):
    """Input file does not match the expected column schema."""


class IntegrityError(CorpusError):
    """Input rows violate corpus invariants (duplicate ids, empty text)."""


class EmptyCorpusError(CorpusError):
    """Input file contains no data rows."""


class FeaturizationError(CorpusError):
    """No document yields any token, so no feature space exists."""


def _load_stopwords() -> frozenset[str]:
    text = resources.files("fast2.resources").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()


def tokenize(text: str) -> list[str]:
    """Lowercase, split on ASCII non-alphanumerics, drop 1-char tokens and stopwords."""
    return [t for t in _TOKEN_RE.findall(text.lower())
            if len(t) >= 2 and t not in STOPWORDS]


@dataclass(frozen=True)
class Document:
    """One candidate paper. ground_truth is only present in simulation datasets."""

    id: str
    title: str
    abstract: str
    ground_truth: Optional[bool] = None

    @property
    def text(self) -> str:
        return f"{self.title} {self.abstract}"


@dataclass(frozen=True)
class Query:
    """Lowercased keyword terms for BM25 seeding."""

    terms: tuple[str, ...]

    def __init__(self, terms) -> None:
        cleaned = tuple(str(t).strip().lower() for t in terms)
        if not cleaned or any(not t for t in cleaned):
            raise ValueError("query terms must be a non-empty list of non-empty strings")
        object.__setattr__(self, "terms", cleaned)


@dataclass
class Corpus:
    """The candidate pool plus its featurization.

    After build_features the instance is treated as immutable and may be shared
    across concurrent sessions.
    """

    documents: list[Document]
    vocabulary: list[str] = field(default_factory=list)
    doc_term_counts: Optional[sp.csr_matrix] = None
    doc_lengths: Optional[np.ndarray] = None
    avg_doc_length: float = 0.0
    features: Optional[sp.csr_matrix] = None
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._index:
            self._index = {d.id: i for i, d in enumerate(self.documents)}
        if len(self._index) != len(self.documents):
            raise IntegrityError("document ids must be unique within a corpus")

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def is_featurized(self) -> bool:
        return self.features is not None

    def index_of(self, doc_id: str) -> int:
        try:
            return self._index[doc_id]
        except KeyError:
            raise KeyError(f"unknown document id: {doc_id!r}") from None

    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def relevant_ids(self) -> set[str]:
        """Ground-truth relevant ids (simulation datasets only)."""
        return {d.id for d in self.documents if d.ground_truth}

    def has_ground_truth(self) -> bool:
        return all(d.ground_truth is not None for d in self.documents)


def _parse_label(raw: str, row_num: int) -> Optional[bool]:
    value = raw.strip().lower()
    if value == "":
        return None
    if value == "yes":
        return True
    if value == "no":
        return False
    raise SchemaError(f"row {row_num}: label must be yes/no, got {raw!r}")


_FORMATS = ("fast2", "fastread")


def load_corpus(path, format: str = "fast2") -> Corpus:
    """Read a UTF-8 CSV of candidate papers into a (not yet featurized) Corpus.

    fast2 format: header id,title,abstract[,label], label in {yes,no}.
    fastread format: the legacy exports with 'Document Title','Abstract'[,'label'],
    ids assigned from row order.
    """
    if format not in _FORMATS:
        raise SchemaError(f"unknown dataset format {format!r}; expected one of {_FORMATS}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if format == "fast2":
            required = ("id", "title", "abstract")
            label_col = "label" if "label" in header else None
        else:
            required = ("Document Title", "Abstract")
            label_col = "label" if "label" in header else ("code" if "code" in header else None)
        for col in required:
            if col not in header:
                raise SchemaError(f"missing required column: {col!r}")

        documents: list[Document] = []
        seen: set[str] = set()
        for row_num, row in enumerate(reader, start=2):
            if format == "fast2":
                doc_id = (row.get("id") or "").strip()
                title = (row.get("title") or "").strip()
                abstract = (row.get("abstract") or "").strip()
            else:
                doc_id = str(len(documents))
                title = (row.get("Document Title") or "").strip()
                abstract = (row.get("Abstract") or "").strip()
            if not doc_id:
                raise SchemaError(f"row {row_num}: empty id")
            if doc_id in seen:
                raise IntegrityError(f"duplicate document id: {doc_id!r}")
            if not f"{title} {abstract}".strip():
                raise IntegrityError(f"row {row_num}: document {doc_id!r} has empty title and abstract")
            label = _parse_label(row.get(label_col) or "", row_num) if label_col else None
            documents.append(Document(id=doc_id, title=title, abstract=abstract, ground_truth=label))
            seen.add(doc_id)

    if not documents:
        raise EmptyCorpusError(f"no data rows in {path}")
    return Corpus(documents=documents)


def build_features(corpus: Corpus, max_features: int = DEFAULT_MAX_FEATURES) -> Corpus:
    """Featurize: tf-idf weights w(t,d) = tf * (1 + ln((1+N)/(1+df))), rows L2-normalized.

    The vocabulary keeps the max_features terms with the largest corpus-summed
    tf-idf weight (ties broken lexicographically); raw counts over the same
    vocabulary are retained for BM25. Returns a new Corpus, input untouched.
    """
    if max_features < 1:
        raise ValueError("max_features must be positive")
    docs = corpus.documents
    n_docs = len(docs)
    token_lists = [tokenize(d.text) for d in docs]
    doc_lengths = np.array([len(ts) for ts in token_lists], dtype=np.int64)
    if not doc_lengths.any():
        raise FeaturizationError("no document produced any token")

    # Raw term frequencies over the full term space.
    df: dict[str, int] = {}
    tf_per_doc: list[dict[str, int]] = []
    for ts in token_lists:
        counts: dict[str, int] = {}
        for t in ts:
            counts[t] = counts.get(t, 0) + 1
        tf_per_doc.append(counts)
        for t in counts:
            df[t] = df.get(t, 0) + 1

    idf = {t: 1.0 + math.log((1.0 + n_docs) / (1.0 + d)) for t, d in df.items()}
    summed_weight: dict[str, float] = {t: 0.0 for t in df}
    for counts in tf_per_doc:
        for t, c in counts.items():
            summed_weight[t] += c * idf[t]

    ranked = sorted(summed_weight, key=lambda t: (-summed_weight[t], t))
    vocabulary = sorted(ranked[:max_features])
    vocab_index = {t: j for j, t in enumerate(vocabulary)}

    rows, cols, raw, weighted = [], [], [], []
    for i, counts in enumerate(tf_per_doc):
        for t, c in counts.items():
            j = vocab_index.get(t)
            if j is None:
                continue
            rows.append(i)
            cols.append(j)
            raw.append(c)
            weighted.append(c * idf[t])
    shape = (n_docs, len(vocabulary))
    doc_term_counts = sp.csr_matrix((np.array(raw, dtype=np.float64), (rows, cols)), shape=shape)
    features = sp.csr_matrix((np.array(weighted, dtype=np.float64), (rows, cols)), shape=shape)

    norms = np.sqrt(features.multiply(features).sum(axis=1)).A1
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    features = sp.diags(scale) @ features
    features = sp.csr_matrix(features)

    return Corpus(
        documents=list(docs),
        vocabulary=vocabulary,
        doc_term_counts=doc_term_counts,
        doc_lengths=doc_lengths,
        avg_doc_length=float(doc_lengths.mean()),
        features=features,
    )


def bm25_scores(corpus: Corpus, query: Query) -> np.ndarray:
    """BM25 score of every document for the query, in corpus order.

    score(i) = sum_j IDF(q_j) * f(q_j,i) / (f(q_j,i) + k1*(1 - b + b*l_i/avgdl)),
    IDF(q_j) = ln((N - n(q_j) + 0.5) / (n(q_j) + 0.5)).  Terms outside the
    vocabulary contribute zero.  Negative IDF (n > N/2) is kept as-is.
    """
    if not corpus.is_featurized:
        raise CorpusError("corpus must be featurized before BM25 ranking")
    n_docs = len(corpus)
    scores = np.zeros(n_docs)
    counts = corpus.doc_term_counts.tocsc()
    vocab_index = {t: j for j, t in enumerate(corpus.vocabulary)}
    saturation = BM25_K1 * (1.0 - BM25_B + BM25_B * corpus.doc_lengths / corpus.avg_doc_length)
    for term in query.terms:
        j = vocab_index.get(term)
        if j is None:
            continue
        f = counts[:, j].toarray().ravel()
        n_q = int(np.count_nonzero(f))
        if n_q == 0:
            continue
        idf = math.log((n_docs - n_q + 0.5) / (n_q + 0.5))
        scores += idf * f / (f + saturation)
    return scores


def bm25_rank(corpus: Corpus, query: Query) -> list[tuple[str, float]]:
    """(document id, score) pairs sorted by score descending, ties in corpus order."""
    scores = bm25_scores(corpus, query)
    order = np.argsort(-scores, kind="stable")
    return [(corpus.documents[i].id, float(scores[i])) for i in order]
