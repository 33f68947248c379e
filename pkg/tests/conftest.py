import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import synthetic_corpus  # noqa: E402


@pytest.fixture(scope="session")
def small_synth():
    """120 docs, 10% prevalence; shared across tests that just need a plausible pool."""
    return synthetic_corpus(n_docs=120, prevalence=0.10, seed=7)


def write_dataset_csv(path, rows):
    """rows: iterable of (id, title, abstract, label-or-None)."""
    lines = ["id,title,abstract,label"]
    for doc_id, title, abstract, label in rows:
        lab = "" if label is None else ("yes" if label else "no")
        lines.append(f"{doc_id},{title},{abstract},{lab}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
