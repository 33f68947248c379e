"""Session persistence: one JSON snapshot per session, written atomically."""
from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path
from typing import Iterator, Optional

from ..corpus import Corpus
from ..review import Session


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class SessionStore:
    """Owns the live sessions, their locks, and their on-disk snapshots."""

    def __init__(self, directory, datasets: dict[str, Corpus]):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.datasets = datasets
        self._sessions: dict[str, Session] = {}
        self._dataset_of: dict[str, str] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    def _path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.json"

    def _load_existing(self) -> None:
        for path in sorted(self.directory.glob("*.json")):
            snap = json.loads(path.read_text(encoding="utf-8"))
            dataset = snap.get("dataset")
            if dataset not in self.datasets:
                continue
            session_id = snap["session_id"]
            self._sessions[session_id] = Session.from_snapshot(self.datasets[dataset], snap)
            self._dataset_of[session_id] = dataset
            self._locks[session_id] = threading.Lock()

    def create(self, dataset: str, session: Session, session_id: Optional[str] = None) -> str:
        session_id = session_id or uuid.uuid4().hex[:12]
        with self._registry_lock:
            self._sessions[session_id] = session
            self._dataset_of[session_id] = dataset
            self._locks[session_id] = threading.Lock()
        self.save(session_id)
        return session_id

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise KeyError(f"unknown session: {session_id}") from None

    def dataset_of(self, session_id: str) -> str:
        return self._dataset_of[session_id]

    def lock(self, session_id: str) -> threading.Lock:
        return self._locks[session_id]

    def ids(self) -> Iterator[str]:
        return iter(sorted(self._sessions))

    def save(self, session_id: str) -> None:
        snap = self._sessions[session_id].to_snapshot()
        snap["session_id"] = session_id
        snap["dataset"] = self._dataset_of[session_id]
        write_atomic(self._path(session_id), json.dumps(snap))
