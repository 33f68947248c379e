"""HTTP/JSON session API: the machine proposes papers, the human labels them."""
from __future__ import annotations

import csv
import io
import secrets
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..corpus import Corpus
from ..review import Session, SessionConfig, SessionError, recheck_probabilities
from .schemas import (
    CreateSessionRequest,
    DatasetInfo,
    DocumentView,
    EstimateResponse,
    EstimateView,
    LabelRequest,
    NextResponse,
    RecheckItem,
    RecheckResponse,
    SessionCounts,
    SessionResource,
)
from .store import SessionStore


def _resource(store: SessionStore, session_id: str) -> SessionResource:
    session = store.get(session_id)
    estimate = session.estimate
    return SessionResource(
        session_id=session_id,
        dataset=store.dataset_of(session_id),
        status=session.status,
        counts=SessionCounts(**session.counts()),
        estimate=(EstimateView(estimated_relevant=estimate.estimated_relevant,
                               iterations=estimate.iterations,
                               converged=estimate.converged)
                  if estimate else None),
        recheck_pending=len(session.recheck_queue),
        stop_reason=session.stop_reason,
    )


def create_app(datasets: dict[str, Corpus], session_dir,
               cors_origins: Optional[list[str]] = None,
               ui_dir: Optional[str] = None) -> FastAPI:
    """Build the service around featurized datasets and a snapshot directory."""
    app = FastAPI(title="fast2 review service")
    store = SessionStore(session_dir, datasets)
    app.state.store = store

    if cors_origins:
        app.add_middleware(
            CORSMiddleware, allow_origins=cors_origins,
            allow_methods=["*"], allow_headers=["*"])

    def get_session(session_id: str) -> Session:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")

    @app.get("/api/v1/datasets", response_model=list[DatasetInfo])
    def list_datasets():
        return [DatasetInfo(name=name, documents=len(c)) for name, c in sorted(datasets.items())]

    @app.post("/api/v1/sessions", response_model=SessionResource, status_code=201)
    def create_session(body: CreateSessionRequest):
        corpus = datasets.get(body.dataset)
        if corpus is None:
            raise HTTPException(status_code=404, detail=f"unknown dataset: {body.dataset}")
        try:
            config = SessionConfig(
                query_terms=tuple(t.strip().lower() for t in body.query_terms),
                target_recall=body.target_recall,
                recheck_interval=body.recheck_interval,
                correction=body.correction,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        seed = body.seed if body.seed is not None else secrets.randbits(32)
        session = Session(corpus, config, seed=seed, mode="interactive")
        session_id = store.create(body.dataset, session)
        return _resource(store, session_id)

    @app.get("/api/v1/sessions/{session_id}", response_model=SessionResource)
    def get_resource(session_id: str):
        get_session(session_id)
        return _resource(store, session_id)

    @app.get("/api/v1/sessions/{session_id}/next", response_model=NextResponse)
    def next_document(session_id: str, force: bool = False):
        session = get_session(session_id)
        with store.lock(session_id):
            outcome = session.next_candidate(force=force)
            store.save(session_id)
        if outcome.kind == "stopped":
            return NextResponse(stopped=True, reason=outcome.reason)
        if outcome.kind == "reseed":
            return NextResponse(reseed_advisory=outcome.reason)
        doc = session.corpus.documents[session.corpus.index_of(outcome.doc_id)]
        return NextResponse(
            document=DocumentView(id=doc.id, title=doc.title, abstract=doc.abstract),
            rationale=outcome.rationale)

    @app.post("/api/v1/sessions/{session_id}/labels", response_model=SessionResource)
    def submit_label(session_id: str, body: LabelRequest):
        session = get_session(session_id)
        with store.lock(session_id):
            try:
                session.submit_label(body.document_id, body.relevant)
            except KeyError:
                raise HTTPException(status_code=404, detail="unknown document")
            except SessionError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            if session.status == "learning":
                # retrain after every label; refreshes the estimate and recheck queue
                session.next_candidate()
            store.save(session_id)
        return _resource(store, session_id)

    @app.get("/api/v1/sessions/{session_id}/estimate", response_model=EstimateResponse)
    def get_estimate(session_id: str):
        session = get_session(session_id)
        if session.status == "seeding" or session.estimate is None:
            raise HTTPException(status_code=409, detail="estimate not ready (still seeding)")
        found = len(session.state.labeled_relevant)
        estimated = session.estimate.estimated_relevant
        return EstimateResponse(
            estimated_relevant=estimated,
            found=found,
            remaining_fraction=found / estimated if estimated else 0.0)

    @app.get("/api/v1/sessions/{session_id}/recheck", response_model=RecheckResponse)
    def get_recheck(session_id: str):
        session = get_session(session_id)
        items = []
        if session.recheck_queue and session.model is not None and session.estimate is not None:
            probs, threshold = recheck_probabilities(session)
            for doc_id in session.recheck_queue:
                doc = session.corpus.documents[session.corpus.index_of(doc_id)]
                items.append(RecheckItem(
                    document_id=doc_id,
                    title=doc.title,
                    prior_label=doc_id in session.state.labeled_relevant,
                    probability=probs.get(doc_id, 0.5),
                    threshold=threshold))
        return RecheckResponse(items=items)

    @app.get("/api/v1/sessions/{session_id}/export", response_class=PlainTextResponse)
    def export(session_id: str, what: str = "inclusions"):
        session = get_session(session_id)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if what == "history":
            writer.writerow(["document_id", "label", "ordinal"])
            for event in session.state.history:
                writer.writerow([event.doc_id, "yes" if event.label else "no", event.ordinal])
        else:
            writer.writerow(["document_id", "title", "ordinal", "fixed"])
            for doc_id in session.state.labeled:
                if doc_id not in session.state.labeled_relevant:
                    continue
                doc = session.corpus.documents[session.corpus.index_of(doc_id)]
                writer.writerow([doc_id, doc.title, session.state.ordinal_of(doc_id),
                                 "yes" if doc_id in session.state.fixed else "no"])
        return buf.getvalue()

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
