"""Pydantic request/response models for the review session API."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    dataset: str
    query_terms: list[str] = Field(min_length=1)
    target_recall: float = Field(default=0.95, gt=0.0, le=1.0)
    recheck_interval: int = Field(default=50, ge=1)
    correction: str = "disagree"
    seed: Optional[int] = None


class SessionCounts(BaseModel):
    labeled: int
    relevant: int
    effort: int


class EstimateView(BaseModel):
    estimated_relevant: int
    iterations: int
    converged: bool


class SessionResource(BaseModel):
    session_id: str
    dataset: str
    status: str
    counts: SessionCounts
    estimate: Optional[EstimateView] = None
    recheck_pending: int = 0
    stop_reason: Optional[str] = None


class DocumentView(BaseModel):
    id: str
    title: str
    abstract: str


class NextResponse(BaseModel):
    stopped: bool = False
    reason: Optional[str] = None
    document: Optional[DocumentView] = None
    rationale: Optional[str] = None
    reseed_advisory: Optional[str] = None


class LabelRequest(BaseModel):
    document_id: str
    relevant: bool


class EstimateResponse(BaseModel):
    estimated_relevant: int
    found: int
    remaining_fraction: float


class RecheckItem(BaseModel):
    document_id: str
    title: str
    prior_label: bool
    probability: float
    threshold: float


class RecheckResponse(BaseModel):
    items: list[RecheckItem]


class DatasetInfo(BaseModel):
    name: str
    documents: int
