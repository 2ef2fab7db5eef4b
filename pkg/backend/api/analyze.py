"""
Analysis API - check, solve and analyse W theories sent as source text.

check and models answer directly; causes and explain run as background jobs
with progress, polled through GET /api/job/{job_id}.
"""

import logging
import sys
import threading
import uuid
from pathlib import Path

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel

# Add project root
ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from src.analysis import causes, explain_observation
from src.errors import NotUnexpected, ParseFailed, ResourceLimitExceeded, WError
from src.grounding import DEFAULT_DURATION_CAP, DEFAULT_HORIZON, Bounds
from src.main import default_workers
from src.model import CausalTheory, validate
from src.parser import parse_observation, parse_theory
from src.report_formatter import FORMATS, TEXT, ReportFormatter
from src.solver import models_by_interpretation, resource_cap_from_env

logger = logging.getLogger(__name__)

router = APIRouter()

# In-memory job store (single process only)
jobs: dict = {}


class TheoryRequest(BaseModel):
    source: str
    horizon: int = DEFAULT_HORIZON
    duration_cap: int = DEFAULT_DURATION_CAP
    gamma: dict[str, int] | None = None
    format: str = TEXT


class CausesRequest(TheoryRequest):
    pattern: str


class ExplainRequest(TheoryRequest):
    observation: str


def _bounds(body: TheoryRequest) -> Bounds:
    try:
        pinned = tuple(sorted((body.gamma or {}).items()))
        return Bounds(body.horizon, body.duration_cap, pinned, resource_cap_from_env())
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))


def _load(body: TheoryRequest) -> CausalTheory:
    """Parse and validate the request source; 422 with every diagnostic on failure."""
    if body.format not in FORMATS:
        raise HTTPException(status_code=422, detail=f"format must be one of {', '.join(FORMATS)}")
    try:
        theory = parse_theory(body.source, file="<request>")
    except ParseFailed as e:
        raise HTTPException(status_code=422, detail=[str(err) for err in e.errors])
    diagnostics = validate(theory)
    if diagnostics:
        raise HTTPException(status_code=422, detail=[str(d) for d in diagnostics])
    return theory


def status_for(error: WError) -> int:
    """HTTP status for an analysis error raised inside a request."""
    if isinstance(error, ParseFailed):
        return 422
    if isinstance(error, ResourceLimitExceeded):
        return 413
    return 409


@router.post("/check")
def check(body: TheoryRequest):
    """Parse and validate a theory."""
    theory = _load(body)
    return {
        "ok": True,
        "symbols": len(theory.signature.symbols),
        "mechanisms": len(theory.mechanisms),
        "abstract_constants": list(theory.scenario.abstract_constants),
    }


@router.post("/models")
def models(body: TheoryRequest):
    """Answer sets per interpretation, rendered like the command line does."""
    theory = _load(body)
    bounds = _bounds(body)
    try:
        results = models_by_interpretation(theory, bounds)
    except ValueError as e:
        if isinstance(e, WError):
            raise
        raise HTTPException(status_code=422, detail=str(e))
    rendered = ReportFormatter.format_models([(g, m) for g, m, _ in results], bounds, body.format)
    return {
        "interpretations": len(results),
        "answer_sets": sum(len(m) for _, m, _ in results),
        "report": rendered,
    }


def run_job(job_id: str, task, *args):
    """Background task running one analysis and recording its report."""
    def progress_cb(msg, current, total):
        jobs[job_id]["progress"] = {"message": msg, "current": current, "total": total}

    try:
        jobs[job_id]["status"] = "running"
        jobs[job_id]["progress"] = {"message": "Starting...", "current": 0, "total": 0}
        jobs[job_id]["result"] = task(*args, progress_cb)
        jobs[job_id]["status"] = "complete"
        jobs[job_id]["progress"] = {"message": "Complete!", "current": 1, "total": 1}
    except NotUnexpected as e:
        jobs[job_id]["status"] = "complete"
        jobs[job_id]["result"] = {"report": f"nothing to explain: {e}\n"}
    except Exception as e:
        logger.exception(f"Job {job_id} failed")
        jobs[job_id]["status"] = "failed"
        jobs[job_id]["error"] = str(e)


def _causes_task(theory: CausalTheory, pattern: str, bounds: Bounds, fmt: str, progress_cb) -> dict:
    report = causes(theory, pattern, bounds, workers=default_workers(), progress=progress_cb)
    return {
        "verdicts": [[list(c) for c in v.causes] for v in report.verdicts],
        "report": ReportFormatter.format_causes(report, fmt, per_interpretation=bool(bounds.pinned)),
    }


def _explain_task(theory: CausalTheory, observation, bounds: Bounds, fmt: str, progress_cb) -> dict:
    progress_cb("Searching abductive supports...", 0, 1)
    report = explain_observation(theory, observation, bounds)
    return {
        "explanations": [[a.text for a in e.added] for e in report.explanations],
        "compact": list(report.compact),
        "report": ReportFormatter.format_explanations(report, fmt),
    }


def _start(task, *args) -> dict:
    job_id = str(uuid.uuid4())[:8]
    jobs[job_id] = {
        "status": "pending",
        "progress": {"message": "Queued...", "current": 0, "total": 0},
        "result": None,
        "error": None,
    }
    thread = threading.Thread(target=run_job, args=(job_id, task, *args))
    thread.daemon = True
    thread.start()
    return {"job_id": job_id}


@router.post("/causes")
def start_causes(body: CausesRequest):
    """Start a causes job. Returns job_id for tracking."""
    theory = _load(body)
    pattern = body.pattern.strip()
    if not pattern:
        raise HTTPException(status_code=400, detail="Change pattern is required")
    return _start(_causes_task, theory, pattern, _bounds(body), body.format)


@router.post("/explain")
def start_explain(body: ExplainRequest):
    """Start an explanation job. Returns job_id for tracking."""
    theory = _load(body)
    try:
        observation = parse_observation(body.observation, theory.signature)
    except ParseFailed as e:
        raise HTTPException(status_code=422, detail=[str(err) for err in e.errors])
    return _start(_explain_task, theory, observation, _bounds(body), body.format)


@router.get("/job/{job_id}")
def get_job_status(job_id: str):
    """Get job status, progress, and result when complete."""
    if job_id not in jobs:
        raise HTTPException(status_code=404, detail="Job not found")

    job = jobs[job_id]
    resp = {
        "job_id": job_id,
        "status": job["status"],
        "progress": job["progress"],
    }
    if job["status"] == "complete" and job.get("result"):
        resp["result"] = job["result"]
    if job["status"] == "failed" and job.get("error"):
        resp["error"] = job["error"]
    return resp
