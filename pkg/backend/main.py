"""
FastAPI application for the W causal workbench.

Errors the analysis raises inside a request map to HTTP statuses here:
422 for theories that do not parse, 413 above the resource cap, 409 for the
other semantic failures.
"""

import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from src import __version__
from src.errors import WError

logger = logging.getLogger(__name__)

app = FastAPI(
    title="wcause",
    description="Parse, solve and analyse causal theories written in W",
    version=__version__,
)

# local tools call the API from other ports
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)


@app.exception_handler(WError)
async def w_error(request: Request, exc: WError) -> JSONResponse:
    status = status_for(exc)
    logger.info(f"{request.url.path}: {type(exc).__name__} ({status})")
    return JSONResponse(status_code=status, content={"detail": str(exc), "error": type(exc).__name__})


@app.get("/health")
def health():
    """Liveness probe with the package version."""
    return {"status": "ok", "version": __version__}


from backend.api.analyze import router as analyze_router, status_for

app.include_router(analyze_router, prefix="/api", tags=["analysis"])
