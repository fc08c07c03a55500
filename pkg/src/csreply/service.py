"""Stateless HTTP suggestion service.

The client owns the conversation; only the last other-party message
conditions the ranking.  Model parameters and the response set are loaded
once and shared read-only, so request handling needs no locks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import ranker
from .encoder import EncoderParams
from .errors import EmptyInput
from .ranker import RankConfig
from .responseset import ResponseSet
from .textproc import Vocab


@dataclass
class LoadedEngine:
    """Read-only artifacts shared by every request."""

    params: EncoderParams
    vocab: Vocab
    rset: ResponseSet
    rank_cfg: RankConfig
    model_id: str


class Turn(BaseModel):
    sender: Literal["me", "other"]
    text: str


class SuggestRequest(BaseModel):
    conversation: list[Turn]
    n: int | None = None


def create_app(engine: LoadedEngine | None, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="csreply suggestion service")
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"http://(localhost|127\.0\.0\.1)(:\d+)?",
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:1])})

    def _unavailable() -> JSONResponse:
        return JSONResponse(status_code=503, content={"error": "model or response set not loaded"})

    @app.post("/api/suggest")
    def api_suggest(req: SuggestRequest):
        if engine is None:
            return _unavailable()
        if not req.conversation:
            return JSONResponse(status_code=400, content={"error": "conversation is empty"})
        last = req.conversation[-1]
        if last.sender != "other":
            return JSONResponse(
                status_code=400,
                content={"error": "suggestions answer the other party; last turn must have sender=other"},
            )
        n = req.n if req.n is not None else engine.rank_cfg.n2
        if not 1 <= n <= engine.rank_cfg.n2:
            return JSONResponse(
                status_code=400,
                content={"error": f"n must lie in [1, {engine.rank_cfg.n2}]"},
            )
        t0 = time.perf_counter()
        try:
            suggestions = ranker.suggest(
                last.text, engine.params, engine.vocab, engine.rset, engine.rank_cfg
            )
        except EmptyInput:
            return JSONResponse(status_code=400, content={"error": "message text is empty"})
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        return {
            "suggestions": [
                {"text": s.text, "score": s.score, "intent_id": s.intent_id}
                for s in suggestions[:n]
            ],
            "model_id": engine.model_id,
            "elapsed_ms": elapsed_ms,
        }

    @app.get("/api/health")
    def api_health():
        if engine is None:
            return _unavailable()
        return {
            "status": "ok",
            "model_id": engine.model_id,
            "response_set_size": len(engine.rset),
        }

    @app.get("/api/config")
    def api_config():
        if engine is None:
            return _unavailable()
        cfg = engine.rank_cfg
        dims = engine.params.dims
        return {
            "alpha": cfg.alpha,
            "n1": cfg.n1,
            "n2": cfg.n2,
            "jaccard_threshold": cfg.jaccard_threshold,
            "k_intents": engine.rset.k_intents,
            "dims": {"d_emb": dims.d_emb, "d_hid": dims.d_hid, "d_out": dims.d_out},
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
