"""HTTP application exposing the recognition wire protocol.

Endpoints: ``GET /healthz``, ``POST /recognize``, ``POST /detect``.
Success bodies and non-200 error bodies follow the JSON Schemas under
``contracts/schemas`` at the repository root; every non-200 response is
``{"error": ..., "detail": ...}``.

Request handling is stateless: configuration and injected models are
read-only after startup, and synthetic-mode noise is seeded per
(document, field), so identical requests always produce identical
responses regardless of order or concurrency.
"""

from __future__ import annotations

from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .config import ServerConfig
from .noise import degrade, derive_seed
from .truth import RecordNotFound, TruthFormatError, doc_proposals, \
    load_record

Recognizer = Callable[["RecognizeBody"], tuple[str, float]]
Detector = Callable[["DetectBody"], list[dict]]


class RecognizeBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    doc_id: str = Field(min_length=1)
    field: str = Field(min_length=1)
    patch_b64: str
    max_length: int = Field(ge=1)
    beam_count: int = Field(ge=1)
    no_repeat_ngram: int = Field(ge=0)
    length_penalty: float


class DetectBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    doc_id: str = Field(min_length=1)
    image_b64: str


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": error, "detail": detail})


def create_app(config: ServerConfig, recognizer: Recognizer | None = None,
               detector: Detector | None = None) -> FastAPI:
    """Build the application for one server configuration.

    In neural mode the actual models arrive as the ``recognizer`` and
    ``detector`` callables; until both are present the server reports
    not-ready and rejects work with 503.
    """
    app = FastAPI(title="docforge model server", docs_url=None,
                  redoc_url=None)

    def not_ready_detail() -> str | None:
        if config.mode == "synthetic":
            if config.truth_dir is None or not config.truth_dir.is_dir():
                return f"truth directory unavailable: {config.truth_dir}"
            return None
        if recognizer is None or detector is None:
            return "neural models are not loaded"
        return None

    @app.exception_handler(RequestValidationError)
    async def on_invalid_request(request: Request,
                                 exc: RequestValidationError):
        detail = "; ".join(
            f"{'.'.join(str(part) for part in item['loc'])}: {item['msg']}"
            for item in exc.errors())
        return _error(400, "invalid request", detail)

    @app.exception_handler(Exception)
    async def on_unhandled(request: Request, exc: Exception):
        return _error(500, "internal error", str(exc))

    @app.get("/healthz")
    def healthz():
        detail = not_ready_detail()
        if detail is not None:
            return _error(503, "not-ready", detail)
        return {"status": "ok"}

    @app.post("/recognize")
    def recognize(body: RecognizeBody):
        detail = not_ready_detail()
        if detail is not None:
            return _error(503, "not-ready", detail)
        if config.mode == "neural":
            text, confidence = recognizer(body)
        else:
            try:
                record = load_record(config.truth_dir, body.doc_id,
                                     body.field)
            except TruthFormatError as exc:
                return _error(500, "malformed truth record", str(exc))
            except ValueError as exc:
                return _error(400, "invalid request", str(exc))
            except RecordNotFound as exc:
                return _error(404, "field not found", str(exc))
            text, confidence = degrade(
                record["text"], config.noise,
                derive_seed(config.noise.seed, body.doc_id, body.field))
        if not 0.0 <= confidence <= 1.0:
            return _error(500, "internal error",
                          f"model produced confidence {confidence!r}")
        return {"text": text, "confidence": confidence}

    @app.post("/detect")
    def detect(body: DetectBody):
        detail = not_ready_detail()
        if detail is not None:
            return _error(503, "not-ready", detail)
        if config.mode == "neural":
            return {"proposals": detector(body)}
        try:
            proposals = doc_proposals(config.truth_dir, body.doc_id)
        except TruthFormatError as exc:
            return _error(500, "malformed truth record", str(exc))
        except ValueError as exc:
            return _error(400, "invalid request", str(exc))
        except RecordNotFound as exc:
            return _error(404, "document not found", str(exc))
        return {"proposals": proposals}

    return app
