"""Translation demo HTTP service.

POST /translate runs the full inference pipeline per request
(Ge'ez tokenization, BPE, greedy decoding, BPE inversion,
detokenization) against an immutable checkpoint shared by all request
threads; a bounded semaphore caps concurrent decodes. GET /health
reports the loaded model, and GET / serves the static web client.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import model as M
from . import subword as S
from .textnorm import detokenize, tokenize_geez

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8090


class TranslateRequest(BaseModel):
    text: str
    max_len: Optional[int] = None


class TranslateResponse(BaseModel):
    translation: str
    tokens: list[str]
    model_id: str
    latency_ms: int


class InputTooLong(Exception):
    pass


@dataclass
class TranslationEngine:
    """Checkpoint plus BPE models, shared read-only across requests."""

    checkpoint: M.Checkpoint
    src_bpe: S.BpeModel
    tgt_bpe: S.BpeModel
    model_id: str
    max_concurrency: int = 0

    def __post_init__(self):
        workers = self.max_concurrency or os.cpu_count() or 1
        self._slots = threading.Semaphore(workers)
        self._src_index = {s: i for i, s in enumerate(self.checkpoint.src_vocab)}

    @classmethod
    def load(
        cls,
        checkpoint_path: str,
        src_bpe_path: str,
        tgt_bpe_path: str,
        max_concurrency: int = 0,
    ) -> "TranslationEngine":
        ckpt = M.load_checkpoint(checkpoint_path)
        model_id = f"{os.path.basename(checkpoint_path)}@step{ckpt.step}"
        return cls(
            checkpoint=ckpt,
            src_bpe=S.load_model(src_bpe_path),
            tgt_bpe=S.load_model(tgt_bpe_path),
            model_id=model_id,
            max_concurrency=max_concurrency,
        )

    def translate(self, text: str, max_len: Optional[int] = None) -> tuple[str, list[str]]:
        """Returns (display translation, token list); raises InputTooLong
        when the subword input exceeds the model's positions."""
        tokens = list(tokenize_geez(text))
        subwords = S.apply_bpe(tokens, self.src_bpe)
        if len(subwords) + 1 > self.checkpoint.config.max_position:
            raise InputTooLong(
                f"{len(subwords)} subwords exceed the model's "
                f"max_position {self.checkpoint.config.max_position}"
            )
        ids = [self._src_index.get(sym, M.UNK_ID) for sym in subwords]
        limit = max_len or 128
        with self._slots:
            out_ids = M.greedy_decode(self.checkpoint, ids, max_len=limit)
        symbols = [self.checkpoint.tgt_vocab[i] for i in out_ids]
        out_tokens = S.decode_bpe(symbols, self.tgt_bpe.eow_marker)
        return detokenize(out_tokens), out_tokens


_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>Tigrinya-English translator</title></head>
<body><h1>Tigrinya-English translation service</h1>
<p>The web client build was not found. POST JSON to <code>/translate</code>:
<code>{"text": "..."}</code></p></body></html>
"""


def build_app(engine: Optional[TranslationEngine], static_dir: Optional[str] = None) -> FastAPI:
    """Assemble the service; pass engine=None to model the loading state
    (every translation request answers 503)."""
    app = FastAPI(title="tigmt translation demo")
    app.state.engine = engine

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request"})

    @app.get("/health")
    def health():
        current = app.state.engine
        if current is None:
            return JSONResponse(
                status_code=503, content={"status": "loading", "model_id": None}
            )
        return {"status": "ok", "model_id": current.model_id}

    @app.post("/translate", response_model=TranslateResponse)
    def translate(req: TranslateRequest):
        current = app.state.engine
        if current is None:
            return JSONResponse(status_code=503, content={"error": "model loading"})
        if not req.text.strip():
            return JSONResponse(status_code=400, content={"error": "empty text"})
        started = time.perf_counter()
        try:
            translation, tokens = current.translate(req.text, req.max_len)
        except InputTooLong as exc:
            return JSONResponse(status_code=413, content={"error": str(exc)})
        latency_ms = int((time.perf_counter() - started) * 1000)
        return TranslateResponse(
            translation=translation,
            tokens=tokens,
            model_id=current.model_id,
            latency_ms=latency_ms,
        )

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="client")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_PAGE

    return app


def default_static_dir() -> Optional[str]:
    """Locate the built web client when running from a source checkout."""
    here = os.path.dirname(os.path.abspath(__file__))
    for candidate in (
        os.path.join(here, "webclient"),
        os.path.normpath(os.path.join(here, "..", "..", "frontend", "dist")),
    ):
        if os.path.isdir(candidate):
            return candidate
    return None
