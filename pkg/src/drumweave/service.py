"""HTTP JSON API: corpus browsing, interpolation, swirl, MIDI export.

The artifact's stand-in for the original DAW-embedded instrument: a
small FastAPI app over immutable models and corpus loaded at startup.
No request mutates server state, so identical requests always produce
identical responses. All errors carry a machine-readable
{"code", "message"} body.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, field_validator

from drumweave.dataset import Corpus, load_corpus
from drumweave.gan import GanModel, SwirlConfig, swirl_sequence
from drumweave.interp import (
    METHODS,
    InterpError,
    InterpolationRequest,
    MissingModelError,
    UnknownPatternError,
    interpolate,
)
from drumweave.midi import pattern_to_midi, write_smf
from drumweave.patterns import (
    GENRES,
    DrumPattern,
    GM_PERCUSSION_MAP,
    PatternError,
    PatternSequence,
)
from drumweave.vae import VaeModel

logger = logging.getLogger(__name__)

MAX_LENGTH = 256
MAX_SWIRL_STEPS = 1024
MAX_EXPORT_PATTERNS = 1024
DEFAULT_PAGE_SIZE = 50


@dataclass
class ServiceConfig:
    corpus_path: Path | str
    vae_path: Path | str | None = None
    gan_path: Path | str | None = None
    velocity_floor: float = 0.1
    ui_dir: Path | str | None = None
    host: str = "127.0.0.1"
    port: int = 8077
    # request size limits; may be lowered below the schema caps
    max_length: int = MAX_LENGTH
    max_swirl_steps: int = MAX_SWIRL_STEPS
    max_export_patterns: int = MAX_EXPORT_PATTERNS

    def __post_init__(self) -> None:
        if not Path(self.corpus_path).is_dir():
            raise FileNotFoundError(f"corpus directory {self.corpus_path} not found")
        for p in (self.vae_path, self.gan_path):
            if p is not None and not Path(p).is_dir():
                raise FileNotFoundError(f"checkpoint directory {p} not found")
        if self.ui_dir is not None and not Path(self.ui_dir).is_dir():
            raise FileNotFoundError(f"UI directory {self.ui_dir} not found")
        if not 0 < self.port < 65536:
            raise ValueError(f"invalid port {self.port}")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


class PatternIn(BaseModel):
    id: Optional[str] = None
    genre: Optional[str] = None
    grid: list[list[float]]

    @field_validator("grid")
    @classmethod
    def _grid_shape(cls, grid):
        if len(grid) != 6 or any(len(row) != 64 for row in grid):
            raise ValueError("grid must be 6 rows of 64 cells")
        return grid

    def to_pattern(self) -> DrumPattern:
        try:
            return DrumPattern(np.array(self.grid, dtype=np.float64),
                               genre=self.genre, id=self.id)
        except PatternError as exc:
            raise ApiError(422, "invalid_pattern", str(exc)) from exc


class InterpolateIn(BaseModel):
    start: Union[str, PatternIn]
    goal: Union[str, PatternIn]
    length: int = Field(ge=1, le=MAX_LENGTH)
    method: str = "slerp"
    velocity_floor: Optional[float] = Field(default=None, ge=0.0, lt=1.0)


class SwirlIn(BaseModel):
    steps: int = Field(ge=2, le=MAX_SWIRL_STEPS)
    omegas: Optional[tuple[int, int, int, int]] = None
    velocity_floor: Optional[float] = Field(default=None, ge=0.0, lt=1.0)


class ExportIn(BaseModel):
    tempo_bpm: float = Field(default=129.0, gt=0.0)
    patterns: list[PatternIn] = Field(min_length=1, max_length=MAX_EXPORT_PATTERNS)


def create_app(config: ServiceConfig) -> FastAPI:
    corpus: Corpus = load_corpus(config.corpus_path)
    vae: VaeModel | None = None
    gan: GanModel | None = None
    if config.vae_path is not None:
        vae, _ = VaeModel.load(config.vae_path)
    if config.gan_path is not None:
        gan, _ = GanModel.load(config.gan_path)

    app = FastAPI(title="drumweave", version="0.1.0",
                  description="Drum pattern interpolation service")

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_request", "message": str(exc)})

    @app.exception_handler(Exception)
    async def handle_unexpected_error(request: Request, exc: Exception):
        logger.exception("unhandled error on %s", request.url.path)
        return JSONResponse(status_code=500,
                            content={"code": "internal_error",
                                     "message": "unexpected server error"})

    @app.get("/api/patterns")
    def list_patterns(response: Response, genre: Optional[str] = None,
                      page: int = 0, page_size: int = DEFAULT_PAGE_SIZE):
        if genre is not None and genre not in GENRES:
            raise ApiError(400, "unknown_genre",
                           f"genre must be one of {sorted(GENRES)}")
        if page < 0 or page_size < 1:
            raise ApiError(400, "bad_page", "page must be >= 0 and page_size >= 1")
        matching = [p for p in corpus.patterns
                    if genre is None or p.genre == genre]
        start = page * page_size
        selected = matching[start:start + page_size]
        response.headers["X-Total-Count"] = str(len(matching))
        return {
            "total": len(matching),
            "page": page,
            "page_size": page_size,
            "patterns": [p.to_json() for p in selected],
        }

    @app.post("/api/interpolate")
    def run_interpolation(body: InterpolateIn):
        start = body.start if isinstance(body.start, str) else body.start.to_pattern()
        goal = body.goal if isinstance(body.goal, str) else body.goal.to_pattern()
        floor = config.velocity_floor if body.velocity_floor is None \
            else body.velocity_floor
        if body.length > config.max_length:
            raise ApiError(422, "invalid_request",
                           f"length exceeds the configured limit {config.max_length}")
        try:
            request = InterpolationRequest(start=start, goal=goal,
                                           length=body.length,
                                           method=body.method,
                                           velocity_floor=floor)
        except InterpError as exc:
            raise ApiError(422, "invalid_request", str(exc)) from exc
        began = time.perf_counter()
        try:
            result = interpolate(vae, request, corpus=corpus)
        except UnknownPatternError as exc:
            raise ApiError(404, "unknown_pattern", str(exc)) from exc
        except MissingModelError as exc:
            raise ApiError(503, "model_not_loaded", str(exc)) from exc
        except InterpError as exc:
            raise ApiError(422, "invalid_request", str(exc)) from exc
        elapsed_ms = (time.perf_counter() - began) * 1e3
        logger.info("interpolate method=%s length=%d took %.1f ms",
                    body.method, body.length, elapsed_ms)
        return result.to_json()

    @app.post("/api/swirl")
    def run_swirl(body: SwirlIn):
        if gan is None:
            raise ApiError(503, "model_not_loaded",
                           "no GAN checkpoint loaded; start the service with --gan")
        if body.steps > config.max_swirl_steps:
            raise ApiError(422, "invalid_request",
                           f"steps exceeds the configured limit {config.max_swirl_steps}")
        floor = config.velocity_floor if body.velocity_floor is None \
            else body.velocity_floor
        try:
            cfg = SwirlConfig(steps=body.steps) if body.omegas is None \
                else SwirlConfig(steps=body.steps, omegas=tuple(body.omegas))
        except ValueError as exc:
            raise ApiError(422, "invalid_request", str(exc)) from exc
        seq = swirl_sequence(gan, cfg, velocity_floor=floor)
        doc = seq.to_json()
        doc["metadata"] = {"steps": cfg.steps, "omegas": list(cfg.omegas),
                           "scale": cfg.scale}
        return doc

    @app.post("/api/export")
    def export_midi(body: ExportIn):
        if len(body.patterns) > config.max_export_patterns:
            raise ApiError(422, "invalid_sequence",
                           f"too many patterns (limit {config.max_export_patterns})")
        try:
            seq = PatternSequence(
                tuple(p.to_pattern() for p in body.patterns),
                tempo_bpm=body.tempo_bpm)
        except PatternError as exc:
            raise ApiError(422, "invalid_sequence", str(exc)) from exc
        data = write_smf(pattern_to_midi(seq, GM_PERCUSSION_MAP))
        return Response(
            content=data,
            media_type="audio/midi",
            headers={"Content-Disposition": 'attachment; filename="drumweave.mid"'},
        )

    if config.ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(config.ui_dir), html=True),
                  name="ui")

    return app
