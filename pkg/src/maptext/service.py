"""Interactive tuning service: upload once, retune cheaply, view every stage.

Sessions hold the uploaded image, the current config and the cached stage
set. Parameter patches recompute only the stale stages (same fingerprint
machinery as the CLI), so dragging the threshold slider in a UI costs three
stages, not eight. Stage images are served as lossless PNG with the stage
fingerprint as ETag.

Endpoints:
    POST  /sessions                   upload image bytes -> 201 {id, params}
    GET   /sessions/{id}              session info + current params
    GET   /sessions/{id}/params       current params
    PATCH /sessions/{id}/params       merge partial params, recompute
    POST  /sessions/{id}/run          compute stages for the current params
    GET   /sessions/{id}/stages/{name}.png   stage PNG (ETag = fingerprint)
    GET   /sessions/{id}/export       zip: 8 stage PNGs + config + summary
    GET   /healthz
"""

from __future__ import annotations

import io
import json
import secrets
import threading
import time
import zipfile
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import ingest, pipeline
from .errors import CorruptFileError, MapTextError, UnsupportedFormatError
from .pipeline import ConfigFieldError, PipelineConfig, StageSet, config_from_json, config_to_json
from .raster import RgbImage

__all__ = ["create_app", "default_config_for"]

DEFAULT_MAX_PIXELS = 16_000_000
DEFAULT_TTL_SECONDS = 3600.0


def default_config_for(img: RgbImage) -> PipelineConfig:
    """Default config with the area threshold clamped to fit the image."""
    cfg = PipelineConfig()
    limit = img.width * img.height
    if cfg.area_threshold >= limit:
        cfg = cfg.with_threshold(max(1, limit // 4))
    return cfg


@dataclass
class Session:
    id: str
    image: RgbImage
    config: PipelineConfig
    stages: StageSet | None = None
    created: float = 0.0
    last_touched: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, clock, ttl_seconds: float):
        self._clock = clock
        self._ttl = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, image: RgbImage) -> Session:
        now = self._clock()
        session = Session(
            id=secrets.token_hex(16),
            image=image,
            config=default_config_for(image),
            created=now,
            last_touched=now,
        )
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        now = self._clock()
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                return None
            if now - session.last_touched > self._ttl:
                del self._sessions[session_id]
                return None
            session.last_touched = now
            return session


def _error(status: int, message: str, **extra):
    return JSONResponse(status_code=status, content={"error": message, **extra})


def _summary_payload(stages: StageSet) -> dict:
    s = stages.summary
    return {
        "component_count": s["component_count"],
        "foreground_area": s["foreground_area"],
        "j_m": s["j_m"],
        "iterations": s["iterations"],
        "converged": s["converged"],
    }


def _recompute(session: Session) -> list:
    """Run or rerun the pipeline; returns the list of recomputed stages."""
    if session.stages is None:
        session.stages = pipeline.run_pipeline(session.image, session.config)
        return list(pipeline.STAGES)
    old = session.stages
    new = pipeline.rerun_from_stage(old, session.config)
    changed = [name for name in pipeline.STAGES if new.fingerprints[name] != old.fingerprints[name]]
    session.stages = new
    return changed


def create_app(
    *,
    max_pixels: int = DEFAULT_MAX_PIXELS,
    ttl_seconds: float = DEFAULT_TTL_SECONDS,
    clock=time.monotonic,
) -> FastAPI:
    app = FastAPI(title="maptext tuning service")
    store = SessionStore(clock, ttl_seconds)
    app.state.store = store

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        try:
            image = ingest.decode_image(body)
        except UnsupportedFormatError as e:
            return _error(415, str(e))
        except CorruptFileError as e:
            return _error(415, str(e))
        if image.width * image.height > max_pixels:
            return _error(
                413,
                f"image has {image.width * image.height} pixels, limit is {max_pixels}",
            )
        session = store.create(image)
        return JSONResponse(
            status_code=201,
            content={
                "id": session.id,
                "width": image.width,
                "height": image.height,
                "params": config_to_json(session.config),
            },
        )

    def _with_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            return None, _error(404, f"unknown or expired session {session_id}")
        return session, None

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session, err = _with_session(session_id)
        if err:
            return err
        return {
            "id": session.id,
            "width": session.image.width,
            "height": session.image.height,
            "params": config_to_json(session.config),
            "ran": session.stages is not None,
        }

    @app.get("/sessions/{session_id}/params")
    def get_params(session_id: str):
        session, err = _with_session(session_id)
        if err:
            return err
        return config_to_json(session.config)

    @app.patch("/sessions/{session_id}/params")
    async def update_params(session_id: str, request: Request):
        session, err = _with_session(session_id)
        if err:
            return err
        try:
            doc = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as e:
            return _error(422, f"body is not valid JSON: {e}", field="(body)")
        with session.lock:
            try:
                new_cfg = config_from_json(doc, base=session.config)
            except ConfigFieldError as e:
                return _error(422, str(e), field=e.field)
            limit = session.image.width * session.image.height
            for t, _ in new_cfg.rounds:
                if not 0 < t < limit:
                    return _error(
                        422,
                        f"area_threshold must satisfy 0 < T < {limit} (width*height), got {t}",
                        field="area_threshold",
                    )
            session.config = new_cfg
            try:
                changed = _recompute(session)
            except MapTextError as e:
                return _error(422, str(e), field=e.stage or "(pipeline)")
            return {
                "changed": changed,
                "params": config_to_json(session.config),
                "summary": _summary_payload(session.stages),
            }

    @app.post("/sessions/{session_id}/run")
    def run(session_id: str):
        session, err = _with_session(session_id)
        if err:
            return err
        with session.lock:
            try:
                changed = _recompute(session)
            except MapTextError as e:
                return _error(422, str(e), field=e.stage or "(pipeline)")
            return {
                "changed": changed,
                "summary": _summary_payload(session.stages),
            }

    @app.get("/sessions/{session_id}/stages/{stage_name}.png")
    def get_stage(session_id: str, stage_name: str, request: Request):
        session, err = _with_session(session_id)
        if err:
            return err
        if stage_name not in pipeline.STAGES:
            return _error(404, f"unknown stage {stage_name!r}")
        with session.lock:
            if session.stages is None:
                return _error(409, "no pipeline run yet; POST /run or PATCH params first")
            etag = session.stages.fingerprints[stage_name]
            if request.headers.get("if-none-match") == etag:
                return Response(status_code=304, headers={"ETag": etag})
            png = ingest.encode_png(session.stages.planes[stage_name])
        return Response(content=png, media_type="image/png", headers={"ETag": etag})

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        session, err = _with_session(session_id)
        if err:
            return err
        with session.lock:
            if session.stages is None or "i_f" not in session.stages.planes:
                return _error(409, "nothing to export; no pipeline run completed")
            buf = io.BytesIO()
            with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
                for name in pipeline.STAGES:
                    zf.writestr(f"{name}.png", ingest.encode_png(session.stages.planes[name]))
                zf.writestr(
                    "config.json",
                    json.dumps(config_to_json(session.config), indent=2, sort_keys=True),
                )
                zf.writestr(
                    "summary.json",
                    json.dumps(_summary_payload(session.stages), indent=2, sort_keys=True),
                )
        return Response(
            content=buf.getvalue(),
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="maptext-{session.id[:8]}.zip"'},
        )

    return app
