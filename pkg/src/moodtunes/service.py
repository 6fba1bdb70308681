"""HTTP service: snapshot in, prediction triple and playlist out.

Models, playlist table, and the streaming client are loaded once at
startup and shared read-only across request handlers; the client's
token refresh is the only serialized mutation. Offline mode runs the
bundled loopback mock so the full flow works without credentials.
"""

import base64
import binascii
import json
import logging
import os
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import spotify
from .data import Emotion, Ethnicity
from .faces import ImageFormatError, NoFaceError
from .mockspotify import MockSpotify
from .pipeline import PredictionEngine
from .recommend import load_playlist_file, select_playlist

log = logging.getLogger(__name__)

MAX_BODY_BYTES = 8 * 1024 * 1024


@dataclass(frozen=True)
class ServiceConfig:
    model_dir: str
    table_path: str
    cascade_path: str = None
    offline: bool = True
    port: int = 8000
    cors_origins: tuple = ("*",)
    spotify_env: dict = None
    frontend_dir: str = None

    @classmethod
    def from_file(cls, path):
        doc = json.loads(Path(path).read_text())
        known = {
            "model_dir", "table_path", "cascade_path",
            "offline", "port", "cors_origins", "frontend_dir",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown service config keys: {sorted(unknown)}")
        if "cors_origins" in doc:
            doc["cors_origins"] = tuple(doc["cors_origins"])
        return cls(**doc)


def _error(status, code, message, **extra):
    body = {"error": {"code": code, "message": message, **extra}}
    return JSONResponse(status_code=status, content=body)


def _request_image(request, body):
    """Raw bytes, or base64 from a JSON wrapper, by content type."""
    content_type = request.headers.get("content-type", "").split(";")[0].strip()
    if content_type != "application/json":
        return body
    try:
        doc = json.loads(body.decode("utf-8"))
        encoded = doc["image"]
    except (UnicodeDecodeError, json.JSONDecodeError, TypeError, KeyError):
        raise ImageFormatError("JSON body must be an object with an 'image' field")
    try:
        return base64.b64decode(encoded, validate=True)
    except (binascii.Error, TypeError):
        raise ImageFormatError("'image' field is not valid base64")


def create_app(config):
    @asynccontextmanager
    async def lifespan(app):
        table = load_playlist_file(config.table_path)
        engine = PredictionEngine(config.model_dir, config.cascade_path)
        mock = None
        if config.offline:
            mock = MockSpotify(synthesize_missing=True).start()
            client_env = mock.env()
        else:
            client_env = config.spotify_env if config.spotify_env is not None else os.environ
        client = spotify.SpotifyClient(spotify.SpotifyConfig.from_env(client_env))

        app.state.table = table
        app.state.engine = engine
        app.state.mock = mock
        app.state.client = client
        log.info("service ready: 3 models, %d playlists", len(table))
        try:
            yield
        finally:
            engine.close()
            if mock is not None:
                mock.stop()
            app.state.engine = None

    app = FastAPI(title="moodtunes", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.engine = None
    app.state.config = config

    @app.get("/healthz")
    def healthz():
        if getattr(app.state, "engine", None) is None:
            return _error(503, "loading", "models are not loaded yet")
        return {"status": "ok", "models_loaded": len(app.state.engine.models)}

    async def _predict_triple(request):
        """Shared decode-and-predict step; returns a triple or a JSONResponse."""
        if app.state.engine is None:
            return _error(503, "loading", "models are not loaded yet")
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return _error(413, "too_large", f"request body exceeds {MAX_BODY_BYTES} bytes")
        try:
            image = _request_image(request, body)
            if len(image) > MAX_BODY_BYTES:
                return _error(413, "too_large", f"image exceeds {MAX_BODY_BYTES} bytes")
            return app.state.engine.predict_bytes(image)
        except NoFaceError:
            return _error(422, "no_face", "no face detected in the image")
        except ImageFormatError as exc:
            return _error(400, "bad_image", str(exc))

    @app.post("/api/v1/predict")
    async def predict(request: Request):
        return await _predict_triple(request)

    @app.post("/api/v1/recommend")
    async def recommend(request: Request):
        triple = await _predict_triple(request)
        if isinstance(triple, JSONResponse):
            return triple
        emotion = Emotion[triple["emotion"]["label"].upper()]
        ethnicity = Ethnicity[triple["ethnicity"]["label"].upper()]
        playlist_id = select_playlist(app.state.table, emotion, triple["age"], ethnicity)
        try:
            playlist = app.state.client.get_playlist(playlist_id)
        except spotify.PlaylistNotFoundError as exc:
            return _error(
                502, "playlist_not_found",
                f"upstream has no playlist {exc.playlist_id}",
                playlist_id=exc.playlist_id,
            )
        except (spotify.CredentialError, spotify.UpstreamAuthError):
            return _error(502, "upstream_auth", "upstream rejected our credentials")
        except spotify.SpotifyError as exc:
            return _error(502, "upstream_error", str(exc))
        return {
            "prediction": triple,
            "playlist_id": playlist.playlist_id,
            "playlist_name": playlist.name,
            "playlist_link": spotify.entity_link("playlist", playlist.playlist_id),
            "tracks": [t.as_dict() for t in playlist.tracks],
        }

    if config.frontend_dir:
        from fastapi.staticfiles import StaticFiles

        # mounted last so /healthz and /api/v1/* keep precedence
        app.mount("/", StaticFiles(directory=config.frontend_dir, html=True), name="webui")

    return app


def run(config):  # pragma: no cover - thin uvicorn wrapper
    import uvicorn

    uvicorn.run(create_app(config), host="0.0.0.0", port=config.port)
