"""HTTP/JSON facade over scenes, sessions, catalog and pipeline.

Every non-2xx response body is exactly one error object with a machine code
(NOT_FOUND, WRONG_STATE, PROVIDER_ERROR, ...). Scene state persists on every
committed revision (parameter JSON, metadata sidecar, operation log,
sessions), so a killed server recovers byte-exactly; sessions reloaded after
a crash demote their Processing entries to Failed because the background
tasks that owned them are gone.
"""

from __future__ import annotations

import base64
import binascii
import json
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict

from . import catalog as catalog_mod
from .engine import SuggestionEngine
from .errors import (
    DuplicateName,
    EchoSceneError,
    InvalidValue,
    NotFound,
    NothingToUndo,
    ProviderError,
    WrongState,
)
from .pipeline import PipelineConfig
from .providers import Provider, provider_from_spec
from .scene import (
    Bounds,
    SceneGraph,
    Vector3,
    coerce_field_value,
    load_scene,
    render_top_view,
    save_scene,
)

DEFAULT_PORT = 8473


@dataclass
class ServiceConfig:
    port: int = DEFAULT_PORT
    host: str = "127.0.0.1"
    data_dir: Path = Path("data")
    provider: str = "mock"
    provider_config: Optional[Path] = None
    admin_token: str = "admin"
    catalog_path: Optional[Path] = None
    ui_dir: Optional[Path] = None
    executor_workers: int = 4
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    @classmethod
    def load(cls, path: Path | str) -> "ServiceConfig":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(Path(path).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise InvalidValue(f"cannot read service config {path}: {exc}") from exc
        config = cls()
        if "port" in data:
            config.port = int(data["port"])
        if "host" in data:
            config.host = str(data["host"])
        if "data_dir" in data:
            config.data_dir = Path(data["data_dir"])
        if "provider" in data:
            config.provider = str(data["provider"])
        if "provider_config" in data:
            config.provider_config = Path(data["provider_config"])
        if "admin_token" in data:
            config.admin_token = str(data["admin_token"])
        if "catalog" in data:
            config.catalog_path = Path(data["catalog"])
        if "ui_dir" in data:
            config.ui_dir = Path(data["ui_dir"])
        if "pipeline" in data:
            config.pipeline = PipelineConfig.from_dict(dict(data["pipeline"]))
        return config


def _status_for(exc: EchoSceneError) -> int:
    if isinstance(exc, ProviderError):
        return 502
    if isinstance(exc, NotFound):
        return 404
    if isinstance(exc, (WrongState, NothingToUndo, DuplicateName)):
        return 409
    return 422


def _api_error(code: str, message: str, status: int, details: Any = None) -> JSONResponse:
    body = {"code": code, "message": message}
    if details is not None:
        body["details"] = details
    return JSONResponse(status_code=status, content=body)


# --- request bodies (unknown fields rejected) -----------------------------------

class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CreateSceneBody(StrictModel):
    bounds: Optional[list[float]] = None


class ManualAddBody(StrictModel):
    asset_id: Optional[str] = None
    category: Optional[str] = None
    query: Optional[str] = None
    position: Optional[list[float] | str] = None
    name: Optional[str] = None


class PatchObjectBody(StrictModel):
    position: Optional[list[float] | str] = None
    rotation: Optional[list[float] | str] = None
    scale: Optional[list[float] | str] = None
    color: Optional[list[int] | str] = None
    material: Optional[str] = None


class InstructBody(StrictModel):
    instruction: str
    config: Optional[dict] = None


class LabelBody(StrictModel):
    name: str
    thumbnail_b64: str


class Workspace:
    """One scene plus its single-writer engine."""

    def __init__(self, engine: SuggestionEngine):
        self.engine = engine

    @property
    def scene(self) -> SceneGraph:
        return self.engine.scene


class AppState:
    def __init__(self, config: ServiceConfig, provider: Optional[Provider] = None):
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.scenes_dir = self.data_dir / "scenes"
        self.logs_dir = self.data_dir / "logs"
        self.sessions_dir = self.data_dir / "sessions"
        for directory in (self.scenes_dir, self.logs_dir, self.sessions_dir):
            directory.mkdir(parents=True, exist_ok=True)
        self.provider = provider or provider_from_spec(config.provider, config.provider_config)
        self.embedder = catalog_mod.HashNgramEmbedder()
        if config.catalog_path:
            self.catalog = catalog_mod.load_catalog(config.catalog_path)
        else:
            self.catalog = catalog_mod.fixture_catalog()
        self.executor = ThreadPoolExecutor(max_workers=config.executor_workers)
        self.workspaces: dict[str, Workspace] = {}
        self.session_index: dict[str, str] = {}  # session_id -> scene_id
        self._recover()

    # -- persistence ------------------------------------------------------------

    def _persister(self, engine: SuggestionEngine):
        def persist() -> None:
            save_scene(engine.scene, self.scenes_dir)
            for session in list(engine.sessions.values()):
                path = self.sessions_dir / f"{session.session_id}.json"
                path.write_text(json.dumps(engine.session_to_json(session), indent=2))

        return persist

    def _attach(self, scene: SceneGraph) -> Workspace:
        engine = SuggestionEngine(
            scene,
            self.provider,
            self.config.pipeline,
            catalog=self.catalog,
            embedder=self.embedder,
            executor=self.executor,
            log_path=self.logs_dir / f"{scene.scene_id}.jsonl",
        )
        engine._on_commit = self._persister(engine)
        workspace = Workspace(engine)
        self.workspaces[scene.scene_id] = workspace
        save_scene(scene, self.scenes_dir)
        return workspace

    def _recover(self) -> None:
        for path in sorted(self.scenes_dir.glob("*.json")):
            if path.name.endswith(".meta.json"):
                continue
            scene_id = path.stem
            try:
                scene = load_scene(scene_id, self.scenes_dir)
            except (EchoSceneError, json.JSONDecodeError, OSError, KeyError) as exc:
                raise RuntimeError(f"cannot recover scene file {path}: {exc}") from exc
            self._attach(scene)
        for path in sorted(self.sessions_dir.glob("*.json")):
            try:
                data = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise RuntimeError(f"cannot recover session file {path}: {exc}") from exc
            workspace = self.workspaces.get(data.get("scene_id"))
            if workspace is None:
                continue  # scene was deleted; stale session file
            session = workspace.engine.load_session(data, demote_processing=True)
            self.session_index[session.session_id] = data["scene_id"]
            workspace.engine._on_commit()

    # -- lookups -------------------------------------------------------------------

    def workspace(self, scene_id: str) -> Workspace:
        try:
            return self.workspaces[scene_id]
        except KeyError:
            raise NotFound(f"no scene {scene_id!r}") from None

    def engine_for_session(self, session_id: str) -> SuggestionEngine:
        scene_id = self.session_index.get(session_id)
        if scene_id is None or scene_id not in self.workspaces:
            raise NotFound(f"no session {session_id!r}")
        return self.workspaces[scene_id].engine


def create_app(config: Optional[ServiceConfig] = None, provider: Optional[Provider] = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="echoscene", version="0.1.0")
    state = AppState(config, provider=provider)
    app.state.engine_state = state

    def get_state() -> AppState:
        return state

    @app.exception_handler(EchoSceneError)
    async def _engine_error(request: Request, exc: EchoSceneError):
        return _api_error(exc.code, str(exc), _status_for(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _api_error("VALIDATION", "request body failed validation", 422, exc.errors())

    # -- health ---------------------------------------------------------------------

    @app.get("/healthz")
    def healthz(state: AppState = Depends(get_state)):
        return {"status": "ok", "scenes": len(state.workspaces)}

    # -- scenes ------------------------------------------------------------------------

    @app.post("/scenes")
    def create_scene(body: CreateSceneBody, state: AppState = Depends(get_state)):
        bounds = Bounds.from_list(body.bounds) if body.bounds else None
        scene = SceneGraph(f"scene-{uuid.uuid4().hex[:8]}", bounds)
        state._attach(scene)
        return {"scene_id": scene.scene_id, "revision": scene.revision}

    @app.get("/scenes/{scene_id}")
    def get_scene(scene_id: str, state: AppState = Depends(get_state)):
        workspace = state.workspace(scene_id)
        return Response(
            content=workspace.scene.serialize_parameters(),
            media_type="application/json",
            headers={"X-Scene-Revision": str(workspace.scene.revision)},
        )

    @app.get("/scenes/{scene_id}/topview")
    def get_topview(scene_id: str, res: int = Query(default=256), state: AppState = Depends(get_state)):
        workspace = state.workspace(scene_id)
        ppm, _ = render_top_view(workspace.scene, res)
        return Response(content=ppm, media_type="image/x-portable-pixmap")

    @app.delete("/scenes/{scene_id}")
    def delete_scene(scene_id: str, state: AppState = Depends(get_state)):
        state.workspace(scene_id)  # 404 if missing
        del state.workspaces[scene_id]
        for stale in list(state.session_index):
            if state.session_index[stale] == scene_id:
                del state.session_index[stale]
                (state.sessions_dir / f"{stale}.json").unlink(missing_ok=True)
        (state.scenes_dir / f"{scene_id}.json").unlink(missing_ok=True)
        (state.scenes_dir / f"{scene_id}.meta.json").unlink(missing_ok=True)
        (state.logs_dir / f"{scene_id}.jsonl").unlink(missing_ok=True)
        return {"scene_id": scene_id, "deleted": True}

    @app.get("/scenes/{scene_id}/log")
    def get_log(scene_id: str, state: AppState = Depends(get_state)):
        workspace = state.workspace(scene_id)
        return {"entries": [r.as_dict() for r in workspace.engine.oplog.records]}

    # -- manual object operations --------------------------------------------------------

    def _position(value) -> Vector3:
        if value is None:
            return Vector3(0.0, 0.0, 0.0)
        return coerce_field_value("position", value)

    @app.post("/scenes/{scene_id}/objects")
    def manual_add(scene_id: str, body: ManualAddBody, state: AppState = Depends(get_state)):
        workspace = state.workspace(scene_id)
        name, revision = workspace.engine.manual_add(
            asset_id=body.asset_id,
            category=body.category,
            query=body.query,
            position=_position(body.position),
            name=body.name,
        )
        return {"name": name, "revision": revision}

    @app.patch("/scenes/{scene_id}/objects/{name}")
    def manual_patch(scene_id: str, name: str, body: PatchObjectBody, state: AppState = Depends(get_state)):
        workspace = state.workspace(scene_id)
        fields = {k: v for k, v in body.model_dump().items() if v is not None}
        if not fields:
            raise InvalidValue("no fields to mutate")
        revision = workspace.scene.revision
        for field_name, value in fields.items():
            revision = workspace.engine.manual_mutate(name, field_name, coerce_field_value(field_name, value))
        return {"revision": revision}

    @app.delete("/scenes/{scene_id}/objects/{name}")
    def manual_delete(scene_id: str, name: str, state: AppState = Depends(get_state)):
        workspace = state.workspace(scene_id)
        return {"revision": workspace.engine.manual_destroy(name)}

    @app.post("/scenes/{scene_id}/manual-undo")
    def manual_undo(scene_id: str, state: AppState = Depends(get_state)):
        workspace = state.workspace(scene_id)
        return {"revision": workspace.engine.manual_undo()}

    # -- sessions -----------------------------------------------------------------------

    @app.post("/scenes/{scene_id}/instruct")
    def instruct(scene_id: str, body: InstructBody, state: AppState = Depends(get_state)):
        workspace = state.workspace(scene_id)
        config = None
        if body.config:
            raw = dict(body.config)
            condition = raw.pop("condition", None)
            if condition:
                config = PipelineConfig.from_condition(condition, **{
                    k: v for k, v in raw.items() if k in PipelineConfig.__dataclass_fields__
                    and k not in ("include_vision", "include_object_params", "include_suggestions_stage")
                })
            else:
                config = PipelineConfig.from_dict(raw)
        session = workspace.engine.instruct(body.instruction, config)
        state.session_index[session.session_id] = scene_id
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str, state: AppState = Depends(get_state)):
        engine = state.engine_for_session(session_id)
        return engine.session_view(engine.session(session_id))

    @app.post("/sessions/{session_id}/suggestions/{suggestion_id}/apply")
    def apply_suggestion(session_id: str, suggestion_id: str, state: AppState = Depends(get_state)):
        engine = state.engine_for_session(session_id)
        return {"revision": engine.apply(engine.session(session_id), suggestion_id)}

    @app.post("/sessions/{session_id}/suggestions/{suggestion_id}/undo")
    def undo_suggestion(session_id: str, suggestion_id: str, state: AppState = Depends(get_state)):
        engine = state.engine_for_session(session_id)
        return {"revision": engine.undo(engine.session(session_id), suggestion_id)}

    @app.post("/sessions/{session_id}/suggestions/{suggestion_id}/regenerate")
    def regenerate_suggestion(session_id: str, suggestion_id: str, state: AppState = Depends(get_state)):
        engine = state.engine_for_session(session_id)
        engine.regenerate(engine.session(session_id), suggestion_id)
        return {"accepted": True}

    # -- assets -------------------------------------------------------------------------

    @app.get("/assets/search")
    def assets_search(
        q: str,
        category: Optional[str] = None,
        limit: int = 10,
        state: AppState = Depends(get_state),
    ):
        ranked = catalog_mod.search(state.catalog, q, category=category, embedder=state.embedder)
        results = []
        for asset_id, score in ranked[: max(limit, 0)]:
            record = state.catalog.get(asset_id)
            results.append(
                {
                    "asset_id": asset_id,
                    "score": score,
                    "name": record.name,
                    "category": record.category,
                    "description": record.description,
                }
            )
        return {"results": results}

    @app.post("/assets/label")
    def assets_label(
        body: LabelBody,
        x_admin_token: Optional[str] = Header(default=None),
        state: AppState = Depends(get_state),
    ):
        if x_admin_token != state.config.admin_token:
            return _api_error("UNAUTHORIZED", "admin token required", 401)
        try:
            thumbnail = base64.b64decode(body.thumbnail_b64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise InvalidValue(f"thumbnail_b64 is not valid base64: {exc}") from exc
        record = catalog_mod.annotate_asset(body.name, thumbnail, state.provider)
        return {
            "name": record.name,
            "description": record.description,
            "category": record.category,
        }

    # -- static UI ------------------------------------------------------------------------

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(config.ui_dir), html=True), name="ui")

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service with uvicorn (blocking)."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


__all__ = ["AppState", "ServiceConfig", "Workspace", "create_app", "serve"]
