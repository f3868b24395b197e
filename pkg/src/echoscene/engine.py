"""The interactive core: suggestion sessions, the three-state lifecycle, selective undo.

One engine owns one scene and is its single writer: apply, undo, reapply and
manual operations serialize on an internal lock, while action generation for
Processing entries can run in background tasks and publish their
Processing -> Pending transition through the same lock. Every committed
mutation batch lands in an append-only operation log as primitive ops, so a
log replay from the initial snapshot reproduces the live scene byte-exactly.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import Executor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .actions import (
    ActionStepList,
    Diagnostic,
    DeleteObject,
    InversePatch,
    RestoreField,
    RestoreObject,
    execute,
    format_command,
    invert,
    parse_command,
    patch_from_json,
    patch_to_json,
)
from .catalog import Catalog, Embedder, search
from .errors import (
    ApplyFailed,
    EchoSceneError,
    InvalidValue,
    LogCorrupt,
    NoJsonFound,
    NotFound,
    NothingToUndo,
    ProviderError,
    SchemaError,
    WrongState,
)
from .pipeline import PipelineConfig, SuggestionText, generate_actions, generate_suggestions
from .providers import Provider
from .scene import (
    SceneGraph,
    SceneObject,
    SceneSnapshot,
    Vector3,
    WHITE,
    coerce_field_value,
    object_from_json,
)


class SuggestionState(str, Enum):
    PROCESSING = "processing"
    PENDING = "pending"
    APPLIED = "applied"
    FAILED = "failed"


# every observable state change must be one of these edges
LEGAL_TRANSITIONS = {
    SuggestionState.PROCESSING: {SuggestionState.PENDING, SuggestionState.FAILED},
    SuggestionState.PENDING: {
        SuggestionState.APPLIED,
        SuggestionState.PROCESSING,
        SuggestionState.FAILED,
    },
    SuggestionState.APPLIED: {SuggestionState.PENDING},
    SuggestionState.FAILED: {SuggestionState.PROCESSING},
}


@dataclass
class SuggestionEntry:
    """One interactive suggestion with its lifecycle bookkeeping."""

    suggestion_id: str
    text: SuggestionText
    state: SuggestionState = SuggestionState.PROCESSING
    actions: ActionStepList = field(default_factory=ActionStepList)
    patch: Optional[InversePatch] = None
    diagnostics: list[Diagnostic] = field(default_factory=list)
    generation: int = 1


@dataclass
class Session:
    """All suggestions spawned by one instruction, in provider order."""

    session_id: str
    scene_id: str
    instruction: str
    config: PipelineConfig
    created_at: float
    entries: list[SuggestionEntry] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    futures: list = field(default_factory=list, repr=False)

    def entry(self, suggestion_id: str) -> SuggestionEntry:
        for entry in self.entries:
            if entry.suggestion_id == suggestion_id:
                return entry
        raise NotFound(f"no suggestion {suggestion_id!r} in session {self.session_id}")

    def wait(self, timeout: Optional[float] = None) -> None:
        """Join all scheduled generation tasks (no-op in synchronous mode)."""
        for future in list(self.futures):
            future.result(timeout=timeout)

    @property
    def processing(self) -> bool:
        return any(e.state is SuggestionState.PROCESSING for e in self.entries)


@dataclass
class LogRecord:
    seq: int
    kind: str
    actor: str
    ts: float
    rev_before: int
    rev_after: int
    detail: dict
    ops: list[dict]

    def as_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "actor": self.actor,
            "ts": self.ts,
            "rev_before": self.rev_before,
            "rev_after": self.rev_after,
            "detail": self.detail,
            "ops": self.ops,
        }


class OperationLog:
    """Append-only record of every logical operation, flushed per record.

    Constructing against an existing file resumes it: prior records load
    into memory and new ones append after them, so the audit trail survives
    restarts.
    """

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self.records: list[LogRecord] = []
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self.records = OperationLog.load(self.path)

    def append(
        self,
        kind: str,
        actor: str,
        rev_before: int,
        rev_after: int,
        detail: dict,
        ops: list[dict],
    ) -> LogRecord:
        with self._lock:
            record = LogRecord(
                seq=len(self.records),
                kind=kind,
                actor=actor,
                ts=time.time(),
                rev_before=rev_before,
                rev_after=rev_after,
                detail=detail,
                ops=ops,
            )
            self.records.append(record)
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a") as fh:
                    fh.write(json.dumps(record.as_dict()) + "\n")
            return record

    @staticmethod
    def load(path: Path | str) -> list[LogRecord]:
        records = []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                records.append(LogRecord(**data))
            except (json.JSONDecodeError, TypeError) as exc:
                raise LogCorrupt(f"bad log line: {exc}") from exc
        return records


def replay_log(initial_snapshot: SceneSnapshot, records: list[LogRecord]) -> SceneGraph:
    """Rebuild the scene by applying every record's primitive ops to the snapshot."""
    scene = SceneGraph(initial_snapshot.scene_id, initial_snapshot.bounds)
    for obj in initial_snapshot.objects:
        entry = obj.parameter_entry()
        if obj.asset_ref is not None:
            entry["asset_ref"] = obj.asset_ref
        scene.add_object(object_from_json(scene, entry))
    scene.revision = initial_snapshot.revision
    for record in records:
        if record.ops and record.rev_before != scene.revision:
            raise LogCorrupt(
                f"record {record.seq} expects revision {record.rev_before}, scene is at {scene.revision}"
            )
        try:
            for op in record.ops:
                _apply_primitive(scene, op)
        except (EchoSceneError, KeyError, ValueError) as exc:
            raise LogCorrupt(f"record {record.seq} failed to replay: {exc}") from exc
        if record.ops and scene.revision != record.rev_after:
            raise LogCorrupt(
                f"record {record.seq} should end at revision {record.rev_after}, got {scene.revision}"
            )
    return scene


def _apply_primitive(scene: SceneGraph, op: dict) -> None:
    kind = op["op"]
    if kind == "add":
        scene.add_object(object_from_json(scene, op["object"]), index=op.get("index"))
    elif kind == "set":
        scene.mutate_object(op["name"], op["field"], coerce_field_value(op["field"], op["value"]))
    elif kind == "remove":
        scene.remove_object(op["name"])
    elif kind == "reset":
        scene.reset_objects(op["objects"])
    else:
        raise LogCorrupt(f"unknown primitive op {kind!r}")


class SuggestionEngine:
    """Single-writer interactive engine for one scene."""

    def __init__(
        self,
        scene: SceneGraph,
        provider: Provider,
        config: Optional[PipelineConfig] = None,
        catalog: Optional[Catalog] = None,
        embedder: Optional[Embedder] = None,
        *,
        executor: Optional[Executor] = None,
        log_path: Optional[Path] = None,
        on_commit: Optional[Callable[[], None]] = None,
    ):
        self.scene = scene
        self.provider = provider
        self.config = config or PipelineConfig()
        self.catalog = catalog
        self.embedder = embedder
        self._executor = executor
        self._on_commit = on_commit
        self._lock = threading.RLock()
        self.sessions: dict[str, Session] = {}
        self._session_counter = 0
        self._suggestion_counter = 0
        self._manual_undo_patch: Optional[InversePatch] = None
        self.oplog = OperationLog(log_path)
        self.initial_snapshot = scene.take_snapshot()
        if not self.oplog.records:
            self.oplog.append(
                kind="create",
                actor="system",
                rev_before=scene.revision,
                rev_after=scene.revision,
                detail={
                    "scene_id": scene.scene_id,
                    "bounds": scene.bounds.as_list(),
                    "parameters": json.loads(scene.serialize_parameters()),
                },
                ops=[],
            )

    # -- helpers ---------------------------------------------------------------

    def _commit(self) -> None:
        if self._on_commit:
            self._on_commit()

    def _set_state(self, entry: SuggestionEntry, new: SuggestionState) -> None:
        assert new in LEGAL_TRANSITIONS[entry.state], (
            f"illegal transition {entry.state.value} -> {new.value}"
        )
        entry.state = new

    def _detached_scene(self) -> SceneGraph:
        """Value copy of the current scene for prompt building outside the lock."""
        with self._lock:
            snap = self.scene.take_snapshot()
        ghost = SceneGraph(snap.scene_id, snap.bounds)
        for obj in snap.objects:
            entry = obj.parameter_entry()
            if obj.asset_ref is not None:
                entry["asset_ref"] = obj.asset_ref
            ghost.add_object(object_from_json(ghost, entry))
        return ghost

    def session(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self.sessions[session_id]
            except KeyError:
                raise NotFound(f"no session {session_id!r}") from None

    # -- instruction intake ------------------------------------------------------

    def instruct(self, instruction: str, config: Optional[PipelineConfig] = None) -> Session:
        """Generate suggestions for one instruction and schedule their actions.

        Entries start Processing and flip to Pending (or Failed) as their
        action lists arrive. Without the suggestions stage (the V+OP
        configuration) a single synthetic entry wraps the raw instruction.
        """
        if not instruction or not instruction.strip():
            raise InvalidValue("instruction must be non-empty")
        cfg = config or self.config
        with self._lock:
            self._session_counter += 1
            session = Session(
                session_id=f"{self.scene.scene_id}-ses-{self._session_counter}",
                scene_id=self.scene.scene_id,
                instruction=instruction,
                config=cfg,
                created_at=time.time(),
            )
            self.sessions[session.session_id] = session

        if cfg.include_suggestions_stage:
            try:
                texts = generate_suggestions(cfg, self._detached_scene(), instruction, self.provider)
            except (ProviderError, NoJsonFound, SchemaError) as exc:
                texts = []
                session.diagnostics.append(
                    Diagnostic(getattr(exc, "code", "PROVIDER_ERROR"), str(exc))
                )
        else:
            texts = [SuggestionText("s1", instruction, instruction)]

        with self._lock:
            for text in texts:
                self._suggestion_counter += 1
                session.entries.append(
                    SuggestionEntry(suggestion_id=f"sug-{self._suggestion_counter}", text=text)
                )
            self.oplog.append(
                kind="instruct",
                actor="user",
                rev_before=self.scene.revision,
                rev_after=self.scene.revision,
                detail={
                    "session_id": session.session_id,
                    "instruction": instruction,
                    "condition": cfg.condition_name,
                    "suggestion_ids": [e.suggestion_id for e in session.entries],
                },
                ops=[],
            )
        for entry in session.entries:
            self._schedule(session, entry)
        self._commit()
        return session

    def _schedule(self, session: Session, entry: SuggestionEntry) -> None:
        if self._executor is None:
            self._generate_for_entry(session, entry)
        else:
            session.futures.append(self._executor.submit(self._generate_for_entry, session, entry))

    def _generate_for_entry(self, session: Session, entry: SuggestionEntry) -> None:
        try:
            steps = generate_actions(
                session.config,
                self._detached_scene(),
                entry.text.text,
                self.provider,
                catalog=self.catalog,
                embedder=self.embedder,
            )
        except (ProviderError, NoJsonFound, SchemaError) as exc:
            with self._lock:
                entry.diagnostics.append(Diagnostic(getattr(exc, "code", "PROVIDER_ERROR"), str(exc)))
                self._set_state(entry, SuggestionState.FAILED)
        else:
            with self._lock:
                entry.actions = steps
                entry.diagnostics.extend(steps.diagnostics)
                if steps.steps:
                    self._set_state(entry, SuggestionState.PENDING)
                else:
                    entry.diagnostics.append(
                        Diagnostic("NO_STEPS", "provider produced no executable steps")
                    )
                    self._set_state(entry, SuggestionState.FAILED)
        self._commit()

    # -- suggestion lifecycle -------------------------------------------------------

    def apply(self, session: Session, suggestion_id: str) -> int:
        """Execute the entry's actions in sequence, all-or-nothing.

        A mid-sequence failure rolls back the already-executed actions, marks
        the entry Failed and surfaces ApplyFailed; the scene serialization is
        then byte-equal to the pre-apply state.
        """
        with self._lock:
            entry = session.entry(suggestion_id)
            if entry.state is not SuggestionState.PENDING:
                raise WrongState(f"cannot apply a {entry.state.value} suggestion")
            if not entry.actions.steps:
                raise WrongState("suggestion has no generated actions")
            rev_before = self.scene.revision
            combined = InversePatch()
            diags: list[Diagnostic] = []
            failure: Optional[Exception] = None
            with self.scene.recording() as ops:
                try:
                    for action in entry.actions:
                        _, patch = execute(action, self.scene, diagnostics=diags)
                        combined.extend(patch)
                except EchoSceneError as exc:
                    failure = exc
                    invert(combined, self.scene, diags)
            if failure is not None:
                diags.append(Diagnostic("APPLY_FAILED", str(failure)))
                entry.diagnostics.extend(diags)
                self._set_state(entry, SuggestionState.FAILED)
                self.oplog.append(
                    kind="apply",
                    actor="ai",
                    rev_before=rev_before,
                    rev_after=self.scene.revision,
                    detail={
                        "session_id": session.session_id,
                        "suggestion_id": suggestion_id,
                        "ok": False,
                        "error": str(failure),
                    },
                    ops=ops,
                )
                self._commit()
                raise ApplyFailed(f"apply rolled back: {failure}") from failure
            entry.patch = combined
            entry.diagnostics.extend(diags)
            self._set_state(entry, SuggestionState.APPLIED)
            self.oplog.append(
                kind="apply",
                actor="ai",
                rev_before=rev_before,
                rev_after=self.scene.revision,
                detail={"session_id": session.session_id, "suggestion_id": suggestion_id, "ok": True},
                ops=ops,
            )
            self._commit()
            return self.scene.revision

    def reapply(self, session: Session, suggestion_id: str) -> int:
        """Re-execute stored actions against the current scene (fresh patch)."""
        return self.apply(session, suggestion_id)

    def undo(self, session: Session, suggestion_id: str) -> int:
        """Roll back exactly this suggestion's modifications, leaving others alone."""
        with self._lock:
            entry = session.entry(suggestion_id)
            if entry.state is not SuggestionState.APPLIED:
                raise WrongState(f"cannot undo a {entry.state.value} suggestion")
            rev_before = self.scene.revision
            diags: list[Diagnostic] = []
            with self.scene.recording() as ops:
                invert(entry.patch, self.scene, diags)
            entry.patch = None
            entry.diagnostics.extend(diags)
            self._set_state(entry, SuggestionState.PENDING)
            self.oplog.append(
                kind="undo",
                actor="ai",
                rev_before=rev_before,
                rev_after=self.scene.revision,
                detail={"session_id": session.session_id, "suggestion_id": suggestion_id},
                ops=ops,
            )
            self._commit()
            return self.scene.revision

    def regenerate(self, session: Session, suggestion_id: str) -> None:
        """Discard the entry's actions and regenerate against the current scene.

        An Applied entry is undone first, so regeneration never double-counts
        its own changes.
        """
        with self._lock:
            entry = session.entry(suggestion_id)
            if entry.state is SuggestionState.PROCESSING:
                raise WrongState("suggestion is already processing")
            if entry.state is SuggestionState.APPLIED:
                self.undo(session, suggestion_id)
            entry.generation += 1
            entry.actions = ActionStepList()
            entry.patch = None
            self._set_state(entry, SuggestionState.PROCESSING)
            self.oplog.append(
                kind="regenerate",
                actor="user",
                rev_before=self.scene.revision,
                rev_after=self.scene.revision,
                detail={
                    "session_id": session.session_id,
                    "suggestion_id": suggestion_id,
                    "generation": entry.generation,
                },
                ops=[],
            )
        self._schedule(session, entry)
        self._commit()

    # -- manual operations -------------------------------------------------------------

    def manual_add(
        self,
        *,
        asset_id: Optional[str] = None,
        category: Optional[str] = None,
        query: Optional[str] = None,
        position: Vector3 = Vector3(0.0, 0.0, 0.0),
        name: Optional[str] = None,
    ) -> tuple[str, int]:
        """Add a catalog asset outside any suggestion; returns (name, revision)."""
        if self.catalog is None or len(self.catalog) == 0:
            raise InvalidValue("manual add needs a catalog")
        if asset_id:
            record = self.catalog.get(asset_id)
        elif query:
            ranked = search(self.catalog, query, category=category, embedder=self.embedder)
            record = self.catalog.get(ranked[0][0])
        else:
            raise InvalidValue("manual add needs an asset_id or a search query")
        with self._lock:
            actual = self.scene.unique_name(name or record.name)
            obj = SceneObject(
                obj_id=self.scene.next_object_id(),
                name=actual,
                position=position,
                scale=record.default_scale,
                color=WHITE,
                asset_ref=record.asset_id,
            )
            rev_before = self.scene.revision
            with self.scene.recording() as ops:
                self.scene.add_object(obj)
            self._manual_undo_patch = InversePatch([DeleteObject(actual)])
            self.oplog.append(
                kind="manual",
                actor="manual",
                rev_before=rev_before,
                rev_after=self.scene.revision,
                detail={"op": "add", "name": actual, "asset_id": record.asset_id},
                ops=ops,
            )
            self._commit()
            return actual, self.scene.revision

    def manual_mutate(self, name: str, field_name: str, value) -> int:
        with self._lock:
            rev_before = self.scene.revision
            with self.scene.recording() as ops:
                old, revision = self.scene.mutate_object(name, field_name, value)
            self._manual_undo_patch = InversePatch([RestoreField(name, field_name, old)])
            self.oplog.append(
                kind="manual",
                actor="manual",
                rev_before=rev_before,
                rev_after=revision,
                detail={"op": "mutate", "name": name, "field": field_name},
                ops=ops,
            )
            self._commit()
            return revision

    def manual_destroy(self, name: str) -> int:
        with self._lock:
            rev_before = self.scene.revision
            with self.scene.recording() as ops:
                fragment = self.scene.remove_object(name)
            self._manual_undo_patch = InversePatch([RestoreObject(fragment)])
            self.oplog.append(
                kind="manual",
                actor="manual",
                rev_before=rev_before,
                rev_after=self.scene.revision,
                detail={"op": "destroy", "name": name},
                ops=ops,
            )
            self._commit()
            return self.scene.revision

    def manual_undo(self) -> int:
        """Undo the single most recent manual operation."""
        with self._lock:
            if self._manual_undo_patch is None:
                raise NothingToUndo("no manual operation to undo")
            rev_before = self.scene.revision
            diags: list[Diagnostic] = []
            with self.scene.recording() as ops:
                invert(self._manual_undo_patch, self.scene, diags)
            self._manual_undo_patch = None
            self.oplog.append(
                kind="manual",
                actor="manual",
                rev_before=rev_before,
                rev_after=self.scene.revision,
                detail={"op": "undo"},
                ops=ops,
            )
            self._commit()
            return self.scene.revision

    # -- views and persistence ------------------------------------------------------------

    def session_view(self, session: Session) -> dict:
        with self._lock:
            return {
                "session_id": session.session_id,
                "scene_id": session.scene_id,
                "instruction": session.instruction,
                "entries": [
                    {
                        "suggestion_id": e.suggestion_id,
                        "text": e.text.text,
                        "state": e.state.value,
                        "generation": e.generation,
                        "diagnostics": [d.message for d in e.diagnostics],
                    }
                    for e in session.entries
                ],
                "diagnostics": [d.message for d in session.diagnostics],
            }

    def session_to_json(self, session: Session) -> dict:
        with self._lock:
            return {
                "session_id": session.session_id,
                "scene_id": session.scene_id,
                "instruction": session.instruction,
                "config": session.config.as_dict(),
                "created_at": session.created_at,
                "diagnostics": [d.as_dict() for d in session.diagnostics],
                "entries": [
                    {
                        "suggestion_id": e.suggestion_id,
                        "text": {
                            "suggestion_id": e.text.suggestion_id,
                            "text": e.text.text,
                            "origin_instruction": e.text.origin_instruction,
                        },
                        "state": e.state.value,
                        "generation": e.generation,
                        "actions": [
                            {
                                "command": format_command(a),
                                "asset_id": a.asset_id,
                                "asset_scale": a.asset_scale.text() if a.asset_scale else None,
                                "add_description": a.add_description,
                            }
                            for a in e.actions
                        ],
                        "patch": patch_to_json(e.patch) if e.patch is not None else None,
                        "diagnostics": [d.as_dict() for d in e.diagnostics],
                    }
                    for e in session.entries
                ],
            }

    def load_session(self, data: dict, *, demote_processing: bool = False) -> Session:
        """Rebuild a persisted session; orphaned Processing entries demote to Failed."""
        session = Session(
            session_id=data["session_id"],
            scene_id=data["scene_id"],
            instruction=data["instruction"],
            config=PipelineConfig.from_dict(data.get("config", {})),
            created_at=data.get("created_at", 0.0),
            diagnostics=[Diagnostic(**d) for d in data.get("diagnostics", [])],
        )
        for item in data.get("entries", []):
            steps = ActionStepList()
            for stored in item.get("actions", []):
                import warnings as _warnings

                with _warnings.catch_warnings():
                    _warnings.simplefilter("ignore")
                    action = parse_command(stored["command"])
                action.asset_id = stored.get("asset_id")
                if stored.get("asset_scale"):
                    action.asset_scale = Vector3.parse(stored["asset_scale"])
                action.add_description = stored.get("add_description")
                steps.steps.append(action)
            state = SuggestionState(item["state"])
            if demote_processing and state is SuggestionState.PROCESSING:
                state = SuggestionState.FAILED
            entry = SuggestionEntry(
                suggestion_id=item["suggestion_id"],
                text=SuggestionText(**item["text"]),
                state=state,
                actions=steps,
                patch=patch_from_json(item["patch"]) if item.get("patch") else None,
                diagnostics=[Diagnostic(**d) for d in item.get("diagnostics", [])],
                generation=item.get("generation", 1),
            )
            if demote_processing and entry.state is SuggestionState.FAILED and not entry.diagnostics:
                entry.diagnostics.append(
                    Diagnostic("ORPHANED", "generation task did not survive a restart")
                )
            session.entries.append(entry)
        with self._lock:
            self.sessions[session.session_id] = session
            # keep generated ids ahead of anything we just loaded
            for entry in session.entries:
                tail = entry.suggestion_id.rsplit("-", 1)[-1]
                if tail.isdigit():
                    self._suggestion_counter = max(self._suggestion_counter, int(tail))
            tail = session.session_id.rsplit("-", 1)[-1]
            if tail.isdigit():
                self._session_counter = max(self._session_counter, int(tail))
        return session


__all__ = [
    "LEGAL_TRANSITIONS",
    "LogRecord",
    "OperationLog",
    "Session",
    "SuggestionEngine",
    "SuggestionEntry",
    "SuggestionState",
    "replay_log",
]
