"""The seven-verb action command language and its enclosing steps JSON.

Commands address objects by display name inside braces and carry a
verb-dependent payload inside brackets:

    Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]
    Move {Movie_Poster} to [(-1.00, 1.00, -3.95)]
    Rotate {Lamp} [(0.00, 90.00, 0.00)]
    Scale {TV} [1.2] times
    Color {Table} to red[(255, 0, 0)]
    Change {Table} to [Marble]
    Destroy {Cup}

Parsing is strict about structure (braces and brackets are mandatory) but
tolerant about whitespace. Every parsed action can be formatted back to a
canonical command that re-parses to an equal action, and every execution
returns an inverse patch that restores the touched state exactly.
"""

from __future__ import annotations

import copy
import json
import re
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Optional, Union

from . import scene as sc
from .errors import (
    CommandSyntaxError,
    InvalidValue,
    MalformedVector,
    NoJsonFound,
    NonPositiveScale,
    NotFound,
    SchemaError,
    TargetMissing,
    UnknownMaterial,
    UnknownVerb,
)
from .scene import ColorRGB, Material, ObjectFragment, SceneGraph, SceneObject, Vector3


class ActionVerb(str, Enum):
    ADD = "Add"
    MOVE = "Move"
    ROTATE = "Rotate"
    SCALE = "Scale"
    COLOR = "Color"
    STYLE = "Style"
    DESTROY = "Destroy"


# command word -> verb; "Delete" in prose means Destroy, "Change" carries Style
_COMMAND_WORDS = {
    "Add": ActionVerb.ADD,
    "Move": ActionVerb.MOVE,
    "Rotate": ActionVerb.ROTATE,
    "Scale": ActionVerb.SCALE,
    "Color": ActionVerb.COLOR,
    "Change": ActionVerb.STYLE,
    "Style": ActionVerb.STYLE,
    "Destroy": ActionVerb.DESTROY,
    "Delete": ActionVerb.DESTROY,
}

# LLM outputs keep using material names that are not in the closed set;
# the vocabulary's own examples do too, so alias the common offenders.
MATERIAL_ALIASES = {
    "Wood": Material.RUSTIC_WOOD,
    "Metal": Material.SHINY_METAL,
    "DarkGlass": Material.GLASS_DARK,
}

_KEY_TYPES = {
    ActionVerb.ADD: Vector3,
    ActionVerb.MOVE: Vector3,
    ActionVerb.ROTATE: Vector3,
    ActionVerb.SCALE: float,
    ActionVerb.COLOR: ColorRGB,
    ActionVerb.STYLE: Material,
    ActionVerb.DESTROY: type(None),
}

ActionKey = Union[Vector3, float, ColorRGB, Material, None]


class MaterialAliasWarning(UserWarning):
    """A material name was accepted through the alias map."""


@dataclass
class Action:
    """One executable scene mutation.

    ``command_text`` keeps the original command string, and the asset fields
    carry Add-resolution results; none of them participate in equality so a
    formatted round trip compares equal.
    """

    verb: ActionVerb
    selected_obj: str
    key: ActionKey = None
    command_text: str = field(default="", compare=False)
    add_description: Optional[str] = field(default=None, compare=False)
    asset_id: Optional[str] = field(default=None, compare=False)
    asset_scale: Optional[Vector3] = field(default=None, compare=False)

    def __post_init__(self):
        expected = _KEY_TYPES[self.verb]
        if not isinstance(self.key, expected):
            raise InvalidValue(
                f"{self.verb.value} key must be {expected.__name__}, got {type(self.key).__name__}"
            )
        if self.verb is ActionVerb.SCALE and self.key <= 0:
            raise InvalidValue(f"scale multiplier must be > 0, got {self.key}")


@dataclass
class Diagnostic:
    """One structured parse/execution note (step index, error kind, raw text)."""

    kind: str
    message: str
    step_index: Optional[int] = None
    raw: str = ""

    def as_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "step_index": self.step_index, "raw": self.raw}


@dataclass
class ActionStepList:
    """Provider-ordered actions plus the diagnostics of dropped or repaired steps."""

    steps: list[Action] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __iter__(self) -> Iterator[Action]:
        return iter(self.steps)

    def __len__(self) -> int:
        return len(self.steps)


# --- command parsing ----------------------------------------------------------------

_WORD_RE = re.compile(r"[A-Za-z_]+")
_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?")
_INT_RE = re.compile(r"-?\d+")


class _Cursor:
    """Byte-offset tracking scanner over one command string."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def expect(self, literal: str, what: str) -> None:
        self.skip_ws()
        if not self.text.startswith(literal, self.pos):
            raise CommandSyntaxError(f"expected {what}", self.pos)
        self.pos += len(literal)

    def word(self, what: str) -> tuple[str, int]:
        self.skip_ws()
        m = _WORD_RE.match(self.text, self.pos)
        if not m:
            raise CommandSyntaxError(f"expected {what}", self.pos)
        self.pos = m.end()
        return m.group(), m.start()

    def number(self, pattern: re.Pattern, what: str) -> tuple[str, int]:
        self.skip_ws()
        m = pattern.match(self.text, self.pos)
        if not m:
            raise MalformedVector(f"expected {what}", self.pos)
        self.pos = m.end()
        return m.group(), m.start()


def _parse_braced_name(cur: _Cursor) -> str:
    cur.expect("{", "'{'")
    end = cur.text.find("}", cur.pos)
    if end < 0:
        raise CommandSyntaxError("unterminated object name, expected '}'", cur.pos)
    name = cur.text[cur.pos:end].strip()
    if not name or set(name) & set("{}[]"):
        raise CommandSyntaxError("empty or invalid object name", cur.pos)
    cur.pos = end + 1
    return name


def _parse_vector(cur: _Cursor) -> Vector3:
    cur.skip_ws()
    start = cur.pos
    cur.expect("(", "'(' opening a vector")
    parts = []
    for i in range(3):
        value, _ = cur.number(_NUMBER_RE, "vector component")
        parts.append(float(value))
        if i < 2:
            cur.skip_ws()
            if not cur.text.startswith(",", cur.pos):
                raise MalformedVector("vector needs three comma-separated components", cur.pos)
            cur.pos += 1
    cur.skip_ws()
    if not cur.text.startswith(")", cur.pos):
        raise MalformedVector("vector needs exactly three components", cur.pos)
    cur.pos += 1
    try:
        return Vector3(*parts)
    except InvalidValue as exc:
        raise MalformedVector(str(exc), start) from None


def _parse_color_vector(cur: _Cursor) -> ColorRGB:
    cur.expect("(", "'(' opening an RGB vector")
    channels = []
    for i in range(3):
        value, at = cur.number(_INT_RE, "RGB channel")
        channel = int(value)
        if not 0 <= channel <= 255:
            raise MalformedVector(f"RGB channel out of range: {channel}", at)
        channels.append(channel)
        if i < 2:
            cur.skip_ws()
            if not cur.text.startswith(",", cur.pos):
                raise MalformedVector("RGB vector needs three comma-separated channels", cur.pos)
            cur.pos += 1
    cur.skip_ws()
    if not cur.text.startswith(")", cur.pos):
        raise MalformedVector("RGB vector needs exactly three channels", cur.pos)
    cur.pos += 1
    return ColorRGB(*channels)


def resolve_material(token: str, offset: int = 0) -> Material:
    """Closed-set lookup with the alias map applied first; warns on alias use."""
    if token in MATERIAL_ALIASES:
        resolved = MATERIAL_ALIASES[token]
        warnings.warn(
            f"material {token!r} accepted as alias of {resolved.value!r}", MaterialAliasWarning
        )
        return resolved
    try:
        return Material.parse(token)
    except InvalidValue:
        raise UnknownMaterial(f"material {token!r} is not in the closed set", offset) from None


def parse_command(text: str) -> Action:
    """Parse one action command string into an Action.

    Raises CommandSyntaxError (with byte offset), UnknownVerb, MalformedVector,
    UnknownMaterial, or NonPositiveScale.
    """
    cur = _Cursor(text)
    word, at = cur.word("action verb")
    verb = _COMMAND_WORDS.get(word)
    if verb is None:
        raise UnknownVerb(f"unknown action verb {word!r}", at)
    name = _parse_braced_name(cur)

    key: ActionKey
    if verb in (ActionVerb.ADD, ActionVerb.MOVE):
        kw, kat = cur.word("'to'")
        if kw != "to":
            raise CommandSyntaxError("expected 'to'", kat)
        cur.expect("[", "'[' opening the position")
        key = _parse_vector(cur)
        cur.expect("]", "']' closing the position")
    elif verb is ActionVerb.ROTATE:
        cur.expect("[", "'[' opening the angle")
        key = _parse_vector(cur)
        cur.expect("]", "']' closing the angle")
    elif verb is ActionVerb.SCALE:
        cur.expect("[", "'[' opening the multiplier")
        value, vat = cur.number(_NUMBER_RE, "scale multiplier")
        multiplier = float(value)
        if multiplier <= 0:
            raise NonPositiveScale(f"scale multiplier must be > 0, got {value}", vat)
        cur.expect("]", "']' closing the multiplier")
        kw, kat = cur.word("'times'")
        if kw != "times":
            raise CommandSyntaxError("expected 'times'", kat)
        key = multiplier
    elif verb is ActionVerb.COLOR:
        kw, kat = cur.word("'to'")
        if kw != "to":
            raise CommandSyntaxError("expected 'to'", kat)
        # optional human color word; the RGB vector is authoritative
        bracket = cur.text.find("[", cur.pos)
        if bracket < 0:
            raise CommandSyntaxError("expected '[' opening the RGB vector", cur.pos)
        cur.pos = bracket + 1
        key = _parse_color_vector(cur)
        cur.expect("]", "']' closing the RGB vector")
    elif verb is ActionVerb.STYLE:
        kw, kat = cur.word("'to'")
        if kw != "to":
            raise CommandSyntaxError("expected 'to'", kat)
        cur.expect("[", "'[' opening the material")
        end = cur.text.find("]", cur.pos)
        if end < 0:
            raise CommandSyntaxError("unterminated material, expected ']'", cur.pos)
        token_at = cur.pos
        token = cur.text[cur.pos:end].strip()
        cur.pos = end + 1
        key = resolve_material(token, token_at)
    else:  # DESTROY
        key = None

    if not cur.at_end():
        raise CommandSyntaxError("unexpected trailing text", cur.pos)
    return Action(verb=verb, selected_obj=name, key=key, command_text=text)


def format_command(action: Action) -> str:
    """Canonical command text; parse_command(format_command(a)) == a."""
    n = action.selected_obj
    if action.verb is ActionVerb.ADD:
        return f"Add {{{n}}} to [{action.key.text()}]"
    if action.verb is ActionVerb.MOVE:
        return f"Move {{{n}}} to [{action.key.text()}]"
    if action.verb is ActionVerb.ROTATE:
        return f"Rotate {{{n}}} [{action.key.text()}]"
    if action.verb is ActionVerb.SCALE:
        return f"Scale {{{n}}} [{repr(float(action.key))}] times"
    if action.verb is ActionVerb.COLOR:
        return f"Color {{{n}}} to rgb[{action.key.vector_text()}]"
    if action.verb is ActionVerb.STYLE:
        return f"Change {{{n}}} to [{action.key.value}]"
    return f"Destroy {{{n}}}"


# --- steps JSON -----------------------------------------------------------------------

def extract_json_object(text: str) -> dict:
    """Find the first balanced top-level JSON object in provider output.

    Leading/trailing prose and code fences are ignored; raises NoJsonFound
    when no brace-balanced slice parses as a JSON object.
    """
    if not isinstance(text, str):
        raise NoJsonFound("provider output is not text")
    start = text.find("{")
    while start >= 0:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if escaped:
                escaped = False
                continue
            if ch == "\\":
                escaped = True
                continue
            if ch == '"':
                in_string = not in_string
                continue
            if in_string:
                continue
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        value = json.loads(text[start:i + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(value, dict):
                        return value
                    break
        start = text.find("{", start + 1)
    raise NoJsonFound("no balanced JSON object in provider output")


def _verb_from_field(value: Any) -> Optional[ActionVerb]:
    if not isinstance(value, str):
        return None
    return _COMMAND_WORDS.get(value.strip().capitalize()) or _COMMAND_WORDS.get(value.strip())


def _key_from_field(verb: ActionVerb, value: Any) -> ActionKey:
    """Parse a step's "key" field under the verb's expected type; None if hopeless."""
    if verb in (ActionVerb.ADD, ActionVerb.MOVE, ActionVerb.ROTATE):
        return Vector3.parse(value) if isinstance(value, str) else None
    if verb is ActionVerb.SCALE:
        return float(value)
    if verb is ActionVerb.COLOR:
        if isinstance(value, str):
            v = Vector3.parse(value)
            return ColorRGB(int(v.x), int(v.y), int(v.z))
        return None
    if verb is ActionVerb.STYLE:
        return resolve_material(str(value)) if isinstance(value, str) else None
    return None


def parse_steps_json(text: str) -> ActionStepList:
    """Parse a provider's steps JSON into ordered actions.

    Each step's "action_command" is authoritative: it is parsed and checked
    against the step's "action", "selected_obj" and "key" fields, recording a
    warning on any disagreement. Invalid steps are dropped with diagnostics
    instead of failing the whole list.
    """
    payload = extract_json_object(text)
    if "steps" not in payload:
        raise SchemaError('steps JSON is missing the "steps" array')
    steps = payload["steps"]
    if not isinstance(steps, list):
        raise SchemaError('"steps" must be an array')

    result = ActionStepList()
    for index, step in enumerate(steps):
        if not isinstance(step, dict):
            result.diagnostics.append(
                Diagnostic("SCHEMA_ERROR", "step is not an object", index, json.dumps(step))
            )
            continue
        command = step.get("action_command")
        if not isinstance(command, str) or not command.strip():
            result.diagnostics.append(
                Diagnostic("SCHEMA_ERROR", 'step has no "action_command"', index, json.dumps(step))
            )
            continue
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", MaterialAliasWarning)
                action = parse_command(command)
            for w in caught:
                result.diagnostics.append(Diagnostic("MATERIAL_ALIAS", str(w.message), index, command))
        except Exception as exc:
            kind = getattr(exc, "code", "PARSE_ERROR")
            result.diagnostics.append(Diagnostic(kind, str(exc), index, command))
            continue

        declared_verb = _verb_from_field(step.get("action"))
        if declared_verb is not None and declared_verb is not action.verb:
            result.diagnostics.append(
                Diagnostic(
                    "FIELD_MISMATCH",
                    f'step "action" says {step.get("action")!r} but the command parses as '
                    f"{action.verb.value}; command wins",
                    index,
                    command,
                )
            )
        declared_obj = step.get("selected_obj")
        if isinstance(declared_obj, str) and declared_obj and declared_obj != action.selected_obj:
            result.diagnostics.append(
                Diagnostic(
                    "FIELD_MISMATCH",
                    f'step "selected_obj" says {declared_obj!r} but the command names '
                    f"{action.selected_obj!r}; command wins",
                    index,
                    command,
                )
            )
        if "key" in step and step["key"] not in ("", None) and action.verb is not ActionVerb.DESTROY:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", MaterialAliasWarning)
                    declared_key = _key_from_field(action.verb, step["key"])
            except Exception:
                declared_key = None
            if declared_key is not None and declared_key != action.key:
                result.diagnostics.append(
                    Diagnostic(
                        "FIELD_MISMATCH",
                        f'step "key" says {step["key"]!r} but the command carries a different '
                        "value; command wins",
                        index,
                        command,
                    )
                )
        result.steps.append(action)
    return result


# --- execution and inversion ------------------------------------------------------------

@dataclass(frozen=True)
class RestoreField:
    name: str
    field_name: str
    old_value: Any


@dataclass(frozen=True)
class DeleteObject:
    name: str


@dataclass(frozen=True)
class RestoreObject:
    fragment: ObjectFragment


UndoRecord = Union[RestoreField, DeleteObject, RestoreObject]


@dataclass
class InversePatch:
    """Ordered undo records; applying them in reverse restores the pre-state."""

    records: list[UndoRecord] = field(default_factory=list)

    def extend(self, other: "InversePatch") -> None:
        self.records.extend(other.records)

    def __len__(self) -> int:
        return len(self.records)


def execute(
    action: Action,
    scene: SceneGraph,
    *,
    auto_add_missing: bool = False,
    diagnostics: Optional[list[Diagnostic]] = None,
) -> tuple[int, InversePatch]:
    """Apply one action to the scene; returns (revision, inverse patch).

    Non-Add verbs on a missing target raise TargetMissing unless
    ``auto_add_missing`` inserts a placeholder first (off by default: the
    engine does not invent objects).
    """
    patch = InversePatch()
    diags = diagnostics if diagnostics is not None else []

    if action.verb is ActionVerb.ADD:
        actual = scene.unique_name(action.selected_obj)
        if actual != action.selected_obj:
            diags.append(
                Diagnostic("RENAMED", f"added as {actual!r}: {action.selected_obj!r} was taken")
            )
        obj = SceneObject(
            obj_id=scene.next_object_id(),
            name=actual,
            position=action.key,
            scale=action.asset_scale or Vector3(1.0, 1.0, 1.0),
            color=sc.WHITE if action.asset_id else sc.PLACEHOLDER_GRAY,
            material=Material.UNSET,
            asset_ref=action.asset_id,
        )
        revision = scene.add_object(obj)
        patch.records.append(DeleteObject(actual))
        return revision, patch

    if action.verb is ActionVerb.DESTROY:
        try:
            fragment = scene.remove_object(action.selected_obj)
        except NotFound as exc:
            raise TargetMissing(str(exc)) from None
        patch.records.append(RestoreObject(fragment))
        return scene.revision, patch

    if action.selected_obj not in scene:
        if not auto_add_missing:
            raise TargetMissing(f"no object named {action.selected_obj!r} to {action.verb.value}")
        placeholder = Action(
            verb=ActionVerb.ADD, selected_obj=action.selected_obj, key=Vector3(0.0, 0.0, 0.0)
        )
        diags.append(
            Diagnostic("AUTO_ADD", f"inserted placeholder {action.selected_obj!r} before {action.verb.value}")
        )
        _, add_patch = execute(placeholder, scene, diagnostics=diags)
        patch.extend(add_patch)

    if action.verb is ActionVerb.MOVE:
        old, revision = scene.mutate_object(action.selected_obj, "position", action.key)
        patch.records.append(RestoreField(action.selected_obj, "position", old))
    elif action.verb is ActionVerb.ROTATE:
        old, revision = scene.mutate_object(action.selected_obj, "rotation", action.key)
        patch.records.append(RestoreField(action.selected_obj, "rotation", old))
    elif action.verb is ActionVerb.SCALE:
        current = scene.get(action.selected_obj).scale
        old, revision = scene.mutate_object(action.selected_obj, "scale", current.scaled(action.key))
        patch.records.append(RestoreField(action.selected_obj, "scale", old))
    elif action.verb is ActionVerb.COLOR:
        old, revision = scene.mutate_object(action.selected_obj, "color", action.key)
        patch.records.append(RestoreField(action.selected_obj, "color", old))
    elif action.verb is ActionVerb.STYLE:
        old, revision = scene.mutate_object(action.selected_obj, "material", action.key)
        patch.records.append(RestoreField(action.selected_obj, "material", old))
    else:  # pragma: no cover - verbs are exhaustive
        raise InvalidValue(f"unhandled verb {action.verb}")
    return revision, patch


def invert(
    patch: InversePatch,
    scene: SceneGraph,
    diagnostics: Optional[list[Diagnostic]] = None,
) -> int:
    """Apply undo records in reverse recording order; conflict-tolerant.

    A record whose target vanished is skipped with a diagnostic; a restored
    object whose name is now taken comes back under a suffixed name.
    """
    diags = diagnostics if diagnostics is not None else []
    for record in reversed(patch.records):
        if isinstance(record, RestoreField):
            if record.name not in scene:
                diags.append(
                    Diagnostic(
                        "RESTORE_TARGET_MISSING",
                        f"cannot restore {record.field_name} of missing {record.name!r}",
                    )
                )
                continue
            scene.mutate_object(record.name, record.field_name, record.old_value)
        elif isinstance(record, DeleteObject):
            if record.name not in scene:
                diags.append(
                    Diagnostic("ALREADY_GONE", f"object {record.name!r} already removed")
                )
                continue
            scene.remove_object(record.name)
        else:
            obj = copy.deepcopy(record.fragment.obj)
            if obj.name in scene:
                renamed = scene.unique_name(obj.name)
                diags.append(
                    Diagnostic(
                        "RESTORE_COLLISION",
                        f"restored {obj.name!r} as {renamed!r}: the name is now taken",
                    )
                )
                obj.name = renamed
            scene.add_object(obj, index=record.fragment.index)
    return scene.revision


# --- patch serialization --------------------------------------------------------------

def patch_to_json(patch: InversePatch) -> list[dict]:
    out = []
    for record in patch.records:
        if isinstance(record, RestoreField):
            out.append(
                {
                    "kind": "restore_field",
                    "name": record.name,
                    "field": record.field_name,
                    "value": sc._field_to_json(record.field_name, record.old_value),
                }
            )
        elif isinstance(record, DeleteObject):
            out.append({"kind": "delete_object", "name": record.name})
        else:
            entry = record.fragment.obj.parameter_entry()
            entry["obj_id"] = record.fragment.obj.obj_id
            if record.fragment.obj.asset_ref is not None:
                entry["asset_ref"] = record.fragment.obj.asset_ref
            out.append({"kind": "restore_object", "index": record.fragment.index, "object": entry})
    return out


def patch_from_json(data: list[dict]) -> InversePatch:
    patch = InversePatch()
    for item in data:
        kind = item.get("kind")
        if kind == "restore_field":
            patch.records.append(
                RestoreField(
                    item["name"],
                    item["field"],
                    sc.coerce_field_value(item["field"], item["value"]),
                )
            )
        elif kind == "delete_object":
            patch.records.append(DeleteObject(item["name"]))
        elif kind == "restore_object":
            entry = item["object"]
            obj = SceneObject(
                obj_id=entry.get("obj_id", "obj-restored"),
                name=entry["name"],
                position=Vector3.parse(entry["position"]),
                rotation=Vector3.parse(entry["rotation"]),
                scale=Vector3.parse(entry["scale"]),
                color=ColorRGB.from_hex(entry["color"]),
                material=Material.parse(entry["material"]),
                asset_ref=entry.get("asset_ref"),
            )
            patch.records.append(RestoreObject(ObjectFragment(obj, int(item["index"]))))
        else:
            raise SchemaError(f"unknown undo record kind: {kind!r}")
    return patch


__all__ = [
    "Action",
    "ActionStepList",
    "ActionVerb",
    "DeleteObject",
    "Diagnostic",
    "InversePatch",
    "MATERIAL_ALIASES",
    "MaterialAliasWarning",
    "RestoreField",
    "RestoreObject",
    "execute",
    "extract_json_object",
    "format_command",
    "invert",
    "parse_command",
    "parse_steps_json",
    "patch_from_json",
    "patch_to_json",
    "resolve_material",
]
