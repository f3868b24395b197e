"""Typed scene graph at desk scale with canonical serialization and a top-view rasterizer.

World conventions: meters, Y axis is up, the top view is an orthographic
projection onto the XZ ground plane. Rotations are Euler degrees normalized
to [0, 360). All serialized vectors use fixed two-decimal formatting so equal
scenes always serialize to identical bytes.
"""

from __future__ import annotations

import base64
import copy
import json
import math
import re
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterator, Optional

import numpy as np

from .errors import (
    DuplicateName,
    InvalidResolution,
    InvalidScale,
    InvalidValue,
    NotFound,
)

DEFAULT_ROOM_SIZE = 8.0  # meters per side, centered at origin

_VECTOR_RE = re.compile(
    r"^\(\s*(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)\s*,"
    r"\s*(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)\s*,"
    r"\s*(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)\s*\)$"
)
_HEX_RE = re.compile(r"^#([0-9A-Fa-f]{6})$")
_NAME_BAD_CHARS = set("{}[]")


@dataclass(frozen=True)
class Vector3:
    """A 3-component vector; text form is exactly "(x, y, z)" with 2 decimals."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not math.isfinite(c):
                raise InvalidValue(f"non-finite vector component: {c!r}")

    def text(self) -> str:
        return f"({self.x:.2f}, {self.y:.2f}, {self.z:.2f})"

    @staticmethod
    def parse(text: str) -> "Vector3":
        m = _VECTOR_RE.match(text.strip())
        if not m:
            raise InvalidValue(f"not a vector: {text!r}")
        return Vector3(float(m.group(1)), float(m.group(2)), float(m.group(3)))

    def scaled(self, factor: float) -> "Vector3":
        return Vector3(self.x * factor, self.y * factor, self.z * factor)


@dataclass(frozen=True)
class ColorRGB:
    """An 8-bit RGB color; hex form "#RRGGBB", vector form "(r, g, b)"."""

    r: int
    g: int
    b: int

    def __post_init__(self):
        for c in (self.r, self.g, self.b):
            if not isinstance(c, int) or not 0 <= c <= 255:
                raise InvalidValue(f"color channel out of range: {c!r}")

    def hex(self) -> str:
        return f"#{self.r:02X}{self.g:02X}{self.b:02X}"

    def vector_text(self) -> str:
        return f"({self.r}, {self.g}, {self.b})"

    @staticmethod
    def from_hex(text: str) -> "ColorRGB":
        m = _HEX_RE.match(text.strip())
        if not m:
            raise InvalidValue(f"not a hex color: {text!r}")
        v = int(m.group(1), 16)
        return ColorRGB((v >> 16) & 0xFF, (v >> 8) & 0xFF, v & 0xFF)


WHITE = ColorRGB(255, 255, 255)
PLACEHOLDER_GRAY = ColorRGB(128, 128, 128)


class Material(str, Enum):
    """Closed material vocabulary plus the Unset sentinel."""

    UNSET = "Unset"
    BASKET = "Basket"
    BLACK_PLASTIC = "Black_Plastic"
    BRICK = "Brick"
    BRONZE_METAL = "Bronze_Metal"
    COPPER_METAL = "Copper_metal"
    DARK_OAK = "Dark_Oak"
    FLOW_WATER = "Flow_Water"
    FLOWER_PATTERN = "Flower_Pattern"
    GLASS = "Glass"
    GLASS_DARK = "Glass_Dark"
    GOLDEN_METAL = "Golden_metal_material"
    GRASS = "Grass"
    LEAF_PATTERN = "Leaf_Pattern"
    LEATHER = "Leather"
    MARBLE = "Marble"
    RUSTIC_WOOD = "Rustic_Wood"
    SHINY_METAL = "Shiny_Metal"

    @staticmethod
    def parse(name: str) -> "Material":
        try:
            return Material(name)
        except ValueError:
            raise InvalidValue(f"unknown material: {name!r}") from None


MATERIAL_NAMES = tuple(m.value for m in Material if m is not Material.UNSET)

MUTABLE_FIELDS = ("position", "rotation", "scale", "color", "material")


def _wrap_degrees(angle: float) -> float:
    wrapped = angle % 360.0
    # tiny negative inputs mod up to exactly 360.0 in floating point
    return 0.0 if wrapped >= 360.0 else wrapped


def normalize_rotation(v: Vector3) -> Vector3:
    return Vector3(_wrap_degrees(v.x), _wrap_degrees(v.y), _wrap_degrees(v.z))


def _check_scale(v: Vector3) -> Vector3:
    if v.x <= 0 or v.y <= 0 or v.z <= 0:
        raise InvalidScale(f"scale components must be > 0: {v.text()}")
    return v


def _check_name(name: str) -> str:
    if not name or _NAME_BAD_CHARS & set(name):
        raise InvalidValue(f"invalid object name: {name!r}")
    return name


@dataclass
class SceneObject:
    """One object in the scene; the footprint is its ground-plane extent."""

    obj_id: str
    name: str
    position: Vector3
    rotation: Vector3 = Vector3(0.0, 0.0, 0.0)
    scale: Vector3 = Vector3(1.0, 1.0, 1.0)
    color: ColorRGB = WHITE
    material: Material = Material.UNSET
    asset_ref: Optional[str] = None

    def __post_init__(self):
        _check_name(self.name)
        _check_scale(self.scale)
        self.rotation = normalize_rotation(self.rotation)

    @property
    def footprint(self) -> tuple[float, float]:
        """Axis-aligned (x, z) extents in meters; scale is read as extents."""
        return (self.scale.x, self.scale.z)

    def parameter_entry(self) -> dict[str, str]:
        return {
            "name": self.name,
            "position": self.position.text(),
            "rotation": self.rotation.text(),
            "scale": self.scale.text(),
            "color": self.color.hex(),
            "material": self.material.value,
        }


@dataclass(frozen=True)
class Bounds:
    """Room extents on the ground plane (min/max corners)."""

    min_x: float = -DEFAULT_ROOM_SIZE / 2
    min_z: float = -DEFAULT_ROOM_SIZE / 2
    max_x: float = DEFAULT_ROOM_SIZE / 2
    max_z: float = DEFAULT_ROOM_SIZE / 2

    def __post_init__(self):
        if not (self.min_x < self.max_x and self.min_z < self.max_z):
            raise InvalidValue("degenerate room bounds")

    def as_list(self) -> list[float]:
        return [self.min_x, self.min_z, self.max_x, self.max_z]

    @staticmethod
    def from_list(values) -> "Bounds":
        if len(values) != 4:
            raise InvalidValue("bounds must be [min_x, min_z, max_x, max_z]")
        return Bounds(*(float(v) for v in values))


@dataclass(frozen=True)
class ObjectFragment:
    """Value copy of a removed object plus its slot, enough to restore it bit-exactly."""

    obj: SceneObject
    index: int


@dataclass(frozen=True)
class SceneSnapshot:
    """Immutable full-value copy of a scene at a revision."""

    scene_id: str
    revision: int
    bounds: Bounds
    objects: tuple[SceneObject, ...]
    id_counter: int

    def serialize_parameters(self) -> str:
        return json.dumps([o.parameter_entry() for o in self.objects], indent=2)


class SceneGraph:
    """Ordered collection of uniquely named objects with a monotonic revision.

    Not internally synchronized: the owning engine serializes all mutations
    of one scene. Every committed mutation can be captured as a primitive op
    via ``recording()`` for the operation log.
    """

    def __init__(self, scene_id: str, bounds: Bounds | None = None):
        self.scene_id = scene_id
        self.bounds = bounds or Bounds()
        self.revision = 0
        self._objects: list[SceneObject] = []
        self._by_name: dict[str, SceneObject] = {}
        self._id_counter = 0
        self._recorder: list[dict] | None = None

    # -- queries ------------------------------------------------------------

    @property
    def objects(self) -> list[SceneObject]:
        return list(self._objects)

    def get(self, name: str) -> SceneObject:
        try:
            return self._by_name[name]
        except KeyError:
            raise NotFound(f"no object named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def unique_name(self, base: str) -> str:
        """Collision-free name: the base itself, else base_2, base_3, ..."""
        if base not in self._by_name:
            return base
        n = 2
        while f"{base}_{n}" in self._by_name:
            n += 1
        return f"{base}_{n}"

    def next_object_id(self) -> str:
        self._id_counter += 1
        return f"obj-{self._id_counter}"

    # -- recording ------------------------------------------------------------

    @contextmanager
    def recording(self) -> Iterator[list[dict]]:
        """Capture the primitive ops of a mutation batch for the operation log."""
        previous, ops = self._recorder, []
        self._recorder = ops
        try:
            yield ops
        finally:
            self._recorder = previous

    def _record(self, op: dict) -> None:
        if self._recorder is not None:
            self._recorder.append(op)

    # -- mutations ------------------------------------------------------------

    def add_object(self, obj: SceneObject, index: int | None = None) -> int:
        """Append (or insert) an object; raises DuplicateName on a taken name."""
        if obj.name in self._by_name:
            raise DuplicateName(f"object named {obj.name!r} already present")
        _check_scale(obj.scale)
        slot = len(self._objects) if index is None else min(index, len(self._objects))
        self._objects.insert(slot, obj)
        self._by_name[obj.name] = obj
        self.revision += 1
        self._record({"op": "add", "index": slot, "object": _object_to_json(obj)})
        return self.revision

    def remove_object(self, name: str) -> ObjectFragment:
        """Remove by name; the returned fragment restores the object bit-exactly."""
        obj = self.get(name)
        index = self._objects.index(obj)
        fragment = ObjectFragment(copy.deepcopy(obj), index)
        del self._objects[index]
        del self._by_name[name]
        self.revision += 1
        self._record({"op": "remove", "name": name})
        return fragment

    def mutate_object(self, name: str, field_name: str, value: Any) -> tuple[Any, int]:
        """Replace one field; returns (old value, new revision).

        The old value feeds inverse-patch construction. The revision bumps
        even when the new value equals the old one: the log is not idempotent.
        """
        obj = self.get(name)
        if field_name not in MUTABLE_FIELDS:
            raise InvalidValue(f"not a mutable field: {field_name!r}")
        value = coerce_field_value(field_name, value)
        old = getattr(obj, field_name)
        setattr(obj, field_name, value)
        self.revision += 1
        self._record(
            {"op": "set", "name": name, "field": field_name, "value": _field_to_json(field_name, value)}
        )
        return old, self.revision

    def take_snapshot(self) -> SceneSnapshot:
        return SceneSnapshot(
            scene_id=self.scene_id,
            revision=self.revision,
            bounds=self.bounds,
            objects=tuple(copy.deepcopy(o) for o in self._objects),
            id_counter=self._id_counter,
        )

    def restore_snapshot(self, snap: SceneSnapshot) -> int:
        """Reset object state to the snapshot's; counts as one mutation batch."""
        self._id_counter = max(self._id_counter, snap.id_counter)
        self.bounds = snap.bounds
        return self._replace_objects([copy.deepcopy(o) for o in snap.objects])

    def reset_objects(self, entries: list[dict]) -> int:
        """Replace all objects from parameter entries as one mutation batch."""
        return self._replace_objects([object_from_json(self, e) for e in entries])

    def _replace_objects(self, objects: list[SceneObject]) -> int:
        self._objects = objects
        self._by_name = {o.name: o for o in objects}
        if len(self._by_name) != len(objects):
            raise DuplicateName("replacement object names collide")
        self.revision += 1
        self._record({"op": "reset", "objects": [_object_to_json(o) for o in objects]})
        return self.revision

    # -- serialization ----------------------------------------------------------

    def serialize_parameters(self) -> str:
        """Canonical JSON array of per-object parameters, byte-deterministic."""
        return json.dumps([o.parameter_entry() for o in self._objects], indent=2)


def coerce_field_value(field_name: str, value: Any) -> Any:
    """Coerce JSON-ish input ("(x, y, z)", [x,y,z], "#RRGGBB", names) to the typed field value."""
    if field_name in ("position", "rotation", "scale"):
        if isinstance(value, str):
            value = Vector3.parse(value)
        elif isinstance(value, (list, tuple)) and len(value) == 3:
            value = Vector3(float(value[0]), float(value[1]), float(value[2]))
        if not isinstance(value, Vector3):
            raise InvalidValue(f"bad value for {field_name}: {value!r}")
        if field_name == "rotation":
            return normalize_rotation(value)
        if field_name == "scale":
            return _check_scale(value)
        return value
    if field_name == "color":
        if isinstance(value, str):
            return ColorRGB.from_hex(value)
        if isinstance(value, (list, tuple)) and len(value) == 3:
            return ColorRGB(int(value[0]), int(value[1]), int(value[2]))
        if isinstance(value, ColorRGB):
            return value
        raise InvalidValue(f"bad color value: {value!r}")
    if field_name == "material":
        if isinstance(value, Material):
            return value
        if isinstance(value, str):
            return Material.parse(value)
        raise InvalidValue(f"bad material value: {value!r}")
    raise InvalidValue(f"not a mutable field: {field_name!r}")


def _field_to_json(field_name: str, value: Any) -> str:
    if isinstance(value, Vector3):
        return value.text()
    if isinstance(value, ColorRGB):
        return value.hex()
    if isinstance(value, Material):
        return value.value
    raise InvalidValue(f"unserializable {field_name} value: {value!r}")


def _object_to_json(obj: SceneObject) -> dict:
    entry = obj.parameter_entry()
    if obj.asset_ref is not None:
        entry["asset_ref"] = obj.asset_ref
    return entry


def object_from_json(scene: SceneGraph, entry: dict) -> SceneObject:
    return SceneObject(
        obj_id=scene.next_object_id(),
        name=entry["name"],
        position=Vector3.parse(entry["position"]),
        rotation=Vector3.parse(entry["rotation"]),
        scale=Vector3.parse(entry["scale"]),
        color=ColorRGB.from_hex(entry["color"]),
        material=Material.parse(entry["material"]),
        asset_ref=entry.get("asset_ref"),
    )


def scene_from_parameters(scene_id: str, text: str, bounds: Bounds | None = None) -> SceneGraph:
    """Rebuild a scene from its canonical parameter JSON (fresh object ids)."""
    try:
        entries = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidValue(f"bad scene parameter JSON: {exc}") from exc
    if not isinstance(entries, list):
        raise InvalidValue("scene parameter JSON must be an array")
    scene = SceneGraph(scene_id, bounds)
    for entry in entries:
        scene.add_object(object_from_json(scene, entry))
    scene.revision = 0
    return scene


# --- top-view rasterizer -------------------------------------------------------

def render_top_view(scene: SceneGraph, resolution: int = 256) -> tuple[bytes, str]:
    """Orthographic ground-plane render as an uncompressed P6 pixmap.

    Each object is its footprint rectangle rotated by its yaw (rotation.y),
    filled with its color over a white background; room bounds map to the
    full canvas. Returns (ppm bytes, padded standard base64 text).
    """
    if not isinstance(resolution, int) or not 64 <= resolution <= 2048:
        raise InvalidResolution(f"resolution must be in [64, 2048], got {resolution!r}")
    w = h = resolution
    b = scene.bounds
    img = np.full((h, w, 3), 255, dtype=np.uint8)
    # pixel centers in world coordinates; +z points to the top of the image
    world_x = b.min_x + (np.arange(w) + 0.5) * (b.max_x - b.min_x) / w
    world_z = b.max_z - (np.arange(h) + 0.5) * (b.max_z - b.min_z) / h
    grid_x, grid_z = np.meshgrid(world_x, world_z)
    for obj in scene.objects:
        dx = grid_x - obj.position.x
        dz = grid_z - obj.position.z
        yaw = math.radians(obj.rotation.y)
        c, s = math.cos(yaw), math.sin(yaw)
        # inverse of a +yaw rotation about the up axis (x -> (c,0,-s), z -> (s,0,c))
        local_x = c * dx - s * dz
        local_z = s * dx + c * dz
        half_x, half_z = obj.footprint[0] / 2.0, obj.footprint[1] / 2.0
        inside = (np.abs(local_x) <= half_x) & (np.abs(local_z) <= half_z)
        img[inside] = (obj.color.r, obj.color.g, obj.color.b)
    ppm = b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()
    return ppm, base64.b64encode(ppm).decode("ascii")


# --- persistence -----------------------------------------------------------------

def save_scene(scene: SceneGraph, scenes_dir: Path) -> Path:
    """Write the revision head: canonical parameters plus a metadata sidecar."""
    scenes_dir.mkdir(parents=True, exist_ok=True)
    path = scenes_dir / f"{scene.scene_id}.json"
    path.write_text(scene.serialize_parameters())
    meta = {
        "revision": scene.revision,
        "bounds": scene.bounds.as_list(),
        "id_counter": scene._id_counter,
        "asset_refs": {o.name: o.asset_ref for o in scene.objects if o.asset_ref},
    }
    (scenes_dir / f"{scene.scene_id}.meta.json").write_text(json.dumps(meta, indent=2))
    return path


def load_scene(scene_id: str, scenes_dir: Path) -> SceneGraph:
    path = scenes_dir / f"{scene_id}.json"
    text = path.read_text()
    meta_path = scenes_dir / f"{scene_id}.meta.json"
    bounds, revision, id_counter, asset_refs = None, 0, None, {}
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        bounds = Bounds.from_list(meta["bounds"])
        revision = int(meta["revision"])
        id_counter = int(meta.get("id_counter", 0))
        asset_refs = meta.get("asset_refs", {})
    scene = scene_from_parameters(scene_id, text, bounds)
    scene.revision = revision
    if id_counter is not None:
        scene._id_counter = max(scene._id_counter, id_counter)
    for obj in scene.objects:
        if obj.name in asset_refs:
            obj.asset_ref = asset_refs[obj.name]
    return scene


__all__ = [
    "Bounds",
    "ColorRGB",
    "DEFAULT_ROOM_SIZE",
    "Material",
    "MATERIAL_NAMES",
    "MUTABLE_FIELDS",
    "ObjectFragment",
    "PLACEHOLDER_GRAY",
    "SceneGraph",
    "SceneObject",
    "SceneSnapshot",
    "Vector3",
    "WHITE",
    "coerce_field_value",
    "load_scene",
    "normalize_rotation",
    "object_from_json",
    "render_top_view",
    "save_scene",
    "scene_from_parameters",
]
