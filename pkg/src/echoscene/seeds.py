"""Seed scenes for scripted sessions, demos, and the ablation grid."""

from __future__ import annotations

from .scene import Bounds, ColorRGB, Material, SceneGraph, SceneObject, Vector3


def empty_scene(scene_id: str = "scene", bounds: Bounds | None = None) -> SceneGraph:
    return SceneGraph(scene_id, bounds)


def _obj(scene, name, position, scale, color, rotation=(0.0, 0.0, 0.0), material=Material.UNSET):
    return SceneObject(
        obj_id=scene.next_object_id(),
        name=name,
        position=Vector3(*position),
        rotation=Vector3(*rotation),
        scale=Vector3(*scale),
        color=color,
        material=material,
    )


def living_room_scene(scene_id: str = "living-room") -> SceneGraph:
    """An 8 m x 8 m furnished living room: four walls, seating, table, TV corner."""
    scene = SceneGraph(scene_id)
    wall_color = ColorRGB(221, 221, 221)
    pieces = [
        _obj(scene, "Wall_N", (0.0, 1.5, -3.98), (8.0, 3.0, 0.04), wall_color),
        _obj(scene, "Wall_S", (0.0, 1.5, 3.98), (8.0, 3.0, 0.04), wall_color),
        _obj(scene, "Wall_E", (3.98, 1.5, 0.0), (0.04, 3.0, 8.0), wall_color),
        _obj(scene, "Wall_W", (-3.98, 1.5, 0.0), (0.04, 3.0, 8.0), wall_color),
        _obj(
            scene, "Sofa", (0.0, 0.0, 2.2), (2.0, 0.8, 0.9), ColorRGB(154, 154, 154),
            rotation=(0.0, 180.0, 0.0), material=Material.LEATHER,
        ),
        _obj(
            scene, "Coffee_Table", (0.0, 0.0, 0.8), (1.1, 0.4, 0.6), ColorRGB(139, 90, 43),
            material=Material.DARK_OAK,
        ),
        _obj(scene, "TV_Stand", (0.0, 0.0, -3.4), (1.6, 0.5, 0.4), ColorRGB(68, 68, 68)),
        _obj(scene, "Bookshelf", (-3.6, 0.0, -1.0), (0.9, 1.9, 0.35), ColorRGB(160, 114, 45)),
        _obj(scene, "Floor_Lamp", (3.3, 0.0, 2.8), (0.4, 1.6, 0.4), ColorRGB(192, 192, 192)),
        _obj(scene, "Rug", (0.0, 0.0, 1.2), (2.4, 0.02, 1.7), ColorRGB(238, 232, 220)),
    ]
    for piece in pieces:
        scene.add_object(piece)
    scene.revision = 0
    return scene


SEEDS = {"empty": empty_scene, "living-room": living_room_scene}

__all__ = ["SEEDS", "empty_scene", "living_room_scene"]
