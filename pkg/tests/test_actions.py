import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echoscene.actions import (
    Action,
    ActionVerb,
    DeleteObject,
    InversePatch,
    MaterialAliasWarning,
    RestoreField,
    RestoreObject,
    execute,
    extract_json_object,
    format_command,
    invert,
    parse_command,
    parse_steps_json,
    patch_from_json,
    patch_to_json,
)
from echoscene.errors import (
    CommandSyntaxError,
    InvalidValue,
    MalformedVector,
    NoJsonFound,
    NonPositiveScale,
    SchemaError,
    TargetMissing,
    UnknownMaterial,
    UnknownVerb,
)
from echoscene.scene import ColorRGB, Material, SceneGraph, SceneObject, Vector3

from test_scene import make_object


@pytest.fixture
def scene():
    s = SceneGraph("dsl")
    for name in ("Table", "Cup", "TV", "Movie_Poster"):
        s.add_object(make_object(s, name))
    return s


# --- parse_command ------------------------------------------------------------

def test_parse_move():
    a = parse_command("Move {Movie_Poster} to [(-1.00, 1.00, -3.95)]")
    assert a.verb is ActionVerb.MOVE
    assert a.selected_obj == "Movie_Poster"
    assert a.key == Vector3(-1.0, 1.0, -3.95)


def test_parse_add():
    a = parse_command("Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]")
    assert (a.verb, a.selected_obj) == (ActionVerb.ADD, "Movie_Poster")
    assert a.key == Vector3(-3.8, 1.0, 0.05)


def test_parse_scale_decimal_multiplier():
    a = parse_command("Scale {TV} [1.2] times")
    assert a.verb is ActionVerb.SCALE
    assert a.key == 1.2


def test_parse_rotate_without_to():
    a = parse_command("Rotate {Lamp} [(0.00, 90.00, 0.00)]")
    assert a.verb is ActionVerb.ROTATE
    assert a.key == Vector3(0.0, 90.0, 0.0)


def test_parse_color_word_ignored_vector_wins():
    a = parse_command("Color {Table} to red[(255, 0, 0)]")
    assert a.verb is ActionVerb.COLOR
    assert a.key == ColorRGB(255, 0, 0)
    b = parse_command("Color {Table} to dark gray[(64, 64, 64)]")
    assert b.key == ColorRGB(64, 64, 64)


def test_parse_style_alias_wood_warns():
    with pytest.warns(MaterialAliasWarning):
        a = parse_command("Change {Table} to [Wood]")
    assert a.verb is ActionVerb.STYLE
    assert a.key is Material.RUSTIC_WOOD


def test_parse_style_canonical_material():
    a = parse_command("Change {Table} to [Marble]")
    assert a.key is Material.MARBLE


def test_parse_destroy():
    a = parse_command("Destroy {Cup}")
    assert (a.verb, a.selected_obj, a.key) == (ActionVerb.DESTROY, "Cup", None)


def test_parse_delete_maps_to_destroy():
    assert parse_command("Delete {Cup}").verb is ActionVerb.DESTROY


def test_parse_tolerates_whitespace_in_parens():
    a = parse_command("Move {TV} to [( 1.0 ,2.0,  3.0 )]")
    assert a.key == Vector3(1.0, 2.0, 3.0)


@pytest.mark.parametrize(
    "text,err",
    [
        ("Frobnicate {X}", UnknownVerb),
        ("Move Table to [(1, 2, 3)]", CommandSyntaxError),
        ("Move {Table} [(1, 2, 3)]", CommandSyntaxError),
        ("Move {Table} to [(1, 2)]", MalformedVector),
        ("Move {Table} to [(1, 2, 3, 4)]", MalformedVector),
        ("Color {Table} to red[(255, 0, 300)]", MalformedVector),
        ("Change {Table} to [Plywood]", UnknownMaterial),
        ("Scale {TV} [0] times", NonPositiveScale),
        ("Scale {TV} [-2.5] times", NonPositiveScale),
        ("Scale {TV} [1.2]", CommandSyntaxError),
        ("Destroy {Cup} now", CommandSyntaxError),
        ("Move {} to [(1, 2, 3)]", CommandSyntaxError),
        ("", CommandSyntaxError),
    ],
)
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse_command(text)


def test_syntax_error_carries_byte_offset():
    with pytest.raises(CommandSyntaxError) as excinfo:
        parse_command("Move {Table} [(1, 2, 3)]")
    assert excinfo.value.offset == 13  # where 'to' was expected


def test_unknown_verb_offset_is_zero():
    with pytest.raises(UnknownVerb) as excinfo:
        parse_command("Teleport {X}")
    assert excinfo.value.offset == 0


def test_action_key_type_checked():
    with pytest.raises(InvalidValue):
        Action(verb=ActionVerb.MOVE, selected_obj="X", key=1.2)
    with pytest.raises(InvalidValue):
        Action(verb=ActionVerb.SCALE, selected_obj="X", key=-1.0)


# --- format_command -------------------------------------------------------------

def test_format_destroy():
    assert format_command(Action(ActionVerb.DESTROY, "Cup")) == "Destroy {Cup}"


def test_format_color_uses_rgb_word():
    a = Action(ActionVerb.COLOR, "Table", ColorRGB(255, 0, 0))
    assert format_command(a) == "Color {Table} to rgb[(255, 0, 0)]"


def test_appendix_commands_round_trip():
    commands = [
        "Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]",
        "Move {Movie_Poster} to [(-1.00, 1.00, -3.95)]",
        "Scale {TV} [1.2] times",
        "Color {Table} to red[(255, 0, 0)]",
        "Change {Table} to [Wood]",
        "Destroy {Cup}",
    ]
    for text in commands:
        with pytest.warns((MaterialAliasWarning,)) if "Wood" in text else _nullcontext():
            action = parse_command(text)
        assert parse_command(format_command(action)) == action


class _nullcontext:
    def __enter__(self):
        return self

    def __exit__(self, *args):
        return False


names = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,11}", fullmatch=True)
coords_2dp = st.integers(min_value=-999, max_value=999).map(lambda n: n / 100)
vectors = st.builds(Vector3, coords_2dp, coords_2dp, coords_2dp)
colors = st.builds(ColorRGB, *(st.integers(0, 255),) * 3)
materials = st.sampled_from([m for m in Material if m is not Material.UNSET])
multipliers = st.floats(min_value=0.01, max_value=50.0, allow_nan=False, allow_infinity=False)


@st.composite
def valid_actions(draw):
    verb = draw(st.sampled_from(list(ActionVerb)))
    name = draw(names)
    if verb in (ActionVerb.ADD, ActionVerb.MOVE, ActionVerb.ROTATE):
        key = draw(vectors)
        if verb is ActionVerb.ROTATE:
            key = Vector3(abs(key.x) % 360, abs(key.y) % 360, abs(key.z) % 360)
    elif verb is ActionVerb.SCALE:
        key = draw(multipliers)
    elif verb is ActionVerb.COLOR:
        key = draw(colors)
    elif verb is ActionVerb.STYLE:
        key = draw(materials)
    else:
        key = None
    return Action(verb=verb, selected_obj=name, key=key)


@given(valid_actions())
@settings(max_examples=200)
def test_random_actions_round_trip(action):
    assert parse_command(format_command(action)) == action


@given(valid_actions())
@settings(max_examples=100)
def test_parse_key_type_always_matches_verb(action):
    parsed = parse_command(format_command(action))
    expected = {
        ActionVerb.ADD: Vector3,
        ActionVerb.MOVE: Vector3,
        ActionVerb.ROTATE: Vector3,
        ActionVerb.SCALE: float,
        ActionVerb.COLOR: ColorRGB,
        ActionVerb.STYLE: Material,
        ActionVerb.DESTROY: type(None),
    }[parsed.verb]
    assert isinstance(parsed.key, expected)


# --- steps JSON -------------------------------------------------------------------

APPENDIX_STEPS = json.dumps(
    {
        "steps": [
            {
                "action": "Add",
                "action_command": "Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]",
                "selected_obj": "Movie_Poster",
                "key": "(-3.80, 1.00, 0.05)",
            },
            {
                "action": "Move",
                "action_command": "Move {Movie_Poster} to [(-1.00, 1.00, -3.95)]",
                "selected_obj": "Movie_Poster",
                "key": "(-1.00, 1.00, -3.95)",
            },
        ]
    }
)


def test_parse_appendix_steps():
    result = parse_steps_json(APPENDIX_STEPS)
    assert len(result) == 2
    assert result.steps[0].verb is ActionVerb.ADD
    assert result.steps[0].key == Vector3(-3.8, 1.0, 0.05)
    assert result.steps[1].verb is ActionVerb.MOVE
    assert not result.diagnostics


def test_parse_steps_from_fenced_prose():
    text = 'Here is your plan:\n```json\n{"steps":[]}\n```\nEnjoy!'
    result = parse_steps_json(text)
    assert len(result) == 0
    assert not result.diagnostics


def test_steps_key_disagreement_command_wins():
    payload = json.dumps(
        {
            "steps": [
                {
                    "action": "Move",
                    "action_command": "Move {TV} to [(1, 2, 3)]",
                    "selected_obj": "TV",
                    "key": "(0, 0, 0)",
                }
            ]
        }
    )
    result = parse_steps_json(payload)
    assert result.steps[0].key == Vector3(1.0, 2.0, 3.0)
    assert any(d.kind == "FIELD_MISMATCH" for d in result.diagnostics)


def test_steps_invalid_step_dropped_not_fatal():
    payload = json.dumps(
        {
            "steps": [
                {"action": "Move", "action_command": "Move {TV} to [banana]"},
                {"action": "Destroy", "action_command": "Destroy {Cup}", "selected_obj": "Cup", "key": ""},
            ]
        }
    )
    result = parse_steps_json(payload)
    assert len(result) == 1
    assert result.steps[0].verb is ActionVerb.DESTROY
    assert result.diagnostics and result.diagnostics[0].step_index == 0


def test_steps_order_preserved():
    payload = json.dumps(
        {
            "steps": [
                {"action_command": "Destroy {A}"},
                {"action_command": "Destroy {B}"},
                {"action_command": "oops"},
                {"action_command": "Destroy {C}"},
            ]
        }
    )
    result = parse_steps_json(payload)
    assert [a.selected_obj for a in result.steps] == ["A", "B", "C"]


@pytest.mark.parametrize(
    "text,err",
    [
        ("no json anywhere", NoJsonFound),
        ("{broken", NoJsonFound),
        ("[1, 2, 3]", NoJsonFound),
        ('{"nosteps": []}', SchemaError),
        ('{"steps": "nope"}', SchemaError),
    ],
)
def test_steps_errors(text, err):
    with pytest.raises(err):
        parse_steps_json(text)


def test_extract_json_skips_prose_braces_in_strings():
    text = 'Note {not json}. {"steps": [], "note": "has a } inside"} trailing'
    assert extract_json_object(text)["steps"] == []


# --- execute ---------------------------------------------------------------------

def test_execute_move_and_invert(scene):
    before = scene.serialize_parameters()
    action = parse_command("Move {Table} to [(1.50, 0.00, -2.00)]")
    _, patch = execute(action, scene)
    assert scene.get("Table").position == Vector3(1.5, 0.0, -2.0)
    assert patch.records == [RestoreField("Table", "position", Vector3(0.0, 0.0, 0.0))]
    invert(patch, scene)
    assert scene.serialize_parameters() == before


def test_execute_scale_identity_still_patches(scene):
    action = parse_command("Scale {TV} [1.0] times")
    _, patch = execute(action, scene)
    assert scene.get("TV").scale == Vector3(1.0, 1.0, 1.0)
    assert len(patch) == 1


def test_execute_scale_multiplies_all_components(scene):
    scene.mutate_object("TV", "scale", Vector3(2.0, 1.0, 0.5))
    _, patch = execute(parse_command("Scale {TV} [1.2] times"), scene)
    s = scene.get("TV").scale
    assert (s.x, s.y, s.z) == (2.4, 1.2, 0.6)
    invert(patch, scene)
    assert scene.get("TV").scale == Vector3(2.0, 1.0, 0.5)


def test_execute_destroy_then_invert_round_trips(scene):
    before = scene.serialize_parameters()
    _, patch = execute(parse_command("Destroy {Cup}"), scene)
    assert "Cup" not in scene
    invert(patch, scene)
    assert scene.serialize_parameters() == before


def test_execute_add_uses_key_position(scene):
    _, patch = execute(parse_command("Add {Poster} to [(0.00, 2.00, -3.95)]"), scene)
    assert scene.get("Poster").position == Vector3(0.0, 2.0, -3.95)
    assert patch.records == [DeleteObject("Poster")]


def test_execute_add_suffixes_collision(scene):
    diags = []
    execute(parse_command("Add {Table} to [(0.00, 0.00, 0.00)]"), scene, diagnostics=diags)
    assert "Table_2" in scene
    assert any(d.kind == "RENAMED" for d in diags)


def test_execute_missing_target_fails_by_default(scene):
    with pytest.raises(TargetMissing):
        execute(parse_command("Move {Ghost} to [(0.00, 0.00, 0.00)]"), scene)


def test_execute_missing_target_auto_add_policy(scene):
    diags = []
    _, patch = execute(
        parse_command("Color {Ghost} to red[(255, 0, 0)]"),
        scene,
        auto_add_missing=True,
        diagnostics=diags,
    )
    assert scene.get("Ghost").color == ColorRGB(255, 0, 0)
    assert any(d.kind == "AUTO_ADD" for d in diags)
    invert(patch, scene)
    assert "Ghost" not in scene


def test_invert_five_action_patch_round_trips(scene):
    before = scene.serialize_parameters()
    combined = InversePatch()
    for text in (
        "Move {Table} to [(1.00, 0.00, 1.00)]",
        "Color {Table} to blue[(0, 0, 255)]",
        "Scale {TV} [2.0] times",
        "Destroy {Cup}",
        "Add {Shelf} to [(-2.00, 0.00, 2.00)]",
    ):
        _, patch = execute(parse_command(text), scene)
        combined.extend(patch)
    invert(combined, scene)
    assert scene.serialize_parameters() == before


def test_invert_restores_this_patchs_prevalue_after_conflict(scene):
    # suggestion A moves Table, suggestion B moves it again; undoing A
    # restores A's recorded pre-value (field-level last-restore semantics)
    _, patch_a = execute(parse_command("Move {Table} to [(1.00, 0.00, 0.00)]"), scene)
    execute(parse_command("Move {Table} to [(2.00, 0.00, 0.00)]"), scene)
    invert(patch_a, scene)
    assert scene.get("Table").position == Vector3(0.0, 0.0, 0.0)


def test_invert_collision_restores_under_suffix(scene):
    _, patch = execute(parse_command("Destroy {Cup}"), scene)
    scene.add_object(make_object(scene, "Cup"))  # someone re-took the name
    diags = []
    invert(patch, scene, diagnostics=diags)
    assert any(d.kind == "RESTORE_COLLISION" for d in diags)
    assert "Cup_2" in scene


def test_invert_tolerates_missing_targets(scene):
    _, patch = execute(parse_command("Color {Cup} to red[(255, 0, 0)]"), scene)
    scene.remove_object("Cup")
    diags = []
    invert(patch, scene, diagnostics=diags)
    assert any(d.kind == "RESTORE_TARGET_MISSING" for d in diags)


def test_patch_json_round_trip(scene):
    combined = InversePatch()
    for text in (
        "Move {Table} to [(1.25, 0.00, 1.00)]",
        "Destroy {Cup}",
        "Add {Shelf} to [(-2.00, 0.00, 2.00)]",
        "Change {TV} to [Glass_Dark]",
    ):
        _, patch = execute(parse_command(text), scene)
        combined.extend(patch)
    data = json.loads(json.dumps(patch_to_json(combined)))
    rebuilt = patch_from_json(data)
    assert len(rebuilt) == len(combined)
    before = None
    invert(rebuilt, scene)
    restored = {o.name for o in scene.objects}
    assert "Cup" in restored and "Shelf" not in restored


# --- randomized undo exactness (small-scale; the acceptance suite runs 1000) ------

@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_random_sequences_undo_exactly(seed):
    import random as _random

    rng = _random.Random(seed)
    scene = SceneGraph("fuzz")
    for i in range(rng.randint(1, 6)):
        scene.add_object(make_object(scene, f"Obj_{i}", (rng.uniform(-3, 3), 0.0, rng.uniform(-3, 3))))
    before = scene.serialize_parameters()
    combined = InversePatch()
    for _ in range(rng.randint(1, 8)):
        combined.extend(_random_action_patch(rng, scene))
    invert(combined, scene)
    assert scene.serialize_parameters() == before


def _random_action_patch(rng, scene):
    from echoscene.actions import execute as _execute

    verbs = [ActionVerb.ADD, ActionVerb.MOVE, ActionVerb.ROTATE, ActionVerb.SCALE,
             ActionVerb.COLOR, ActionVerb.STYLE, ActionVerb.DESTROY]
    names = [o.name for o in scene.objects]
    verb = rng.choice(verbs if names else [ActionVerb.ADD])
    vec = Vector3(round(rng.uniform(-4, 4), 2), 0.0, round(rng.uniform(-4, 4), 2))
    if verb is ActionVerb.ADD:
        action = Action(ActionVerb.ADD, f"New_{rng.randint(0, 99)}", vec)
    elif verb is ActionVerb.MOVE:
        action = Action(verb, rng.choice(names), vec)
    elif verb is ActionVerb.ROTATE:
        action = Action(verb, rng.choice(names), Vector3(0.0, round(rng.uniform(0, 359), 2), 0.0))
    elif verb is ActionVerb.SCALE:
        action = Action(verb, rng.choice(names), round(rng.uniform(0.5, 2.0), 2))
    elif verb is ActionVerb.COLOR:
        action = Action(verb, rng.choice(names), ColorRGB(rng.randint(0, 255), 0, 0))
    elif verb is ActionVerb.STYLE:
        action = Action(verb, rng.choice(names), Material.MARBLE)
    else:
        action = Action(verb, rng.choice(names))
    _, patch = execute(action, scene)
    return patch
