"""Default canned responses for the mock provider.

Rules are matched first-hit in order: the stage must equal the request's
stage and every keyword must occur (case-insensitively) in the user text.
Category-selection keywords embed the "object is :" label so a category name
appearing in the request's category list can never trigger them.

The table covers the nine packaged ablation instructions at all three
abstraction levels, plus the low-level suggestion phrasings they fan out
into, so offline runs produce meaningful scenes end to end.
"""

from __future__ import annotations

import json

from .providers import MockRule, Stage


def _suggestions(*texts: str) -> str:
    return json.dumps({"suggestions": [{"suggestion": t} for t in texts]})


def _steps(*commands: str) -> str:
    steps = []
    for command in commands:
        verb, _, rest = command.partition(" ")
        name = command.split("{", 1)[1].split("}", 1)[0]
        key = ""
        if "[" in command:
            key = command.split("[", 1)[1].rsplit("]", 1)[0]
        steps.append(
            {
                "action": {"Change": "Style", "Delete": "Destroy"}.get(verb, verb),
                "action_command": command,
                "selected_obj": name,
                "key": key,
            }
        )
    return json.dumps({"steps": steps})


def _category(category: str, description: str) -> str:
    return json.dumps({"Category1": category, "Description": description})


DEFAULT_RULES = [
    # ---- suggestion generation ------------------------------------------------
    MockRule(
        Stage.SUGGESTION_GEN,
        ("comfortable sofa",),
        _suggestions("add a comfortable sofa in a neutral color"),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("home theater",),
        _suggestions(
            "add a large screen on Wall_N for a cinema effect and install surround sound speakers around the room",
            "change the wall color to dark gray or black for an immersive cinema feel",
            "add comfortable recliner chairs in front of the screen",
        ),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("cinema",),
        _suggestions(
            "add a large screen on Wall_N for a cinema effect and install surround sound speakers around the room",
            "change the wall color to dark gray or black for an immersive cinema feel",
        ),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("large screen tv",),
        _suggestions(
            "add a large screen TV on the wall opposite the couch",
            "add comfortable recliner chairs in front of the screen",
        ),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("navy blue",),
        _suggestions(
            "change the sofa color to navy blue",
            "add a deep blue ocean rug under the coffee table",
        ),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("nautical",),
        _suggestions(
            "change the sofa color to navy blue",
            "add a nautical ship model on the coffee table",
            "add a deep blue ocean rug under the coffee table",
        ),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("ocean",),
        _suggestions(
            "evoke the ocean by coloring the walls sea blue",
            "add a deep blue ocean rug under the coffee table",
            "change the sofa color to navy blue",
        ),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("small plant",),
        _suggestions("place a small plant on the coffee table"),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("harmonizes",),
        _suggestions(
            "add tall green plants to the corners of the room",
            "change the coffee table material to rustic wood for a natural feel",
        ),
    ),
    MockRule(
        Stage.SUGGESTION_GEN,
        ("nature",),
        _suggestions(
            "add tall green plants to the corners of the room",
            "place a small plant on the coffee table",
        ),
    ),
    # ---- action generation ------------------------------------------------------
    MockRule(
        Stage.ACTION_GEN,
        ("large screen on wall_n",),
        _steps(
            "Add {Screen} to [(0.00, 1.50, -3.90)]",
            "Add {Speaker} to [(3.20, 0.00, -3.60)]",
            "Add {Speaker} to [(-3.20, 0.00, -3.60)]",
        ),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("wall color to dark gray",),
        _steps("Color {Wall_N} to dark gray[(40, 40, 40)]"),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("recliner chairs",),
        _steps(
            "Add {Recliner_Chair} to [(1.00, 0.00, 1.50)]",
            "Rotate {Recliner_Chair} [(0.00, 180.00, 0.00)]",
        ),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("large screen tv",),
        _steps(
            "Add {TV} to [(0.00, 1.20, -3.80)]",
            "Rotate {TV} [(0.00, 180.00, 0.00)]",
        ),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("home theater",),
        _steps(
            "Add {Screen} to [(0.00, 1.50, -3.90)]",
            "Add {Recliner_Chair} to [(1.00, 0.00, 1.50)]",
        ),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("cinema",),
        _steps(
            "Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]",
            "Move {Movie_Poster} to [(-1.00, 1.00, -3.95)]",
        ),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("sofa color to navy blue",),
        _steps("Color {Sofa} to navy blue[(0, 0, 128)]"),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("nautical",),
        _steps(
            "Color {Sofa} to navy blue[(0, 0, 128)]",
            "Add {Ship_Model} to [(0.00, 0.45, 0.00)]",
        ),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("ship model",),
        _steps("Add {Ship_Model} to [(0.00, 0.45, 0.00)]"),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("ocean rug",),
        _steps("Add {Ocean_Rug} to [(0.00, 0.01, 0.00)]"),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("ocean",),
        _steps(
            "Color {Wall_N} to sea blue[(70, 130, 180)]",
            "Color {Wall_S} to sea blue[(70, 130, 180)]",
        ),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("comfortable sofa in a neutral color",),
        _steps("Add {Sofa} to [(0.00, 0.00, 0.50)]"),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("small plant",),
        _steps("Add {Small_Plant} to [(0.40, 0.45, 0.10)]"),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("rustic wood",),
        _steps("Change {Coffee_Table} to [Rustic_Wood]"),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("plants",),
        _steps(
            "Add {Plant} to [(3.30, 0.00, 3.30)]",
            "Add {Plant} to [(-3.30, 0.00, 3.30)]",
        ),
    ),
    MockRule(
        Stage.ACTION_GEN,
        ("nature",),
        _steps(
            "Add {Plant} to [(3.30, 0.00, 3.30)]",
            "Change {Coffee_Table} to [Rustic_Wood]",
        ),
    ),
    # ---- category selection -------------------------------------------------------
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : sofa",),
        _category("Sofa", "a comfortable sofa in a neutral color, soft light gray fabric"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : screen",),
        _category("TV", "a wide projector screen in matte white for a cinema-scale picture"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : tv",),
        _category("TV", "a 65 inch flat screen tv with a thin black bezel for a home cinema wall"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : speaker",),
        _category("Decoration", "a small black cube speaker with a fabric front"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : movie_poster",),
        _category("Decoration", "a framed vintage movie poster with bold typography for a cinema wall"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : recliner_chair",),
        _category("Chair", "a plush beige recliner chair with thick armrests for movie nights"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : ship_model",),
        _category("Decoration", "a wooden model sailing ship with canvas sails, a nautical accent"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : ocean_rug",),
        _category("Rug", "a deep blue rug with wave-like patterns, calm ocean mood"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : small_plant",),
        _category("Plant", "a small potted succulent for tabletops, low maintenance greenery"),
    ),
    MockRule(
        Stage.CATEGORY_SELECT,
        ("object is : plant",),
        _category("Plant", "a leafy monstera in a white ceramic pot with broad green leaves"),
    ),
]

__all__ = ["DEFAULT_RULES"]
