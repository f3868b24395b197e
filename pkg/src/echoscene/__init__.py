"""Progressive AI-assisted scene modification over a typed scene graph.

Natural-language instructions become interactive, individually reversible
modification suggestions: a pluggable vision-language provider proposes
changes, a seven-verb action language executes them, and every suggestion
carries an inverse patch for selective undo.
"""

from .actions import (
    Action,
    ActionStepList,
    ActionVerb,
    InversePatch,
    execute,
    format_command,
    invert,
    parse_command,
    parse_steps_json,
)
from .scene import (
    Bounds,
    ColorRGB,
    Material,
    SceneGraph,
    SceneObject,
    SceneSnapshot,
    Vector3,
    render_top_view,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionStepList",
    "ActionVerb",
    "Bounds",
    "ColorRGB",
    "InversePatch",
    "Material",
    "SceneGraph",
    "SceneObject",
    "SceneSnapshot",
    "Vector3",
    "execute",
    "format_command",
    "invert",
    "parse_command",
    "parse_steps_json",
    "render_top_view",
]
