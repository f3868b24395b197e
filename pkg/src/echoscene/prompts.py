"""Prompt templates for every provider stage.

These strings are the engine's contract with the language model: the system
texts fix the output schemas (label JSON, suggestions JSON, steps JSON) and
the user texts carry the per-request slots. Image data always travels in the
bundle's image payload; the user text marks the slot with "attached".
"""

from __future__ import annotations

from typing import Optional, Sequence

from .errors import MissingSlot
from .providers import PromptBundle, Stage

LABELING_SYSTEM = (
    "Assume you're assisting users in automating picture labeling, You will receive a base64 "
    "code of a image. Based on all this data, generate the information of data as JSON format.\n"
    "\n"
    "The format should like:\n"
    "\n"
    "{\n"
    '    "name":"object_name",\n'
    '    "description":"object_description",\n'
    '    "category":"object_category"\n'
    "}.\n"
    "\n"
    "Here, I will offer you the object_name, you should use it to generate the JSON. Description "
    "should only include the function, color, material, aesthetics and psychology of this object "
    "in the image, please use at most three simple sentences to finish the description, try to "
    "keep description very concise. Category is the category in reality of the object in the "
    'image. Categories such as "3D model", "3D shape" and so on are not be allowed. Do not '
    "generate extra string or information when you generate JSON."
)

SCENE_UNDERSTANDING_SYSTEM = (
    "I will give you a list of objects in json format, includes the names, coordinate points, "
    "rotation vectors, sizes of the objects, and hexadecimal color codes of objects in the 3D "
    "scene, also I will provide you the top view picture of the 3D scene, please understand "
    "this scene, please understand this scene."
)

SUGGESTION_SYSTEM = (
    "As a VR scene designer, you are presented with a detailed information of a 3D space scene. "
    "Your task is to interpret abstract user instructions for modifying this VR scene. Based on "
    "the scene's current layout, objects' attributes, and user commands, propose several "
    "creative and feasible suggestions for adjustments. These suggestions may involve "
    "repositioning furniture, altering object colors, adjusting sizes, or introducing new "
    "elements to enhance the space's functionality and aesthetic appeal. Ensure your proposals "
    "are clear, specific, and aligned with the user's desires, providing a blend of practicality "
    "and innovative design. Please provide modification suggestions and solutions with JSON "
    "format. For example, if you provide some suggestions, the result is:\n"
    "\n"
    "{\n"
    '    "suggestions":[\n'
    "        {\n"
    '            "suggestion":"add something and move something, change color"\n'
    "        },\n"
    "        {\n"
    '            "suggestion":"add something and change color, also, change style"\n'
    "        },\n"
    "        {\n"
    '            "suggestion":"change color, destroy something"\n'
    "        },\n"
    "        ....\n"
    "        {\n"
    '            "suggestion":"move something, rotate something"\n'
    "        }]\n"
    "}\n"
    "\n"
    "Each suggestions item can only include the suggestion, DO NOT include any other characters. "
    "Avoid extraneous text or characters outside the specified JSON format. The return format "
    "only includes JSON content, start with the first { of json."
)

ACTIONS_SYSTEM = (
    "Translate design suggestions into specific VR 3D space modifications based on JSON scene "
    "parameters. Output must strictly adhere to the JSON format below, detailing implementation "
    "steps for Add, Move, Rotate, Scale, Color, Style, and Destroy actions. You must remember "
    "DO NOT include other redundant text in the generated content, the return format only "
    'includes JSON content, start with the first "{" of JSON:\n'
    "\n"
    "{\n"
    '"steps": [{\n'
    '    "action": "Specify_Action_Name",\n'
    '    "action_command": "Action_Name {Object_Name} to [Modification_Value]",\n'
    '    "selected_obj": "Object_Name",\n'
    '    "key": "Modification_Value"\n'
    "    },\n"
    "    ...\n"
    "    {\n"
    '    "action": "Specify_Action_Name",\n'
    '    "action_command": "Action_Name {Object_Name} to [Modification_Value]",\n'
    '    "selected_obj": "Object_Name",\n'
    '    "key": "Modification_Value"\n'
    "    }]\n"
    "}\n"
    "\n"
    "Notes: For Add Command: Set 'action_name' to \"Add\", use the format \"Add {Object} to "
    '[(Position)]", and provide "key" with Vector3 position in (0,0,0) format as '
    '"Modification_Value". For Move Command: Use "Move {Object_Name} to [(New_Position)]" '
    'format. For Rotate Command: Use "Rotate {Object} [(Angle)]" format, specifying Vector3 '
    'angle in (0,0,0) format in "key". Make sure the back of objects facing the nearest wall. '
    'For Scale Command: Use "Scale {TV} [1.2] times", should specify scaling extent as an '
    'integer in "key". For Color Command: Use "Color {Table} to red[(255, 0, 0)]", color '
    'require RGB Vector3 in (0,0,0) format for Modification_Value. For Style Command, Use '
    '"Change {Table} to [Wood]", "key" is the material type as a string, including Basket, '
    "Black_Plastic, Brick, Bronze_Metal, Copper_metal, Dark_Oak, Flow_Water, Flower_Pattern, "
    "Glass, Glass_Dark, Golden_metal_material, Grass, Leaf_Pattern, Leather, Marble, "
    'Rustic_Wood, Shiny_Metal. For Destroy Command: "Destroy {Cup}", need "selected_obj", '
    "action command and key. If the object you want to manipulate does not exist in the scene, "
    "you will need to \"Add\" this object before you manipulate it. Do not forget {} and () "
    "Avoid extraneous text or characters outside the specified JSON format, the return format "
    'only includes json content, start with the first "{" of JSON'
)

CATEGORY_SYSTEM = (
    "I will offer you a name of object, a list of categories, you should provide me with the "
    "perfect category that best fit the object and the description about the object, "
    "description should include the function, material, aesthetics and psychology of this "
    "object, please use at most three simple sentences to finish the description, try to keep "
    "description very concise.you give me categories you chosen and description as this JSON "
    "format:\n"
    "\n"
    "{\n"
    '"Category1":"Category1",\n'
    '"Description":"description"\n'
    "}"
)

BANNED_CATEGORY_RETRY_SUFFIX = (
    '\n\nYour previous category was not allowed. Categories such as "3D model", "3D shape" and '
    "so on are not be allowed; answer again with a real-world category."
)

CATEGORY_RETRY_SUFFIX = (
    "\n\nYour previous category was not in the list. You must pick one category exactly as it "
    "appears in the list above."
)


def labeling_bundle(object_name: str, thumbnail_b64: str, extra_user_text: str = "") -> PromptBundle:
    if not object_name:
        raise MissingSlot("labeling needs an object name")
    if not thumbnail_b64:
        raise MissingSlot("labeling needs a thumbnail")
    user = f"object_name: {object_name}\n\nimage: attached.{extra_user_text}"
    return PromptBundle(
        stage=Stage.LABELING,
        system_text=LABELING_SYSTEM,
        user_text=user,
        image_payload=thumbnail_b64,
    )


def category_bundle(
    object_name: str, categories: Sequence[str], extra_user_text: str = ""
) -> PromptBundle:
    if not object_name:
        raise MissingSlot("category selection needs an object name")
    if not categories:
        raise MissingSlot("category selection needs the category list")
    user = (
        f"The object is : {object_name}.\n\n"
        f"Categories include: {', '.join(categories)}.{extra_user_text}"
    )
    return PromptBundle(
        stage=Stage.CATEGORY_SELECT,
        system_text=CATEGORY_SYSTEM,
        user_text=user,
    )


def object_list_block(parameters_json: str) -> str:
    return f"Object list: {parameters_json}"


def top_view_block() -> str:
    return "Top View Image: attached."


def user_instruction_block(instruction: str) -> str:
    return f"User Instruction : {instruction}"


def suggestion_block(suggestion: str) -> str:
    return f"Suggestion : {suggestion}"


def count_hint_block(count: int) -> str:
    return f"Please propose about {count} suggestions."


__all__ = [
    "ACTIONS_SYSTEM",
    "BANNED_CATEGORY_RETRY_SUFFIX",
    "CATEGORY_RETRY_SUFFIX",
    "CATEGORY_SYSTEM",
    "LABELING_SYSTEM",
    "SCENE_UNDERSTANDING_SYSTEM",
    "SUGGESTION_SYSTEM",
    "category_bundle",
    "count_hint_block",
    "labeling_bundle",
    "object_list_block",
    "suggestion_block",
    "top_view_block",
    "user_instruction_block",
]
