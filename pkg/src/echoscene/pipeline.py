"""Multimodal prompt assembly and the two generation calls.

A PipelineConfig toggles the three input channels (vision, object
parameters, AI suggestions), matching the four named ablation conditions.
Prompt assembly guarantees the ablation soundness the transcript checks
rely on: no image payload without vision, no object-parameter block without
object parameters, and no suggestions stage at all under V+OP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .actions import ActionStepList, ActionVerb, Diagnostic, parse_steps_json
from .catalog import Catalog, Embedder, choose_category_and_description, search
from .errors import (
    CategoryNotInList,
    EmbedderMismatch,
    EmptyCatalog,
    EmptyText,
    InvalidValue,
    MissingSlot,
    NoJsonFound,
    ProviderError,
    SchemaError,
    UnknownCategory,
)
from .prompts import (
    ACTIONS_SYSTEM,
    SCENE_UNDERSTANDING_SYSTEM,
    SUGGESTION_SYSTEM,
    count_hint_block,
    object_list_block,
    suggestion_block,
    top_view_block,
    user_instruction_block,
)
from .providers import PromptBundle, Provider, Stage
from .scene import SceneGraph, render_top_view

#: the four studied input configurations
CONDITIONS = {
    "V+OP+S": (True, True, True),
    "V+S": (True, False, True),
    "V+OP": (True, True, False),
    "OP+S": (False, True, True),
}


@dataclass(frozen=True)
class PipelineConfig:
    """Which input channels feed the provider, plus provider knobs."""

    include_vision: bool = True
    include_object_params: bool = True
    include_suggestions_stage: bool = True
    suggestion_count_hint: int = 5
    provider_id: str = "mock"
    model_name: str = "gpt-4o"
    temperature: float = 0.0
    top_view_resolution: int = 256

    def __post_init__(self):
        if self.suggestion_count_hint < 1:
            raise InvalidValue("suggestion_count_hint must be >= 1")

    @classmethod
    def from_condition(cls, name: str, **kwargs) -> "PipelineConfig":
        try:
            vision, object_params, suggestions = CONDITIONS[name]
        except KeyError:
            raise InvalidValue(f"unknown condition {name!r}; expected one of {sorted(CONDITIONS)}") from None
        return cls(
            include_vision=vision,
            include_object_params=object_params,
            include_suggestions_stage=suggestions,
            **kwargs,
        )

    @property
    def condition_name(self) -> Optional[str]:
        flags = (self.include_vision, self.include_object_params, self.include_suggestions_stage)
        for name, condition in CONDITIONS.items():
            if condition == flags:
                return name
        return None

    def as_dict(self) -> dict:
        return {
            "include_vision": self.include_vision,
            "include_object_params": self.include_object_params,
            "include_suggestions_stage": self.include_suggestions_stage,
            "suggestion_count_hint": self.suggestion_count_hint,
            "provider_id": self.provider_id,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "top_view_resolution": self.top_view_resolution,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        allowed = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**allowed)


@dataclass(frozen=True)
class SuggestionText:
    """One AI proposal as plain text, before action generation."""

    suggestion_id: str
    text: str
    origin_instruction: str

    def __post_init__(self):
        if not self.text.strip():
            raise InvalidValue("suggestion text must be non-empty")


def build_prompt(
    stage: Stage,
    config: PipelineConfig,
    scene: SceneGraph,
    *,
    instruction: Optional[str] = None,
    suggestion: Optional[str] = None,
) -> PromptBundle:
    """Assemble one scene-dependent bundle with channel gating.

    The scene-understanding preamble rides along as the system-text prefix of
    both downstream stages (stateless providers keep no conversation memory).
    """
    blocks: list[str] = []
    if stage is Stage.SUGGESTION_GEN:
        if instruction is None:
            raise MissingSlot("suggestion generation needs the user instruction")
        system = f"{SCENE_UNDERSTANDING_SYSTEM}\n\n{SUGGESTION_SYSTEM}"
        blocks.append(user_instruction_block(instruction))
        blocks.append(count_hint_block(config.suggestion_count_hint))
    elif stage is Stage.ACTION_GEN:
        if suggestion is None:
            raise MissingSlot("action generation needs a suggestion or instruction")
        system = f"{SCENE_UNDERSTANDING_SYSTEM}\n\n{ACTIONS_SYSTEM}"
        blocks.append(suggestion_block(suggestion))
    elif stage is Stage.SCENE_UNDERSTANDING:
        system = SCENE_UNDERSTANDING_SYSTEM
    else:
        raise MissingSlot(f"stage {stage.value} is not scene-dependent; build its bundle directly")

    if config.include_object_params:
        blocks.append(object_list_block(scene.serialize_parameters()))
    image = None
    if config.include_vision:
        _, image = render_top_view(scene, config.top_view_resolution)
        blocks.append(top_view_block())
    return PromptBundle(stage=stage, system_text=system, user_text="\n\n".join(blocks), image_payload=image)


def generate_suggestions(
    config: PipelineConfig,
    scene: SceneGraph,
    instruction: str,
    provider: Provider,
) -> list[SuggestionText]:
    """Run the suggestions stage; returns proposals in provider order."""
    if not config.include_suggestions_stage:
        raise InvalidValue("suggestions stage is disabled in this configuration")
    bundle = build_prompt(Stage.SUGGESTION_GEN, config, scene, instruction=instruction)
    response = provider.complete(bundle)
    payload = _extract(response)
    if "suggestions" not in payload or not isinstance(payload["suggestions"], list):
        raise SchemaError('suggestions JSON is missing the "suggestions" array')
    texts: list[SuggestionText] = []
    for item in payload["suggestions"]:
        if isinstance(item, dict):
            text = item.get("suggestion")
        else:
            text = item  # tolerate bare-string items
        if isinstance(text, str) and text.strip():
            texts.append(
                SuggestionText(
                    suggestion_id=f"s{len(texts) + 1}",
                    text=text.strip(),
                    origin_instruction=instruction,
                )
            )
    return texts


def _extract(response: str) -> dict:
    from .actions import extract_json_object

    return extract_json_object(response)


def generate_actions(
    config: PipelineConfig,
    scene: SceneGraph,
    suggestion_or_instruction: str,
    provider: Provider,
    *,
    catalog: Optional[Catalog] = None,
    embedder: Optional[Embedder] = None,
) -> ActionStepList:
    """Run the actions stage and resolve every Add against the catalog.

    Add resolution asks the provider for the best category and a retrieval
    description, then searches that bucket; on any resolution failure the Add
    proceeds as a bare gray placeholder with a warning diagnostic.
    """
    bundle = build_prompt(Stage.ACTION_GEN, config, scene, suggestion=suggestion_or_instruction)
    response = provider.complete(bundle)
    steps = parse_steps_json(response)
    for action in steps:
        if action.verb is not ActionVerb.ADD:
            continue
        if catalog is None or len(catalog) == 0:
            steps.diagnostics.append(
                Diagnostic(
                    "ASSET_RESOLUTION",
                    f"no catalog available; {action.selected_obj!r} will be a placeholder",
                )
            )
            continue
        try:
            category, description = choose_category_and_description(
                action.selected_obj, catalog, provider
            )
            ranked = search(catalog, description, category=category, embedder=embedder)
            best = catalog.get(ranked[0][0])
        except (
            ProviderError,
            CategoryNotInList,
            UnknownCategory,
            EmptyCatalog,
            EmptyText,
            EmbedderMismatch,
            NoJsonFound,
            SchemaError,
        ) as exc:
            steps.diagnostics.append(
                Diagnostic(
                    "ASSET_RESOLUTION",
                    f"could not resolve {action.selected_obj!r} ({exc}); using a placeholder",
                )
            )
            continue
        action.asset_id = best.asset_id
        action.asset_scale = best.default_scale
        action.add_description = description
    return steps


__all__ = [
    "CONDITIONS",
    "PipelineConfig",
    "SuggestionText",
    "build_prompt",
    "generate_actions",
    "generate_suggestions",
]
