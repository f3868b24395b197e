"""Vision-language provider abstraction: transcripts, mock, replay, external HTTP.

A provider takes one PromptBundle (system text, user text, optional base64
image) and returns raw response text. Every call is appended to an
append-only transcript that can be saved and replayed offline, which is how
the whole pipeline stays hermetic under test.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    ProviderAuthError,
    ProviderError,
    ProviderHttpError,
    ProviderTimeout,
    StageMismatch,
    TranscriptExhausted,
)


class Stage(str, Enum):
    SCENE_UNDERSTANDING = "SceneUnderstanding"
    SUGGESTION_GEN = "SuggestionGen"
    ACTION_GEN = "ActionGen"
    CATEGORY_SELECT = "CategorySelect"
    LABELING = "Labeling"


@dataclass(frozen=True)
class PromptBundle:
    """One provider request: texts plus the optional visual channel."""

    stage: Stage
    system_text: str
    user_text: str
    image_payload: Optional[str] = None  # standard base64, padded


@dataclass
class TranscriptRecord:
    seq: int
    stage: str
    system: str
    user: str
    image_b64: Optional[str]
    response: str
    ts: float

    def as_dict(self) -> dict:
        # wall-clock time stays in memory so saved transcripts are
        # byte-reproducible across reruns
        return {
            "seq": self.seq,
            "stage": self.stage,
            "system": self.system,
            "user": self.user,
            "image_b64": self.image_b64,
            "response": self.response,
        }


class ProviderTranscript:
    """Append-only, internally synchronized request/response log."""

    def __init__(self):
        self._records: list[TranscriptRecord] = []
        self._lock = threading.Lock()

    def append(self, bundle: PromptBundle, response: str) -> TranscriptRecord:
        with self._lock:
            record = TranscriptRecord(
                seq=len(self._records),
                stage=bundle.stage.value,
                system=bundle.system_text,
                user=bundle.user_text,
                image_b64=bundle.image_payload,
                response=response,
                ts=time.time(),
            )
            self._records.append(record)
            return record

    @property
    def records(self) -> list[TranscriptRecord]:
        with self._lock:
            return list(self._records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.as_dict()) + "\n" for r in self.records)

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_jsonl())


class Provider:
    """Base provider; subclasses implement _respond."""

    provider_id = "base"

    def __init__(self):
        self.transcript = ProviderTranscript()

    def complete(self, bundle: PromptBundle) -> str:
        response = self._respond(bundle)
        self.transcript.append(bundle, response)
        return response

    def _respond(self, bundle: PromptBundle) -> str:
        raise NotImplementedError


# --- mock -----------------------------------------------------------------------

@dataclass(frozen=True)
class MockRule:
    """Response served when the stage matches and every keyword occurs in the user text."""

    stage: Stage
    keywords: tuple[str, ...]
    response: str


_FALLBACKS = {
    Stage.SCENE_UNDERSTANDING: "Understood.",
    Stage.SUGGESTION_GEN: '{"suggestions":[]}',
    Stage.ACTION_GEN: '{"steps":[]}',
}

_OBJECT_NAME_RE = re.compile(r"The object is : (.+?)\.", re.DOTALL)
_CATEGORY_LIST_RE = re.compile(r"Categories include: (.+?)\.\s*$", re.DOTALL)
_LABEL_NAME_RE = re.compile(r"object_name: (\S+)")


class MockProvider(Provider):
    """Deterministic canned provider for hermetic tests and offline runs.

    Unmatched SuggestionGen/ActionGen requests fall back to fixed empty
    payloads; unmatched CategorySelect and Labeling requests fall back to a
    fixed derivation from the request text itself, so Add resolution always
    yields a schema-valid answer.
    """

    provider_id = "mock"

    def __init__(self, rules: Sequence[MockRule] = ()):
        super().__init__()
        self.rules = list(rules)

    def _respond(self, bundle: PromptBundle) -> str:
        haystack = bundle.user_text.lower()
        for rule in self.rules:
            if rule.stage is bundle.stage and all(k.lower() in haystack for k in rule.keywords):
                return rule.response
        if bundle.stage is Stage.CATEGORY_SELECT:
            return self._category_fallback(bundle.user_text)
        if bundle.stage is Stage.LABELING:
            return self._label_fallback(bundle.user_text)
        return _FALLBACKS[bundle.stage]

    @staticmethod
    def _category_fallback(user_text: str) -> str:
        name_m = _OBJECT_NAME_RE.search(user_text)
        list_m = _CATEGORY_LIST_RE.search(user_text)
        name = name_m.group(1).strip() if name_m else "object"
        categories = [c.strip() for c in list_m.group(1).split(",")] if list_m else []
        categories = [c for c in categories if c]
        pick = categories[0] if categories else "Decoration"
        lowered = name.lower()
        for category in categories:
            if category.lower() in lowered or lowered in category.lower():
                pick = category
                break
        description = f"A {name.replace('_', ' ').lower()} with a simple, functional design in neutral colors."
        return json.dumps({"Category1": pick, "Description": description})

    @staticmethod
    def _label_fallback(user_text: str) -> str:
        m = _LABEL_NAME_RE.search(user_text)
        name = m.group(1) if m else "object"
        return json.dumps(
            {
                "name": name,
                "description": f"A {name.replace('_', ' ').lower()} with a plain finish. It serves a decorative purpose.",
                "category": "Decoration",
            }
        )


# --- replay ----------------------------------------------------------------------

class ReplayProvider(Provider):
    """Serves recorded responses in order, keyed by stage."""

    provider_id = "replay"

    def __init__(self, records: Sequence[dict]):
        super().__init__()
        self._queues: dict[str, list[str]] = {}
        self._lock = threading.Lock()
        for record in records:
            self._queues.setdefault(record["stage"], []).append(record["response"])

    @classmethod
    def from_file(cls, path: Path | str) -> "ReplayProvider":
        records = []
        for line in Path(path).read_text().splitlines():
            if line.strip():
                records.append(json.loads(line))
        return cls(records)

    def _respond(self, bundle: PromptBundle) -> str:
        with self._lock:
            queue = self._queues.get(bundle.stage.value)
            if queue is None:
                raise StageMismatch(f"transcript has no {bundle.stage.value} responses")
            if not queue:
                raise TranscriptExhausted(f"transcript exhausted for stage {bundle.stage.value}")
            return queue.pop(0)


# --- external HTTP -----------------------------------------------------------------

ENV_KEY = "ECHO_PROVIDER_KEY"


class ExternalProvider(Provider):
    """Chat-completion-style HTTP provider with one retry on transient failures."""

    provider_id = "external"

    def __init__(
        self,
        endpoint: str,
        api_key: Optional[str] = None,
        model: str = "gpt-4o",
        timeout: float = 60.0,
        temperature: float = 0.0,
        retry_backoff: float = 1.0,
    ):
        super().__init__()
        self.endpoint = endpoint
        self.api_key = api_key or os.environ.get(ENV_KEY)
        self.model = model
        self.timeout = timeout
        self.temperature = temperature
        self.retry_backoff = retry_backoff

    def _payload(self, bundle: PromptBundle) -> dict:
        content: list[dict] = [{"type": "text", "text": bundle.user_text}]
        if bundle.image_payload:
            content.append(
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:image/x-portable-pixmap;base64,{bundle.image_payload}"},
                }
            )
        return {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": content},
            ],
        }

    def _respond(self, bundle: PromptBundle) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = self._payload(bundle)
        last_error: Exception | None = None
        for attempt in range(2):
            try:
                response = requests.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
            except requests.Timeout as exc:
                last_error = ProviderTimeout(f"provider timed out: {exc}")
            except requests.RequestException as exc:
                last_error = ProviderHttpError(f"provider request failed: {exc}")
            else:
                if response.status_code in (401, 403):
                    raise ProviderAuthError(f"provider rejected credentials: {response.status_code}")
                if response.status_code >= 400:
                    last_error = ProviderHttpError(f"provider returned {response.status_code}")
                else:
                    return self._extract_text(response)
            if attempt == 0:
                time.sleep(self.retry_backoff)
        raise last_error if last_error else ProviderError("provider failed")

    @staticmethod
    def _extract_text(response) -> str:
        try:
            body = response.json()
        except ValueError:
            return response.text
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            return response.text


# --- factories ----------------------------------------------------------------------

def mock_provider(rules: Sequence[MockRule] | None = None) -> MockProvider:
    """Mock with the packaged default rule table unless rules are given."""
    if rules is None:
        from .mock_rules import DEFAULT_RULES

        rules = DEFAULT_RULES
    return MockProvider(rules)


def replay_provider(transcript_path: Path | str) -> ReplayProvider:
    return ReplayProvider.from_file(transcript_path)


def external_provider(endpoint: str, api_key: Optional[str] = None, **kwargs) -> ExternalProvider:
    return ExternalProvider(endpoint, api_key=api_key, **kwargs)


def provider_from_spec(spec: str, config_path: Path | str | None = None) -> Provider:
    """Resolve the CLI convention mock | replay:<path> | external."""
    if spec == "mock":
        return mock_provider()
    if spec.startswith("replay:"):
        return replay_provider(spec.split(":", 1)[1])
    if spec == "external":
        settings = load_provider_config(config_path)
        return ExternalProvider(**settings)
    raise ProviderError(f"unknown provider spec {spec!r}")


def load_provider_config(path: Path | str | None) -> dict:
    """provider.toml-style settings; ECHO_PROVIDER_KEY overrides the file's key."""
    if path is None:
        raise ProviderError("external provider needs a provider config file")
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib
    data = tomllib.loads(Path(path).read_text())
    settings = {
        "endpoint": data.get("endpoint"),
        "api_key": os.environ.get(ENV_KEY) or data.get("api_key"),
        "model": data.get("model", "gpt-4o"),
        "timeout": float(data.get("timeout", 60.0)),
        "temperature": float(data.get("temperature", 0.0)),
    }
    if not settings["endpoint"]:
        raise ProviderError("provider config is missing 'endpoint'")
    return settings


__all__ = [
    "ENV_KEY",
    "ExternalProvider",
    "MockProvider",
    "MockRule",
    "PromptBundle",
    "Provider",
    "ProviderTranscript",
    "ReplayProvider",
    "Stage",
    "TranscriptRecord",
    "external_provider",
    "load_provider_config",
    "mock_provider",
    "provider_from_spec",
    "replay_provider",
]
