"""Labeled asset catalog: LVLM annotation, deterministic text embedding, retrieval.

Assets carry a name, a short free-text description and a category. Retrieval
embeds the query description and ranks a category bucket (or the whole
catalog) by cosine similarity. The default embedder hashes character
3-grams into a fixed 256-dimensional unit vector, so the entire retrieval
path is deterministic and runs without model weights; an external embedding
service can be plugged in behind the same interface.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .actions import extract_json_object
from .errors import (
    BannedCategory,
    CategoryNotInList,
    EmbedderMismatch,
    EmptyCatalog,
    EmptyText,
    InvalidValue,
    LabelSchemaError,
    NoJsonFound,
    NotFound,
    SchemaError,
    UnknownCategory,
)
from .prompts import (
    BANNED_CATEGORY_RETRY_SUFFIX,
    CATEGORY_RETRY_SUFFIX,
    category_bundle,
    labeling_bundle,
)
from .providers import Provider
from .scene import Vector3

BANNED_CATEGORIES = ("3D model", "3D shape")

EMBEDDING_DIM = 256

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")
_WHITESPACE_RE = re.compile(r"\s+")


class Embedder(Protocol):
    embedder_id: str

    def embed(self, text: str) -> tuple[float, ...]: ...


class HashNgramEmbedder:
    """Character 3-gram feature hashing into a unit vector; no external deps.

    Grams are hashed with blake2b (salted Python hashes would break
    cross-process determinism); one hash bit supplies the feature sign.
    """

    embedder_id = "hash-ngram"

    def __init__(self, dim: int = EMBEDDING_DIM, n: int = 3):
        self.dim = dim
        self.n = n

    def embed(self, text: str) -> tuple[float, ...]:
        normalized = _WHITESPACE_RE.sub(" ", text.lower()).strip()
        if not normalized:
            raise EmptyText("cannot embed empty text")
        padded = f" {normalized} "
        vec = [0.0] * self.dim
        grams = (
            [padded[i : i + self.n] for i in range(len(padded) - self.n + 1)]
            if len(padded) >= self.n
            else [padded]
        )
        for gram in grams:
            h = int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "big")
            bucket = h % self.dim
            sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
            vec[bucket] += sign
        norm = math.sqrt(sum(v * v for v in vec))
        if norm == 0.0:
            # signs can cancel on adversarial inputs; keep the vector unit length
            vec[0] = 1.0
            norm = 1.0
        return tuple(v / norm for v in vec)


class ExternalEmbedder:
    """Embedding service client; normalizes whatever the endpoint returns."""

    embedder_id = "external"

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def embed(self, text: str) -> tuple[float, ...]:
        if not text.strip():
            raise EmptyText("cannot embed empty text")
        import requests

        response = requests.post(self.endpoint, json={"input": text}, timeout=self.timeout)
        response.raise_for_status()
        values = response.json()["embedding"]
        norm = math.sqrt(sum(v * v for v in values)) or 1.0
        return tuple(float(v) / norm for v in values)


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    if len(u) != len(v):
        raise InvalidValue("embedding dimensions differ")
    return sum(a * b for a, b in zip(u, v))


@dataclass(frozen=True)
class AssetRecord:
    """One labeled catalog entry."""

    asset_id: str
    name: str
    description: str
    category: str
    embedding: Optional[tuple[float, ...]] = None
    thumbnail_ref: Optional[str] = None
    default_scale: Vector3 = Vector3(1.0, 1.0, 1.0)

    def __post_init__(self):
        if not self.category:
            raise InvalidValue("record category must be non-empty")
        if self.category.lower() in {b.lower() for b in BANNED_CATEGORIES}:
            raise BannedCategory(f"category {self.category!r} is banned")
        if self.embedding is not None:
            norm = math.sqrt(sum(v * v for v in self.embedding))
            if abs(norm - 1.0) > 1e-6:
                raise InvalidValue(f"embedding of {self.asset_id!r} is not unit length")


class Catalog:
    """Immutable-after-build collection of asset records with a category index."""

    def __init__(self, records: Sequence[AssetRecord] = (), embedder_id: Optional[str] = None):
        self._records: dict[str, AssetRecord] = {}
        self.embedder_id = embedder_id
        for record in records:
            self.add(record)

    def add(self, record: AssetRecord) -> None:
        if record.asset_id in self._records:
            raise InvalidValue(f"duplicate asset id {record.asset_id!r}")
        self._records[record.asset_id] = record

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._records

    def get(self, asset_id: str) -> AssetRecord:
        try:
            return self._records[asset_id]
        except KeyError:
            raise NotFound(f"no asset {asset_id!r}") from None

    @property
    def records(self) -> list[AssetRecord]:
        return list(self._records.values())

    @property
    def category_index(self) -> dict[str, list[str]]:
        index: dict[str, list[str]] = {}
        for record in self._records.values():
            index.setdefault(record.category, []).append(record.asset_id)
        for ids in index.values():
            ids.sort()
        return index

    def categories(self) -> list[str]:
        return sorted(self.category_index)

    def ensure_embeddings(self, embedder: Embedder) -> None:
        """Embed any record still missing its vector (labels load without them)."""
        if self.embedder_id is None:
            self.embedder_id = embedder.embedder_id
        elif self.embedder_id != embedder.embedder_id:
            raise EmbedderMismatch(
                f"catalog was embedded with {self.embedder_id!r}, configured {embedder.embedder_id!r}"
            )
        for asset_id, record in self._records.items():
            if record.embedding is None:
                self._records[asset_id] = replace(
                    record, embedding=embedder.embed(record.description)
                )


def search(
    catalog: Catalog,
    description: str,
    category: Optional[str] = None,
    embedder: Optional[Embedder] = None,
) -> list[tuple[str, float]]:
    """Rank assets by cosine similarity of the description, best first.

    With a category, only that bucket competes. Ties break on ascending
    asset id so rankings are fully deterministic.
    """
    if len(catalog) == 0:
        raise EmptyCatalog("cannot search an empty catalog")
    embedder = embedder or HashNgramEmbedder()
    catalog.ensure_embeddings(embedder)
    if category is not None:
        bucket = catalog.category_index.get(category)
        if bucket is None:
            raise UnknownCategory(f"category {category!r} not in catalog")
        candidates = [catalog.get(asset_id) for asset_id in bucket]
    else:
        candidates = catalog.records
    query = embedder.embed(description)
    scored = [(record.asset_id, cosine(query, record.embedding)) for record in candidates]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored


# --- provider-backed labeling -------------------------------------------------------

def trim_description(text: str, max_sentences: int = 3) -> str:
    sentences = [s for s in _SENTENCE_SPLIT_RE.split(text.strip()) if s]
    return " ".join(sentences[:max_sentences])


def _parse_label_json(text: str) -> dict:
    try:
        payload = extract_json_object(text)
    except NoJsonFound as exc:
        raise LabelSchemaError(f"label response had no JSON: {exc}") from exc
    for key in ("name", "description", "category"):
        if not isinstance(payload.get(key), str) or not payload[key].strip():
            raise LabelSchemaError(f'label JSON is missing "{key}"')
    return payload


def annotate_asset(
    name: str,
    thumbnail: bytes,
    provider: Provider,
    *,
    thumbnail_ref: Optional[str] = None,
    default_scale: Vector3 = Vector3(1.0, 1.0, 1.0),
) -> AssetRecord:
    """Label one asset thumbnail through the provider; returns a record sans embedding.

    A banned category gets one corrective retry before failing.
    """
    if not thumbnail:
        raise InvalidValue("thumbnail must be non-empty")
    import base64

    b64 = base64.b64encode(thumbnail).decode("ascii")
    suffix = ""
    for attempt in range(2):
        response = provider.complete(labeling_bundle(name, b64, suffix))
        payload = _parse_label_json(response)
        category = payload["category"].strip()
        if category.lower() in {b.lower() for b in BANNED_CATEGORIES}:
            suffix = BANNED_CATEGORY_RETRY_SUFFIX
            continue
        return AssetRecord(
            asset_id=payload["name"].strip(),
            name=payload["name"].strip(),
            description=trim_description(payload["description"]),
            category=category,
            thumbnail_ref=thumbnail_ref,
            default_scale=default_scale,
        )
    raise BannedCategory(f"provider insisted on a banned category for {name!r}")


def choose_category_and_description(
    object_name: str, catalog: Catalog, provider: Provider
) -> tuple[str, str]:
    """Ask the provider for the best catalog category and a retrieval description."""
    categories = catalog.categories()
    if not categories:
        raise EmptyCatalog("catalog has no categories")
    suffix = ""
    last_pick = None
    for attempt in range(2):
        response = provider.complete(category_bundle(object_name, categories, suffix))
        try:
            payload = extract_json_object(response)
        except NoJsonFound as exc:
            raise SchemaError(f"category response had no JSON: {exc}") from exc
        category = str(payload.get("Category1", "")).strip()
        description = str(payload.get("Description", "")).strip()
        if category in categories and description:
            return category, description
        last_pick = category
        suffix = CATEGORY_RETRY_SUFFIX
    raise CategoryNotInList(f"provider chose {last_pick!r}, not one of {categories}")


# --- persistence ---------------------------------------------------------------------

def save_catalog(catalog: Catalog, path: Path | str) -> None:
    data = {
        "embedder_id": catalog.embedder_id,
        "records": [
            {
                "asset_id": r.asset_id,
                "name": r.name,
                "description": r.description,
                "category": r.category,
                "embedding": list(r.embedding) if r.embedding is not None else None,
                "thumbnail_ref": r.thumbnail_ref,
                "default_scale": r.default_scale.text(),
            }
            for r in catalog.records
        ],
    }
    Path(path).write_text(json.dumps(data, indent=2))


def load_catalog(path: Path | str) -> Catalog:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"catalog file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("records"), list):
        raise SchemaError('catalog file needs a "records" array')
    records = []
    for item in data["records"]:
        try:
            records.append(
                AssetRecord(
                    asset_id=item["asset_id"],
                    name=item.get("name", item["asset_id"]),
                    description=item["description"],
                    category=item["category"],
                    embedding=tuple(item["embedding"]) if item.get("embedding") else None,
                    thumbnail_ref=item.get("thumbnail_ref"),
                    default_scale=Vector3.parse(item.get("default_scale", "(1.00, 1.00, 1.00)")),
                )
            )
        except KeyError as exc:
            raise SchemaError(f"catalog record is missing {exc}") from exc
    return Catalog(records, embedder_id=data.get("embedder_id"))


def lint_records(raw_records: Sequence[dict]) -> list[str]:
    """Review pass over raw catalog data: empty descriptions, banned categories, duplicates.

    Operates on the file payload, not on validated records, so dirty files
    can be linted at all.
    """
    problems = []
    seen_ids: set[str] = set()
    seen_names: dict[str, str] = {}
    banned = {b.lower() for b in BANNED_CATEGORIES}
    for i, item in enumerate(raw_records):
        asset_id = str(item.get("asset_id", f"record#{i}"))
        if not str(item.get("description", "")).strip():
            problems.append(f"{asset_id}: empty description")
        category = str(item.get("category", ""))
        if not category.strip():
            problems.append(f"{asset_id}: empty category")
        elif category.lower() in banned:
            problems.append(f"{asset_id}: banned category {category!r}")
        if asset_id in seen_ids:
            problems.append(f"{asset_id}: duplicate asset id")
        seen_ids.add(asset_id)
        name = str(item.get("name", asset_id))
        if name in seen_names and seen_names[name] != asset_id:
            problems.append(f"{asset_id}: duplicate name {name!r} (also {seen_names[name]})")
        else:
            seen_names.setdefault(name, asset_id)
    return problems


def fixture_catalog() -> Catalog:
    """The packaged ~30-record catalog used by tests, demos and the CLI default."""
    from importlib.resources import files

    path = files("echoscene").joinpath("data/fixture_catalog.json")
    data = json.loads(path.read_text())
    records = [
        AssetRecord(
            asset_id=item["asset_id"],
            name=item.get("name", item["asset_id"]),
            description=item["description"],
            category=item["category"],
            default_scale=Vector3.parse(item.get("default_scale", "(1.00, 1.00, 1.00)")),
        )
        for item in data["records"]
    ]
    return Catalog(records, embedder_id=data.get("embedder_id"))


__all__ = [
    "AssetRecord",
    "BANNED_CATEGORIES",
    "Catalog",
    "EMBEDDING_DIM",
    "Embedder",
    "ExternalEmbedder",
    "HashNgramEmbedder",
    "annotate_asset",
    "choose_category_and_description",
    "cosine",
    "fixture_catalog",
    "lint_records",
    "load_catalog",
    "save_catalog",
    "search",
    "trim_description",
]
