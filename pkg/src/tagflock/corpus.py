"""Corpus loading and synthetic corpus generation.

The on-disk corpus is JSON Lines: one object per line with ``id``, ``name``,
``tags``, and an optional ground-truth ``label``.  The synthetic generator
produces a labeled corpus with disjoint per-category tag pools plus a matching
ground-truth similarity oracle, which is what the desk-scale quality checks
run against.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass

from .errors import ConfigurationError, IngestError
from .rng import substream
from .search import LabeledQuery
from .similarity import ServiceDescriptor, SyntheticOracleProvider

__all__ = [
    "CorpusRecord",
    "load_corpus",
    "write_corpus",
    "to_descriptors",
    "labels_by_id",
    "read_text_tokens",
    "SyntheticSpec",
    "generate_synthetic",
    "holdout_queries",
    "load_queries",
]


@dataclass(frozen=True)
class CorpusRecord:
    """One service as it appears in a corpus file."""

    id: str
    name: str
    tags: tuple[str, ...]
    label: str | None = None


def _parse_line(path, lineno: int, line: str) -> dict:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
    if not isinstance(payload, dict):
        raise IngestError(f"{path}:{lineno}: expected a JSON object")
    return payload


def load_corpus(path) -> list[CorpusRecord]:
    """Parse a JSON Lines corpus file; blank lines are allowed and skipped."""
    records: list[CorpusRecord] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            payload = _parse_line(path, lineno, line)
            record_id = payload.get("id")
            if not isinstance(record_id, str) or not record_id:
                raise IngestError(f"{path}:{lineno}: missing or empty 'id'")
            if record_id in seen:
                raise IngestError(
                    f"{path}:{lineno}: duplicate id {record_id!r} "
                    f"(first seen on line {seen[record_id]})"
                )
            seen[record_id] = lineno
            tags = payload.get("tags")
            if (
                not isinstance(tags, list)
                or not tags
                or any(not isinstance(t, str) or not t.strip() for t in tags)
            ):
                raise IngestError(
                    f"{path}:{lineno}: 'tags' must be a non-empty list of "
                    "non-blank strings"
                )
            name = payload.get("name", record_id)
            if not isinstance(name, str):
                raise IngestError(f"{path}:{lineno}: 'name' must be a string")
            label = payload.get("label")
            if label is not None and not isinstance(label, str):
                raise IngestError(f"{path}:{lineno}: 'label' must be a string")
            records.append(
                CorpusRecord(
                    id=record_id, name=name, tags=tuple(tags), label=label
                )
            )
    return records


def write_corpus(records: list[CorpusRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            payload = {
                "id": record.id,
                "name": record.name,
                "tags": list(record.tags),
            }
            if record.label is not None:
                payload["label"] = record.label
            handle.write(json.dumps(payload) + "\n")


def to_descriptors(records: list[CorpusRecord], vocab) -> list[ServiceDescriptor]:
    """Normalize every record's tags against ``vocab`` into descriptors."""
    return [
        ServiceDescriptor.from_raw(
            id=record.id, name=record.name, raw_tags=record.tags, vocab=vocab
        )
        for record in records
    ]


def labels_by_id(records: list[CorpusRecord]) -> dict[str, str]:
    """Service id -> ground-truth label, for the records that carry one."""
    return {r.id: r.label for r in records if r.label is not None}


def read_text_tokens(path) -> list[str]:
    """Lowercased whitespace tokens of a plain-text file, punctuation-trimmed.

    This is the input for building the distributional model: any descriptive
    text about the service domain works; richer text gives better vectors.
    """
    tokens: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            for word in line.split():
                token = word.strip(string.punctuation).lower()
                if token:
                    tokens.append(token)
    return tokens


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a labeled synthetic corpus plus its similarity oracle."""

    categories: int = 4
    services_per_category: int = 50
    tags_per_service: int = 5
    intra_sim: float = 0.9
    inter_sim: float = 0.1
    noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.categories < 1 or self.services_per_category < 1:
            raise ConfigurationError("need at least one category and service")
        if self.tags_per_service < 1:
            raise ConfigurationError("tags_per_service must be >= 1")
        if not 0.0 <= self.inter_sim < self.intra_sim <= 1.0:
            raise ConfigurationError(
                "need 0 <= inter_sim < intra_sim <= 1, got "
                f"{self.inter_sim}/{self.intra_sim}"
            )
        if self.noise_sigma < 0.0:
            raise ConfigurationError("noise_sigma must be >= 0")

    @classmethod
    def from_file(cls, path) -> "SyntheticSpec":
        with open(path, encoding="utf-8") as handle:
            try:
                payload = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(
                    f"{path}: malformed JSON ({exc.msg})"
                ) from exc
        if not isinstance(payload, dict):
            raise ConfigurationError(f"{path}: expected a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ConfigurationError(
                f"{path}: unknown fields {sorted(unknown)}"
            )
        return cls(**payload)


def _pool(category: int, size: int) -> list[str]:
    return [f"cat{category}-tag{j}" for j in range(size)]


def generate_synthetic(
    spec: SyntheticSpec,
) -> tuple[list[CorpusRecord], SyntheticOracleProvider]:
    """Deterministic labeled corpus with disjoint per-category tag pools.

    Every service draws ``tags_per_service`` distinct tags from its own
    category's pool (twice that many tags exist per pool, so tag sets vary).
    The returned oracle scores same-category tag pairs near ``intra_sim`` and
    cross-category pairs near ``inter_sim``, with seeded Gaussian noise.
    """
    pool_size = 2 * spec.tags_per_service
    categories: dict[str, int] = {}
    records: list[CorpusRecord] = []
    for cat in range(spec.categories):
        pool = _pool(cat, pool_size)
        for tag in pool:
            categories[tag] = cat
        for i in range(spec.services_per_category):
            rng = substream(spec.seed, "corpus", cat, i)
            picks = sorted(
                rng.choice(pool_size, size=spec.tags_per_service, replace=False)
            )
            records.append(
                CorpusRecord(
                    id=f"svc-{cat:02d}-{i:03d}",
                    name=f"service {cat}-{i}",
                    tags=tuple(pool[j] for j in picks),
                    label=f"cat-{cat}",
                )
            )
    provider_spec = {
        "kind": "oracle",
        "intra_sim": spec.intra_sim,
        "inter_sim": spec.inter_sim,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "categories": categories,
    }
    provider = SyntheticOracleProvider(
        categories=categories,
        intra_sim=spec.intra_sim,
        inter_sim=spec.inter_sim,
        noise_sigma=spec.noise_sigma,
        seed=spec.seed,
        spec=provider_spec,
    )
    return records, provider


def holdout_queries(
    records: list[CorpusRecord], per_category: int
) -> tuple[list[CorpusRecord], list[LabeledQuery]]:
    """Split off the last ``per_category`` records of each label as queries.

    The held-out services never enter the space; their tags become labeled
    queries whose ground truth is the category they were generated from.
    """
    if per_category < 1:
        raise ConfigurationError("per_category must be >= 1")
    by_label: dict[str, list[CorpusRecord]] = {}
    for record in records:
        if record.label is None:
            raise ConfigurationError(
                f"record {record.id!r} has no label; cannot hold out"
            )
        by_label.setdefault(record.label, []).append(record)
    for label, group in by_label.items():
        if len(group) <= per_category:
            raise ConfigurationError(
                f"label {label!r} has only {len(group)} records; cannot hold "
                f"out {per_category}"
            )
    held_ids = set()
    queries: list[LabeledQuery] = []
    for label in sorted(by_label):
        group = sorted(by_label[label], key=lambda r: r.id)
        for record in group[-per_category:]:
            held_ids.add(record.id)
            queries.append(
                LabeledQuery(
                    tags=record.tags, label=label, source_id=record.id
                )
            )
    kept = [r for r in records if r.id not in held_ids]
    return kept, queries


def load_queries(path) -> list[LabeledQuery]:
    """Parse a JSON Lines query file: {"tags": [...], "label": "...", ...}."""
    queries: list[LabeledQuery] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            payload = _parse_line(path, lineno, line)
            tags = payload.get("tags")
            if (
                not isinstance(tags, list)
                or not tags
                or any(not isinstance(t, str) or not t.strip() for t in tags)
            ):
                raise IngestError(
                    f"{path}:{lineno}: 'tags' must be a non-empty list of "
                    "non-blank strings"
                )
            label = payload.get("label")
            if not isinstance(label, str) or not label:
                raise IngestError(
                    f"{path}:{lineno}: queries need a non-empty 'label'"
                )
            source_id = payload.get("source_id")
            if source_id is not None and not isinstance(source_id, str):
                raise IngestError(f"{path}:{lineno}: 'source_id' must be a string")
            queries.append(
                LabeledQuery(tags=tuple(tags), label=label, source_id=source_id)
            )
    return queries
