"""Snapshot persistence: one versioned JSON document per space.

A snapshot stores the configuration, weights, tick counter, every agent's
descriptor/position/velocity, the provider recipe, and any ground-truth
labels.  Floats are serialized with ``repr`` round-tripping, so loading a
snapshot and continuing the simulation is bit-identical to never having saved
it.  Derived state (grid, similarity caches) is deliberately not stored.
"""

from __future__ import annotations

import json

from .errors import ValidationError
from .flockspace import REAL, VIRTUAL, FlockSpace, FlockWeights, SpaceConfig
from .similarity import (
    ExactMatchProvider,
    ServiceDescriptor,
    SimilarityProvider,
    SyntheticOracleProvider,
    Tag,
    TableProvider,
    build_distributional_model,
    DistributionalProvider,
    load_similarity_table,
)

__all__ = [
    "FORMAT",
    "VERSION",
    "save_snapshot",
    "load_snapshot",
    "serialize_space",
    "provider_from_spec",
]

FORMAT = "tagflock-snapshot"
VERSION = 1


def serialize_space(
    space: FlockSpace,
    weights: FlockWeights,
    provider_spec: dict | None = None,
    labels: dict[str, str] | None = None,
) -> dict:
    """The snapshot document as a plain dict (stable field order)."""
    agents = []
    for i in range(len(space)):
        descriptor = space.descriptors[i]
        agents.append(
            {
                "id": i,
                "kind": VIRTUAL if space.virtual_mask[i] else REAL,
                "descriptor": {
                    "id": descriptor.id,
                    "name": descriptor.name,
                    "tags": [
                        {"surface": t.surface, "base": t.base}
                        for t in descriptor.tags
                    ],
                },
                "position": [float(x) for x in space.positions[i]],
                "velocity": [float(x) for x in space.velocities[i]],
            }
        )
    cfg = space.config
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": {
            "width": cfg.width,
            "height": cfg.height,
            "sensor_range": cfg.sensor_range,
            "separation_radius": cfg.separation_radius,
            "epsilon": cfg.epsilon,
            "lam": cfg.lam,
            "v_max": cfg.v_max,
            "eps_div": cfg.eps_div,
            "seed": cfg.seed,
            "heading_jitter": cfg.heading_jitter,
            "literal_separation": cfg.literal_separation,
            "strict_epsilon": cfg.strict_epsilon,
        },
        "weights": {
            "alignment": weights.alignment,
            "separation": weights.separation,
            "cohesion": weights.cohesion,
            "similarity": weights.similarity,
            "dissimilarity": weights.dissimilarity,
        },
        "tick": space.tick,
        "provider": provider_spec,
        "labels": labels or {},
        "agents": agents,
    }


def save_snapshot(
    space: FlockSpace,
    weights: FlockWeights,
    path,
    provider_spec: dict | None = None,
    labels: dict[str, str] | None = None,
) -> None:
    document = serialize_space(space, weights, provider_spec, labels)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=1)
        handle.write("\n")


def _require(document: dict, key: str, path):
    if key not in document:
        raise ValidationError(f"{path}: snapshot is missing {key!r}")
    return document[key]


def load_snapshot(
    path,
) -> tuple[FlockSpace, FlockWeights, dict | None, dict[str, str]]:
    """Rebuild (space, weights, provider spec, labels) from a snapshot file."""
    with open(path, encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: malformed JSON ({exc.msg})") from exc
    if not isinstance(document, dict) or document.get("format") != FORMAT:
        raise ValidationError(f"{path}: not a {FORMAT} document")
    if document.get("version") != VERSION:
        raise ValidationError(
            f"{path}: unsupported snapshot version {document.get('version')!r}"
        )
    config = SpaceConfig(**_require(document, "config", path))
    weights = FlockWeights(**_require(document, "weights", path))
    space = FlockSpace(config)
    for expected_id, entry in enumerate(_require(document, "agents", path)):
        if entry.get("id") != expected_id:
            raise ValidationError(
                f"{path}: agent ids must be consecutive from 0, got "
                f"{entry.get('id')!r} at index {expected_id}"
            )
        desc = entry["descriptor"]
        descriptor = ServiceDescriptor(
            id=desc["id"],
            name=desc["name"],
            tags=tuple(
                Tag(surface=t["surface"], base=t["base"]) for t in desc["tags"]
            ),
        )
        kind = entry.get("kind", REAL)
        if kind not in (REAL, VIRTUAL):
            raise ValidationError(f"{path}: unknown agent kind {kind!r}")
        space.add_agent(descriptor, entry["position"], entry["velocity"], kind)
    space.tick = int(_require(document, "tick", path))
    labels = {str(k): str(v) for k, v in (document.get("labels") or {}).items()}
    return space, weights, document.get("provider"), labels


def provider_from_spec(spec: dict | None) -> SimilarityProvider:
    """Rebuild a similarity provider from its snapshot recipe.

    Recipes: ``{"kind": "exact"}``; ``{"kind": "oracle", intra_sim, inter_sim,
    noise_sigma, seed, categories}``; ``{"kind": "table", scores | path}``;
    ``{"kind": "model", path, window, min_count}`` (rebuilt from the original
    text, which must still be present).  ``None`` means exact matching.
    """
    if spec is None:
        return ExactMatchProvider()
    kind = spec.get("kind")
    if kind == "exact":
        return ExactMatchProvider()
    if kind == "oracle":
        return SyntheticOracleProvider(
            categories={str(k): int(v) for k, v in spec["categories"].items()},
            intra_sim=float(spec["intra_sim"]),
            inter_sim=float(spec["inter_sim"]),
            noise_sigma=float(spec.get("noise_sigma", 0.0)),
            seed=int(spec.get("seed", 0)),
            spec=spec,
        )
    if kind == "table":
        if "scores" in spec:
            scores = {
                (str(a), str(b)): float(s) for a, b, s in spec["scores"]
            }
            return TableProvider(scores, spec=spec)
        return load_similarity_table(spec["path"])
    if kind == "model":
        from .corpus import read_text_tokens

        tokens = read_text_tokens(spec["path"])
        model = build_distributional_model(
            tokens,
            window=int(spec.get("window", 2)),
            min_count=int(spec.get("min_count", 1)),
        )
        return DistributionalProvider(model, spec=spec)
    raise ValidationError(f"unknown provider kind {kind!r}")
