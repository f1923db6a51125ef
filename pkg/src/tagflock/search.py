"""Retrieval by virtual-agent injection plus the evaluation metrics.

A query becomes a temporary virtual agent dropped into a sandbox copy of the
space.  The sandbox is stepped until strictly more than ``num_results`` real
agents sit within epsilon of the virtual agent (or the iteration budget runs
out), and that neighborhood — ranked by distance, then similarity, then id —
is the answer.  The live space is never touched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidQueryError
from .flockspace import (
    VIRTUAL,
    Agent,
    FlockSpace,
    FlockWeights,
    SpaceConfig,
    epsilon_neighborhood,
    step,
)
from .rng import substream
from .similarity import ServiceDescriptor, SimilarityProvider
from .stream import extract_clusters

__all__ = [
    "Query",
    "SearchHit",
    "ResultSet",
    "LabeledQuery",
    "make_virtual_agent",
    "search",
    "cluster_purity",
    "evaluate",
]


@dataclass(frozen=True)
class Query:
    """Search parameters: raw tags, an iteration budget, and a result target."""

    tags: tuple[str, ...]
    max_iterations: int = 200
    num_results: int = 10
    epsilon_override: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tags", tuple(self.tags))
        if not self.tags or any(not str(t).strip() for t in self.tags):
            raise InvalidQueryError("query needs at least one non-blank tag")
        if self.max_iterations < 1:
            raise InvalidQueryError("max_iterations must be >= 1")
        if self.num_results < 1:
            raise InvalidQueryError("num_results must be >= 1")
        if self.epsilon_override is not None and self.epsilon_override <= 0:
            raise InvalidQueryError("epsilon override must be positive")


@dataclass(frozen=True)
class SearchHit:
    descriptor: ServiceDescriptor
    agent_id: int
    distance: float
    similarity: float


@dataclass(frozen=True)
class ResultSet:
    """Ranked hits plus how the search ended.

    ``converged`` means the neighborhood exceeded ``num_results`` within the
    budget; otherwise the hits are whatever surrounded the virtual agent when
    the budget ran out.
    """

    hits: tuple[SearchHit, ...]
    iterations_used: int
    converged: bool

    def __len__(self) -> int:
        return len(self.hits)

    @property
    def service_ids(self) -> tuple[str, ...]:
        return tuple(hit.descriptor.id for hit in self.hits)


def make_virtual_agent(
    query: Query,
    provider: SimilarityProvider,
    config: SpaceConfig,
    seed: int | None = None,
) -> Agent:
    """Build the query's virtual agent with a seeded spawn state.

    The descriptor normalizes the query tags against the provider vocabulary;
    the placement comes from a dedicated substream of the seed (defaulting to
    the space seed), so identical seeds give identical placements.
    """
    descriptor = ServiceDescriptor.from_raw(
        id="query", name="query", raw_tags=query.tags, vocab=provider
    )
    rng = substream(config.seed if seed is None else seed, "virtual")
    position = np.array(
        [rng.uniform(0.0, config.width), rng.uniform(0.0, config.height)]
    )
    theta = rng.uniform(0.0, 2.0 * np.pi)
    velocity = np.array([np.cos(theta), np.sin(theta)]) * (config.v_max / 2)
    return Agent(
        id=-1,
        kind=VIRTUAL,
        descriptor=descriptor,
        position=position,
        velocity=velocity,
    )


def _harvest(
    sandbox: FlockSpace,
    virtual_id: int,
    epsilon: float,
    provider: SimilarityProvider,
) -> tuple[np.ndarray, np.ndarray]:
    return epsilon_neighborhood(
        sandbox,
        sandbox.positions[virtual_id],
        epsilon=epsilon,
        real_only=True,
    )


def search(
    space: FlockSpace,
    query: Query,
    provider: SimilarityProvider,
    weights: FlockWeights | None = None,
    parallel: bool = False,
) -> ResultSet:
    """Run one retrieval query against a sandbox copy of the space.

    After each sandbox step the epsilon-neighborhood of the virtual agent is
    counted; strictly more than ``num_results`` real agents there ends the
    loop as converged.  Exhausting the budget returns the current
    neighborhood unconverged.  Hits are ranked by ascending distance, ties by
    descending similarity to the query, then ascending agent id.
    """
    if weights is None:
        weights = FlockWeights()
    if len(space) == 0:
        return ResultSet(hits=(), iterations_used=0, converged=False)
    sandbox = space.copy()
    virtual = make_virtual_agent(query, provider, sandbox.config)
    virtual_id = sandbox.add_agent(
        virtual.descriptor, virtual.position, virtual.velocity, kind=VIRTUAL
    )
    epsilon = (
        sandbox.config.epsilon
        if query.epsilon_override is None
        else query.epsilon_override
    )
    converged = False
    iterations_used = 0
    idx = np.empty(0, dtype=np.int64)
    dist = np.empty(0)
    for iteration in range(1, query.max_iterations + 1):
        step(sandbox, weights, provider, parallel=parallel)
        iterations_used = iteration
        idx, dist = _harvest(sandbox, virtual_id, epsilon, provider)
        if len(idx) > query.num_results:
            converged = True
            break
    sims = np.array(
        [sandbox.pair_similarity(virtual_id, int(i), provider) for i in idx]
    )
    order = np.lexsort((idx, -sims, dist))
    hits = tuple(
        SearchHit(
            descriptor=sandbox.descriptors[int(idx[k])],
            agent_id=int(idx[k]),
            distance=float(dist[k]),
            similarity=float(sims[k]),
        )
        for k in order
    )
    return ResultSet(hits=hits, iterations_used=iterations_used, converged=converged)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledQuery:
    """A query with the ground-truth category it should retrieve."""

    tags: tuple[str, ...]
    label: str
    source_id: str | None = None


def _agent_labels(space: FlockSpace, labels: dict[str, str]) -> dict[int, str]:
    out: dict[int, str] = {}
    for agent_id in space.real_agent_ids.tolist():
        label = labels.get(space.descriptors[agent_id].id)
        if label is not None:
            out[agent_id] = label
    return out


def cluster_purity(space: FlockSpace, labels: dict[str, str]) -> float:
    """Purity of the epsilon-components against ground-truth labels.

    Each component votes for its majority label; purity is the fraction of
    labeled agents covered by those majorities.  Singleton components count
    like any other (they are trivially pure), so purity rewards separation
    only through the majority votes of the larger components.
    """
    by_agent = _agent_labels(space, labels)
    if not by_agent:
        raise ConfigurationError("purity requires ground-truth labels")
    assignment = extract_clusters(space)
    covered = 0
    for members in assignment.clusters:
        votes: dict[str, int] = {}
        for member in members:
            label = by_agent.get(member)
            if label is not None:
                votes[label] = votes.get(label, 0) + 1
        if votes:
            covered += max(votes.values())
    return covered / len(by_agent)


def evaluate(
    space: FlockSpace,
    labeled_queries: list[LabeledQuery],
    provider: SimilarityProvider,
    labels: dict[str, str],
    k: int = 10,
    weights: FlockWeights | None = None,
    max_iterations: int = 200,
    parallel: bool = False,
) -> dict:
    """Clustering purity plus retrieval precision@k / recall@k.

    ``labels`` maps service id to category.  precision@k divides by ``k``
    even when fewer than ``k`` hits come back (short answers are misses);
    recall@k divides by the number of same-label services in the space.
    Every query label must exist in the corpus labels.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    by_agent = _agent_labels(space, labels)
    known_labels = set(by_agent.values())
    label_sizes: dict[str, int] = {}
    for label in by_agent.values():
        label_sizes[label] = label_sizes.get(label, 0) + 1

    per_query: list[dict] = []
    for lq in labeled_queries:
        if lq.label not in known_labels:
            raise ConfigurationError(
                f"query label {lq.label!r} does not occur in the corpus"
            )
        query = Query(tags=lq.tags, max_iterations=max_iterations, num_results=k)
        result = search(space, query, provider, weights, parallel=parallel)
        top = result.hits[:k]
        relevant = sum(
            1
            for hit in top
            if labels.get(hit.descriptor.id) == lq.label
        )
        per_query.append(
            {
                "tags": list(lq.tags),
                "label": lq.label,
                "source_id": lq.source_id,
                "hits": len(result.hits),
                "converged": result.converged,
                "iterations_used": result.iterations_used,
                "precision_at_k": relevant / k,
                "recall_at_k": relevant / label_sizes[lq.label],
            }
        )

    report = {
        "k": k,
        "n_queries": len(per_query),
        "purity": cluster_purity(space, labels),
        "per_query": per_query,
    }
    if per_query:
        report["precision_at_k"] = float(
            np.mean([q["precision_at_k"] for q in per_query])
        )
        report["recall_at_k"] = float(
            np.mean([q["recall_at_k"] for q in per_query])
        )
    return report
