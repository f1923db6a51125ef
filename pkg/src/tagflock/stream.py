"""Stream-style lifecycle: initial deployment, online batch absorption, and
cluster extraction.

New services are dropped into the space with a per-agent seeded position and
heading, then the flock is advanced a fixed number of ticks; clusters are the
connected components of the epsilon-neighborhood graph over real agents.
Nothing about earlier agents is recomputed when a batch arrives — they keep
moving under the same dynamics, which is the whole point of the online phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IngestError
from .flockspace import (
    FlockSpace,
    FlockWeights,
    SpaceConfig,
    _build_pairs,
    run_steps,
    wrap_delta,
)
from .rng import substream
from .similarity import ServiceDescriptor, SimilarityProvider

__all__ = [
    "BatchConfig",
    "ClusterAssignment",
    "spawn_state",
    "deploy",
    "initialize",
    "absorb_batch",
    "extract_clusters",
    "toroidal_centroid",
]


@dataclass(frozen=True)
class BatchConfig:
    """Tick budgets for the two lifecycle phases."""

    init_iterations: int = 1000
    maintenance_iterations: int = 500

    def __post_init__(self) -> None:
        if self.init_iterations < 1 or self.maintenance_iterations < 1:
            raise ConfigurationError("iteration counts must be >= 1")


def spawn_state(config: SpaceConfig, *scope: int | str) -> tuple[np.ndarray, np.ndarray]:
    """Seeded spawn position and velocity for one agent.

    The draw is keyed by the scope (normally the agent id), not by the tick,
    so an agent gets the same spawn regardless of when its batch arrives.
    Position is uniform over the space; velocity has a uniform random heading
    at half the speed cap.
    """
    rng = substream(config.seed, "spawn", *scope)
    position = np.array(
        [rng.uniform(0.0, config.width), rng.uniform(0.0, config.height)]
    )
    theta = rng.uniform(0.0, 2.0 * math.pi)
    velocity = np.array([math.cos(theta), math.sin(theta)]) * (config.v_max / 2)
    return position, velocity


def _insert_services(space: FlockSpace, services: list[ServiceDescriptor]) -> None:
    for descriptor in services:
        position, velocity = spawn_state(space.config, len(space))
        space.add_agent(descriptor, position, velocity)


def deploy(services: list[ServiceDescriptor], config: SpaceConfig) -> FlockSpace:
    """Spawn one real agent per service without running any steps."""
    if not services:
        raise IngestError("cannot deploy an empty service list")
    space = FlockSpace(config)
    _insert_services(space, services)
    return space


def initialize(
    services: list[ServiceDescriptor],
    config: SpaceConfig,
    weights: FlockWeights,
    provider: SimilarityProvider,
    batch: BatchConfig,
    parallel: bool = False,
) -> FlockSpace:
    """Deploy one agent per service and run the initial settling phase."""
    space = deploy(services, config)
    return run_steps(space, weights, provider, batch.init_iterations, parallel)


def absorb_batch(
    space: FlockSpace,
    new_services: list[ServiceDescriptor],
    weights: FlockWeights,
    provider: SimilarityProvider,
    batch: BatchConfig,
    parallel: bool = False,
) -> FlockSpace:
    """Insert a batch of new services and run the maintenance phase in place.

    An empty batch simply advances the space.  Existing agents are never reset
    or re-seeded; they move only through the regular dynamics.
    """
    _insert_services(space, new_services)
    return run_steps(
        space, weights, provider, batch.maintenance_iterations, parallel
    )


@dataclass(frozen=True)
class ClusterAssignment:
    """Connected epsilon-components over the real agents.

    ``clusters[k]`` is the sorted member tuple of cluster id ``k``; cluster
    ids are assigned by ascending minimum member id, so the layout is a pure
    function of positions.  Singleton components appear both as clusters and
    in ``outliers``.
    """

    clusters: tuple[tuple[int, ...], ...]
    outliers: tuple[int, ...]

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def labels(self) -> dict[int, int]:
        """Agent id -> cluster id for every real agent."""
        return {
            member: cluster_id
            for cluster_id, members in enumerate(self.clusters)
            for member in members
        }


class _DisjointSet:
    def __init__(self, ids: np.ndarray) -> None:
        self._parent = {int(i): int(i) for i in ids}

    def find(self, i: int) -> int:
        parent = self._parent
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # smaller root wins, keeping roots stable under edge order
            if rj < ri:
                ri, rj = rj, ri
            self._parent[rj] = ri


def _epsilon_edges(
    space: FlockSpace, eps: float, real: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Edges of the epsilon graph over the given real agents."""
    cfg = space.config
    if eps <= cfg.sensor_range:
        src, dst, _, _, dist = _build_pairs(space, eps, restrict=real)
    else:
        # beyond grid coverage: chunked direct scan over row blocks
        pos = space.positions[real]
        n = len(real)
        rows_i: list[np.ndarray] = []
        rows_j: list[np.ndarray] = []
        dists: list[np.ndarray] = []
        block = max(1, 2_000_000 // max(1, n))
        for start in range(0, n, block):
            stop = min(start + block, n)
            delta = wrap_delta(
                pos[None, :, :] - pos[start:stop, None, :], cfg.extents
            )
            dist_block = np.hypot(delta[..., 0], delta[..., 1])
            bi, bj = np.nonzero(dist_block <= eps)
            bi += start
            keep = bi < bj
            rows_i.append(real[bi[keep]])
            rows_j.append(real[bj[keep]])
            dists.append(dist_block[bi[keep] - start, bj[keep]])
        src = np.concatenate(rows_i) if rows_i else np.empty(0, dtype=np.int64)
        dst = np.concatenate(rows_j) if rows_j else np.empty(0, dtype=np.int64)
        dist = np.concatenate(dists) if dists else np.empty(0)
    if cfg.strict_epsilon:
        keep = dist < eps
        src, dst = src[keep], dst[keep]
    return src, dst


def extract_clusters(space: FlockSpace, epsilon: float | None = None) -> ClusterAssignment:
    """Group real agents into connected components at the given radius.

    Two agents are linked when their toroidal distance is within epsilon
    (inclusive by default; strict mode drops the boundary).  Virtual agents
    are ignored entirely.
    """
    cfg = space.config
    eps = cfg.epsilon if epsilon is None else epsilon
    if eps <= 0:
        raise ConfigurationError("epsilon must be positive")
    real = space.real_agent_ids
    if len(real) == 0:
        return ClusterAssignment(clusters=(), outliers=())
    src, dst = _epsilon_edges(space, eps, real)
    dsu = _DisjointSet(real)
    for i, j in zip(src.tolist(), dst.tolist()):
        dsu.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in real.tolist():
        groups.setdefault(dsu.find(i), []).append(i)
    ordered = sorted(groups.values(), key=min)
    clusters = tuple(tuple(sorted(members)) for members in ordered)
    outliers = tuple(
        members[0] for members in clusters if len(members) == 1
    )
    return ClusterAssignment(clusters=clusters, outliers=outliers)


def toroidal_centroid(points: np.ndarray, extents: np.ndarray) -> np.ndarray:
    """Mean position on the torus via the circular mean of each axis."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise ConfigurationError("centroid of an empty point set is undefined")
    angles = points / extents * (2.0 * math.pi)
    mean_angle = np.arctan2(
        np.sin(angles).mean(axis=0), np.cos(angles).mean(axis=0)
    )
    centroid = np.mod(mean_angle / (2.0 * math.pi), 1.0) * extents
    centroid[centroid >= extents] = 0.0
    return centroid
