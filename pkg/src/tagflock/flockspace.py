"""The bounded toroidal virtual space and its agent dynamics.

Agents live on a 2D torus of extent ``width`` x ``height``.  Positions and
velocities are float64 ``(x, y)`` arrays.  Each synchronous step reads a
snapshot of all agents, combines five steering components per agent
(alignment, separation, cohesion, similarity attraction, dissimilarity
repulsion), clamps the result to a speed cap, then commits every move at once.
Neighbor lookups go through a uniform grid whose cells are at least one sensor
range wide, so a 3x3 cell window always covers the sensor disc.

The per-component functions in this module are the readable reference
implementations used by tests; ``step`` evaluates the same formulas over a
vectorized pair list and is bit-deterministic for a fixed seed and agent set,
with or without internal parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, IngestError, InvariantViolation
from .rng import substream
from .similarity import ServiceDescriptor, SimilarityProvider, service_similarity

__all__ = [
    "REAL",
    "VIRTUAL",
    "SpaceConfig",
    "FlockWeights",
    "Agent",
    "Neighbor",
    "FlockSpace",
    "wrap_delta",
    "distance",
    "neighbors",
    "perceive",
    "alignment_velocity",
    "separation_velocity",
    "cohesion_velocity",
    "similarity_velocity",
    "dissimilarity_velocity",
    "total_velocity",
    "step",
    "run_steps",
    "epsilon_neighborhood",
]

REAL = "real"
VIRTUAL = "virtual"

# beyond this many agents the pair-similarity cache falls back from a dense
# matrix to a dict to keep memory bounded
_SIM_MATRIX_CAP = 2048


@dataclass(frozen=True)
class SpaceConfig:
    """Geometry, perception radii, and thresholds of the virtual space."""

    width: float = 100.0
    height: float = 100.0
    sensor_range: float = 8.0
    separation_radius: float = 2.0
    epsilon: float = 3.0
    lam: float = 0.5
    v_max: float = 2.0
    eps_div: float = 1e-6
    seed: int = 0
    heading_jitter: float = 0.45
    literal_separation: bool = False
    strict_epsilon: bool = False

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError("space extents must be positive")
        if not 0 < self.separation_radius < self.sensor_range:
            raise ConfigurationError(
                "need 0 < separation_radius < sensor_range, got "
                f"{self.separation_radius}/{self.sensor_range}"
            )
        if self.sensor_range > min(self.width, self.height) / 2:
            raise ConfigurationError(
                "sensor_range must not exceed half the smaller extent"
            )
        if not 0 < self.epsilon <= self.sensor_range:
            raise ConfigurationError("need 0 < epsilon <= sensor_range")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError("lam must lie in [0, 1]")
        if self.v_max <= 0 or self.eps_div <= 0:
            raise ConfigurationError("v_max and eps_div must be positive")
        if self.heading_jitter < 0:
            raise ConfigurationError("heading_jitter must be >= 0")

    @property
    def extents(self) -> np.ndarray:
        return np.array([self.width, self.height])


@dataclass(frozen=True)
class FlockWeights:
    """Nonnegative weights of the five steering components."""

    alignment: float = 0.3
    separation: float = 1.0
    cohesion: float = 0.3
    similarity: float = 1.0
    dissimilarity: float = 1.0

    def __post_init__(self) -> None:
        values = (
            self.alignment,
            self.separation,
            self.cohesion,
            self.similarity,
            self.dissimilarity,
        )
        if any(not math.isfinite(w) or w < 0 for w in values):
            raise ConfigurationError("weights must be finite and nonnegative")
        if all(w == 0 for w in values):
            raise ConfigurationError("at least one weight must be positive")


@dataclass(frozen=True)
class Agent:
    """Read-only view of one agent in the space."""

    id: int
    kind: str
    descriptor: ServiceDescriptor
    position: np.ndarray
    velocity: np.ndarray

    @property
    def is_virtual(self) -> bool:
        return self.kind == VIRTUAL


@dataclass(frozen=True)
class Neighbor:
    """A perceived neighbor: the agent, shortest toroidal displacement
    toward it, its distance, and (when perceived through a provider) the
    descriptor similarity."""

    agent: Agent
    displacement: np.ndarray
    distance: float
    similarity: float | None = None


def wrap_delta(delta: np.ndarray, size: np.ndarray) -> np.ndarray:
    """Shortest signed per-axis displacement on a torus of the given size."""
    return np.mod(delta + size / 2, size) - size / 2


def distance(p, q, config: SpaceConfig) -> float:
    """Toroidal Euclidean distance between two positions."""
    d = wrap_delta(np.asarray(q, dtype=float) - np.asarray(p, dtype=float),
                   config.extents)
    return float(np.hypot(d[0], d[1]))


class FlockSpace:
    """Mutable collection of agents with grid index and similarity cache.

    Agent ids are assigned consecutively on insertion and double as row
    indices into the position/velocity arrays; agents are never removed.
    """

    def __init__(self, config: SpaceConfig) -> None:
        self.config = config
        self.tick = 0
        self.descriptors: list[ServiceDescriptor] = []
        self._n = 0
        cap = 16
        self._pos = np.zeros((cap, 2))
        self._vel = np.zeros((cap, 2))
        self._virtual = np.zeros(cap, dtype=bool)
        self._grid: dict[tuple[int, int], np.ndarray] | None = None
        self._real_ids: set[str] = set()
        self._sim_matrix: np.ndarray | None = None
        self._sim_dict: dict[tuple[int, int], float] = {}

    # -- basic accessors ----------------------------------------------------

    def __len__(self) -> int:
        return self._n

    @property
    def positions(self) -> np.ndarray:
        """View of all agent positions, shape (n, 2).  Do not mutate."""
        return self._pos[: self._n]

    @property
    def velocities(self) -> np.ndarray:
        return self._vel[: self._n]

    @property
    def virtual_mask(self) -> np.ndarray:
        return self._virtual[: self._n]

    @property
    def real_agent_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.virtual_mask)

    def agent(self, agent_id: int) -> Agent:
        if not 0 <= agent_id < self._n:
            raise InvariantViolation(f"unknown agent id {agent_id}")
        return Agent(
            id=agent_id,
            kind=VIRTUAL if self._virtual[agent_id] else REAL,
            descriptor=self.descriptors[agent_id],
            position=self._pos[agent_id].copy(),
            velocity=self._vel[agent_id].copy(),
        )

    def agents(self) -> list[Agent]:
        return [self.agent(i) for i in range(self._n)]

    # -- mutation -----------------------------------------------------------

    def _ensure_capacity(self, n: int) -> None:
        cap = self._pos.shape[0]
        if n <= cap:
            return
        while cap < n:
            cap *= 2
        for name in ("_pos", "_vel"):
            old = getattr(self, name)
            new = np.zeros((cap, 2))
            new[: self._n] = old[: self._n]
            setattr(self, name, new)
        virt = np.zeros(cap, dtype=bool)
        virt[: self._n] = self._virtual[: self._n]
        self._virtual = virt

    def add_agent(
        self,
        descriptor: ServiceDescriptor,
        position,
        velocity,
        kind: str = REAL,
    ) -> int:
        """Insert an agent at an explicit position/velocity; returns its id."""
        if kind == REAL:
            if descriptor.id in self._real_ids:
                raise IngestError(f"duplicate service id {descriptor.id!r}")
            self._real_ids.add(descriptor.id)
        agent_id = self._n
        self._ensure_capacity(agent_id + 1)
        pos = np.mod(np.asarray(position, dtype=float), self.config.extents)
        pos[pos >= self.config.extents] = 0.0
        self._pos[agent_id] = pos
        self._vel[agent_id] = np.asarray(velocity, dtype=float)
        self._virtual[agent_id] = kind == VIRTUAL
        self.descriptors.append(descriptor)
        self._n += 1
        self._grid = None
        return agent_id

    def copy(self) -> "FlockSpace":
        """Independent deep copy sharing only immutable descriptors."""
        dup = FlockSpace(self.config)
        dup.tick = self.tick
        dup.descriptors = list(self.descriptors)
        dup._n = self._n
        dup._pos = self._pos.copy()
        dup._vel = self._vel.copy()
        dup._virtual = self._virtual.copy()
        dup._real_ids = set(self._real_ids)
        if self._sim_matrix is not None:
            dup._sim_matrix = self._sim_matrix.copy()
        dup._sim_dict = dict(self._sim_dict)
        return dup

    # -- pair similarity cache ---------------------------------------------

    def _matrix_mode(self) -> bool:
        return self._n <= _SIM_MATRIX_CAP

    def _ensure_sim_matrix(self) -> np.ndarray:
        m = self._sim_matrix
        if m is None or m.shape[0] < self._n:
            cap = 64
            while cap < self._n:
                cap *= 2
            cap = min(cap, _SIM_MATRIX_CAP)
            new = np.full((cap, cap), np.nan)
            if m is not None:
                new[: m.shape[0], : m.shape[0]] = m
            self._sim_matrix = new
        return self._sim_matrix

    def pair_similarity(self, i: int, j: int, provider: SimilarityProvider) -> float:
        """Cached descriptor similarity between agents ``i`` and ``j``."""
        if i == j:
            return 1.0
        if self._matrix_mode():
            m = self._ensure_sim_matrix()
            value = m[i, j]
            if np.isnan(value):
                value = service_similarity(
                    self.descriptors[i], self.descriptors[j], provider
                )
                m[i, j] = m[j, i] = value
            return float(value)
        key = (i, j) if i < j else (j, i)
        value = self._sim_dict.get(key)
        if value is None:
            value = service_similarity(
                self.descriptors[i], self.descriptors[j], provider
            )
            self._sim_dict[key] = value
        return value

    def pair_similarities(
        self, idx_a: np.ndarray, idx_b: np.ndarray, provider: SimilarityProvider
    ) -> np.ndarray:
        """Vectorized ``pair_similarity`` over parallel index arrays."""
        if self._matrix_mode():
            m = self._ensure_sim_matrix()
            values = m[idx_a, idx_b]
            for k in np.flatnonzero(np.isnan(values)):
                values[k] = self.pair_similarity(
                    int(idx_a[k]), int(idx_b[k]), provider
                )
            return values
        return np.array(
            [
                self.pair_similarity(int(a), int(b), provider)
                for a, b in zip(idx_a, idx_b)
            ]
        )

    # -- grid index ---------------------------------------------------------

    def _cell_shape(self) -> tuple[int, int, float, float]:
        cfg = self.config
        ncx = max(1, int(cfg.width // cfg.sensor_range))
        ncy = max(1, int(cfg.height // cfg.sensor_range))
        return ncx, ncy, cfg.width / ncx, cfg.height / ncy

    def _cell_coords(self) -> tuple[np.ndarray, np.ndarray, int, int]:
        ncx, ncy, csx, csy = self._cell_shape()
        pos = self.positions
        cx = np.minimum((pos[:, 0] / csx).astype(np.int64), ncx - 1)
        cy = np.minimum((pos[:, 1] / csy).astype(np.int64), ncy - 1)
        return cx, cy, ncx, ncy

    def grid(self) -> dict[tuple[int, int], np.ndarray]:
        """Cell -> sorted agent index buckets, rebuilt lazily after mutation."""
        if self._grid is None:
            cx, cy, _, _ = self._cell_coords()
            buckets: dict[tuple[int, int], list[int]] = {}
            for i in range(self._n):
                buckets.setdefault((int(cx[i]), int(cy[i])), []).append(i)
            self._grid = {
                key: np.array(ids, dtype=np.int64) for key, ids in buckets.items()
            }
        return self._grid

    def candidate_indices(self, agent_id: int) -> np.ndarray:
        """Agents in the 3x3 cell block around ``agent_id``, self excluded."""
        cx, cy, ncx, ncy = self._cell_coords()
        grid = self.grid()
        cells = set()
        for ox in (-1, 0, 1):
            for oy in (-1, 0, 1):
                cells.add(((int(cx[agent_id]) + ox) % ncx,
                           (int(cy[agent_id]) + oy) % ncy))
        chunks = [grid[c] for c in sorted(cells) if c in grid]
        cand = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        return cand[cand != agent_id]


# ---------------------------------------------------------------------------
# Reference per-agent operations
# ---------------------------------------------------------------------------


def neighbors(space: FlockSpace, agent_id: int) -> list[Neighbor]:
    """All agents within sensor range, sorted by ascending distance then id."""
    cfg = space.config
    cand = space.candidate_indices(agent_id)
    if len(cand) == 0:
        return []
    delta = wrap_delta(
        space.positions[cand] - space.positions[agent_id], cfg.extents
    )
    dist = np.hypot(delta[:, 0], delta[:, 1])
    keep = dist <= cfg.sensor_range
    cand, delta, dist = cand[keep], delta[keep], dist[keep]
    order = np.lexsort((cand, dist))
    return [
        Neighbor(
            agent=space.agent(int(cand[k])),
            displacement=delta[k].copy(),
            distance=float(dist[k]),
        )
        for k in order
    ]


def perceive(
    space: FlockSpace, agent_id: int, provider: SimilarityProvider
) -> list[Neighbor]:
    """Like ``neighbors`` but with descriptor similarity filled in."""
    return [
        replace(
            n, similarity=space.pair_similarity(agent_id, n.agent.id, provider)
        )
        for n in neighbors(space, agent_id)
    ]


def _vec_sum(terms: list[np.ndarray]) -> np.ndarray:
    total = np.zeros(2)
    for t in terms:
        total = total + t
    return total


def alignment_velocity(similar_neighbors: list[Neighbor]) -> np.ndarray:
    """Sum of the similar neighbors' velocities."""
    return _vec_sum([n.agent.velocity for n in similar_neighbors])


def cohesion_velocity(similar_neighbors: list[Neighbor]) -> np.ndarray:
    """Sum of shortest displacements toward the similar neighbors."""
    return _vec_sum([n.displacement for n in similar_neighbors])


def separation_velocity(
    agent: Agent, colliding_neighbors: list[Neighbor], config: SpaceConfig
) -> np.ndarray:
    """Push away from neighbors inside the collision radius.

    Default mode sums unit vectors away from each collider weighted by inverse
    distance.  The literal mode instead averages the two velocities over the
    distance — a variant that does not point away from the neighbor; it is
    off by default.
    """
    guard = config.eps_div
    terms = []
    for n in colliding_neighbors:
        safe_d = max(n.distance, guard)
        if config.literal_separation:
            terms.append((n.agent.velocity + agent.velocity) / 2 / safe_d)
        else:
            unit_away = -n.displacement / safe_d
            terms.append(unit_away / safe_d)
    return _vec_sum(terms)


def similarity_velocity(
    similar_neighbors: list[Neighbor], config: SpaceConfig
) -> np.ndarray:
    """Attraction toward similar neighbors, each term scaled by sim * distance."""
    guard = config.eps_div
    terms = []
    for n in similar_neighbors:
        unit_toward = n.displacement / max(n.distance, guard)
        terms.append(n.similarity * n.distance * unit_toward)
    return _vec_sum(terms)


def dissimilarity_velocity(
    dissimilar_neighbors: list[Neighbor], config: SpaceConfig
) -> np.ndarray:
    """Repulsion from dissimilar neighbors, inverse in sim * distance.

    Division guards keep the force finite when similarity or distance
    approaches zero.
    """
    guard = config.eps_div
    terms = []
    for n in dissimilar_neighbors:
        safe_d = max(n.distance, guard)
        magnitude = 1.0 / (max(n.similarity, guard) * safe_d)
        unit_away = -n.displacement / safe_d
        terms.append(magnitude * unit_away)
    return _vec_sum(terms)


def _limit_speed(v: np.ndarray, previous: np.ndarray, config: SpaceConfig) -> np.ndarray:
    speed = math.hypot(v[0], v[1])
    if speed == 0.0:
        prev_speed = math.hypot(previous[0], previous[1])
        if prev_speed == 0.0:
            return np.zeros(2)
        return previous / prev_speed * (config.v_max / 2)
    if speed > config.v_max:
        return v * (config.v_max / speed)
    return v


def total_velocity(
    space: FlockSpace,
    agent_id: int,
    weights: FlockWeights,
    provider: SimilarityProvider,
) -> np.ndarray:
    """Reference weighted combination of all five steering components.

    Alignment, cohesion, and the similarity attraction act on neighbors at or
    above the ``lam`` similarity threshold; the dissimilarity repulsion on
    those below it; separation on every neighbor inside the collision radius.
    The combined velocity is speed-capped; a zero combination falls back to
    the previous heading at half the cap.
    """
    cfg = space.config
    agent = space.agent(agent_id)
    nbrs = perceive(space, agent_id, provider)
    similar = [n for n in nbrs if n.similarity >= cfg.lam]
    dissimilar = [n for n in nbrs if n.similarity < cfg.lam]
    colliding = [n for n in nbrs if n.distance <= cfg.separation_radius]
    v = (
        weights.alignment * alignment_velocity(similar)
        + weights.separation * separation_velocity(agent, colliding, cfg)
        + weights.cohesion * cohesion_velocity(similar)
        + weights.similarity * similarity_velocity(similar, cfg)
        + weights.dissimilarity * dissimilarity_velocity(dissimilar, cfg)
    )
    return _limit_speed(v, agent.velocity, cfg)


# ---------------------------------------------------------------------------
# Vectorized synchronous step
# ---------------------------------------------------------------------------


def _build_pairs(
    space: FlockSpace, radius: float, restrict: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Directed pairs (i, j) within ``radius``, grouped by i in a fixed order.

    Returns (I, J, DX, DY, D) with the shortest toroidal displacement from i
    to j.  ``restrict`` optionally limits both endpoints to an index subset.
    The pair order is a pure function of the agent set and configuration,
    which is what makes step sums reproducible.
    """
    n = len(space)
    extents = space.config.extents
    pos = space.positions
    if n < 2:
        empty = np.empty(0)
        return (
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            empty,
            empty,
            empty,
        )
    cx, cy, ncx, ncy = space._cell_coords()
    if ncx < 3 or ncy < 3:
        # grid window would self-overlap; use all pairs (tiny spaces only)
        grid_i = np.repeat(np.arange(n), n)
        grid_j = np.tile(np.arange(n), n)
    else:
        cell = cx * ncy + cy
        order = np.argsort(cell, kind="stable").astype(np.int64)
        sorted_cells = cell[order]
        seg_i: list[np.ndarray] = []
        seg_j: list[np.ndarray] = []
        base = np.arange(n, dtype=np.int64)
        for ox in (-1, 0, 1):
            for oy in (-1, 0, 1):
                ncell = ((cx + ox) % ncx) * ncy + ((cy + oy) % ncy)
                left = np.searchsorted(sorted_cells, ncell, side="left")
                right = np.searchsorted(sorted_cells, ncell, side="right")
                counts = right - left
                total = int(counts.sum())
                if total == 0:
                    continue
                starts = np.repeat(left, counts)
                within = np.arange(total) - np.repeat(
                    np.cumsum(counts) - counts, counts
                )
                seg_j.append(order[starts + within])
                seg_i.append(np.repeat(base, counts))
        if seg_i:
            grid_i = np.concatenate(seg_i)
            grid_j = np.concatenate(seg_j)
        else:
            grid_i = np.empty(0, dtype=np.int64)
            grid_j = np.empty(0, dtype=np.int64)

    keep = grid_i != grid_j
    if restrict is not None:
        allowed = np.zeros(n, dtype=bool)
        allowed[restrict] = True
        keep &= allowed[grid_i] & allowed[grid_j]
    grid_i, grid_j = grid_i[keep], grid_j[keep]
    delta = wrap_delta(pos[grid_j] - pos[grid_i], extents)
    dist = np.hypot(delta[:, 0], delta[:, 1])
    keep = dist <= radius
    grid_i, grid_j = grid_i[keep], grid_j[keep]
    delta, dist = delta[keep], dist[keep]
    # group by source agent so per-agent sums are contiguous
    perm = np.argsort(grid_i, kind="stable")
    return (
        grid_i[perm],
        grid_j[perm],
        delta[perm, 0],
        delta[perm, 1],
        dist[perm],
    )


def _pair_contributions(
    space: FlockSpace,
    weights: FlockWeights,
    provider: SimilarityProvider,
    pairs: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pair weighted force contributions, shape (P, 2), plus the I array."""
    cfg = space.config
    src, dst, dx, dy, dist = pairs
    sims = space.pair_similarities(src, dst, provider)
    similar = sims >= cfg.lam
    colliding = dist <= cfg.separation_radius
    safe_d = np.maximum(dist, cfg.eps_div)

    # coefficients multiplying the displacement vector (i -> j)
    disp_coef = np.where(similar, weights.cohesion, 0.0)
    disp_coef = disp_coef + np.where(
        similar, weights.similarity * sims * dist / safe_d, 0.0
    )
    disp_coef = disp_coef - np.where(
        ~similar,
        weights.dissimilarity / (np.maximum(sims, cfg.eps_div) * safe_d * safe_d),
        0.0,
    )
    vel_coef = np.where(similar, weights.alignment, 0.0)
    if cfg.literal_separation:
        half_over_d = np.where(colliding, weights.separation * 0.5 / safe_d, 0.0)
        vel_coef = vel_coef + half_over_d
        own_coef = half_over_d
    else:
        disp_coef = disp_coef - np.where(
            colliding, weights.separation / (safe_d * safe_d), 0.0
        )
        own_coef = None

    vel = space.velocities
    contrib = disp_coef[:, None] * np.column_stack((dx, dy))
    contrib = contrib + vel_coef[:, None] * vel[dst]
    if own_coef is not None:
        contrib = contrib + own_coef[:, None] * vel[src]
    return src, contrib[:, 0], contrib[:, 1]


def _accumulate(
    n: int, src: np.ndarray, fx: np.ndarray, fy: np.ndarray
) -> np.ndarray:
    out = np.zeros((n, 2))
    out[:, 0] = np.bincount(src, weights=fx, minlength=n)
    out[:, 1] = np.bincount(src, weights=fy, minlength=n)
    return out


def _accumulate_parallel(
    n: int, src: np.ndarray, fx: np.ndarray, fy: np.ndarray, n_jobs: int
) -> np.ndarray:
    """Chunked accumulation, bit-identical to ``_accumulate``.

    Chunks split only at source-agent group boundaries, so each agent's sum is
    computed by exactly one worker in the same order as the serial path.
    """
    out = np.zeros((n, 2))
    if len(src) == 0:
        return out
    edges = np.linspace(0, n, n_jobs + 1).astype(np.int64)
    cuts = np.searchsorted(src, edges)

    def work(k: int) -> None:
        lo, hi = cuts[k], cuts[k + 1]
        if lo == hi:
            return
        a, b = edges[k], edges[k + 1]
        out[a:b, 0] = np.bincount(
            src[lo:hi] - a, weights=fx[lo:hi], minlength=b - a
        )
        out[a:b, 1] = np.bincount(
            src[lo:hi] - a, weights=fy[lo:hi], minlength=b - a
        )

    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        list(pool.map(work, range(n_jobs)))
    return out


def step(
    space: FlockSpace,
    weights: FlockWeights,
    provider: SimilarityProvider,
    parallel: bool = False,
    n_jobs: int = 4,
) -> FlockSpace:
    """Advance every agent by one synchronous tick, in place.

    Phase one computes all new velocities from a read-only snapshot; phase two
    commits positions (wrapped back into bounds) and rebuilds the grid index.
    The result is bit-identical for a fixed seed, tick, and agent set,
    regardless of ``parallel``.
    """
    cfg = space.config
    n = len(space)
    pairs = _build_pairs(space, cfg.sensor_range)
    src, fx, fy = _pair_contributions(space, weights, provider, pairs)
    if parallel and n > 1:
        v = _accumulate_parallel(n, src, fx, fy, n_jobs)
    else:
        v = _accumulate(n, src, fx, fy)

    speed = np.hypot(v[:, 0], v[:, 1])
    over = speed > cfg.v_max
    if np.any(over):
        v[over] *= (cfg.v_max / speed[over])[:, None]
    stalled = np.flatnonzero(speed == 0.0)
    if len(stalled):
        prev = space.velocities[stalled]
        prev_speed = np.hypot(prev[:, 0], prev[:, 1])
        moving = prev_speed > 0.0
        v[stalled[moving]] = (
            prev[moving] / prev_speed[moving, None] * (cfg.v_max / 2)
        )

    if cfg.heading_jitter > 0.0:
        # seeded per-(agent, tick) heading perturbation: keeps co-moving
        # clumps exploring so similar clumps keep meeting and merging;
        # a speed-preserving rotation, so the v_max clamp still holds
        angles = substream(cfg.seed, "jitter", space.tick).normal(
            0.0, cfg.heading_jitter, size=n
        )
        cos_a, sin_a = np.cos(angles), np.sin(angles)
        vx = cos_a * v[:, 0] - sin_a * v[:, 1]
        vy = sin_a * v[:, 0] + cos_a * v[:, 1]
        v = np.column_stack((vx, vy))

    pos = space.positions
    pos += v
    np.mod(pos, cfg.extents, out=pos)
    pos[pos >= cfg.extents] = 0.0
    space.velocities[:] = v
    space.tick += 1
    space._grid = None
    return space


def run_steps(
    space: FlockSpace,
    weights: FlockWeights,
    provider: SimilarityProvider,
    n_ticks: int,
    parallel: bool = False,
) -> FlockSpace:
    """Run ``n_ticks`` consecutive steps."""
    for _ in range(n_ticks):
        step(space, weights, provider, parallel=parallel)
    return space


def epsilon_neighborhood(
    space: FlockSpace,
    point: np.ndarray,
    epsilon: float | None = None,
    real_only: bool = True,
    exclude: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Agents within epsilon of an arbitrary point, sorted by (distance, id).

    Uses a direct scan so it stays correct for radii beyond the sensor range.
    Honors the configured inclusive/strict boundary rule.
    """
    cfg = space.config
    eps = cfg.epsilon if epsilon is None else epsilon
    delta = wrap_delta(space.positions - np.asarray(point, dtype=float),
                       cfg.extents)
    dist = np.hypot(delta[:, 0], delta[:, 1])
    keep = dist < eps if cfg.strict_epsilon else dist <= eps
    if real_only:
        keep &= ~space.virtual_mask
    if exclude is not None:
        keep[exclude] = False
    idx = np.flatnonzero(keep)
    order = np.lexsort((idx, dist[idx]))
    return idx[order], dist[idx][order]
