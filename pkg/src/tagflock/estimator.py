"""scikit-learn style facade over the flock clustering engine.

``FlockStreamClusterer`` exposes the deploy/settle/absorb lifecycle through
``fit`` / ``partial_fit`` and cluster labels through ``labels_`` (DBSCAN
convention: -1 marks singleton outliers).  ``query`` answers retrieval
requests against the fitted space.  All constructor arguments are plain
scalars so ``get_params`` / ``set_params`` and cloning work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .corpus import CorpusRecord, to_descriptors
from .errors import ValidationError
from .flockspace import FlockWeights, SpaceConfig
from .search import Query, ResultSet, search
from .similarity import ExactMatchProvider, ServiceDescriptor
from .stream import BatchConfig, absorb_batch, extract_clusters, initialize

__all__ = ["FlockStreamClusterer"]


class FlockStreamClusterer(BaseEstimator, ClusterMixin):
    """Self-organizing stream clusterer for tagged service descriptors.

    Parameters mirror the engine's configuration: space geometry and radii,
    the five steering weights, tick budgets for the initial settling phase
    and for each absorbed batch, and the similarity provider (exact tag
    matching when none is given).

    Attributes set by fitting: ``space_`` (the live space), ``assignment_``
    (the epsilon-components), ``labels_`` (per-service cluster labels in
    input order), ``ground_truth_`` (service id -> label, when records carry
    labels).
    """

    def __init__(
        self,
        provider=None,
        width: float = 100.0,
        height: float = 100.0,
        sensor_range: float = 8.0,
        separation_radius: float = 2.0,
        epsilon: float = 3.0,
        lam: float = 0.5,
        v_max: float = 2.0,
        eps_div: float = 1e-6,
        seed: int = 0,
        heading_jitter: float = 0.45,
        w_alignment: float = 0.3,
        w_separation: float = 1.0,
        w_cohesion: float = 0.3,
        w_similarity: float = 1.0,
        w_dissimilarity: float = 1.0,
        init_iterations: int = 1000,
        maintenance_iterations: int = 500,
        parallel: bool = False,
    ) -> None:
        self.provider = provider
        self.width = width
        self.height = height
        self.sensor_range = sensor_range
        self.separation_radius = separation_radius
        self.epsilon = epsilon
        self.lam = lam
        self.v_max = v_max
        self.eps_div = eps_div
        self.seed = seed
        self.heading_jitter = heading_jitter
        self.w_alignment = w_alignment
        self.w_separation = w_separation
        self.w_cohesion = w_cohesion
        self.w_similarity = w_similarity
        self.w_dissimilarity = w_dissimilarity
        self.init_iterations = init_iterations
        self.maintenance_iterations = maintenance_iterations
        self.parallel = parallel

    # -- assembly ------------------------------------------------------------

    def _space_config(self) -> SpaceConfig:
        return SpaceConfig(
            width=self.width,
            height=self.height,
            sensor_range=self.sensor_range,
            separation_radius=self.separation_radius,
            epsilon=self.epsilon,
            lam=self.lam,
            v_max=self.v_max,
            eps_div=self.eps_div,
            seed=self.seed,
            heading_jitter=self.heading_jitter,
        )

    def _weights(self) -> FlockWeights:
        return FlockWeights(
            alignment=self.w_alignment,
            separation=self.w_separation,
            cohesion=self.w_cohesion,
            similarity=self.w_similarity,
            dissimilarity=self.w_dissimilarity,
        )

    def _batch(self) -> BatchConfig:
        return BatchConfig(
            init_iterations=self.init_iterations,
            maintenance_iterations=self.maintenance_iterations,
        )

    def _coerce(self, X) -> list[ServiceDescriptor]:
        descriptors: list[ServiceDescriptor] = []
        for item in X:
            if isinstance(item, ServiceDescriptor):
                descriptors.append(item)
                continue
            if isinstance(item, dict):
                item = CorpusRecord(
                    id=str(item["id"]),
                    name=str(item.get("name", item["id"])),
                    tags=tuple(item["tags"]),
                    label=item.get("label"),
                )
            if not isinstance(item, CorpusRecord):
                raise ValidationError(
                    "expected ServiceDescriptor, CorpusRecord, or dict items, "
                    f"got {type(item).__name__}"
                )
            if item.label is not None:
                self.ground_truth_[item.id] = item.label
            descriptors.extend(to_descriptors([item], self.provider_))
        return descriptors

    def _refresh_labels(self) -> None:
        self.assignment_ = extract_clusters(self.space_)
        labels = np.full(len(self.space_.real_agent_ids), -1, dtype=int)
        next_label = 0
        for members in self.assignment_.clusters:
            if len(members) == 1:
                continue
            for member in members:
                labels[member] = next_label
            next_label += 1
        self.labels_ = labels
        self.n_clusters_ = next_label

    # -- estimator API -------------------------------------------------------

    def fit(self, X, y=None):
        """Deploy all services, run the settling phase, extract clusters."""
        self.provider_ = (
            self.provider if self.provider is not None else ExactMatchProvider()
        )
        self.ground_truth_: dict[str, str] = {}
        descriptors = self._coerce(X)
        self.space_ = initialize(
            descriptors,
            self._space_config(),
            self._weights(),
            self.provider_,
            self._batch(),
            parallel=self.parallel,
        )
        self._refresh_labels()
        return self

    def partial_fit(self, X, y=None):
        """Absorb one batch online; the first call behaves like ``fit``."""
        if not hasattr(self, "space_"):
            return self.fit(X, y)
        descriptors = self._coerce(X)
        absorb_batch(
            self.space_,
            descriptors,
            self._weights(),
            self.provider_,
            self._batch(),
            parallel=self.parallel,
        )
        self._refresh_labels()
        return self

    def query(
        self,
        tags,
        max_iterations: int = 200,
        num_results: int = 10,
        epsilon: float | None = None,
    ) -> ResultSet:
        """Retrieve services matching the given raw tags from the fitted space."""
        if not hasattr(self, "space_"):
            raise ValidationError("estimator is not fitted; call fit first")
        request = Query(
            tags=tuple(tags),
            max_iterations=max_iterations,
            num_results=num_results,
            epsilon_override=epsilon,
        )
        return search(
            self.space_,
            request,
            self.provider_,
            self._weights(),
            parallel=self.parallel,
        )
