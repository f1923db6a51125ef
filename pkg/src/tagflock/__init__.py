"""tagflock: flocking-based stream clustering and retrieval for tagged services.

Service descriptors become agents on a bounded 2D torus.  Each tick every
agent steers by five weighted components — alignment, separation, cohesion,
similarity attraction, and dissimilarity repulsion — where the last two are
scaled by the semantic similarity of the descriptors involved.  Similar
services end up flying together; clusters are just the connected
epsilon-components of the settled positions, and a retrieval query is a
temporary virtual agent whose neighborhood is harvested once it has joined a
flock.
"""

from .corpus import (
    CorpusRecord,
    SyntheticSpec,
    generate_synthetic,
    holdout_queries,
    labels_by_id,
    load_corpus,
    load_queries,
    read_text_tokens,
    to_descriptors,
    write_corpus,
)
from .errors import (
    ConfigurationError,
    EmptyModelError,
    IngestError,
    InvalidQueryError,
    InvariantViolation,
    TagflockError,
    ValidationError,
)
from .estimator import FlockStreamClusterer
from .experiment import run_experiment
from .flockspace import (
    REAL,
    VIRTUAL,
    Agent,
    FlockSpace,
    FlockWeights,
    Neighbor,
    SpaceConfig,
    distance,
    epsilon_neighborhood,
    neighbors,
    perceive,
    run_steps,
    step,
    total_velocity,
    wrap_delta,
)
from .search import (
    LabeledQuery,
    Query,
    ResultSet,
    SearchHit,
    cluster_purity,
    evaluate,
    make_virtual_agent,
    search,
)
from .similarity import (
    DistributionalProvider,
    ExactMatchProvider,
    ServiceDescriptor,
    SimilarityProvider,
    SyntheticOracleProvider,
    TableProvider,
    Tag,
    build_distributional_model,
    load_similarity_table,
    normalize_tag,
    service_similarity,
    tag_similarity,
)
from .snapshot import load_snapshot, provider_from_spec, save_snapshot
from .stream import (
    BatchConfig,
    ClusterAssignment,
    absorb_batch,
    deploy,
    extract_clusters,
    initialize,
)

__version__ = "0.1.0"

__all__ = [
    "REAL",
    "VIRTUAL",
    "Agent",
    "BatchConfig",
    "ClusterAssignment",
    "ConfigurationError",
    "CorpusRecord",
    "DistributionalProvider",
    "EmptyModelError",
    "ExactMatchProvider",
    "FlockSpace",
    "FlockStreamClusterer",
    "FlockWeights",
    "IngestError",
    "InvalidQueryError",
    "InvariantViolation",
    "LabeledQuery",
    "Neighbor",
    "Query",
    "ResultSet",
    "SearchHit",
    "ServiceDescriptor",
    "SimilarityProvider",
    "SpaceConfig",
    "SyntheticOracleProvider",
    "SyntheticSpec",
    "TableProvider",
    "Tag",
    "TagflockError",
    "ValidationError",
    "absorb_batch",
    "build_distributional_model",
    "cluster_purity",
    "deploy",
    "distance",
    "epsilon_neighborhood",
    "evaluate",
    "extract_clusters",
    "generate_synthetic",
    "holdout_queries",
    "initialize",
    "labels_by_id",
    "load_corpus",
    "load_queries",
    "load_similarity_table",
    "load_snapshot",
    "make_virtual_agent",
    "neighbors",
    "normalize_tag",
    "perceive",
    "provider_from_spec",
    "read_text_tokens",
    "run_experiment",
    "run_steps",
    "save_snapshot",
    "search",
    "service_similarity",
    "step",
    "tag_similarity",
    "to_descriptors",
    "total_velocity",
    "wrap_delta",
    "write_corpus",
]
