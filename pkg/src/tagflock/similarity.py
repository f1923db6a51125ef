"""Semantic similarity between tags and between service descriptors.

Tags are reduced to lowercase base forms through a fixed suffix ladder checked
against a provider vocabulary.  Tag-pair scores in [0, 1] come from a pluggable
provider (distributional PPMI/cosine model, precomputed table, or synthetic
oracle) and are cached symmetrically.  Service-level similarity is the
symmetric best-match average of tag-pair scores.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, EmptyModelError, ValidationError
from .rng import substream

__all__ = [
    "Tag",
    "ServiceDescriptor",
    "DistributionalModel",
    "SimilarityCache",
    "SimilarityProvider",
    "DistributionalProvider",
    "TableProvider",
    "ExactMatchProvider",
    "SyntheticOracleProvider",
    "normalize_tag",
    "build_distributional_model",
    "tag_similarity",
    "service_similarity",
    "load_similarity_table",
]


@dataclass(frozen=True)
class Tag:
    """A descriptor tag: the original surface text plus its lowercase base form."""

    surface: str
    base: str


@dataclass(frozen=True)
class ServiceDescriptor:
    """A service identified by an id and described by a non-empty tag list."""

    id: str
    name: str
    tags: tuple[Tag, ...]

    def __post_init__(self) -> None:
        if not self.tags:
            raise ValidationError(f"service {self.id!r} has no tags")

    @property
    def bases(self) -> tuple[str, ...]:
        return tuple(t.base for t in self.tags)

    @classmethod
    def from_raw(
        cls, id: str, name: str, raw_tags: Sequence[str], vocab
    ) -> "ServiceDescriptor":
        """Normalize raw tag strings and drop duplicate base forms (keep first)."""
        if not raw_tags:
            raise ValidationError(f"service {id!r} has no tags")
        tags: list[Tag] = []
        seen: set[str] = set()
        for raw in raw_tags:
            tag = normalize_tag(raw, vocab)
            if tag.base not in seen:
                seen.add(tag.base)
                tags.append(tag)
        return cls(id=id, name=name, tags=tuple(tags))


def normalize_tag(raw: str, vocab) -> Tag:
    """Reduce ``raw`` to a lowercase base form validated against ``vocab``.

    Candidate bases are tried in a fixed order: the lowercase identity, then
    suffix-stripped variants (-s, -es, -ing with restored e, -ing, -ed with
    restored e, -ed).  The first candidate present in ``vocab`` wins; when none
    match, the lowercase identity is kept.  The reduction is idempotent.
    """
    if raw is None or not raw.strip():
        raise ValidationError("tag text must be non-empty")
    surface = raw.strip()
    lowered = surface.lower()
    candidates = [lowered]
    if lowered.endswith("s"):
        candidates.append(lowered[:-1])
    if lowered.endswith("es"):
        candidates.append(lowered[:-2])
    if lowered.endswith("ing"):
        stem = lowered[:-3]
        candidates.append(stem + "e")
        candidates.append(stem)
    if lowered.endswith("ed"):
        stem = lowered[:-2]
        candidates.append(stem + "e")
        candidates.append(stem)
    for candidate in candidates:
        if candidate and candidate in vocab:
            return Tag(surface=surface, base=candidate)
    return Tag(surface=surface, base=lowered)


# ---------------------------------------------------------------------------
# Distributional model (PPMI over a symmetric co-occurrence window)
# ---------------------------------------------------------------------------


@dataclass
class DistributionalModel:
    """PPMI-weighted co-occurrence vectors for every vocabulary word."""

    index: dict[str, int]
    matrix: sparse.csr_matrix
    norms: np.ndarray
    window: int
    min_count: int

    @property
    def vocabulary(self) -> set[str]:
        return set(self.index)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def vector(self, word: str) -> np.ndarray:
        """Dense PPMI vector of ``word``; raises KeyError if out of vocabulary."""
        return np.asarray(self.matrix[self.index[word]].todense()).ravel()

    def cosine(self, a: str, b: str) -> float:
        """Cosine similarity of the PPMI vectors of two in-vocabulary words."""
        ia, ib = self.index[a], self.index[b]
        na, nb = self.norms[ia], self.norms[ib]
        if na == 0.0 or nb == 0.0:
            return 0.0
        dot = self.matrix[ia].multiply(self.matrix[ib]).sum()
        return float(dot / (na * nb))


def build_distributional_model(
    tokens: Iterable[str], window: int = 2, min_count: int = 1
) -> DistributionalModel:
    """Build a PPMI model from a token stream.

    Co-occurrence counts use a symmetric window of ``window`` tokens on each
    side over the raw stream; only pairs whose words both meet ``min_count``
    are kept.  PMI values below zero are clamped to zero.
    """
    if window < 1:
        raise ConfigurationError("window must be >= 1")
    if min_count < 1:
        raise ConfigurationError("min_count must be >= 1")
    toks = list(tokens)
    if not toks:
        raise EmptyModelError("corpus is empty")
    frequencies = Counter(toks)
    vocab = sorted(w for w, c in frequencies.items() if c >= min_count)
    if not vocab:
        raise EmptyModelError(
            f"no word reaches min_count={min_count}; corpus too small"
        )
    index = {w: i for i, w in enumerate(vocab)}
    size = len(vocab)
    ids = np.array([index.get(t, -1) for t in toks], dtype=np.int64)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    for offset in range(1, window + 1):
        left = ids[:-offset] if offset < len(ids) else ids[:0]
        right = ids[offset:]
        ok = (left >= 0) & (right >= 0)
        # count each ordered direction once so the matrix comes out symmetric
        rows.append(left[ok])
        cols.append(right[ok])
        rows.append(right[ok])
        cols.append(left[ok])
    row = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    col = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    counts = sparse.coo_matrix(
        (np.ones(len(row)), (row, col)), shape=(size, size)
    ).tocsr()
    counts.sum_duplicates()

    total = counts.sum()
    if total == 0:
        # single in-vocabulary token with no in-vocabulary context
        ppmi = counts
    else:
        marginals = np.asarray(counts.sum(axis=1)).ravel()
        coo = counts.tocoo()
        pmi = np.log(coo.data * total / (marginals[coo.row] * marginals[coo.col]))
        np.maximum(pmi, 0.0, out=pmi)
        ppmi = sparse.coo_matrix((pmi, (coo.row, coo.col)), shape=(size, size)).tocsr()
        ppmi.eliminate_zeros()
    norms = np.sqrt(np.asarray(ppmi.multiply(ppmi).sum(axis=1)).ravel())
    return DistributionalModel(
        index=index, matrix=ppmi, norms=norms, window=window, min_count=min_count
    )


# ---------------------------------------------------------------------------
# Providers and caching
# ---------------------------------------------------------------------------


class SimilarityCache:
    """Symmetric tag-pair score cache; insertion is atomic per pair."""

    def __init__(self) -> None:
        self._entries: dict[tuple[str, str], float] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a <= b else (b, a)

    def get(self, a: str, b: str) -> float | None:
        return self._entries.get(self._key(a, b))

    def put(self, a: str, b: str, score: float) -> float:
        """Store a score; the first writer for a pair wins."""
        with self._lock:
            return self._entries.setdefault(self._key(a, b), score)

    def __len__(self) -> int:
        return len(self._entries)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


class SimilarityProvider:
    """Base provider: symmetric, cached tag-pair similarity in [0, 1].

    Identical base forms score 1.0 outright.  A pair with either word out of
    vocabulary scores 0.0 and bumps ``oov_lookups`` — unknown words degrade
    retrieval quality rather than raising, and the counter makes the
    degradation observable.  Subclasses implement ``in_vocabulary`` and
    ``_pair_score`` for distinct in-vocabulary words.
    """

    #: recipe for rebuilding this provider from a snapshot, when known
    spec: dict | None = None

    def __init__(self) -> None:
        self.cache = SimilarityCache()
        self.oov_lookups = 0

    def in_vocabulary(self, word: str) -> bool:
        raise NotImplementedError

    def __contains__(self, word: str) -> bool:
        # lets a provider double as the vocabulary for tag normalization
        return self.in_vocabulary(word)

    def _pair_score(self, a: str, b: str) -> float:
        raise NotImplementedError

    def similarity(self, a: str, b: str) -> float:
        """Similarity of two base forms in [0, 1]; symmetric and cached."""
        if a == b:
            return 1.0
        cached = self.cache.get(a, b)
        if cached is not None:
            return cached
        if not self.in_vocabulary(a) or not self.in_vocabulary(b):
            self.oov_lookups += 1
            score = 0.0
        else:
            score = _clamp01(self._pair_score(a, b))
        return self.cache.put(a, b, score)


class DistributionalProvider(SimilarityProvider):
    """Cosine similarity over PPMI vectors, clamped to [0, 1]."""

    def __init__(self, model: DistributionalModel, spec: dict | None = None) -> None:
        super().__init__()
        self.model = model
        self.spec = spec

    def in_vocabulary(self, word: str) -> bool:
        return word in self.model

    def _pair_score(self, a: str, b: str) -> float:
        return self.model.cosine(a, b)


class TableProvider(SimilarityProvider):
    """Similarity read from a precomputed word-pair table."""

    def __init__(
        self, scores: dict[tuple[str, str], float], spec: dict | None = None
    ) -> None:
        super().__init__()
        self.scores = scores
        self.words = {w for pair in scores for w in pair}
        self.spec = spec

    def in_vocabulary(self, word: str) -> bool:
        return word in self.words

    def _pair_score(self, a: str, b: str) -> float:
        # pairs never listed in the table count as unrelated
        return self.scores.get((a, b) if a <= b else (b, a), 0.0)


class ExactMatchProvider(SimilarityProvider):
    """Degenerate provider: identical bases score 1.0, everything else 0.0."""

    spec = {"kind": "exact"}

    def in_vocabulary(self, word: str) -> bool:
        return True

    def _pair_score(self, a: str, b: str) -> float:
        return 0.0


class SyntheticOracleProvider(SimilarityProvider):
    """Ground-truth oracle for synthetic corpora.

    Pairs from the same category score ``intra_sim``, cross-category pairs
    ``inter_sim``, both perturbed by seeded Gaussian noise that is a pure
    function of (seed, pair) and clamped back into [0, 1].
    """

    def __init__(
        self,
        categories: dict[str, int],
        intra_sim: float,
        inter_sim: float,
        noise_sigma: float = 0.0,
        seed: int = 0,
        spec: dict | None = None,
    ) -> None:
        super().__init__()
        if not 0.0 <= inter_sim < intra_sim <= 1.0:
            raise ConfigurationError(
                f"need 0 <= inter_sim < intra_sim <= 1, got {inter_sim}/{intra_sim}"
            )
        if noise_sigma < 0.0:
            raise ConfigurationError("noise_sigma must be >= 0")
        self.categories = categories
        self.intra_sim = intra_sim
        self.inter_sim = inter_sim
        self.noise_sigma = noise_sigma
        self.seed = seed
        self.spec = spec

    def in_vocabulary(self, word: str) -> bool:
        return word in self.categories

    def _pair_score(self, a: str, b: str) -> float:
        lo, hi = (a, b) if a <= b else (b, a)
        base = (
            self.intra_sim
            if self.categories[a] == self.categories[b]
            else self.inter_sim
        )
        if self.noise_sigma == 0.0:
            return base
        noise = substream(self.seed, "oracle", lo, hi).normal(0.0, self.noise_sigma)
        return base + float(noise)


def tag_similarity(a: Tag, b: Tag, provider: SimilarityProvider) -> float:
    """Similarity between two normalized tags via the provider."""
    return provider.similarity(a.base, b.base)


def service_similarity(
    s1: ServiceDescriptor, s2: ServiceDescriptor, provider: SimilarityProvider
) -> float:
    """Symmetric best-match average of tag similarities between two services.

    Each tag contributes its best match on the other side; the two directed
    sums are pooled and divided by the total tag count, which bounds the
    result to [0, 1], makes it symmetric, and yields 1.0 on identical tag
    sets.
    """
    if not s1.tags or not s2.tags:
        raise ValidationError("service similarity requires non-empty tag lists")
    b1, b2 = s1.bases, s2.bases
    pair = {
        (x, y): provider.similarity(x, y) for x in set(b1) for y in set(b2)
    }
    forward = sum(max(pair[(x, y)] for y in b2) for x in b1)
    backward = sum(max(pair[(x, y)] for x in b1) for y in b2)
    return (forward + backward) / (len(b1) + len(b2))


def load_similarity_table(path) -> TableProvider:
    """Load a tab-separated ``word1 word2 score`` table.

    Pairs are unordered; later duplicates override earlier entries.  Scores
    must parse as decimals in [0, 1].
    """
    scores: dict[tuple[str, str], float] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ValidationError(
                    f"{path}:{lineno}: expected 'word1<TAB>word2<TAB>score'"
                )
            a, b, raw_score = parts
            try:
                score = float(raw_score)
            except ValueError as exc:
                raise ValidationError(
                    f"{path}:{lineno}: score {raw_score!r} is not a number"
                ) from exc
            if not math.isfinite(score) or not 0.0 <= score <= 1.0:
                raise ValidationError(
                    f"{path}:{lineno}: score {score} outside [0, 1]"
                )
            if not a or not b:
                raise ValidationError(f"{path}:{lineno}: empty word")
            a, b = a.lower(), b.lower()
            scores[(a, b) if a <= b else (b, a)] = score
    return TableProvider(scores, spec={"kind": "table", "path": str(path)})
