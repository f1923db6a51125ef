import math

import numpy as np
import pytest

import tagflock as tf

TOY_TOKENS = (
    "send mail to the mail box and the box stores mail "
    "price quote for the quote service price service quote"
).split()


def brute_ppmi_cosine(tokens, window, a, b):
    """Independent dense PPMI/cosine oracle (plain dict counting)."""
    vocab = sorted(set(tokens))
    index = {w: i for i, w in enumerate(vocab)}
    size = len(vocab)
    counts = np.zeros((size, size))
    for pos, tok in enumerate(tokens):
        for off in range(1, window + 1):
            if pos + off < len(tokens):
                counts[index[tok], index[tokens[pos + off]]] += 1
                counts[index[tokens[pos + off]], index[tok]] += 1
    total = counts.sum()
    marg = counts.sum(axis=1)
    ppmi = np.zeros_like(counts)
    for i in range(size):
        for j in range(size):
            if counts[i, j] > 0:
                ppmi[i, j] = max(
                    0.0, math.log(counts[i, j] * total / (marg[i] * marg[j]))
                )
    va, vb = ppmi[index[a]], ppmi[index[b]]
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        return 0.0
    return float(va @ vb / (na * nb))


def _oracle_corpus():
    spec = tf.SyntheticSpec(
        categories=3,
        services_per_category=12,
        tags_per_service=4,
        intra_sim=0.9,
        inter_sim=0.1,
        noise_sigma=0.0,
        seed=11,
    )
    records, provider = tf.generate_synthetic(spec)
    return records, provider, tf.labels_by_id(records)


@pytest.fixture
def oracle_setup():
    """Small noiseless synthetic corpus: 3 categories x 12 services."""
    return _oracle_corpus()


@pytest.fixture(scope="session")
def oracle_module_setup():
    """Session-shared copy of the same corpus for expensive settled spaces."""
    return _oracle_corpus()


@pytest.fixture
def exact_provider():
    return tf.ExactMatchProvider()


def make_descriptor(service_id, bases, provider=None):
    """Descriptor whose tags normalize to the given base forms."""
    vocab = provider if provider is not None else tf.ExactMatchProvider()
    return tf.ServiceDescriptor.from_raw(
        id=service_id, name=service_id, raw_tags=list(bases), vocab=vocab
    )


def brute_force_neighbors(space, agent_id, radius):
    """All-pairs oracle for the grid-backed neighbor query."""
    out = []
    for j in range(len(space)):
        if j == agent_id:
            continue
        d = tf.distance(space.positions[agent_id], space.positions[j], space.config)
        if d <= radius:
            out.append((j, d))
    out.sort(key=lambda pair: (pair[1], pair[0]))
    return out


def random_space(n, seed, config=None):
    """Space with n uniformly placed single-tag agents and zero velocity."""
    cfg = config if config is not None else tf.SpaceConfig(seed=seed)
    rng = np.random.default_rng(seed)
    space = tf.FlockSpace(cfg)
    provider = tf.ExactMatchProvider()
    for i in range(n):
        desc = make_descriptor(f"a{i}", [f"tag{i}"], provider)
        pos = rng.uniform([0, 0], [cfg.width, cfg.height])
        space.add_agent(desc, pos, np.zeros(2))
    return space
