"""End-to-end acceptance checks.

Each test covers one release criterion and prints a single verdict line on
success; a failing criterion shows up as a normal pytest failure instead.
The heavyweight retrieval and stream checks run real multi-thousand-tick
simulations, so this module dominates the suite's wall time.
"""

import json
import statistics
import time

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

import tagflock as tf
from tagflock.flockspace import (
    _build_pairs,
    dissimilarity_velocity,
    similarity_velocity,
)
from tagflock.snapshot import serialize_space

from conftest import TOY_TOKENS, brute_ppmi_cosine, make_descriptor


def _verdict(label: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance] {label}: PASS{suffix}", flush=True)


def _synthetic_spec(seed: int) -> tf.SyntheticSpec:
    """The standard benchmark corpus: 4 categories x 50 services."""
    return tf.SyntheticSpec(
        categories=4,
        services_per_category=50,
        tags_per_service=5,
        intra_sim=0.9,
        inter_sim=0.1,
        noise_sigma=0.05,
        seed=seed,
    )


def _space_fingerprint(space: tf.FlockSpace, weights: tf.FlockWeights) -> str:
    return json.dumps(serialize_space(space, weights), sort_keys=True)


# ---------------------------------------------------------------------------
# 1. Grid-backed neighbor queries vs. an all-pairs scan
# ---------------------------------------------------------------------------


def test_neighbor_queries_match_all_pairs_scan_at_scale():
    n = 1000
    provider = tf.ExactMatchProvider()
    pool = [make_descriptor(f"a{i}", [f"t{i}"], provider) for i in range(n)]

    started = time.perf_counter()
    for seed in range(20):
        cfg = tf.SpaceConfig(seed=seed)
        rng = np.random.default_rng(seed)
        positions = rng.uniform([0, 0], [cfg.width, cfg.height], (n, 2))
        space = tf.FlockSpace(cfg)
        for i in range(n):
            space.add_agent(pool[i], positions[i], np.zeros(2))

        pos = space.positions
        dx = np.mod(pos[None, :, 0] - pos[:, None, 0] + cfg.width / 2, cfg.width)
        dy = np.mod(pos[None, :, 1] - pos[:, None, 1] + cfg.height / 2, cfg.height)
        dist = np.hypot(dx - cfg.width / 2, dy - cfg.height / 2)
        mask = dist <= cfg.sensor_range
        np.fill_diagonal(mask, False)
        exp_i, exp_j = np.nonzero(mask)

        got_i, got_j = _build_pairs(space, cfg.sensor_range)[:2]
        order = np.lexsort((got_j, got_i))
        assert np.array_equal(got_i[order], exp_i)
        assert np.array_equal(got_j[order], exp_j)

        # The ordered per-agent view must agree too, including tie rules.
        for agent_id in range(0, n, 20):
            found = tf.neighbors(space, agent_id)
            idx = np.nonzero(mask[agent_id])[0]
            expected = idx[np.lexsort((idx, dist[agent_id, idx]))]
            assert [nb.agent.id for nb in found] == expected.tolist()
            for nb in found:
                assert nb.distance == pytest.approx(
                    dist[agent_id, nb.agent.id], abs=1e-9
                )
    elapsed = time.perf_counter() - started

    assert elapsed < 5.0, f"neighbor check took {elapsed:.2f}s"
    _verdict(
        "grid neighbor queries equal brute-force scans (20 seeds x 1000 agents)",
        f"{elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# 2. Bit-for-bit reproducibility over a long run, serial and parallel
# ---------------------------------------------------------------------------


def test_long_run_reproducible_bit_for_bit_serial_and_parallel():
    n, ticks = 500, 500
    tags = [f"t{i % 40}" for i in range(n)]
    weights = tf.FlockWeights()

    def run(parallel: bool) -> str:
        provider = tf.SyntheticOracleProvider(
            categories={f"t{k}": k % 4 for k in range(40)},
            intra_sim=0.9,
            inter_sim=0.1,
            noise_sigma=0.05,
            seed=1,
        )
        descs = [make_descriptor(f"a{i}", [tags[i]], provider) for i in range(n)]
        space = tf.deploy(descs, tf.SpaceConfig(seed=17))
        tf.run_steps(space, weights, provider, ticks, parallel=parallel)
        return _space_fingerprint(space, weights)

    first = run(parallel=False)
    again = run(parallel=False)
    threaded = run(parallel=True)
    assert first == again
    assert first == threaded
    _verdict(
        "500 agents x 500 ticks reproduce bit-identically, serial == parallel"
    )


# ---------------------------------------------------------------------------
# 3. Self-organization quality on the synthetic benchmark
# ---------------------------------------------------------------------------


def test_synthetic_corpus_settles_into_pure_clusters():
    purities = []
    for seed in range(5):
        records, provider = tf.generate_synthetic(_synthetic_spec(seed))
        started = time.perf_counter()
        space = tf.initialize(
            tf.to_descriptors(records, provider),
            tf.SpaceConfig(seed=seed),
            tf.FlockWeights(),
            provider,
            tf.BatchConfig(),
        )
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"seed {seed} took {elapsed:.1f}s"
        purities.append(tf.cluster_purity(space, tf.labels_by_id(records)))

    median = statistics.median(purities)
    assert median >= 0.85, f"median purity {median:.3f}, runs {purities}"
    _verdict(
        "median cluster purity over 5 seeds >= 0.85",
        f"median={median:.3f}, runs={[round(p, 3) for p in purities]}",
    )


# ---------------------------------------------------------------------------
# 4. Retrieval precision on held-out queries, with query isolation
# ---------------------------------------------------------------------------


def test_holdout_queries_retrieve_their_own_category():
    weights = tf.FlockWeights()
    scores = []
    for seed in range(5):
        records, provider = tf.generate_synthetic(_synthetic_spec(seed))
        kept, queries = tf.holdout_queries(records, per_category=5)
        assert len(queries) == 20
        labels = tf.labels_by_id(records)
        space = tf.initialize(
            tf.to_descriptors(kept, provider),
            tf.SpaceConfig(seed=seed),
            weights,
            provider,
            tf.BatchConfig(init_iterations=10000),
        )

        precisions = []
        for lq in queries:
            before = _space_fingerprint(space, weights)
            result = tf.search(
                space,
                tf.Query(tags=lq.tags, max_iterations=2000, num_results=10),
                provider,
                weights,
            )
            assert _space_fingerprint(space, weights) == before
            top = result.hits[:10]
            relevant = sum(
                1 for hit in top if labels.get(hit.descriptor.id) == lq.label
            )
            precisions.append(relevant / 10)
        scores.append(statistics.fmean(precisions))

    median = statistics.median(scores)
    assert median >= 0.8, f"median precision@10 {median:.3f}, runs {scores}"
    _verdict(
        "median precision@10 over 5 seeds >= 0.8 and searches never "
        "mutate the live space",
        f"median={median:.3f}, runs={[round(s, 3) for s in scores]}",
    )


# ---------------------------------------------------------------------------
# 5. Similarity-weighted forces vs. independent per-term sums
# ---------------------------------------------------------------------------


def _neighbor_at(displacement, similarity, velocity=(0.0, 0.0), agent_id=1):
    disp = np.asarray(displacement, dtype=float)
    agent = tf.Agent(
        id=agent_id,
        kind=tf.REAL,
        descriptor=make_descriptor(f"n{agent_id}", [f"nt{agent_id}"]),
        position=np.zeros(2),
        velocity=np.asarray(velocity, dtype=float),
    )
    return tf.Neighbor(
        agent=agent,
        displacement=disp,
        distance=float(np.hypot(disp[0], disp[1])),
        similarity=similarity,
    )


def test_similarity_forces_match_per_term_reference_sums():
    cfg = tf.SpaceConfig()
    guard = cfg.eps_div
    rng = np.random.default_rng(2024)

    for trial in range(100):
        count = int(rng.integers(0, 6))
        neighbors = []
        for k in range(count):
            roll = rng.uniform()
            if roll < 0.1:
                disp = np.zeros(2)  # coincident positions
            else:
                disp = rng.uniform(-8.0, 8.0, 2)
            sim = 0.0 if roll > 0.9 else float(rng.uniform())
            neighbors.append(_neighbor_at(disp, sim, agent_id=k + 1))

        v_sim = similarity_velocity(neighbors, cfg)
        v_dsim = dissimilarity_velocity(neighbors, cfg)
        assert np.all(np.isfinite(v_sim)) and np.all(np.isfinite(v_dsim))

        for axis in (0, 1):
            attract = 0.0
            repel = 0.0
            for nb in neighbors:
                unit = nb.displacement[axis] / max(nb.distance, guard)
                attract += nb.similarity * nb.distance * unit
                safe_d = max(nb.distance, guard)
                repel += -unit / (max(nb.similarity, guard) * safe_d)
            assert abs(v_sim[axis] - attract) <= 1e-9, trial
            assert abs(v_dsim[axis] - repel) <= 1e-9, trial

    # Degenerate inputs must never produce inf or NaN.
    for nb in (
        _neighbor_at((3.0, 0.0), 0.0),
        _neighbor_at((0.0, 0.0), 0.5),
        _neighbor_at((0.0, 0.0), 0.0),
    ):
        assert np.all(np.isfinite(dissimilarity_velocity([nb], cfg)))
        assert np.all(np.isfinite(similarity_velocity([nb], cfg)))
    _verdict(
        "100 randomized force configurations match per-term sums within 1e-9; "
        "zero similarity/distance stay finite"
    )


# ---------------------------------------------------------------------------
# 6. Similarity contract at scale + distributional oracle agreement
# ---------------------------------------------------------------------------


def test_descriptor_similarity_contract_on_ten_thousand_pairs():
    vocab = [f"w{i}" for i in range(40)]
    provider = tf.SyntheticOracleProvider(
        categories={w: i % 5 for i, w in enumerate(vocab)},
        intra_sim=0.9,
        inter_sim=0.1,
        noise_sigma=0.1,
        seed=3,
    )
    rng = np.random.default_rng(6)
    descriptors = []
    for i in range(300):
        n_tags = int(rng.integers(1, 6))
        tags = list(rng.choice(vocab, size=n_tags, replace=False))
        descriptors.append(make_descriptor(f"d{i}", tags, provider))

    for desc in descriptors:
        assert tf.service_similarity(desc, desc, provider) == 1.0

    pair_index = rng.integers(0, len(descriptors), size=(10000, 2))
    for i, j in pair_index:
        a, b = descriptors[i], descriptors[j]
        forward = tf.service_similarity(a, b, provider)
        backward = tf.service_similarity(b, a, provider)
        assert forward == backward
        assert 0.0 <= forward <= 1.0

    model = tf.build_distributional_model(TOY_TOKENS, window=2)
    dist_provider = tf.DistributionalProvider(model)
    words = sorted(model.index)
    worst = 0.0
    for a in words:
        for b in words:
            expected = brute_ppmi_cosine(TOY_TOKENS, 2, a, b)
            worst = max(worst, abs(dist_provider.similarity(a, b) - expected))
    assert worst <= 1e-9
    _verdict(
        "10,000 descriptor pairs: symmetric, identity 1.0, range [0, 1]; "
        "co-occurrence cosine matches dense oracle",
        f"max oracle gap {worst:.2e}",
    )


# ---------------------------------------------------------------------------
# 7. Incremental absorption vs. clustering everything at once
# ---------------------------------------------------------------------------


def test_absorbed_batch_reaches_batch_clustering_quality():
    weights = tf.FlockWeights()
    batch = tf.BatchConfig()
    gaps = []
    for seed in range(5):
        records, provider = tf.generate_synthetic(_synthetic_spec(seed))
        labels = tf.labels_by_id(records)
        descs = tf.to_descriptors(records, provider)
        cfg = tf.SpaceConfig(seed=seed)

        online = tf.initialize(descs[:150], cfg, weights, provider, batch)
        tf.absorb_batch(online, descs[150:], weights, provider, batch)
        full = tf.initialize(descs, cfg, weights, provider, batch)

        gaps.append(
            abs(
                tf.cluster_purity(online, labels)
                - tf.cluster_purity(full, labels)
            )
        )

    median = statistics.median(gaps)
    assert median <= 0.05, f"median purity gap {median:.3f}, runs {gaps}"
    _verdict(
        "absorbing 50 services into a settled 150-service space stays within "
        "0.05 purity of one-shot clustering (median of 5 seeds)",
        f"median gap={median:.3f}",
    )


# ---------------------------------------------------------------------------
# 8. Cluster extraction vs. a connected-components oracle
# ---------------------------------------------------------------------------


def test_cluster_extraction_matches_connected_components_oracle():
    provider = tf.ExactMatchProvider()
    pool = [make_descriptor(f"c{i}", [f"ct{i}"], provider) for i in range(500)]
    rng = np.random.default_rng(88)

    for trial in range(50):
        n = int(rng.integers(2, 501))
        eps = float(rng.choice([2.0, 3.0, 5.0, 12.0]))
        cfg = tf.SpaceConfig(seed=trial)
        positions = rng.uniform([0, 0], [cfg.width, cfg.height], (n, 2))
        space = tf.FlockSpace(cfg)
        for i in range(n):
            space.add_agent(pool[i], positions[i], np.zeros(2))

        got = tf.extract_clusters(space, epsilon=eps)

        pos = space.positions
        dx = np.mod(pos[None, :, 0] - pos[:, None, 0] + cfg.width / 2, cfg.width)
        dy = np.mod(pos[None, :, 1] - pos[:, None, 1] + cfg.height / 2, cfg.height)
        adjacency = np.hypot(dx - cfg.width / 2, dy - cfg.height / 2) <= eps
        n_comp, component = connected_components(
            csr_matrix(adjacency), directed=False
        )
        groups: dict[int, list[int]] = {}
        for i, label in enumerate(component):
            groups.setdefault(int(label), []).append(i)
        expected = tuple(
            sorted((tuple(sorted(g)) for g in groups.values()), key=min)
        )
        expected_outliers = tuple(g[0] for g in expected if len(g) == 1)

        assert got.clusters == expected, (trial, n, eps)
        assert got.outliers == expected_outliers
        assert got.n_clusters == n_comp
    _verdict(
        "cluster extraction equals connected-components oracle on 50 random "
        "instances up to 500 agents"
    )
