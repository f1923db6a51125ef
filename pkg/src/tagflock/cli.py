"""Command-line interface.

Subcommands: ``ingest`` (corpus -> snapshot of freshly deployed agents),
``cluster`` (advance a snapshot and report its epsilon-components), ``query``
(retrieve services for a tag list), ``eval`` (precision/recall/purity against
labeled queries), and ``gen-synthetic`` (labeled corpus plus oracle).

Exit codes: 0 success, 2 input or validation error, 3 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .corpus import (
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
from .errors import InvariantViolation, TagflockError, ValidationError
from .flockspace import FlockWeights, SpaceConfig, run_steps
from .search import Query, evaluate, search
from .similarity import (
    DistributionalProvider,
    ExactMatchProvider,
    build_distributional_model,
    load_similarity_table,
)
from .snapshot import load_snapshot, provider_from_spec, save_snapshot
from .stream import deploy, extract_clusters

PROG = "tagflock"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed", type=int, default=None, help="override the simulation seed"
    )
    parser.add_argument(
        "--weights",
        metavar="w_al,w_sp,w_ch,w_sim,w_dsim",
        default=None,
        help="steering weights: alignment, separation, cohesion, "
        "similarity, dissimilarity",
    )
    parser.add_argument(
        "--space",
        metavar="W,H,r_sense,r_sep,epsilon,lambda,v_max",
        default=None,
        help="space geometry and thresholds",
    )


def _parse_floats(text: str, count: int, option: str) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count:
        raise ValidationError(
            f"{option} expects {count} comma-separated values, got {len(parts)}"
        )
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ValidationError(f"{option}: {exc}") from exc


def _weights_from(args, fallback: FlockWeights | None = None) -> FlockWeights:
    if args.weights is None:
        return fallback if fallback is not None else FlockWeights()
    w = _parse_floats(args.weights, 5, "--weights")
    return FlockWeights(
        alignment=w[0], separation=w[1], cohesion=w[2],
        similarity=w[3], dissimilarity=w[4],
    )


def _config_from(args, fallback: SpaceConfig | None = None) -> SpaceConfig:
    config = fallback if fallback is not None else SpaceConfig()
    if args.space is not None:
        v = _parse_floats(args.space, 7, "--space")
        config = dataclasses.replace(
            config,
            width=v[0], height=v[1], sensor_range=v[2],
            separation_radius=v[3], epsilon=v[4], lam=v[5], v_max=v[6],
        )
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _load(args):
    space, weights, provider_spec, labels = load_snapshot(args.snapshot)
    config = _config_from(args, space.config)
    if config != space.config:
        space.config = config
        # extents may have shrunk; pull positions back into bounds
        pos = space.positions
        np.mod(pos, config.extents, out=pos)
        pos[pos >= config.extents] = 0.0
        space._grid = None
    weights = _weights_from(args, weights)
    return space, weights, provider_from_spec(provider_spec), provider_spec, labels


# -- subcommands -------------------------------------------------------------


def _cmd_ingest(args) -> int:
    records = load_corpus(args.corpus)
    if args.model:
        model = build_distributional_model(read_text_tokens(args.model))
        provider = DistributionalProvider(
            model,
            spec={"kind": "model", "path": str(args.model),
                  "window": model.window, "min_count": model.min_count},
        )
    elif args.table:
        provider = load_similarity_table(args.table)
    elif args.oracle:
        with open(args.oracle, encoding="utf-8") as handle:
            try:
                spec = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ValidationError(
                    f"{args.oracle}: malformed JSON ({exc.msg})"
                ) from exc
        provider = provider_from_spec(spec)
    else:
        provider = ExactMatchProvider()
    config = _config_from(args)
    space = deploy(to_descriptors(records, provider), config)
    save_snapshot(
        space, _weights_from(args), args.out,
        provider_spec=provider.spec, labels=labels_by_id(records),
    )
    print(
        json.dumps(
            {"snapshot": str(args.out), "agents": len(space), "tick": space.tick}
        )
    )
    return 0


def _cmd_cluster(args) -> int:
    if args.iterations < 1:
        raise ValidationError("--iterations must be >= 1")
    space, weights, provider, provider_spec, labels = _load(args)
    run_steps(space, weights, provider, args.iterations, parallel=args.parallel)
    assignment = extract_clusters(space)
    save_snapshot(space, weights, args.out, provider_spec=provider_spec,
                  labels=labels)
    sizes = sorted((len(c) for c in assignment.clusters), reverse=True)
    print(
        json.dumps(
            {
                "snapshot": str(args.out),
                "tick": space.tick,
                "n_clusters": assignment.n_clusters,
                "n_outliers": len(assignment.outliers),
                "cluster_sizes": sizes,
            }
        )
    )
    return 0


def _cmd_query(args) -> int:
    space, weights, provider, _, _ = _load(args)
    tags = tuple(t.strip() for t in args.tags.split(",") if t.strip())
    request = Query(
        tags=tags,
        max_iterations=args.max_iter,
        num_results=args.num_results,
        epsilon_override=args.epsilon,
    )
    result = search(space, request, provider, weights, parallel=args.parallel)
    for rank, hit in enumerate(result.hits, start=1):
        print(
            json.dumps(
                {
                    "rank": rank,
                    "id": hit.descriptor.id,
                    "name": hit.descriptor.name,
                    "distance": hit.distance,
                    "similarity": hit.similarity,
                }
            )
        )
    print(
        f"converged={str(result.converged).lower()} "
        f"iterations={result.iterations_used} hits={len(result)}",
        file=sys.stderr,
    )
    return 0


def _cmd_eval(args) -> int:
    space, weights, provider, _, labels = _load(args)
    queries = load_queries(args.queries)
    report = evaluate(
        space, queries, provider, labels,
        k=args.k, weights=weights, max_iterations=args.max_iter,
        parallel=args.parallel,
    )
    print(json.dumps(report, indent=2))
    return 0


def _cmd_gen_synthetic(args) -> int:
    spec = SyntheticSpec.from_file(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    records, provider = generate_synthetic(spec)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    queries_path = None
    if args.holdout:
        records, queries = holdout_queries(records, args.holdout)
        queries_path = outdir / "queries.jsonl"
        with open(queries_path, "w", encoding="utf-8") as handle:
            for q in queries:
                handle.write(
                    json.dumps(
                        {
                            "tags": list(q.tags),
                            "label": q.label,
                            "source_id": q.source_id,
                        }
                    )
                    + "\n"
                )
    corpus_path = outdir / "corpus.jsonl"
    oracle_path = outdir / "oracle.json"
    write_corpus(records, corpus_path)
    with open(oracle_path, "w", encoding="utf-8") as handle:
        json.dump(provider.spec, handle, indent=1)
        handle.write("\n")
    summary = {
        "corpus": str(corpus_path),
        "oracle": str(oracle_path),
        "records": len(records),
    }
    if queries_path is not None:
        summary["queries"] = str(queries_path)
    print(json.dumps(summary))
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Flocking-based stream clustering and retrieval for "
        "tagged service descriptors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="deploy a corpus into a fresh snapshot")
    p.add_argument("--corpus", required=True, help="JSON Lines corpus file")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--model", help="plain-text corpus to build the "
                        "distributional similarity model from")
    source.add_argument("--table", help="TSV word-pair similarity table")
    source.add_argument("--oracle", help="JSON oracle provider recipe")
    p.add_argument("--out", required=True, help="snapshot file to write")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("cluster", help="advance a snapshot and report clusters")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("query", help="retrieve services for a tag list")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--tags", required=True, help="comma-separated raw tags")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--num-results", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=None,
                   help="harvest radius override")
    p.add_argument("--parallel", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("eval", help="evaluate labeled queries on a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--queries", required=True, help="JSON Lines labeled queries")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--parallel", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen-synthetic", help="generate a labeled synthetic "
                       "corpus with a ground-truth oracle")
    p.add_argument("--spec", required=True, help="JSON synthetic-corpus spec")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--holdout", type=int, default=0,
                   help="per-category services to hold out as queries")
    _add_common(p)
    p.set_defaults(func=_cmd_gen_synthetic)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"{PROG}: internal error: {exc}", file=sys.stderr)
        return 3
    except (TagflockError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
