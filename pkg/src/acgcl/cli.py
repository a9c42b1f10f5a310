"""Command-line surface.

Subcommands:
  train                full curriculum training on a dataset directory
  evaluate             probe a saved checkpoint on a dataset
  augment-inspect      dump mirror graphs and the replacement log for one node
  validate-difficulty  frozen-encoder loss across a difficulty grid
  gen-sbm              write a synthetic block-model dataset

Every command exits nonzero on error, printing one "ErrorClass: message"
line to stderr. The ACGCL_THREADS environment variable caps worker
parallelism inside the heavier commands.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .augment import estimate_distance_distribution, mirror_augment, quantile, semantic_assignment
from .config import TrainConfig, parse_config
from .errors import AcgclError, ConfigError
from .graph import SbmConfig, generate_sbm, make_splits, save_dataset, with_splits, load_dataset
from .sampler import sample_all_subgraphs
from .trainer import (difficulty_curve, evaluate_checkpoint, load_checkpoint,
                      save_checkpoint, train)
from .util import ROLE_DISTANCES, rng_for


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acgcl")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train on the dataset named in the config")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="KEY=VALUE")
    p_train.add_argument("--out", required=True, help="output directory")

    p_eval = sub.add_parser("evaluate", help="probe a checkpoint on a dataset")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True)

    p_inspect = sub.add_parser("augment-inspect",
                               help="dump mirror graphs for one node at a difficulty")
    p_inspect.add_argument("--config", required=True)
    p_inspect.add_argument("--node", type=int, required=True)
    p_inspect.add_argument("--theta", type=float, required=True)
    p_inspect.add_argument("--set", dest="overrides", action="append", default=[])
    p_inspect.add_argument("--out", default=".", help="output directory")

    p_diff = sub.add_parser("validate-difficulty",
                            help="frozen-encoder loss across a difficulty grid")
    p_diff.add_argument("--config", required=True)
    p_diff.add_argument("--grid", default="10,20,30,40,50")
    p_diff.add_argument("--checkpoint", default=None,
                        help="encoder to freeze; trains one from the config when absent")
    p_diff.add_argument("--set", dest="overrides", action="append", default=[])
    p_diff.add_argument("--out", default="difficulty_curve.csv")

    p_sbm = sub.add_parser("gen-sbm", help="write a synthetic block-model dataset")
    p_sbm.add_argument("--blocks", required=True, help="comma-separated block sizes")
    p_sbm.add_argument("--p-intra", type=float, required=True)
    p_sbm.add_argument("--p-inter", type=float, required=True)
    p_sbm.add_argument("--feature-dim", type=int, default=16)
    p_sbm.add_argument("--noise", type=float, default=1.0)
    p_sbm.add_argument("--center-scale", type=float, default=1.0)
    p_sbm.add_argument("--seed", type=int, default=0)
    p_sbm.add_argument("--split-train", type=float, default=0.3)
    p_sbm.add_argument("--split-val", type=float, default=0.2)
    p_sbm.add_argument("--out", required=True, help="output directory")
    return parser


def _load_config_and_graph(config_path, overrides) -> tuple[TrainConfig, object]:
    config = parse_config(config_path, overrides)
    if not config.data_dir:
        raise ConfigError("data_dir: config must name a dataset directory")
    return config, load_dataset(config.data_dir)


def _cmd_train(args) -> int:
    config, graph = _load_config_and_graph(args.config, args.overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params, report = train(graph, config, metrics_path=out / "metrics.jsonl")
    save_checkpoint(params, config, out / "checkpoint.json")
    report.checkpoint = str(out / "checkpoint.json")
    report.to_csv(out / "report.csv")
    print(f"epochs_run={len(report.rows)}")
    print(f"final_val_accuracy={report.final_val_accuracy!r}")
    print(f"checkpoint={out / 'checkpoint.json'}")
    return 0


def _cmd_evaluate(args) -> int:
    scores = evaluate_checkpoint(args.checkpoint, args.data)
    print(f"val_accuracy={scores['val_accuracy']!r}")
    print(f"test_accuracy={scores['test_accuracy']!r}")
    return 0


def _cmd_augment_inspect(args) -> int:
    config, graph = _load_config_and_graph(args.config, args.overrides)
    if not (0 <= args.node < graph.n_nodes):
        raise ConfigError(f"node: {args.node} out of range [0, {graph.n_nodes})")
    subgraphs = sample_all_subgraphs(graph, config.subgraph_size, config.teleport)
    semantics = semantic_assignment(graph, config.semantics, config.degree_buckets)
    dis_seed = int(rng_for(config.seed, ROLE_DISTANCES).integers(2 ** 32))
    dist = estimate_distance_distribution(subgraphs, config.distance_metric,
                                          config.dis_sample_budget, dis_seed)
    gamma = quantile(dist, args.theta)
    sub = subgraphs[args.node]
    mirrors = mirror_augment(sub, gamma, semantics, config.distance_metric)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, adj in (("positive_adjacency.csv", mirrors.positive_adjacency),
                      ("negative_adjacency.csv", mirrors.negative_adjacency)):
        with (out / name).open("w") as fh:
            for row in adj:
                fh.write(",".join(str(int(v)) for v in row) + "\n")
    parents = sub.parent_indices
    with (out / "replacements.csv").open("w") as fh:
        fh.write("polarity,a,b,a_parent,b_parent,c,d,c_parent,d_parent,"
                 "distance_sum,original_edge,mirror_edge\n")
        for polarity, items in (("positive", mirrors.stats.pos_replacements),
                                ("negative", mirrors.stats.neg_replacements)):
            for r in items:
                fh.write(",".join(map(str, (
                    polarity, r.a, r.b, parents[r.a], parents[r.b],
                    r.c, r.d, parents[r.c], parents[r.d],
                    repr(r.distance_sum), r.original_edge, r.mirror_edge))) + "\n")
    print(f"node={args.node} theta={args.theta} gamma={gamma!r}")
    print(f"positive_replacements={len(mirrors.stats.pos_replacements)} "
          f"negative_replacements={len(mirrors.stats.neg_replacements)}")
    print(f"out={out}")
    return 0


def _cmd_validate_difficulty(args) -> int:
    config, graph = _load_config_and_graph(args.config, args.overrides)
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"grid: cannot parse {args.grid!r}") from None
    if not grid:
        raise ConfigError("grid: needs at least one difficulty value")
    if args.checkpoint:
        params, _ = load_checkpoint(args.checkpoint)
    else:
        params, _ = train(graph, config)
    subgraphs = sample_all_subgraphs(graph, config.subgraph_size, config.teleport)
    semantics = semantic_assignment(graph, config.semantics, config.degree_buckets)
    dis_seed = int(rng_for(config.seed, ROLE_DISTANCES).integers(2 ** 32))
    dist = estimate_distance_distribution(subgraphs, config.distance_metric,
                                          config.dis_sample_budget, dis_seed)
    rows = difficulty_curve(params, subgraphs, semantics, config.distance_metric,
                            dist, grid, config.xi)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as fh:
        fh.write("theta,mean_loss,std\n")
        for theta, mean, std in rows:
            fh.write(f"{theta!r},{mean!r},{std!r}\n")
    for theta, mean, std in rows:
        print(f"theta={theta} mean_loss={mean!r} std={std!r}")
    return 0


def _cmd_gen_sbm(args) -> int:
    try:
        blocks = tuple(int(v) for v in args.blocks.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"blocks: cannot parse {args.blocks!r}") from None
    sbm = SbmConfig(
        block_sizes=blocks,
        p_intra=args.p_intra,
        p_inter=args.p_inter,
        feature_dim=args.feature_dim,
        feature_noise=args.noise,
        center_scale=args.center_scale,
    )
    graph = generate_sbm(sbm, args.seed)
    graph = with_splits(graph, make_splits(graph, args.seed, args.split_train, args.split_val))
    save_dataset(graph, args.out)
    n_edges = int(graph.adjacency.sum() // 2)
    print(f"nodes={graph.n_nodes} edges={n_edges} classes={graph.n_classes} out={args.out}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "augment-inspect": _cmd_augment_inspect,
    "validate-difficulty": _cmd_validate_difficulty,
    "gen-sbm": _cmd_gen_sbm,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (AcgclError, OSError, IndexError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
