"""Command-line front end.

Every subcommand writes data to files (or stdout) and logs to stderr.  On
failure the exit status is non-zero and stderr carries one JSON object
``{"error": ..., "message": ...}``.
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .estimators import (
    STRATEGIES,
    ConvergenceError,
    EstimatorConfig,
    estimate,
    read_scores,
    write_scores,
)
from .evaluation import (
    GAMMA_GRID,
    N_GRID,
    correlate,
    cross_validate,
    dump_json,
    grid_search,
    write_sweep_csv,
)
from .graph import GraphError, load_edges, merge, save_edges, save_weights
from .ingest import build_graph_from_files
from .labels import (
    EXPSET_MODES,
    RELIABLE,
    UNRELIABLE,
    LabelError,
    build_expset,
    load_labels,
    load_scores,
    to_rewards,
)

log = logging.getLogger("newsrel")

# grid-search selections per experiment set, used when no flag is given
DEFAULT_GAMMA = {
    "f": {"a": 0.05, "b": 0.5, "b-minus": 0.05},
    "p": {"a": 0.15, "b": 0.3, "b-minus": 0.2},
    "fp": {"a": 0.1, "b": 0.05, "b-minus": 0.05},
}
DEFAULT_N = {"a": 1, "b": 1, "b-minus": 2}


class ConfigError(ValueError):
    pass


def _config(args) -> EstimatorConfig:
    expset = getattr(args, "expset", None) or "b"
    strategy = args.strategy
    gamma = args.gamma
    if gamma is None:
        gamma = DEFAULT_GAMMA.get("p" if strategy in ("avg-p-fp", "pagerank", "i") else strategy)[expset]
    gamma_fp = args.gamma_fp
    if strategy == "avg-p-fp" and gamma_fp is None:
        gamma_fp = DEFAULT_GAMMA["fp"][expset]
    n = args.n if args.n is not None else DEFAULT_N[expset]
    try:
        return EstimatorConfig(gamma=gamma, n=n, tol=args.tol, max_iter=args.max_iter, gamma_fp=gamma_fp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _graph(args):
    return load_edges(args.graph, keep_self_links=args.keep_self_links)


def cmd_build_graph(args) -> None:
    graph, stats = build_graph_from_files(args.articles, keep_self_links=args.keep_self_links)
    save_edges(graph, args.out)
    if args.weights_out:
        save_weights(graph, args.weights_out)
    summary = dict(stats.as_dict(), nodes=graph.num_nodes, edges=graph.num_edges)
    text = dump_json(summary, args.stats_out)
    if not args.stats_out:
        sys.stdout.write(text)


def cmd_merge_graphs(args) -> None:
    graphs = [load_edges(p, keep_self_links=args.keep_self_links) for p in args.edges]
    merged = merge(graphs)
    save_edges(merged, args.out)
    log.info("merged %d graphs: %d nodes, %d edges", len(graphs), merged.num_nodes, merged.num_edges)


def cmd_estimate(args) -> None:
    config = _config(args)
    graph = _graph(args)
    labels = load_labels(args.labels)
    policy = args.reward_policy or ("strict" if args.expset == "b-minus" else "merged")
    rewards = to_rewards(labels, policy)
    scores = estimate(args.strategy, graph, rewards, config)
    write_scores(scores, args.out)
    log.info("%s: %d scores written to %s (%d iterations)", args.strategy, len(scores), args.out, scores.iterations)
    if args.meta_out:
        dump_json(scores.meta(), args.meta_out)


def _load_ensemble(path):
    ds = load_labels(path)
    bad = sorted(d for d, lab in ds.labels().items() if lab not in (RELIABLE, UNRELIABLE))
    if bad:
        raise LabelError(f"{path}: ensemble predictions must be reliable/unreliable, got mixed for {bad[:5]}")
    return ds.labels()


def cmd_evaluate(args) -> None:
    config = _config(args)
    graph = _graph(args)
    expset = build_expset(load_labels(args.labels), graph, args.expset)
    ensemble = _load_ensemble(args.ensemble) if args.ensemble else None
    report = cross_validate(args.strategy, graph, expset, config, args.k, args.seed,
                            ensemble=ensemble, workers=args.threads)
    text = dump_json(report.as_dict(), args.out)
    if not args.out:
        sys.stdout.write(text)
    s = report.summary()
    log.info("%s on %s: macro-F1 %.2f +- %.2f, accuracy %.2f", args.strategy, args.expset,
             s["f1_macro"]["mean"], s["f1_macro"]["std"], s["accuracy"]["mean"])


def _parse_grid(text: str, strategy: str):
    if text == "default":
        return list(N_GRID if strategy == "i" else GAMMA_GRID)
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"grid must be 'default' or comma-separated numbers, got {text!r}") from None
    if strategy == "i":
        if any(v != int(v) for v in values):
            raise ConfigError("grid for strategy i must contain integers")
        values = [int(v) for v in values]
    return values


def cmd_grid_search(args) -> None:
    if args.strategy == "pagerank":
        raise ConfigError("pagerank has no hyperparameter to search")
    grid = _parse_grid(args.grid, args.strategy)
    base = _config(args)
    for value in grid:
        try:
            EstimatorConfig(**{**base.as_dict(), ("n" if args.strategy == "i" else "gamma"): value})
        except ValueError as exc:
            raise ConfigError(f"grid value {value}: {exc}") from None
    graph = _graph(args)
    expset = build_expset(load_labels(args.labels), graph, args.expset)
    result = grid_search(args.strategy, graph, expset, grid, args.k, args.seed, base, workers=args.threads)
    text = dump_json(result.as_dict(), args.out)
    if not args.out:
        sys.stdout.write(text)
    if args.sweep:
        write_sweep_csv(result, args.sweep)
    if args.figure:
        from .plotting import plot_grid_search

        plot_grid_search(result, args.figure, label=f"{args.strategy} ({args.expset})")


def cmd_correlate(args) -> None:
    config = _config(args)
    graph = _graph(args)
    expset = build_expset(load_labels(args.labels), graph, args.expset)
    reference = load_scores(args.scores)
    setting = {"with": "with-rewards", "without": "without-rewards"}.get(args.setting, args.setting)
    result = correlate(args.strategy, graph, expset, reference, setting, config)
    out = result.as_dict()
    out["config"] = config.as_dict()
    text = dump_json(out, args.out)
    if not args.out:
        sys.stdout.write(text)
    if args.figure:
        from .plotting import plot_correlation

        plot_correlation(result, args.figure)


def cmd_rank(args) -> None:
    scores = read_scores(args.scores)
    if args.reference:
        ref = load_scores(args.reference)
        shared = [d for d in ref if d in scores]
        missing = sorted(set(ref) - set(shared))
        if missing:
            log.warning("%d reference domains have no score and are skipped", len(missing))
        top = sorted(shared, key=lambda d: (-ref[d], d))[: args.top]
        bottom = sorted(shared, key=lambda d: (ref[d], d))[: args.bottom]
        rows = [("top", i, d, ref[d], scores[d][1]) for i, d in enumerate(top, 1)]
        rows += [("bottom", i, d, ref[d], scores[d][1]) for i, d in enumerate(bottom, 1)]
        header = "part\trank\tdomain\tscore\trho_normalized"
        lines = [f"{p}\t{i}\t{d}\t{s:.1f}\t{r:.3f}" for p, i, d, s, r in rows]
    else:
        order = sorted(scores, key=lambda d: (-scores[d][0], d))
        top = order[: args.top]
        bottom = sorted(scores, key=lambda d: (scores[d][0], d))[: args.bottom]
        rows = [("top", i, d) for i, d in enumerate(top, 1)] + [("bottom", i, d) for i, d in enumerate(bottom, 1)]
        header = "part\trank\tdomain\trho\trho_normalized"
        lines = [f"{p}\t{i}\t{d}\t{scores[d][0]!r}\t{scores[d][1]:.3f}" for p, i, d in rows]
    sys.stdout.write("\n".join([header, *lines]) + "\n")


def _add_estimator_flags(p, default_strategy="p"):
    p.add_argument("--strategy", choices=STRATEGIES, default=default_strategy)
    p.add_argument("--gamma", type=float, default=None,
                   help="discount factor in [0, 1); default depends on --strategy and --expset")
    p.add_argument("--gamma-fp", type=float, default=None, help="FP discount for avg-p-fp")
    p.add_argument("--n", type=int, default=None, help="investment rounds for strategy i")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--expset", choices=EXPSET_MODES, default="b")


def _add_graph_flags(p):
    p.add_argument("--graph", required=True, help="edge-list TSV")
    p.add_argument("--labels", required=True, help="label CSV (domain,label[,origin])")
    p.add_argument("--keep-self-links", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newsrel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=_version_string())
    parser.add_argument("--config", help="JSON file with flag defaults (flags override)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build an edge list from JSONL article records")
    p.add_argument("articles", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--weights-out")
    p.add_argument("--stats-out")
    p.add_argument("--keep-self-links", action="store_true")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("merge-graphs", help="sum link counts of several edge lists")
    p.add_argument("edges", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--keep-self-links", action="store_true")
    p.set_defaults(func=cmd_merge_graphs)

    p = sub.add_parser("estimate", help="score every graph node")
    _add_graph_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--reward-policy", choices=("strict", "merged"), default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--meta-out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="k-fold cross-validated classification")
    _add_graph_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ensemble", help="CSV domain,label with another model's predictions")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid-search", help="sweep gamma (or n) by cross-validation")
    _add_graph_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--grid", default="default")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--sweep", help="per-grid-point CSV")
    p.add_argument("--figure", help="image file for the sweep curve (png, svg, pdf)")
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("correlate", help="correlate scores with journalist scores")
    _add_graph_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--scores", required=True, help="CSV domain,score with score in [0, 100]")
    p.add_argument("--setting", choices=("with", "without", "with-rewards", "without-rewards"), default="with")
    p.add_argument("--out")
    p.add_argument("--figure", help="image file for the rank scatter plot")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("rank", help="top and bottom domains of a score file")
    p.add_argument("--scores", required=True, help="score TSV written by estimate")
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--bottom", type=int, default=5)
    p.add_argument("--reference", help="rank by these reference scores instead (domain,score CSV)")
    p.set_defaults(func=cmd_rank)
    return parser


def _version_string() -> str:
    return (f"newsrel {__version__} (python {platform.python_version()}, "
            f"numpy {np.__version__}, scipy {scipy.__version__})")


def _apply_config_file(parser: argparse.ArgumentParser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config, encoding="utf-8") as fh:
            defaults = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config file {known.config}: {exc}") from None
    if not isinstance(defaults, dict):
        raise ConfigError(f"{known.config}: expected a JSON object")
    defaults = {k.replace("-", "_"): v for k, v in defaults.items()}
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k: v for k, v in defaults.items() if any(a.dest == k for a in sp._actions)})


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
    except ConfigError as exc:
        return _fail("config", str(exc), 2)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "threads", 1) < 1:
        return _fail("config", "--threads must be at least 1", 2)
    if getattr(args, "k", 2) < 2:
        return _fail("config", "--k must be at least 2", 2)
    try:
        args.func(args)
    except ConfigError as exc:
        return _fail("config", str(exc), 2)
    except (GraphError, LabelError) as exc:
        return _fail("input", str(exc), 1)
    except ConvergenceError as exc:
        return _fail("convergence", str(exc), 1)
    except FileNotFoundError as exc:
        return _fail("io", f"{exc.filename}: {exc.strerror}", 1)
    except (OSError, ValueError, RuntimeError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
