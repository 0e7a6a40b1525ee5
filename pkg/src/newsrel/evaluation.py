"""Cross-validated classification, grid search and correlation with human scores."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .estimators import EstimatorConfig, ReliabilityScores, classify, estimate
from .graph import SourceGraph
from .labels import RELIABLE, UNRELIABLE, LabeledDataset, RewardAssignment, to_rewards
from .stats import pearson, spearman

log = logging.getLogger(__name__)

GAMMA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
N_GRID = tuple(range(1, 11))
CLASSES = (RELIABLE, UNRELIABLE)
METRIC_NAMES = (
    "precision_macro", "precision_reliable", "precision_unreliable",
    "recall_macro", "recall_reliable", "recall_unreliable",
    "f1_macro", "f1_reliable", "f1_unreliable",
    "accuracy",
)


@dataclass(frozen=True)
class ConfusionMetrics:
    """Binary classification metrics on a 0-100 scale."""

    precision_reliable: float
    recall_reliable: float
    f1_reliable: float
    precision_unreliable: float
    recall_unreliable: float
    f1_unreliable: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    accuracy: float
    support: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def metrics(predictions: Mapping[str, str], gold: Mapping[str, str]) -> ConfusionMetrics:
    """Per-class and macro precision/recall/F1 plus accuracy.

    Precision of a class never predicted is 0 (not undefined).
    """
    if set(predictions) != set(gold):
        missing = sorted(set(gold) ^ set(predictions))[:5]
        raise ValueError(f"prediction and gold keys differ (e.g. {missing})")
    if not gold:
        raise ValueError("cannot score an empty set")
    per = {}
    correct = 0
    for cls in CLASSES:
        tp = sum(1 for d, g in gold.items() if g == cls and predictions[d] == cls)
        pred = sum(1 for v in predictions.values() if v == cls)
        true = sum(1 for v in gold.values() if v == cls)
        p = tp / pred if pred else 0.0
        r = tp / true if true else 0.0
        per[cls] = (p, r, _f1(p, r), true)
        correct += tp
    pr, pu = per[RELIABLE], per[UNRELIABLE]
    return ConfusionMetrics(
        precision_reliable=100 * pr[0],
        recall_reliable=100 * pr[1],
        f1_reliable=100 * pr[2],
        precision_unreliable=100 * pu[0],
        recall_unreliable=100 * pu[1],
        f1_unreliable=100 * pu[2],
        precision_macro=100 * (pr[0] + pu[0]) / 2,
        recall_macro=100 * (pr[1] + pu[1]) / 2,
        f1_macro=100 * (pr[2] + pu[2]) / 2,
        accuracy=100 * correct / len(gold),
        support={RELIABLE: pr[3], UNRELIABLE: pu[3]},
    )


def kfold_split(dataset: LabeledDataset, k: int = 5, seed: int = 0) -> list[tuple[list[str], list[str]]]:
    """Stratified k-fold partition, deterministic for a given seed.

    Members of each class are shuffled and dealt round-robin; the deal
    continues across classes so fold sizes differ by at most one.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    by_class: dict[str, list[str]] = {}
    for domain in sorted(dataset.entries):
        by_class.setdefault(dataset.label(domain), []).append(domain)
    small = {c: len(m) for c, m in by_class.items() if len(m) < k}
    if small:
        raise ValueError(f"every class needs at least k={k} members: {small}")
    rng = np.random.default_rng(seed)
    folds: list[list[str]] = [[] for _ in range(k)]
    offset = 0
    for cls in sorted(by_class):
        members = by_class[cls]
        for j, i in enumerate(rng.permutation(len(members))):
            folds[(offset + j) % k].append(members[i])
        offset += len(members)
    splits = []
    for i in range(k):
        test = sorted(folds[i])
        train = sorted(d for j, f in enumerate(folds) if j != i for d in f)
        splits.append((train, test))
    return splits


def ensemble_vote(pred_a: Mapping[str, str], pred_b: Mapping[str, str]) -> dict[str, str]:
    """Reliable only where both predictors say reliable."""
    if set(pred_a) != set(pred_b):
        raise ValueError("ensemble inputs cover different domains")
    return {
        d: RELIABLE if pred_a[d] == RELIABLE and pred_b[d] == RELIABLE else UNRELIABLE
        for d in sorted(pred_a)
    }


def _summary(values: Sequence[float], k: int) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {
        "mean": float(arr.mean()),
        "std": std,
        # normal-approximation 95% half-width
        "ci95": 1.96 * std / math.sqrt(k),
    }


@dataclass
class FoldResult:
    fold: int
    metrics: ConfusionMetrics
    train_size: int
    test_size: int
    # largest |reward| seen on a test-fold domain during estimation; must be 0
    test_reward_leak: float
    test_scores: dict[str, float]
    ensemble_metrics: ConfusionMetrics | None = None


@dataclass
class EvalReport:
    strategy: str
    config: dict
    k: int
    seed: int
    dataset: str
    class_counts: dict
    folds: list[FoldResult]

    def summary(self, ensemble: bool = False) -> dict[str, dict]:
        rows = [f.ensemble_metrics if ensemble else f.metrics for f in self.folds]
        if any(r is None for r in rows):
            return {}
        return {m: _summary([getattr(r, m) for r in rows], self.k) for m in METRIC_NAMES}

    def fold_values(self, metric: str = "f1_macro") -> list[float]:
        return [getattr(f.metrics, metric) for f in self.folds]

    def mean(self, metric: str = "f1_macro") -> float:
        return self.summary()[metric]["mean"]

    def as_dict(self) -> dict:
        out = {
            "strategy": self.strategy,
            "config": self.config,
            "k": self.k,
            "seed": self.seed,
            "dataset": self.dataset,
            "class_counts": self.class_counts,
            "folds": [
                {
                    "fold": f.fold,
                    "train_size": f.train_size,
                    "test_size": f.test_size,
                    "test_reward_leak": f.test_reward_leak,
                    "metrics": f.metrics.as_dict(),
                    "test_scores": f.test_scores,
                    **({"ensemble_metrics": f.ensemble_metrics.as_dict()} if f.ensemble_metrics else {}),
                }
                for f in self.folds
            ],
            "summary": self.summary(),
        }
        if self.folds and self.folds[0].ensemble_metrics is not None:
            out["ensemble_summary"] = self.summary(ensemble=True)
        return out


def _binary_rewards(dataset: LabeledDataset, domains: Sequence[str]) -> RewardAssignment:
    return to_rewards(dataset.subset(domains), policy="merged")


Estimator = Callable[[SourceGraph, Mapping[str, float], EstimatorConfig], ReliabilityScores]


def _resolve(strategy: str | Estimator) -> tuple[str, Estimator]:
    if callable(strategy):
        return getattr(strategy, "__name__", "custom"), strategy
    return strategy, lambda g, r, c: estimate(strategy, g, r, c)


def cross_validate(
    strategy: str | Estimator,
    graph: SourceGraph,
    dataset: LabeledDataset,
    config: EstimatorConfig = EstimatorConfig(),
    k: int = 5,
    seed: int = 0,
    ensemble: Mapping[str, str] | None = None,
    workers: int = 1,
) -> EvalReport:
    """k-fold evaluation: rewards from the training folds only, scores for the
    whole graph, sign classification on the held-out fold.

    ``ensemble`` optionally holds another model's predictions; each fold is
    then also scored on the agreement vote of both models.
    """
    name, run = _resolve(strategy)
    outside = [d for d in dataset if d not in graph]
    if outside:
        raise ValueError(f"{len(outside)} labeled domains are not graph nodes (e.g. {outside[:3]})")
    if ensemble is not None:
        missing = [d for d in dataset if d not in ensemble]
        if missing:
            raise ValueError(f"ensemble predictions missing for {len(missing)} domains (e.g. {missing[:3]})")
    gold = dataset.labels()
    splits = kfold_split(dataset, k, seed)

    def one_fold(i: int) -> FoldResult:
        train, test = splits[i]
        rewards = _binary_rewards(dataset, train)
        leak = max((abs(rewards[d]) for d in test), default=0)
        if leak:
            raise AssertionError(f"fold {i}: test domains carry rewards")
        try:
            scores = run(graph, rewards, config)
        except Exception as exc:
            raise RuntimeError(f"fold {i}: {exc}") from exc
        pred = classify(scores, test)
        fold_gold = {d: gold[d] for d in test}
        ens = None
        if ensemble is not None:
            ens = metrics(ensemble_vote(pred, {d: ensemble[d] for d in test}), fold_gold)
        return FoldResult(
            fold=i,
            metrics=metrics(pred, fold_gold),
            train_size=len(train),
            test_size=len(test),
            test_reward_leak=float(leak),
            test_scores={d: scores.rho(d) for d in test},
            ensemble_metrics=ens,
        )

    folds = _map(one_fold, range(k), workers)
    cfg = config.as_dict() if isinstance(config, EstimatorConfig) else dict(config)
    return EvalReport(name, cfg, k, seed, dataset.name, dataset.class_counts(), folds)


def _map(fn, items, workers: int):
    items = list(items)
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class GridPoint:
    value: float
    mean: float
    std: float
    ci95: float
    folds: list[float]


@dataclass
class GridSearchResult:
    strategy: str
    parameter: str
    points: list[GridPoint]
    selected: float
    selected_mean: float
    rule: str = "max mean macro-F1; ties -> smaller value"
    k: int = 5
    seed: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def grid_search(
    strategy: str,
    graph: SourceGraph,
    dataset: LabeledDataset,
    grid: Sequence[float] | None = None,
    k: int = 5,
    seed: int = 0,
    base: EstimatorConfig = EstimatorConfig(),
    workers: int = 1,
) -> GridSearchResult:
    """Cross-validate every grid value and keep the best mean macro-F1.

    Sweeps ``n`` for the investment strategy and ``gamma`` otherwise.
    """
    parameter = "n" if strategy == "i" else "gamma"
    if grid is None:
        grid = N_GRID if parameter == "n" else GAMMA_GRID
    grid = sorted(grid)
    if not grid:
        raise ValueError("empty grid")

    def point(value) -> GridPoint:
        cfg = EstimatorConfig(**{**base.as_dict(), parameter: value})
        rep = cross_validate(strategy, graph, dataset, cfg, k, seed)
        s = rep.summary()["f1_macro"]
        return GridPoint(value, s["mean"], s["std"], s["ci95"], rep.fold_values())

    points = _map(point, grid, workers)
    best = points[0]
    for p in points[1:]:
        if p.mean > best.mean:  # strict: ties keep the smaller value
            best = p
    return GridSearchResult(strategy, parameter, points, best.value, best.mean, k=k, seed=seed)


def write_sweep_csv(result: GridSearchResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([result.parameter, "mean", "std", "ci"])
        for p in result.points:
            w.writerow([repr(p.value), repr(p.mean), repr(p.std), repr(p.ci95)])


@dataclass
class CorrelationResult:
    strategy: str
    setting: str
    n: int
    pcc: float
    pcc_p: float
    srcc: float
    srcc_p: float
    excluded: list[str] = field(default_factory=list)
    domains: list[str] = field(default_factory=list, repr=False)
    reference: list[float] = field(default_factory=list, repr=False)
    rho: list[float] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return asdict(self)


SETTINGS = ("with-rewards", "without-rewards")


def correlate(
    strategy: str | Estimator,
    graph: SourceGraph,
    dataset: LabeledDataset,
    reference: Mapping[str, float],
    setting: str = "with-rewards",
    config: EstimatorConfig = EstimatorConfig(),
) -> CorrelationResult:
    """Correlate scores with human reference scores on the shared domains.

    ``without-rewards`` zeroes the rewards of exactly the reference domains
    before estimation; all other rewards are kept.
    """
    if setting not in SETTINGS:
        raise ValueError(f"setting must be one of {SETTINGS}, got {setting!r}")
    name, run = _resolve(strategy)
    excluded = sorted(d for d in reference if d not in graph)
    domains = sorted(d for d in reference if d in graph)
    if excluded:
        log.warning("%d scored domains are not in the graph and are excluded: %s",
                    len(excluded), ", ".join(excluded[:10]))
    if len(domains) < 3:
        raise ValueError(f"only {len(domains)} scored domains are graph nodes; need at least 3")
    rewards = to_rewards(dataset, policy="merged")
    if setting == "without-rewards":
        rewards = rewards.without(domains)
    scores = run(graph, rewards, config)
    x = [float(reference[d]) for d in domains]
    y = [scores[d] for d in domains]
    pcc, pcc_p = pearson(x, y)
    srcc, srcc_p = spearman(x, y)
    return CorrelationResult(name, setting, len(domains), pcc, pcc_p, srcc, srcc_p,
                             excluded, domains, x, y)


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
