"""Reliability-degree estimators over a :class:`SourceGraph`.

All strategies take a reward map (domain -> +1 / 0 / -1, absent = 0) and
return a score for every node of the graph:

``f``   expected discounted reward of a walker leaving ``s`` (value iteration)
``p``   discounted reward accumulated on the way into ``s`` (reverse value iteration)
``fp``  forward propagation of negative rewards plus backward propagation of positive ones
``i``   ``n`` rounds of invest-and-collect along the hyperlinks

The fixed-point loops update the whole vector at once and stop when the
largest per-node change drops below ``tol``.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

from .graph import SourceGraph

log = logging.getLogger(__name__)

STRATEGIES = ("f", "p", "fp", "i", "avg-p-fp", "pagerank")


class ConvergenceError(RuntimeError):
    def __init__(self, strategy: str, iterations: int, residual: float):
        super().__init__(
            f"{strategy}: no convergence after {iterations} iterations (last delta {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class EstimatorConfig:
    gamma: float = 0.3
    n: int = 1
    tol: float = 1e-8
    max_iter: int = 10_000
    # discount used for the FP half of the averaged P/FP strategy; None = gamma
    gamma_fp: float | None = None
    damping: float = 0.85

    def __post_init__(self):
        for name in ("gamma",) + (("gamma_fp",) if self.gamma_fp is not None else ()):
            g = getattr(self, name)
            if not (isinstance(g, (int, float)) and 0.0 <= g < 1.0):
                raise ValueError(f"{name} must satisfy 0 <= {name} < 1, got {g!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping!r}")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class ReliabilityScores(Mapping[str, float]):
    """Scores for every node of a graph, in the graph's node order."""

    nodes: list[str]
    vector: np.ndarray
    strategy: str
    config: dict = field(default_factory=dict)
    iterations: int = 0
    residual: float = 0.0

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.shape != (len(self.nodes),):
            raise ValueError("one score per node required")
        if not np.all(np.isfinite(self.vector)):
            raise ValueError(f"{self.strategy}: non-finite scores")
        self._index = {name: i for i, name in enumerate(self.nodes)}

    def __getitem__(self, domain: str) -> float:
        return float(self.vector[self._index[domain]])

    def __iter__(self) -> Iterator[str]:
        return iter(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, domain: object) -> bool:
        return domain in self._index

    def rho(self, domain: str) -> float:
        """Score of ``domain``; 0 for sources outside the graph (indeterminate)."""
        i = self._index.get(domain)
        return 0.0 if i is None else float(self.vector[i])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.nodes, self.vector.tolist()))

    def meta(self) -> dict:
        return {
            "strategy": self.strategy,
            "config": self.config,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def reward_vector(graph: SourceGraph, rewards: Mapping[str, float]) -> np.ndarray:
    """Rewards aligned with ``graph.nodes``; domains outside the graph are ignored."""
    r = np.zeros(graph.num_nodes)
    index = graph.index
    for domain, value in rewards.items():
        i = index.get(domain)
        if i is not None:
            r[i] = value
    return r


def _iterate(step: Callable[[np.ndarray], np.ndarray], size: int, tol: float, max_iter: int, name: str):
    rho = np.zeros(size)
    delta = np.inf
    for it in range(1, max_iter + 1):
        new = step(rho)
        delta = float(np.max(np.abs(new - rho))) if size else 0.0
        rho = new
        if delta < tol:
            return rho, it, delta
    raise ConvergenceError(name, max_iter, delta)


def _forward(P: sp.csr_matrix, r: np.ndarray, gamma: float, tol: float, max_iter: int):
    # rho'(s) = sum_t P[s, t] (r(t) + gamma rho(t))
    return _iterate(lambda rho: P @ (r + gamma * rho), r.size, tol, max_iter, "f")


def _reverse(PT: sp.csr_matrix, r: np.ndarray, gamma: float, tol: float, max_iter: int):
    # rho'(s) = r(s) + gamma sum_t P[t, s] rho(t)
    return _iterate(lambda rho: r + gamma * (PT @ rho), r.size, tol, max_iter, "p")


def _scores(graph, values, strategy, config, iterations=0, residual=0.0, **extra):
    cfg = dict(config.as_dict(), **extra) if isinstance(config, EstimatorConfig) else dict(config)
    return ReliabilityScores(graph.nodes, values, strategy, cfg, iterations, residual)


def f_reliability(graph: SourceGraph, rewards: Mapping[str, float], config: EstimatorConfig = EstimatorConfig()) -> ReliabilityScores:
    """Expected discounted future reward (Bellman fixed point, value iteration)."""
    r = reward_vector(graph, rewards)
    rho, it, delta = _forward(graph.out_weights, r, config.gamma, config.tol, config.max_iter)
    return _scores(graph, rho, "f", config, it, delta)


def p_reliability(graph: SourceGraph, rewards: Mapping[str, float], config: EstimatorConfig = EstimatorConfig()) -> ReliabilityScores:
    """Accumulated discounted past reward (reverse Bellman fixed point)."""
    r = reward_vector(graph, rewards)
    PT = graph.out_weights.T.tocsr()
    rho, it, delta = _reverse(PT, r, config.gamma, config.tol, config.max_iter)
    return _scores(graph, rho, "p", config, it, delta)


def fp_reliability(graph: SourceGraph, rewards: Mapping[str, float], config: EstimatorConfig = EstimatorConfig()) -> ReliabilityScores:
    """Forward value of the negative rewards plus reverse value of the positive ones."""
    r = reward_vector(graph, rewards)
    P = graph.out_weights
    v_neg, it_f, d_f = _forward(P, np.minimum(r, 0.0), config.gamma, config.tol, config.max_iter)
    r_pos, it_p, d_p = _reverse(P.T.tocsr(), np.maximum(r, 0.0), config.gamma, config.tol, config.max_iter)
    return _scores(graph, v_neg + r_pos, "fp", config, it_f + it_p, max(d_f, d_p))


def investment_matrix(graph: SourceGraph) -> sp.csr_matrix:
    """``M[s, t] = w(s, t) * w_s(t)``: share of t's credits that flow back to s."""
    P = graph.out_weights
    Q = graph.in_weights  # Q[t, s] = w_s(t)
    M = P.multiply(Q.T).tocsr()
    M.sort_indices()
    return M


def i_reliability(graph: SourceGraph, rewards: Mapping[str, float], n: int | EstimatorConfig = 1) -> ReliabilityScores:
    """Invest-and-collect for ``n`` rounds, starting from the rewards.

    Each round first computes, for every source, the credits invested in it
    by its in-neighbours (weighted by their outbound shares), using the
    scores as they stood at the start of the round.  Every investor then
    collects back its inbound share of those credits, weighted by how much
    it invested.
    """
    config = n if isinstance(n, EstimatorConfig) else EstimatorConfig(n=n)
    rounds = config.n
    rho = reward_vector(graph, rewards)
    P = graph.out_weights
    PT = P.T.tocsr()
    M = investment_matrix(graph)
    for _ in range(rounds):
        total_credits = PT @ rho
        rho = rho + M @ total_credits
    return _scores(graph, rho, "i", {"n": rounds}, rounds, 0.0)


def pagerank(graph: SourceGraph, damping: float = 0.85, tol: float = 1e-12, max_iter: int = 1000) -> ReliabilityScores:
    """Damped PageRank on the outbound weights; dangling mass spread uniformly."""
    n = graph.num_nodes
    if n == 0:
        return _scores(graph, np.zeros(0), "pagerank", {"damping": damping})
    PT = graph.out_weights.T.tocsr()
    dangling = np.diff(graph.out_weights.indptr) == 0
    x = np.full(n, 1.0 / n)
    delta = np.inf
    for it in range(1, max_iter + 1):
        new = damping * (PT @ x + x[dangling].sum() / n) + (1.0 - damping) / n
        new /= new.sum()
        delta = float(np.abs(new - x).sum())
        x = new
        if delta < tol:
            return _scores(graph, x, "pagerank", {"damping": damping, "tol": tol}, it, delta)
    raise ConvergenceError("pagerank", max_iter, delta)


def average_strategies(scores_p: ReliabilityScores, scores_fp: ReliabilityScores) -> ReliabilityScores:
    """Componentwise mean of two score maps over the same nodes."""
    if list(scores_p.nodes) != list(scores_fp.nodes):
        raise ValueError("score maps cover different nodes")
    values = (scores_p.vector + scores_fp.vector) / 2.0
    cfg = {scores_p.strategy: scores_p.config, scores_fp.strategy: scores_fp.config}
    return ReliabilityScores(
        list(scores_p.nodes),
        values,
        f"avg-{scores_p.strategy}-{scores_fp.strategy}",
        cfg,
        scores_p.iterations + scores_fp.iterations,
        max(scores_p.residual, scores_fp.residual),
    )


def estimate(strategy: str, graph: SourceGraph, rewards: Mapping[str, float], config: EstimatorConfig = EstimatorConfig()) -> ReliabilityScores:
    """Dispatch on a strategy name from :data:`STRATEGIES`."""
    if strategy == "f":
        return f_reliability(graph, rewards, config)
    if strategy == "p":
        return p_reliability(graph, rewards, config)
    if strategy == "fp":
        return fp_reliability(graph, rewards, config)
    if strategy == "i":
        return i_reliability(graph, rewards, config)
    if strategy == "avg-p-fp":
        fp_cfg = config if config.gamma_fp is None else EstimatorConfig(
            gamma=config.gamma_fp, tol=config.tol, max_iter=config.max_iter
        )
        return average_strategies(p_reliability(graph, rewards, config), fp_reliability(graph, rewards, fp_cfg))
    if strategy == "pagerank":
        return pagerank(graph, damping=config.damping, max_iter=max(config.max_iter, 1000))
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def normalize_scores(scores: Mapping[str, float]) -> dict[str, float]:
    """Scale positives by the largest score and negatives by the most negative.

    Zeros stay zero, so the sign (and thus the classification) is kept.
    """
    items = dict(scores.as_dict() if isinstance(scores, ReliabilityScores) else scores)
    pos = max((v for v in items.values() if v > 0), default=0.0)
    neg = min((v for v in items.values() if v < 0), default=0.0)
    out = {}
    for d, v in items.items():
        if v > 0:
            out[d] = v / pos
        elif v < 0:
            out[d] = v / -neg
        else:
            out[d] = 0.0
    return out


def classify(scores: Mapping[str, float], domains: Iterable[str] | None = None) -> dict[str, str]:
    """``reliable`` iff the score is strictly positive.

    Domains missing from ``scores`` get a score of 0 and so come out
    ``unreliable``; see :func:`indeterminate` to tell them apart.
    """
    domains = list(scores) if domains is None else list(domains)
    get = scores.rho if isinstance(scores, ReliabilityScores) else (lambda d: scores.get(d, 0.0))
    return {d: "reliable" if get(d) > 0 else "unreliable" for d in domains}


def indeterminate(scores: Mapping[str, float], domains: Iterable[str]) -> set[str]:
    """Domains the scores say nothing about (outside the graph)."""
    return {d for d in domains if d not in scores}


def linear_solve_oracle(graph: SourceGraph, rewards: Mapping[str, float], gamma: float, mode: str = "forward") -> dict[str, float]:
    """Exact fixed point by a dense linear solve (test oracle, small graphs only).

    forward: ``(I - gamma P) V = P r``; reverse: ``(I - gamma P^T) R = r``.
    The transition matrix is rebuilt from raw counts, independently of the
    sparse weights used by the iterative estimators.
    """
    nodes = graph.nodes
    n = len(nodes)
    if n > 2000:
        raise ValueError(f"dense oracle limited to 2000 nodes, graph has {n}")
    index = {d: i for i, d in enumerate(nodes)}
    P = np.zeros((n, n))
    for s, t, k in graph.edges():
        P[index[s], index[t]] = k
    totals = P.sum(axis=1, keepdims=True)
    P = np.divide(P, totals, out=np.zeros_like(P), where=totals > 0)
    r = np.array([float(rewards.get(d, 0.0)) for d in nodes])
    eye = np.eye(n)
    if mode == "forward":
        x = np.linalg.solve(eye - gamma * P, P @ r)
    elif mode == "reverse":
        x = np.linalg.solve(eye - gamma * P.T, r)
    else:
        raise ValueError(f"mode must be 'forward' or 'reverse', got {mode!r}")
    return dict(zip(nodes, x.tolist()))


def write_scores(scores: ReliabilityScores, path) -> None:
    """TSV ``domain<TAB>rho<TAB>rho_normalized`` sorted by rho descending."""
    norm = normalize_scores(scores)
    order = sorted(scores.nodes, key=lambda d: (-scores[d], d))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("domain\trho\trho_normalized\n")
        for d in order:
            fh.write(f"{d}\t{scores[d]!r}\t{norm[d]!r}\n")


def read_scores(path) -> dict[str, tuple[float, float]]:
    out: dict[str, tuple[float, float]] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[:2] != ["domain", "rho"]:
            raise ValueError(f"{path}: expected header 'domain<TAB>rho<TAB>rho_normalized'")
        for lineno, line in enumerate(fh, 2):
            fields = line.rstrip("\n").split("\t")
            if len(fields) < 2:
                raise ValueError(f"{path}:{lineno}: malformed score line")
            try:
                rho = float(fields[1])
                norm = float(fields[2]) if len(fields) > 2 else float("nan")
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric score") from None
            out[fields[0]] = (rho, norm)
    return out
