"""Weighted directed hyperlink graph between news-source domains.

Raw link counts are the canonical data.  ``normalize`` derives two
weight matrices from them:

* ``out_weights[s, t]`` -- share of the hyperlinks of ``s`` that point to ``t``
  (rows sum to one for every node with outbound links);
* ``in_weights[t, s]`` -- share of the inbound hyperlinks of ``t`` that come
  from ``s`` (rows sum to one for every node with inbound links).

Nodes are kept in lexicographic order so that every derived array, and
every file written from it, is reproducible bit for bit.
"""
from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "GraphError",
    "SourceGraph",
    "validate_source_id",
    "merge",
    "save_edges",
    "load_edges",
    "save_weights",
]

_BAD_ID = re.compile(r"[\s/:@?#]")


class GraphError(ValueError):
    """Raised for malformed identifiers, edges or edge-list files."""


def validate_source_id(value: str) -> str:
    """Return *value* unchanged if it is a canonical domain, else raise."""
    if not isinstance(value, str) or not value:
        raise GraphError(f"empty source id: {value!r}")
    if value != value.lower():
        raise GraphError(f"source id must be lowercase: {value!r}")
    if value.startswith("www."):
        raise GraphError(f"source id must not start with 'www.': {value!r}")
    if _BAD_ID.search(value) or value.startswith(".") or value.endswith("."):
        raise GraphError(f"malformed source id: {value!r}")
    return value


class SourceGraph:
    """Hyperlink counts between domains plus the weights derived from them.

    Construction is single-writer: call :meth:`add_links` (or
    :meth:`add_node`) any number of times, then :meth:`normalize`.
    Reading accessors normalize lazily, so a graph is never observed with
    stale weights.
    """

    def __init__(self, keep_self_links: bool = False):
        self.keep_self_links = keep_self_links
        self._nodes: list[str] = []
        self._index: dict[str, int] = {}
        self._counts = sp.csr_matrix((0, 0), dtype=np.int64)
        self._out_w = sp.csr_matrix((0, 0), dtype=np.float64)
        self._in_w = sp.csr_matrix((0, 0), dtype=np.float64)
        # staged additions, folded in by normalize()
        self._new_nodes: set[str] = set()
        self._new_edges: dict[tuple[str, str], int] = {}
        self._stale = False

    # ---- construction ----------------------------------------------------

    def add_node(self, node: str) -> "SourceGraph":
        validate_source_id(node)
        if node not in self._index:
            self._new_nodes.add(node)
            self._stale = True
        return self

    def add_links(self, src: str, dst: str, count: int = 1) -> "SourceGraph":
        """Add ``count`` hyperlinks from ``src`` to ``dst``."""
        validate_source_id(src)
        validate_source_id(dst)
        if isinstance(count, bool) or int(count) != count or count < 1:
            raise GraphError(f"link count must be a positive integer, got {count!r}")
        if src == dst and not self.keep_self_links:
            raise GraphError(f"self-link {src} -> {dst} rejected (self links disabled)")
        key = (src, dst)
        self._new_edges[key] = self._new_edges.get(key, 0) + int(count)
        self._new_nodes.add(src)
        self._new_nodes.add(dst)
        self._stale = True
        return self

    @classmethod
    def from_arrays(
        cls,
        nodes: Sequence[str],
        src: np.ndarray,
        dst: np.ndarray,
        counts: np.ndarray,
        keep_self_links: bool = False,
    ) -> "SourceGraph":
        """Bulk constructor: ``src``/``dst`` index into ``nodes``.

        Repeated (src, dst) pairs are summed.  Meant for large synthetic or
        pre-aggregated graphs where per-edge Python calls are too slow.
        """
        for node in nodes:
            validate_source_id(node)
        if len(set(nodes)) != len(nodes):
            raise GraphError("duplicate node names")
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        if not (src.shape == dst.shape == counts.shape):
            raise GraphError("src, dst and counts must have the same length")
        if counts.size and counts.min() < 1:
            raise GraphError("link counts must be positive")
        if not keep_self_links and np.any(src == dst):
            raise GraphError("self links present but self links are disabled")

        order = np.argsort(np.asarray(nodes, dtype=object), kind="stable")
        remap = np.empty(len(nodes), dtype=np.int64)
        remap[order] = np.arange(len(nodes))
        g = cls(keep_self_links=keep_self_links)
        g._nodes = [nodes[i] for i in order]
        g._index = {name: i for i, name in enumerate(g._nodes)}
        n = len(nodes)
        g._counts = sp.csr_matrix(
            (counts, (remap[src], remap[dst])), shape=(n, n), dtype=np.int64
        )
        g._counts.sum_duplicates()
        g._counts.sort_indices()
        g._stale = True
        return g.normalize()

    def normalize(self) -> "SourceGraph":
        """Fold staged links into the count matrix and recompute weights.

        Idempotent: a second call on an unchanged graph is a no-op.
        """
        if not self._stale:
            return self
        if self._new_nodes or self._new_edges:
            self._fold_staged()
        c = self._counts.astype(np.float64)
        self._out_w = _row_normalize(c)
        self._in_w = _row_normalize(c.T.tocsr())
        self._stale = False
        return self

    def _fold_staged(self) -> None:
        old_nodes = self._nodes
        nodes = sorted(set(old_nodes) | self._new_nodes)
        index = {name: i for i, name in enumerate(nodes)}
        coo = self._counts.tocoo()
        remap = np.array([index[name] for name in old_nodes], dtype=np.int64)
        rows = [remap[coo.row]] if coo.nnz else []
        cols = [remap[coo.col]] if coo.nnz else []
        vals = [coo.data.astype(np.int64)] if coo.nnz else []
        if self._new_edges:
            keys = list(self._new_edges)
            rows.append(np.array([index[s] for s, _ in keys], dtype=np.int64))
            cols.append(np.array([index[d] for _, d in keys], dtype=np.int64))
            vals.append(np.array(list(self._new_edges.values()), dtype=np.int64))
        n = len(nodes)
        if rows:
            counts = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(n, n),
                dtype=np.int64,
            )
        else:
            counts = sp.csr_matrix((n, n), dtype=np.int64)
        counts.sum_duplicates()
        counts.sort_indices()
        self._nodes, self._index, self._counts = nodes, index, counts
        self._new_nodes.clear()
        self._new_edges.clear()

    # ---- queries ---------------------------------------------------------

    @property
    def nodes(self) -> list[str]:
        self.normalize()
        return list(self._nodes)

    @property
    def index(self) -> dict[str, int]:
        self.normalize()
        return self._index

    @property
    def counts(self) -> sp.csr_matrix:
        self.normalize()
        return self._counts

    @property
    def out_weights(self) -> sp.csr_matrix:
        """Row-stochastic forward transition matrix ``P[s, t] = w(s, t)``."""
        self.normalize()
        return self._out_w

    @property
    def in_weights(self) -> sp.csr_matrix:
        """``Q[t, s]``: proportion of inbound links of ``t`` coming from ``s``."""
        self.normalize()
        return self._in_w

    @property
    def num_nodes(self) -> int:
        self.normalize()
        return len(self._nodes)

    @property
    def num_edges(self) -> int:
        return int(self.counts.nnz)

    def __len__(self) -> int:
        return self.num_nodes

    def __contains__(self, node: object) -> bool:
        self.normalize()
        return node in self._index

    def _lookup(self, matrix: sp.csr_matrix, a: str, b: str) -> float:
        self.normalize()
        i, j = self._index.get(a), self._index.get(b)
        if i is None or j is None:
            return 0
        return matrix[i, j]

    def count(self, src: str, dst: str) -> int:
        return int(self._lookup(self.counts, src, dst))

    def out_weight(self, src: str, dst: str) -> float:
        return float(self._lookup(self.out_weights, src, dst))

    def in_weight(self, dst: str, src: str) -> float:
        return float(self._lookup(self.in_weights, dst, src))

    def edges(self) -> Iterator[tuple[str, str, int]]:
        """Yield ``(src, dst, count)`` sorted by ``(src, dst)``."""
        c = self.counts
        nodes = self._nodes
        for i in range(c.shape[0]):
            lo, hi = c.indptr[i], c.indptr[i + 1]
            for j, k in zip(c.indices[lo:hi], c.data[lo:hi]):
                yield nodes[i], nodes[j], int(k)

    def isolated_nodes(self) -> list[str]:
        c = self.counts
        degree = np.diff(c.indptr) + np.diff(c.tocsc().indptr)
        return [self._nodes[i] for i in np.flatnonzero(degree == 0)]

    def count_map(self) -> dict[tuple[str, str], int]:
        return {(s, d): k for s, d, k in self.edges()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SourceGraph):
            return NotImplemented
        return (
            self.keep_self_links == other.keep_self_links
            and self.nodes == other.nodes
            and (self.counts != other.counts).nnz == 0
        )

    def __repr__(self) -> str:
        return f"SourceGraph(nodes={self.num_nodes}, edges={self.num_edges})"


def _row_normalize(m: sp.csr_matrix) -> sp.csr_matrix:
    m = sp.csr_matrix(m, dtype=np.float64, copy=True)
    sums = np.asarray(m.sum(axis=1)).ravel()
    # divide rather than multiply by a reciprocal: count/total exactly as defined
    row_of = np.repeat(np.arange(m.shape[0]), np.diff(m.indptr))
    m.data = m.data / sums[row_of]
    m.sort_indices()
    return m


def merge(graphs: Iterable[SourceGraph]) -> SourceGraph:
    """Sum link counts edge-wise over several graphs (e.g. crawl snapshots)."""
    graphs = list(graphs)
    if not graphs:
        return SourceGraph().normalize()
    policy = graphs[0].keep_self_links
    if any(g.keep_self_links != policy for g in graphs):
        raise GraphError("cannot merge graphs with different self-link policies")
    nodes = sorted(set().union(*(g.nodes for g in graphs)))
    index = {name: i for i, name in enumerate(nodes)}
    src, dst, cnt = [], [], []
    for g in graphs:
        remap = np.array([index[name] for name in g.nodes], dtype=np.int64)
        coo = g.counts.tocoo()
        src.append(remap[coo.row])
        dst.append(remap[coo.col])
        cnt.append(coo.data.astype(np.int64))
    return SourceGraph.from_arrays(
        nodes,
        np.concatenate(src),
        np.concatenate(dst),
        np.concatenate(cnt),
        keep_self_links=policy,
    )


def save_edges(graph: SourceGraph, path: str | Path) -> None:
    """Write ``src<TAB>dst<TAB>count`` lines sorted by (src, dst).

    Nodes without any edge are written as a bare ``src`` line so that they
    survive a round trip.
    """
    rows = [(s, d, f"{s}\t{d}\t{k}") for s, d, k in graph.edges()]
    rows += [(s, "", s) for s in graph.isolated_nodes()]
    rows.sort()
    Path(path).write_text("".join(line + "\n" for _, _, line in rows), encoding="utf-8")


def load_edges(path: str | Path, keep_self_links: bool = False) -> SourceGraph:
    names: dict[str, int] = {}
    src, dst, cnt = [], [], []
    seen: set[tuple[str, str]] = set()

    def intern(name: str, lineno: int) -> int:
        try:
            validate_source_id(name)
        except GraphError as exc:
            raise GraphError(f"{path}:{lineno}: {exc}") from None
        return names.setdefault(name, len(names))

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) == 1:
                intern(fields[0], lineno)
                continue
            if len(fields) != 3:
                raise GraphError(f"{path}:{lineno}: expected 3 tab-separated fields")
            s, d, k = fields
            try:
                count = int(k)
            except ValueError:
                raise GraphError(f"{path}:{lineno}: count is not an integer: {k!r}") from None
            if count < 1:
                raise GraphError(f"{path}:{lineno}: count must be positive, got {count}")
            if s == d and not keep_self_links:
                raise GraphError(f"{path}:{lineno}: self link {s} with self links disabled")
            if (s, d) in seen:
                raise GraphError(f"{path}:{lineno}: duplicate edge {s} -> {d}")
            seen.add((s, d))
            src.append(intern(s, lineno))
            dst.append(intern(d, lineno))
            cnt.append(count)
    nodes = sorted(names, key=names.__getitem__)
    return SourceGraph.from_arrays(
        nodes,
        np.array(src, dtype=np.int64),
        np.array(dst, dtype=np.int64),
        np.array(cnt, dtype=np.int64),
        keep_self_links=keep_self_links,
    )


def save_weights(graph: SourceGraph, path: str | Path) -> None:
    """Write ``src<TAB>dst<TAB>weight`` with shortest round-trip floats."""
    w = graph.out_weights
    nodes = graph.nodes
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(w.shape[0]):
            lo, hi = w.indptr[i], w.indptr[i + 1]
            for j, x in zip(w.indices[lo:hi], w.data[lo:hi]):
                fh.write(f"{nodes[i]}\t{nodes[j]}\t{float(x)!r}\n")
