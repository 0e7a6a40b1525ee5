"""Build a :class:`SourceGraph` from pre-extracted article records.

Each record is one JSON object per line::

    {"url": "https://www.nytimes.com/2020/a.html", "links": ["https://cnn.com/x", ...]}

Domains of all article URLs become nodes; every hyperlink adds one unit
of count from the article's domain to the link's domain.  Links are not
deduplicated, neither within an article nor across duplicate articles.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence
from urllib.parse import urlsplit

from .graph import GraphError, SourceGraph, validate_source_id

log = logging.getLogger(__name__)


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class ArticleRecord:
    url: str
    links: Sequence[str] = ()


@dataclass
class IngestStats:
    articles_read: int = 0
    records_skipped: int = 0
    links_parsed: int = 0
    links_skipped: int = 0
    self_links_dropped: int = 0
    distinct_sources: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def extract_domain(url: str) -> str:
    """Canonical domain of an absolute URL.

    >>> extract_domain("https://www.nytimes.com/2020/a.html")
    'nytimes.com'
    """
    if not isinstance(url, str):
        raise DomainError(f"URL must be a string, got {type(url).__name__}")
    try:
        parts = urlsplit(url.strip())
        host = parts.hostname  # lowercased, port and credentials removed
    except ValueError as exc:
        raise DomainError(f"unparseable URL {url!r}: {exc}") from None
    if not parts.scheme or not host:
        raise DomainError(f"URL has no host: {url!r}")
    host = host.rstrip(".")
    if host.startswith("www."):
        host = host[4:]
    try:
        return validate_source_id(host)
    except GraphError as exc:
        raise DomainError(str(exc)) from None


def canonical_domain(value: str) -> str:
    """Accept either a bare domain or a URL and return the canonical id."""
    value = value.strip()
    if "://" in value:
        return extract_domain(value)
    return extract_domain("http://" + value)


def read_articles(path: str | Path) -> Iterator[ArticleRecord | None]:
    """Yield records from a JSON-lines file; ``None`` marks an unreadable line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                url = obj["url"]
                links = obj.get("links") or []
                if not isinstance(url, str) or not isinstance(links, list):
                    raise TypeError("url must be a string and links a list")
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                log.warning("%s:%d: skipping unreadable record (%s)", path, lineno, exc)
                yield None
                continue
            yield ArticleRecord(url=url, links=links)


@dataclass
class _Accumulator:
    keep_self_links: bool
    stats: IngestStats = field(default_factory=IngestStats)
    sources: set = field(default_factory=set)
    targets: set = field(default_factory=set)
    counts: dict = field(default_factory=dict)

    def feed(self, record: ArticleRecord | None) -> None:
        st = self.stats
        st.articles_read += 1
        if record is None:
            st.records_skipped += 1
            return
        try:
            src = extract_domain(record.url)
        except DomainError as exc:
            log.warning("skipping article with bad URL: %s", exc)
            st.records_skipped += 1
            st.links_skipped += len(record.links)
            return
        self.sources.add(src)
        for link in record.links:
            try:
                dst = extract_domain(link)
            except DomainError:
                st.links_skipped += 1
                continue
            st.links_parsed += 1
            if dst == src and not self.keep_self_links:
                st.self_links_dropped += 1
                continue
            self.targets.add(dst)
            self.counts[(src, dst)] = self.counts.get((src, dst), 0) + 1


def build_graph(
    records: Iterable[ArticleRecord | None], keep_self_links: bool = False
) -> tuple[SourceGraph, IngestStats]:
    """Aggregate hyperlinks per source domain and weight them by proportion.

    ``None`` entries (unreadable records) are tallied and skipped.
    """
    acc = _Accumulator(keep_self_links=keep_self_links)
    for record in records:
        acc.feed(record)
    graph = SourceGraph(keep_self_links=keep_self_links)
    for node in sorted(acc.sources | acc.targets):
        graph.add_node(node)
    for (src, dst), k in sorted(acc.counts.items()):
        graph.add_links(src, dst, k)
    graph.normalize()
    acc.stats.distinct_sources = len(acc.sources)
    return graph, acc.stats


def build_graph_from_files(
    paths: Iterable[str | Path], keep_self_links: bool = False
) -> tuple[SourceGraph, IngestStats]:
    def records():
        for path in paths:
            yield from read_articles(path)

    return build_graph(records(), keep_self_links=keep_self_links)
