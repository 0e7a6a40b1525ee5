"""Ground-truth reliability labels, rewards and experiment sets."""
from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .graph import SourceGraph
from .ingest import DomainError, canonical_domain

log = logging.getLogger(__name__)

RELIABLE = "reliable"
MIXED = "mixed"
UNRELIABLE = "unreliable"
LABELS = (RELIABLE, MIXED, UNRELIABLE)

DEFAULT_PRECEDENCE = ("newsguard", "fakenews", "wikipedia", "mbfc")
EXPSET_MODES = ("a", "b", "b-minus")
REWARD_POLICIES = ("strict", "merged")


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    """Domains with a 3-class (or, after :func:`build_expset`, binary) label.

    ``entries`` maps domain -> (label, origin tag).
    """

    entries: Mapping[str, tuple[str, str]]
    name: str = ""
    conflicts: tuple[str, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __contains__(self, domain: object) -> bool:
        return domain in self.entries

    def label(self, domain: str) -> str:
        return self.entries[domain][0]

    def labels(self) -> dict[str, str]:
        return {d: lab for d, (lab, _) in self.entries.items()}

    def origins(self) -> set[str]:
        return {origin for _, origin in self.entries.values()}

    def class_counts(self) -> dict[str, int]:
        counts = Counter(lab for lab, _ in self.entries.values())
        # binary sets report only the two classes they contain
        return {lab: counts[lab] for lab in LABELS if lab != MIXED or counts[lab]}

    def subset(self, domains: Iterable[str], name: str | None = None) -> "LabeledDataset":
        keep = {d: self.entries[d] for d in domains if d in self.entries}
        return LabeledDataset(keep, name=self.name if name is None else name)


class RewardAssignment(Mapping[str, int]):
    """Total map domain -> reward in {+1, 0, -1}; absent domains map to 0."""

    def __init__(self, rewards: Mapping[str, int] | None = None):
        rewards = dict(rewards or {})
        bad = {d: v for d, v in rewards.items() if v not in (-1, 0, 1)}
        if bad:
            raise LabelError(f"rewards must be -1, 0 or +1: {sorted(bad.items())[:5]}")
        # zero entries carry no information
        self._r = {d: int(v) for d, v in rewards.items() if v != 0}

    def __getitem__(self, domain: str) -> int:
        return self._r.get(domain, 0)

    def __iter__(self) -> Iterator[str]:
        return iter(self._r)

    def __len__(self) -> int:
        return len(self._r)

    def __contains__(self, domain: object) -> bool:
        return domain in self._r

    def without(self, domains: Iterable[str]) -> "RewardAssignment":
        drop = set(domains)
        return RewardAssignment({d: v for d, v in self._r.items() if d not in drop})

    def __repr__(self) -> str:
        pos = sum(v > 0 for v in self._r.values())
        return f"RewardAssignment(+1: {pos}, -1: {len(self._r) - pos})"


def load_labels(path: str | Path, name: str | None = None, origin: str | None = None) -> LabeledDataset:
    """Read a ``domain,label[,origin]`` CSV.

    Domains are canonicalized (``www.`` stripped, lowercased; URLs accepted).
    Rows without an origin get ``origin`` or, failing that, the file stem.
    """
    path = Path(path)
    default_origin = origin or path.stem
    entries: dict[str, tuple[str, str]] = {}
    first_line: dict[str, int] = {}
    duplicates: dict[str, list[int]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip().lower() for f in reader.fieldnames or []]
        if "domain" not in fields or "label" not in fields:
            raise LabelError(f"{path}: header must contain 'domain' and 'label'")
        reader.fieldnames = fields
        for row in reader:
            lineno = reader.line_num
            raw_label = (row.get("label") or "").strip().lower()
            if raw_label not in LABELS:
                raise LabelError(f"{path}:{lineno}: unknown label {row.get('label')!r}")
            try:
                domain = canonical_domain(row.get("domain") or "")
            except DomainError as exc:
                raise LabelError(f"{path}:{lineno}: {exc}") from None
            if domain in entries:
                duplicates.setdefault(domain, [first_line[domain]]).append(lineno)
                continue
            first_line[domain] = lineno
            tag = (row.get("origin") or "").strip().lower() or default_origin
            entries[domain] = (raw_label, tag)
    if duplicates:
        listing = ", ".join(f"{d} (lines {', '.join(map(str, ls))})" for d, ls in sorted(duplicates.items()))
        raise LabelError(f"{path}: duplicate domains: {listing}")
    return LabeledDataset(entries, name=name or path.stem)


def load_scores(path: str | Path) -> dict[str, float]:
    """Read a NewsGuard-style ``domain,score`` CSV (score in [0, 100])."""
    path = Path(path)
    scores: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip().lower() for f in reader.fieldnames or []]
        if "domain" not in fields or "score" not in fields:
            raise LabelError(f"{path}: header must contain 'domain' and 'score'")
        reader.fieldnames = fields
        for row in reader:
            lineno = reader.line_num
            try:
                domain = canonical_domain(row["domain"] or "")
                score = float(row["score"])
            except (DomainError, ValueError, TypeError) as exc:
                raise LabelError(f"{path}:{lineno}: {exc}") from None
            if not 0.0 <= score <= 100.0:
                raise LabelError(f"{path}:{lineno}: score {score} outside [0, 100]")
            if domain in scores:
                raise LabelError(f"{path}:{lineno}: duplicate domain {domain}")
            scores[domain] = score
    return scores


def merge_datasets(
    datasets: Sequence[LabeledDataset],
    precedence: Sequence[str] = DEFAULT_PRECEDENCE,
    name: str = "merged",
) -> LabeledDataset:
    """Union of several datasets; on disagreement the higher-precedence origin wins.

    ``conflicts`` on the result lists domains whose labels disagreed.
    """
    rank = {tag: i for i, tag in enumerate(precedence)}
    unknown = set().union(*(ds.origins() for ds in datasets)) - set(rank) if datasets else set()
    if unknown:
        raise LabelError(f"origins missing from precedence list: {sorted(unknown)}")
    chosen: dict[str, tuple[str, str]] = {}
    seen_labels: dict[str, set[str]] = {}
    for ds in datasets:
        for domain, (lab, origin) in ds.entries.items():
            seen_labels.setdefault(domain, set()).add(lab)
            cur = chosen.get(domain)
            if cur is None or rank[origin] < rank[cur[1]]:
                chosen[domain] = (lab, origin)
    conflicts = tuple(sorted(d for d, labs in seen_labels.items() if len(labs) > 1))
    if conflicts:
        log.info("%d label conflicts resolved by precedence %s", len(conflicts), list(precedence))
    entries = {d: chosen[d] for d in sorted(chosen)}
    return LabeledDataset(entries, name=name, conflicts=conflicts)


def to_rewards(dataset: LabeledDataset, policy: str = "strict") -> RewardAssignment:
    """reliable -> +1, unreliable -> -1; mixed -> 0 (strict) or -1 (merged)."""
    if policy not in REWARD_POLICIES:
        raise LabelError(f"unknown reward policy {policy!r}; expected one of {REWARD_POLICIES}")
    mixed = 0 if policy == "strict" else -1
    table = {RELIABLE: 1, UNRELIABLE: -1, MIXED: mixed}
    return RewardAssignment({d: table[lab] for d, (lab, _) in dataset.entries.items()})


def build_expset(dataset: LabeledDataset, graph: SourceGraph, mode: str = "b") -> LabeledDataset:
    """Binary experiment set restricted to graph nodes.

    ``a``/``b`` relabel mixed as unreliable, ``b-minus`` drops mixed.
    """
    if mode not in EXPSET_MODES:
        raise LabelError(f"unknown expset mode {mode!r}; expected one of {EXPSET_MODES}")
    entries: dict[str, tuple[str, str]] = {}
    for domain, (lab, origin) in dataset.entries.items():
        if domain not in graph:
            continue
        if lab == MIXED:
            if mode == "b-minus":
                continue
            lab = UNRELIABLE
        entries[domain] = (lab, origin)
    if not entries:
        raise LabelError(f"expset {mode!r} is empty: no labeled domain left inside the graph")
    out = LabeledDataset(entries, name=f"{dataset.name}:{mode}")
    log.info("expset %s: %s", mode, out.class_counts())
    return out
