"""Reliability degrees for news-media domains from their hyperlink graph."""

from .estimators import (
    ConvergenceError,
    EstimatorConfig,
    ReliabilityScores,
    average_strategies,
    classify,
    estimate,
    f_reliability,
    fp_reliability,
    i_reliability,
    indeterminate,
    linear_solve_oracle,
    normalize_scores,
    p_reliability,
    pagerank,
)
from .graph import GraphError, SourceGraph, load_edges, merge, save_edges
from .ingest import ArticleRecord, IngestStats, build_graph, extract_domain
from .labels import (
    LabeledDataset,
    RewardAssignment,
    build_expset,
    load_labels,
    merge_datasets,
    to_rewards,
)

__version__ = "0.1.0"
