"""Malicious-URL feature extraction and multiclass classification."""

from ._malweb import (
    Gbt,
    LogisticRegression,
    MalwebError,
    PublicSuffixList,
    chi2_scores,
    compute_metrics,
    contains_ipv4,
    feature_contributions,
    feature_names,
    label_names,
    lda_fit_transform,
    lexical_features,
    minmax_scale,
    normalize_label,
    read_csv,
    robots_stats,
    run_cli,
    shannon_entropy,
)

__all__ = [
    "Gbt",
    "LogisticRegression",
    "MalwebError",
    "PublicSuffixList",
    "chi2_scores",
    "compute_metrics",
    "contains_ipv4",
    "feature_contributions",
    "feature_names",
    "label_names",
    "lda_fit_transform",
    "lexical_features",
    "minmax_scale",
    "normalize_label",
    "read_csv",
    "robots_stats",
    "run_cli",
    "shannon_entropy",
]
