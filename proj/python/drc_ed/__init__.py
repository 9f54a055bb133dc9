"""Event detection with event derangement.

Thin wrapper over the C++ core: corpus tools, derangement sampling,
training, evaluation and gradient saliency.
"""

from ._drc_ed import (
    ConfigError,
    Dataset,
    DrcError,
    Model,
    config_keys,
    corpus_stats,
    enumerate_derangements,
    generate_synthetic,
    load_corpus,
    load_model,
    load_splits,
    parse_corpus,
    sample_derangement,
    train,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "DrcError",
    "Model",
    "config_keys",
    "corpus_stats",
    "enumerate_derangements",
    "generate_synthetic",
    "load_corpus",
    "load_model",
    "load_splits",
    "parse_corpus",
    "sample_derangement",
    "train",
]
