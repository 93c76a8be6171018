"""Conditional-VAE grasp generator: datasets, training, generation and evaluation."""

from ._core import (
    Dataset,
    Error,
    Model,
    estimate_dimension,
    evaluate,
    generate_primitives,
    oracle_success,
    spearman,
)

__all__ = [
    "Dataset",
    "Error",
    "Model",
    "estimate_dimension",
    "evaluate",
    "generate_primitives",
    "oracle_success",
    "spearman",
]
