"""Prediction container and the label/evidence aggregation primitives.

Kept free of any deep-learning dependency so evaluation code can consume
predictions (e.g. from files) without loading a model stack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import LABELS

# Default evidence budget: the average number of sentences a single
# annotator marks, rounded to an integer.
DEFAULT_TOP_K = 6


@dataclass
class Prediction:
    """Model output for one instance.

    `label_dist` is the 3-way distribution over (false, half-true, true);
    `importance` is the across-node distribution scoring evidential relevance;
    `evidence` is the selected node index set, sorted ascending.
    `hop_attention`, when present, stacks one row-stochastic node x node
    matrix per hop layer.
    """

    label_dist: Sequence[float] | np.ndarray
    importance: Sequence[float] | np.ndarray
    evidence: tuple[int, ...]
    hop_attention: Sequence | np.ndarray | None = None

    @property
    def label(self) -> str:
        return LABELS[int(np.argmax(self.label_dist))]

    @property
    def confidence(self) -> float:
        return float(np.max(self.label_dist))


def aggregate_label(
    per_node_label_dists: Sequence[Sequence[float]] | np.ndarray,
    importance: Sequence[float] | np.ndarray,
) -> np.ndarray:
    """Importance-weighted mixture of the per-node label distributions."""
    dists = np.asarray(per_node_label_dists, dtype=float)
    weights = np.asarray(importance, dtype=float)
    if dists.ndim != 2 or dists.shape[0] != weights.shape[0]:
        raise ValueError(
            f"got {dists.shape[0] if dists.ndim == 2 else '?'} node distributions "
            f"but {weights.shape[0]} importance weights"
        )
    return weights @ dists


def select_evidence(importance: Sequence[float] | np.ndarray, k: int) -> tuple[int, ...]:
    """Indices of the min(k, n) highest-importance nodes, ties broken by the
    lower sentence index, returned sorted ascending."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = np.asarray(importance, dtype=float)
    n = scores.shape[0]
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    return tuple(sorted(order[: min(k, n)]))
