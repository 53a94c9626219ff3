"""Cost-sensitive decision layer on top of classifier posteriors.

Two views of misclassification cost are supported: a full K x K cost
matrix feeding the expected-risk rule, and the per-class cost vector
(one weight per class, each in [0, 1]) that the evolutionary loop tunes.
Predictions reweight posteriors by the per-class costs and take the
argmax; with uniform costs this reduces exactly to the plain argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CostVector:
    """Per-class cost weights in [0, 1]."""

    costs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=np.float64)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("cost vector must be 1-D with at least 2 classes")
        if np.any(c < 0.0) or np.any(c > 1.0):
            raise ValueError("cost entries must lie in [0, 1]")
        object.__setattr__(self, "costs", c)

    def __len__(self) -> int:
        return len(self.costs)

    @classmethod
    def uniform(cls, n_classes: int, value: float = 1.0) -> "CostVector":
        return cls(np.full(n_classes, value))


@dataclass(frozen=True)
class CostMatrix:
    """K x K misclassification costs, zero diagonal, nonnegative."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("cost matrix must be square")
        if np.any(np.diag(m) != 0.0):
            raise ValueError("correct classification must cost 0")
        if np.any(m < 0.0):
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "entries", m)

    @classmethod
    def zero_one(cls, n_classes: int) -> "CostMatrix":
        return cls(np.ones((n_classes, n_classes)) - np.eye(n_classes))


def _check_posteriors(posteriors, k: int):
    p = np.asarray(posteriors, dtype=np.float64)
    if p.shape[-1] != k:
        raise ValueError(f"posterior dimension {p.shape[-1]} != class count {k}")
    return p


def expected_risk(posteriors, costs: CostMatrix) -> np.ndarray:
    """Expected cost of deciding each class: R(i) = sum_j P(j) * C[i, j]."""
    p = _check_posteriors(posteriors, costs.entries.shape[0])
    return p @ costs.entries.T


def cost_adjusted_scores(posteriors, costs: CostVector) -> np.ndarray:
    """Per-class scores P(j) * c_j."""
    p = _check_posteriors(posteriors, len(costs))
    return p * costs.costs


def predict_cs(posteriors, costs: CostVector):
    """Cost-sensitive prediction: argmax of cost-adjusted scores.

    Ties break toward the lowest class index. Accepts a single posterior
    vector or a batch (one row per sample).
    """
    scores = cost_adjusted_scores(posteriors, costs)
    if scores.ndim == 1:
        return int(np.argmax(scores))
    return np.argmax(scores, axis=1)
