"""Similarity between two texts from their token embeddings."""

from __future__ import annotations

import numpy as np


def greedy_match_score(a: np.ndarray, b: np.ndarray) -> float:
    """Greedy-alignment cosine F1 between two (tokens, dim) matrices.

    Each token is matched with its most similar counterpart on the other
    side; the two directional means are combined as F1 and clamped into
    [0, 1]. Two empty texts count as identical, one empty text as
    completely dissimilar.
    """
    if a.size == 0 and b.size == 0:
        return 1.0
    if a.size == 0 or b.size == 0:
        return 0.0
    a = a / np.maximum(np.linalg.norm(a, axis=1, keepdims=True), 1e-12)
    b = b / np.maximum(np.linalg.norm(b, axis=1, keepdims=True), 1e-12)
    similarities = a @ b.T
    precision = float(np.mean(np.max(similarities, axis=1)))
    recall = float(np.mean(np.max(similarities, axis=0)))
    if precision + recall <= 0.0:
        return 0.0
    f1 = 2.0 * precision * recall / (precision + recall)
    return min(1.0, max(0.0, f1))
