"""Matching predicted workflow steps against gold steps.

Descriptions are compared after a shared normalization pass (lowercase,
punctuation stripped, tokens stemmed) so that surface variants such as
"offering a promo code" and "offer a promo code" coincide. An alternative
similarity mode scores description pairs with a pluggable provider and
accepts anything at or above a threshold.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import requests

from wdkit import porter
from wdkit.errors import MalformedResponse, ProviderUnavailable

# Reserved step used to pad short predictions during alignment. Step domains
# reject any description that normalizes to this, so a padded position can
# never match.
MISSING_STEP = "Missing"

_NON_WORD = re.compile(r"[\W_]+", re.UNICODE)


def normalize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split, and stem every token."""
    cleaned = _NON_WORD.sub(" ", text.lower())
    return [porter.stem(token) for token in cleaned.split()]


class MatchMode(str, Enum):
    STEM_EXACT = "stem"
    SIMILARITY = "sim"


class SimilarityProvider:
    """Scores text pairs in [0, 1]; 1.0 means interchangeable."""

    name = "abstract"

    def score(self, a: str, b: str) -> float:
        raise NotImplementedError

    def score_batch(self, texts_a: Sequence[str], texts_b: Sequence[str]) -> list[float]:
        return [self.score(a, b) for a, b in zip(texts_a, texts_b)]


@dataclass(frozen=True)
class MatchConfig:
    mode: MatchMode = MatchMode.STEM_EXACT
    threshold: float = 0.95
    compare_values: bool = False
    provider: SimilarityProvider | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside [0, 1]")


def _values_match(pred_values: Sequence[str], gold_values: Sequence[str]) -> bool:
    # every gold value must sit at its own position; extra predicted values
    # are ignored (values are entities, so no stemming, just trim + casefold)
    if len(pred_values) < len(gold_values):
        return False
    return all(
        p.strip().casefold() == g.strip().casefold()
        for p, g in zip(pred_values, gold_values)
    )


def match_step(
    pred: tuple[str, Sequence[str]],
    gold: tuple[str, Sequence[str]],
    cfg: MatchConfig,
) -> bool:
    """Decide whether a predicted (description, values) pair matches gold."""
    pred_desc, pred_values = pred
    gold_desc, gold_values = gold
    if cfg.mode is MatchMode.STEM_EXACT:
        desc_ok = normalize(pred_desc) == normalize(gold_desc)
    else:
        if cfg.provider is None:
            raise ProviderUnavailable("similarity mode requires a provider")
        desc_ok = cfg.provider.score(pred_desc, gold_desc) >= cfg.threshold
    if not desc_ok:
        return False
    if not cfg.compare_values:
        return True
    return _values_match(pred_values, gold_values)


class _LexicalProvider(SimilarityProvider):
    """Greedy token-level F1 over stemmed tokens.

    Each token of one side matches its best counterpart on the other; with
    exact-token similarity that reduces to membership counting. Precision
    and recall are combined into F1, and empty sides score 0.
    """

    name = "lexical-f1"

    def score(self, a: str, b: str) -> float:
        tokens_a = normalize(a)
        tokens_b = normalize(b)
        if not tokens_a or not tokens_b:
            return 0.0
        set_a = set(tokens_a)
        set_b = set(tokens_b)
        precision = sum(1 for t in tokens_a if t in set_b) / len(tokens_a)
        recall = sum(1 for t in tokens_b if t in set_a) / len(tokens_b)
        if precision + recall == 0.0:
            return 0.0
        return 2.0 * precision * recall / (precision + recall)


def lexical_provider() -> SimilarityProvider:
    """Embedding-free similarity built from stemmed token overlap."""
    return _LexicalProvider()


class _RemoteProvider(SimilarityProvider):
    def __init__(self, endpoint: str, timeout: float = 30.0) -> None:
        self.name = f"remote:{endpoint}"
        self._url = endpoint.rstrip("/") + "/score"
        self._timeout = timeout
        self._session = requests.Session()

    def score(self, a: str, b: str) -> float:
        return self.score_batch([a], [b])[0]

    def score_batch(self, texts_a: Sequence[str], texts_b: Sequence[str]) -> list[float]:
        body = {"texts_a": list(texts_a), "texts_b": list(texts_b)}
        try:
            resp = self._session.post(self._url, json=body, timeout=self._timeout)
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"{self._url}: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(f"{self._url}: HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise MalformedResponse(f"{self._url}: body is not JSON") from exc
        scores = payload.get("scores") if isinstance(payload, dict) else None
        if not isinstance(scores, list) or len(scores) != len(texts_a):
            raise MalformedResponse(f"{self._url}: expected {len(texts_a)} scores")
        try:
            return [float(s) for s in scores]
        except (TypeError, ValueError) as exc:
            raise MalformedResponse(f"{self._url}: non-numeric score") from exc


def remote_provider(endpoint: str, timeout: float = 30.0) -> SimilarityProvider:
    """Similarity backed by an HTTP service speaking the score wire format."""
    return _RemoteProvider(endpoint, timeout=timeout)
