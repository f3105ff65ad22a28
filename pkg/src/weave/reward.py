"""Composite scoring of candidate pipelines.

Five terms, each normalized: task performance M in [0,1], improvement over
the parent in [-1,1], novelty against the archive in [0,1], execution
efficiency in [0,1], and a binary executability term. The total is their
weighted sum.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Callable

from .errors import InvalidBudgetError, MetricOutOfRangeError

logger = logging.getLogger(__name__)

SHINGLE_TOKENS = 8

_NUMBER_RE = re.compile(r"[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?")


@dataclass(frozen=True)
class RewardWeights:
    performance: float = 0.6
    improvement: float = 0.1
    novelty: float = 0.1
    efficiency: float = 0.1
    debug: float = 0.1

    def __post_init__(self):
        values = self.as_tuple()
        if any(w < 0 for w in values):
            raise ValueError(f"weights must be non-negative: {values}")
        if all(w == 0 for w in values):
            raise ValueError("at least one weight must be positive")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.performance, self.improvement, self.novelty,
                self.efficiency, self.debug)

    @classmethod
    def from_dict(cls, raw: dict) -> "RewardWeights":
        return cls(**{k: float(v) for k, v in raw.items()})


DEFAULT_WEIGHTS = RewardWeights()
PERFORMANCE_ONLY = RewardWeights(1.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RewardBreakdown:
    performance: float
    improvement: float
    novelty: float
    efficiency: float
    debug: float
    total: float

    def to_dict(self) -> dict:
        return {
            "performance": self.performance,
            "improvement": self.improvement,
            "novelty": self.novelty,
            "efficiency": self.efficiency,
            "debug": self.debug,
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RewardBreakdown":
        return cls(**raw)


def efficiency_term(tau_s: float, tau_max: float) -> float:
    """1 - sqrt(min(1, tau_s / tau_max)): 1 at zero latency, 0 at the budget."""
    if tau_max <= 0 or not math.isfinite(tau_max):
        raise InvalidBudgetError(f"tau_max must be positive and finite, got {tau_max}")
    if tau_s < 0 or not math.isfinite(tau_s):
        raise InvalidBudgetError(f"tau_s must be non-negative and finite, got {tau_s}")
    return 1.0 - math.sqrt(min(1.0, tau_s / tau_max))


def _shingles(script: str) -> frozenset[tuple[str, ...]]:
    tokens = script.split()
    if not tokens:
        return frozenset()
    if len(tokens) <= SHINGLE_TOKENS:
        return frozenset([tuple(tokens)])
    return frozenset(
        tuple(tokens[i : i + SHINGLE_TOKENS])
        for i in range(len(tokens) - SHINGLE_TOKENS + 1)
    )


def lexical_novelty(script: str, archive_scripts: list[str]) -> float:
    """1 minus the best token-shingle Jaccard similarity against the archive."""
    if not archive_scripts:
        return 1.0
    mine = _shingles(script)
    best = 0.0
    for other in archive_scripts:
        theirs = _shingles(other)
        union = mine | theirs
        if not union:
            best = max(best, 1.0)  # two empty scripts are identical
            continue
        best = max(best, len(mine & theirs) / len(union))
    return 1.0 - best


def parse_judge_score(response: str) -> float | None:
    """First numeric token of a judge response, clamped to [0,1]; None if absent."""
    match = _NUMBER_RE.search(response)
    if not match:
        return None
    return min(1.0, max(0.0, float(match.group())))


def novelty_term(
    script: str,
    archive: list[tuple[str, str]],
    judge: Callable[[str, list[str]], str] | None = None,
) -> float:
    """Novelty of `script` against the archive of (script, rationale) pairs.

    An empty archive scores 1. The generative judge, when given, is asked
    twice at most for a parseable single number; anything else falls back
    to the lexical shingle estimator. Never raises on judge misbehavior.
    """
    if not archive:
        return 1.0
    if judge is not None:
        rationales = [r for _, r in archive[-5:]]
        for _ in range(2):
            try:
                score = parse_judge_score(judge(script, rationales))
            except Exception as exc:
                logger.warning("novelty judge failed, falling back: %s", exc)
                break
            if score is not None:
                return score
    return lexical_novelty(script, [s for s, _ in archive])


def compose_reward(
    metric_report,
    parent_performance: float | None,
    outcome,
    novelty: float,
    weights: RewardWeights,
    tau_max: float,
) -> RewardBreakdown:
    """Assemble the full breakdown for one executed (or failed) candidate.

    Success means the run produced a parseable metric report: performance is
    its primary metric and the executability term is 1. Any failure zeroes
    both, so a broken script is still scored (and comparable) but penalized.
    """
    succeeded = outcome.status == "SUCCESS" and metric_report is not None
    if succeeded:
        performance = float(metric_report.primary_metric)
        if not (0.0 <= performance <= 1.0):
            raise MetricOutOfRangeError(f"primary metric out of [0,1]: {performance}")
        debug = 1.0
    else:
        performance = 0.0
        debug = 0.0
    improvement = performance - parent_performance if parent_performance is not None else 0.0
    gamma = efficiency_term(outcome.tau_s, tau_max)
    w = weights
    total = (
        w.performance * performance
        + w.improvement * improvement
        + w.novelty * novelty
        + w.efficiency * gamma
        + w.debug * debug
    )
    return RewardBreakdown(
        performance=performance,
        improvement=improvement,
        novelty=novelty,
        efficiency=gamma,
        debug=debug,
        total=total,
    )
