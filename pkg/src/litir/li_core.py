"""Entropy, informative entropy and the least-information distance.

All logarithms are natural. ``least_information`` is symmetric and stays
finite even for distributions with exact zeros and ones, unlike relative
entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

PROB_SUM_TOL = 1e-9


class DomainError(ValueError):
    """A probability fell outside [0, 1]."""


class DimensionError(ValueError):
    """Two distributions have different numbers of inferences."""


@dataclass(frozen=True)
class ProbDistribution:
    """Probabilities over exhaustive, mutually exclusive inferences."""

    probs: tuple[float, ...]

    def __init__(self, probs: Sequence[float]):
        probs = tuple(float(p) for p in probs)
        if not probs:
            raise ValueError("distribution needs at least one inference")
        for p in probs:
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"probability {p!r} outside [0, 1]")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)


@dataclass(frozen=True)
class LiBreakdown:
    per_inference: tuple[float, ...]
    total: float


def _as_dist(d: ProbDistribution | Sequence[float]) -> ProbDistribution:
    return d if isinstance(d, ProbDistribution) else ProbDistribution(d)


def informative_entropy(p: float) -> float:
    """Return ``p * (1 - ln p)``, with the limit value 0 at ``p = 0``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability {p!r} outside [0, 1]")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    return p * (1.0 - math.log(p))


def entropy(d: ProbDistribution | Sequence[float], k: float = 1.0) -> float:
    """Shannon entropy ``-k * sum(p ln p)`` in nats (0 ln 0 taken as 0)."""
    if k <= 0:
        raise ValueError("entropy constant k must be positive")
    d = _as_dist(d)
    h = -k * math.fsum(p * math.log(p) for p in d.probs if p > 0.0)
    return h if h > 0.0 else 0.0


def _check_same_length(x: ProbDistribution, y: ProbDistribution) -> None:
    if len(x) != len(y):
        raise DimensionError(f"distributions differ in length: {len(x)} vs {len(y)}")


def delta_entropy(
    x: ProbDistribution | Sequence[float], y: ProbDistribution | Sequence[float]
) -> float:
    """Entropy change ``H(y) - H(x)``; may be negative."""
    x, y = _as_dist(x), _as_dist(y)
    _check_same_length(x, y)
    return entropy(y) - entropy(x)


def least_information(
    x: ProbDistribution | Sequence[float], y: ProbDistribution | Sequence[float]
) -> LiBreakdown:
    """Least information needed to explain the change from ``x`` to ``y``.

    Each inference contributes ``|g(y_i) - g(x_i)|`` where ``g`` is
    :func:`informative_entropy`; the total is the sum of these parts.
    """
    x, y = _as_dist(x), _as_dist(y)
    _check_same_length(x, y)
    parts = tuple(
        abs(informative_entropy(yi) - informative_entropy(xi))
        for xi, yi in zip(x.probs, y.probs)
    )
    return LiBreakdown(per_inference=parts, total=math.fsum(parts))


def binary_li_curve(steps: int) -> list[tuple[float, float, float]]:
    """Sample the two-inference reduction to certainty at ``steps`` points.

    Rows are ``(p, li, abs_delta_h)`` for ``p = 1/steps, 2/steps, ..., 1``:
    ``li`` is the least information for ``(p, 1-p) -> (1, 0)`` and
    ``abs_delta_h`` the magnitude of the matching entropy reduction.
    """
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 2:
        raise ValueError(f"steps must be an integer >= 2, got {steps!r}")
    certain = ProbDistribution((1.0, 0.0))
    rows = []
    for j in range(1, steps + 1):
        p = j / steps
        prior = ProbDistribution((p, 1.0 - p))
        li = least_information(prior, certain).total
        rows.append((p, li, abs(delta_entropy(prior, certain))))
    return rows
