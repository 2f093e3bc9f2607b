"""Ranking and ranking-quality metrics: deciles, top-k, nDCG and the Friedman test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .core import DomainError
from .scoring import Strategy, StrategyScore

N_DECILES = 10


class Metric(str, Enum):
    MPP = "MPP"
    ML = "ML"

    def of(self, outcome) -> float:
        return outcome.mpp if self is Metric.MPP else outcome.ml


@dataclass(frozen=True)
class Ranking:
    strategy: Strategy
    ordered: tuple[str, ...]
    scores: tuple[StrategyScore, ...]

    def __len__(self):
        return len(self.ordered)

    def position(self) -> dict[str, int]:
        """1-based rank position of each opinion."""
        return {oid: i for i, oid in enumerate(self.ordered, start=1)}

    def restrict(self, keep) -> Ranking:
        """Sub-ranking over the opinion ids in `keep`, order preserved."""
        pairs = [(o, s) for o, s in zip(self.ordered, self.scores) if o in keep]
        return Ranking(self.strategy, tuple(o for o, _ in pairs), tuple(s for _, s in pairs))


def _rank_key(s: StrategyScore):
    return (not s.defined, -s.score, s.opinion_id)


def rank(scores: Sequence[StrategyScore]) -> Ranking:
    """Best first: defined before undefined, score descending, opinion id ascending."""
    if not scores:
        raise DomainError("cannot rank an empty score list")
    strategies = {s.strategy for s in scores}
    if len(strategies) != 1:
        raise DomainError(f"scores mix strategies: {sorted(x.value for x in strategies)}")
    seen = set()
    for s in scores:
        if s.opinion_id in seen:
            raise DomainError(f"duplicate opinion_id {s.opinion_id}")
        seen.add(s.opinion_id)
    ordered = sorted(scores, key=_rank_key)
    return Ranking(ordered[0].strategy, tuple(s.opinion_id for s in ordered), tuple(ordered))


def decile_sizes(n: int) -> list[int]:
    """Sizes of deciles 1..10; the remainder goes one each to the top deciles."""
    base, extra = divmod(n, N_DECILES)
    # index 0 is decile 1, index 9 is decile 10
    return [base + (1 if d >= N_DECILES - extra else 0) for d in range(N_DECILES)]


def decile_blocks(ordered: Sequence[str]) -> list[list[str]]:
    """Split a best-first ordering into deciles; element 0 is decile 1 (worst)."""
    sizes = decile_sizes(len(ordered))
    blocks = []
    start = 0
    for size in reversed(sizes):
        blocks.append(list(ordered[start:start + size]))
        start += size
    return blocks[::-1]


@dataclass(frozen=True)
class DecileReport:
    strategy: Strategy
    metric: Metric
    decile_means: tuple[float, ...]
    decile_sizes: tuple[int, ...]

    def mean(self, decile: int) -> float:
        """Mean for decile 1..10 (10 is the top-ranked block)."""
        if not 1 <= decile <= N_DECILES:
            raise IndexError(decile)
        return self.decile_means[decile - 1]


def _metric_values(ids, outcomes, metric):
    vals = []
    for oid in ids:
        try:
            vals.append(metric.of(outcomes[oid]))
        except KeyError:
            raise DomainError(f"no backtest outcome for opinion {oid}") from None
    return vals


def decile_report(r: Ranking, outcomes: Mapping[str, object], metric: Metric | str = Metric.MPP) -> DecileReport:
    metric = Metric(metric)
    blocks = decile_blocks(r.ordered)
    means = []
    for block in blocks:
        vals = _metric_values(block, outcomes, metric)
        means.append(math.fsum(vals) / len(vals) if vals else math.nan)
    return DecileReport(r.strategy, metric, tuple(means), tuple(len(b) for b in blocks))


def top_k_report(r: Ranking, outcomes: Mapping[str, object], k: int, metric: Metric | str = Metric.MPP) -> float:
    metric = Metric(metric)
    if not 1 <= k <= len(r.ordered):
        raise DomainError(f"k must be in [1, {len(r.ordered)}], got {k}")
    vals = _metric_values(r.ordered[:k], outcomes, metric)
    return math.fsum(vals) / k


def _dcg(gains: Sequence[float]) -> float:
    return math.fsum(g / math.log2(i + 1) for i, g in enumerate(gains, start=1))


def ndcg(r: Ranking, relevance: Mapping[str, float], cutoff: int | None = None) -> float:
    """Normalized DCG with linear gain and 1/log2(position + 1) discount."""
    if cutoff is not None and cutoff < 1:
        raise DomainError(f"cutoff must be positive, got {cutoff}")
    gains = [float(relevance.get(oid, 0.0)) for oid in r.ordered]
    if any(g < 0 for g in gains):
        raise DomainError("relevance must be non-negative")
    ideal = sorted(gains, reverse=True)
    if cutoff is not None:
        gains, ideal = gains[:cutoff], ideal[:cutoff]
    best = _dcg(ideal)
    if not best > 0:
        raise DomainError("nDCG undefined: all relevances are zero")
    return min(1.0, _dcg(gains) / best)


# chi-square tail via the regularized upper incomplete gamma function

_RTOL = 1e-10
_MAX_ITER = 10_000


def _gamma_p_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _RTOL:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_cf(a: float, x: float) -> float:
    # modified Lentz
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _RTOL:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise DomainError("a must be positive")
    if x < 0:
        raise DomainError("x must be non-negative")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_p_series(a, x))
    return min(1.0, _gamma_q_cf(a, x))


def chi2_sf(x: float, df: int) -> float:
    if x <= 0:
        return 1.0
    return gammaincc(df / 2.0, x / 2.0)


def _average_ranks(row: Sequence[float]) -> tuple[list[float], float]:
    """Average ranks (1-based) of one block plus its tie term sum(t^3 - t)."""
    order = sorted(range(len(row)), key=lambda j: row[j])
    ranks = [0.0] * len(row)
    ties = 0.0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and row[order[j + 1]] == row[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for m in range(i, j + 1):
            ranks[order[m]] = avg
        t = j - i + 1
        ties += t ** 3 - t
        i = j + 1
    return ranks, ties


def friedman_test(matrix: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Friedman chi-square over n blocks (rows) by k treatments (columns).

    Ranks are taken within each row with ties averaged, and the statistic
    carries the usual tie correction. Returns (statistic, p_value) with
    p from a chi-square tail on k - 1 degrees of freedom.
    """
    n = len(matrix)
    if n < 2:
        raise DomainError(f"need at least 2 blocks, got {n}")
    k = len(matrix[0])
    if k < 2:
        raise DomainError(f"need at least 2 treatments, got {k}")
    if any(len(row) != k for row in matrix):
        raise DomainError("ragged measurement matrix")
    rank_sums = [0.0] * k
    tie_total = 0.0
    for row in matrix:
        ranks, ties = _average_ranks(row)
        tie_total += ties
        for j, rnk in enumerate(ranks):
            rank_sums[j] += rnk
    centre = n * (k + 1) / 2.0
    ss = math.fsum((rj - centre) ** 2 for rj in rank_sums)
    stat = 12.0 * ss / (n * k * (k + 1))
    correction = 1.0 - tie_total / (n * k * (k * k - 1))
    if correction <= 0:
        # every block fully tied: no disagreement to measure
        return 0.0, 1.0
    stat /= correction
    return stat, chi2_sf(stat, k - 1)


def rank_position_matrix(rankings: Sequence[Ranking]) -> tuple[list[str], list[list[float]]]:
    """Blocks = opinions common to every ranking, columns = each ranking's position."""
    if not rankings:
        return [], []
    positions = [r.position() for r in rankings]
    common = sorted(set.intersection(*(set(p) for p in positions)))
    return common, [[float(p[oid]) for p in positions] for oid in common]
