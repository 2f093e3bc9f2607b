"""Sentence strength providers and opinion-level aggregation strategies."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .core import ArgLabel, ArgRankError, DomainError, Opinion, Sentence


class ScoringError(ArgRankError, ValueError):
    pass


class Strategy(str, Enum):
    ALL_SENT = "AllSent"
    ALL_ARG = "AllArg"
    CLAIM_ONLY = "ClaimOnly"
    PREMISE_ONLY = "PremiseOnly"
    KEY_PREMISE = "KeyPremise"
    EXPERT_LIKE = "ExpertLike"
    EXPERT_LIKE_FSD = "ExpertLikeFsd"


FSD_STRATEGIES = tuple(s for s in Strategy if s is not Strategy.EXPERT_LIKE)


@dataclass(frozen=True)
class StrategyScore:
    opinion_id: str
    strategy: Strategy
    score: float
    defined: bool

    def __post_init__(self):
        if not self.defined and self.score != 0:
            raise DomainError("undefined scores must be 0")


@dataclass(frozen=True)
class SdConfig:
    mean_sd_threshold: float = 0.2251


def compute_sd(price_target: float, close_at_release: float) -> float:
    """Relative gap between a price target and the release-day close."""
    if not price_target > 0 or not close_at_release > 0:
        raise DomainError(f"prices must be positive (price_target={price_target}, close={close_at_release})")
    return (price_target - close_at_release) / close_at_release


def bucket_sd(sd: float, cfg: SdConfig = SdConfig()) -> str:
    return "above_mean" if sd > cfg.mean_sd_threshold else "at_or_below_mean"


# providers

_TOKEN = re.compile(r"[\w']+", re.UNICODE)

BUILTIN_LEXICON = {
    "growth": 0.8,
    "explosive": 1.0,
    "expand": 0.6,
    "expansion": 0.6,
    "record": 0.5,
    "strong": 0.6,
    "beat": 0.5,
    "upgrade": 0.7,
    "downturn": -1.0,
    "slow": -0.6,
    "weak": -0.6,
    "decline": -0.8,
    "loss": -0.8,
    "downgrade": -0.7,
}


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def lexicon_fsd(text: str, lexicon: Mapping[str, float]) -> float:
    """Logistic of the summed weights of lexicon terms found in `text`.

    Matching is case-insensitive over whole tokens; every occurrence counts.
    """
    total = math.fsum(lexicon.get(tok, 0.0) for tok in _TOKEN.findall(text.lower()))
    return _logistic(total)


def load_lexicon(path) -> dict[str, float]:
    lex = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            try:
                term, weight = line.split("\t")
                w = float(weight)
            except ValueError:
                raise ScoringError(f"{path}:{n}: expected term<TAB>weight") from None
            if not -1.0 <= w <= 1.0:
                raise ScoringError(f"{path}:{n}: weight {w} outside [-1, 1]")
            lex[term.strip().lower()] = w
    return lex


def load_scorefile(path) -> dict[tuple[str, int], float]:
    scores = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["opinion_id", "sent_id", "fsd"]:
            raise ScoringError(f"{path}: expected header opinion_id,sent_id,fsd")
        for row in reader:
            try:
                key = (row["opinion_id"], int(row["sent_id"]))
                fsd = float(row["fsd"])
            except (TypeError, ValueError):
                raise ScoringError(f"{path}:{reader.line_num}: bad row {row}") from None
            if not 0.0 <= fsd <= 1.0:
                raise ScoringError(f"{path}:{reader.line_num}: fsd {fsd} outside [0, 1]")
            scores[key] = fsd
    return scores


class FsdProvider:
    kind = "abstract"

    def fsd(self, op: Opinion, s: Sentence) -> float:
        raise NotImplementedError


class EmbeddedProvider(FsdProvider):
    """Use the fsd values already attached to each sentence."""

    kind = "embedded"

    def fsd(self, op, s):
        if s.fsd is None:
            raise ScoringError(f"no embedded fsd for {op.opinion_id}/{s.sent_id}")
        return s.fsd


class ScoreFileProvider(FsdProvider):
    kind = "scorefile"

    def __init__(self, scores: Mapping[tuple[str, int], float]):
        self.scores = dict(scores)

    @classmethod
    def from_csv(cls, path):
        return cls(load_scorefile(path))

    def fsd(self, op, s):
        try:
            return self.scores[(op.opinion_id, s.sent_id)]
        except KeyError:
            raise ScoringError(f"score file has no entry for {op.opinion_id}/{s.sent_id}") from None


class LexiconProvider(FsdProvider):
    kind = "lexicon"

    def __init__(self, lexicon: Mapping[str, float] | None = None):
        self.lexicon = {k.lower(): v for k, v in (lexicon or BUILTIN_LEXICON).items()}

    def fsd(self, op, s):
        return lexicon_fsd(s.text, self.lexicon)


def apply_provider(op: Opinion, provider: FsdProvider) -> Opinion:
    """Copy of `op` with every sentence's fsd set by `provider`."""
    sents = tuple(replace(s, fsd=provider.fsd(op, s)) for s in op.sentences)
    if all(a.fsd == b.fsd for a, b in zip(sents, op.sentences)):
        return op
    return replace(op, sentences=sents)


# aggregation


def _mean(xs: Sequence[float]) -> float:
    # shifting by the minimum keeps a constant input exact and the result order-free
    m = min(xs)
    mean = m + math.fsum(x - m for x in xs) / len(xs)
    return min(max(mean, m), max(xs))


def eligible(op: Opinion, strategy: Strategy) -> list[Sentence]:
    """Sentences a strategy aggregates over."""
    sents = op.sentences
    if strategy is Strategy.ALL_SENT:
        return list(sents)
    if strategy is Strategy.ALL_ARG:
        return [s for s in sents if s.label in (ArgLabel.CLAIM, ArgLabel.PREMISE)]
    if strategy is Strategy.CLAIM_ONLY:
        return [s for s in sents if s.label is ArgLabel.CLAIM]
    if strategy is Strategy.PREMISE_ONLY:
        return [s for s in sents if s.label is ArgLabel.PREMISE]
    if strategy is Strategy.KEY_PREMISE:
        claims = {s.sent_id for s in sents if s.label is ArgLabel.CLAIM}
        return [s for s in sents if s.label is ArgLabel.PREMISE and s.supports & claims]
    if strategy in (Strategy.EXPERT_LIKE, Strategy.EXPERT_LIKE_FSD):
        return [s for s in sents if s.expert_like]
    raise ValueError(strategy)


def score_opinion(op: Opinion, strategy: Strategy | str) -> StrategyScore:
    strategy = Strategy(strategy)
    chosen = eligible(op, strategy)
    if not chosen:
        return StrategyScore(op.opinion_id, strategy, 0.0, False)
    if strategy is Strategy.EXPERT_LIKE:
        return StrategyScore(op.opinion_id, strategy, float(len(chosen)), True)
    missing = [s.sent_id for s in chosen if s.fsd is None]
    if missing:
        raise ScoringError(f"{op.opinion_id}: {strategy.value} needs fsd on sentences {missing}")
    values = [s.fsd for s in chosen]
    score = max(values) if strategy is Strategy.KEY_PREMISE else _mean(values)
    return StrategyScore(op.opinion_id, strategy, score, True)


def score_corpus(
    opinions: Iterable[Opinion], strategies: Iterable[Strategy | str], provider: FsdProvider | None = None
) -> list[StrategyScore]:
    """Score every opinion under every strategy, ordered by (strategy, opinion_id)."""
    strategies = [Strategy(s) for s in strategies]
    ops = sorted(opinions, key=lambda o: o.opinion_id)
    needs_fsd = any(s is not Strategy.EXPERT_LIKE for s in strategies)
    if provider is not None and needs_fsd:
        ops = [apply_provider(o, provider) for o in ops]
    return [score_opinion(o, s) for s in strategies for o in ops]


def write_strategy_scores(path, scores: Iterable[StrategyScore]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["opinion_id", "strategy", "score", "defined"])
        for s in scores:
            w.writerow([s.opinion_id, s.strategy.value, repr(s.score), "true" if s.defined else "false"])


def read_strategy_scores(path) -> dict[Strategy, list[StrategyScore]]:
    """Group a `strategy_scores.csv` file by strategy, preserving file order."""
    out: dict[Strategy, list[StrategyScore]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["opinion_id", "strategy", "score", "defined"]:
            raise ScoringError(f"{path}: expected header opinion_id,strategy,score,defined")
        for row in reader:
            try:
                st = Strategy(row["strategy"])
                defined = {"true": True, "false": False}[row["defined"]]
                sc = StrategyScore(row["opinion_id"], st, float(row["score"]), defined)
            except (KeyError, ValueError):
                raise ScoringError(f"{path}:{reader.line_num}: bad row {row}") from None
            out.setdefault(st, []).append(sc)
    return out
