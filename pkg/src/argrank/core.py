"""Shared domain types for opinions, prices and professional-behavior records."""

from __future__ import annotations

import bisect
import datetime as dt
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class ArgRankError(Exception):
    """Base class for all package errors."""


class DomainError(ArgRankError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class Stance(str, Enum):
    BULLISH = "bullish"
    BEARISH = "bearish"

    @property
    def sign(self) -> int:
        return 1 if self is Stance.BULLISH else -1


class ArgLabel(str, Enum):
    CLAIM = "claim"
    PREMISE = "premise"
    OTHER = "other"


class Source(str, Enum):
    PROFESSIONAL = "professional"
    AMATEUR = "amateur"


class EventKind(str, Enum):
    VIEW_CHANGE = "view_change"
    OTHER = "other"


class FlowCategory(str, Enum):
    QFII = "QFII"
    FUND = "Fund"
    DEALER = "Dealer"


@dataclass(frozen=True, order=True)
class TradingDay:
    # index first so ordering follows the calendar position
    index: int
    date: dt.date

    def __str__(self) -> str:
        return self.date.isoformat()


class Calendar:
    """Ordered exchange calendar; maps dates to `TradingDay` and back."""

    def __init__(self, dates: Iterable[dt.date]):
        days = []
        for i, d in enumerate(dates):
            if days and d <= days[-1].date:
                raise DomainError(f"calendar dates not strictly increasing at position {i}: {d}")
            days.append(TradingDay(i, d))
        if not days:
            raise DomainError("empty calendar")
        self._days = tuple(days)
        self._by_date = {d.date: d for d in days}

    def __len__(self) -> int:
        return len(self._days)

    def __iter__(self):
        return iter(self._days)

    def __getitem__(self, index: int) -> TradingDay:
        if index < 0:
            raise IndexError(index)
        return self._days[index]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Calendar) and self._days == other._days

    def __hash__(self) -> int:
        return hash(self._days)

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(d.date for d in self._days)

    def day(self, date: dt.date | str) -> TradingDay:
        """Resolve a date (or ISO string); raises KeyError when off-calendar."""
        if isinstance(date, str):
            date = dt.date.fromisoformat(date)
        try:
            return self._by_date[date]
        except KeyError:
            raise KeyError(f"{date.isoformat()} is not a trading day") from None

    def offset(self, day: TradingDay, n: int) -> TradingDay | None:
        """The trading day `n` positions after `day`, or None past the calendar end."""
        j = day.index + n
        if 0 <= j < len(self._days):
            return self._days[j]
        return None


@dataclass(frozen=True)
class DailyBar:
    day: TradingDay
    open: float
    high: float
    low: float
    close: float

    def __post_init__(self):
        if not (self.open > 0 and self.high > 0 and self.low > 0 and self.close > 0):
            raise DomainError(f"non-positive price on {self.day}: {self.open}/{self.high}/{self.low}/{self.close}")
        if self.low > self.high:
            raise DomainError(f"low > high on {self.day}: {self.low} > {self.high}")
        if not (self.low <= self.open <= self.high and self.low <= self.close <= self.high):
            raise DomainError(f"open/close outside [low, high] on {self.day}")


@dataclass(frozen=True)
class PriceSeries:
    stock_id: str
    bars: tuple[DailyBar, ...]
    _indices: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bars = tuple(self.bars)
        object.__setattr__(self, "bars", bars)
        idx = tuple(b.day.index for b in bars)
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise DomainError(f"{self.stock_id}: bar days must be strictly increasing")
        object.__setattr__(self, "_indices", idx)

    def __len__(self) -> int:
        return len(self.bars)

    def bar_at(self, index: int) -> DailyBar | None:
        """Bar whose calendar index equals `index`, if present."""
        i = bisect.bisect_left(self._indices, index)
        if i < len(self._indices) and self._indices[i] == index:
            return self.bars[i]
        return None

    def between(self, first: int, last: int) -> tuple[DailyBar, ...]:
        """Bars with calendar index in the closed range [first, last]."""
        lo = bisect.bisect_left(self._indices, first)
        hi = bisect.bisect_right(self._indices, last)
        return self.bars[lo:hi]


@dataclass(frozen=True)
class Sentence:
    sent_id: int
    text: str
    fsd: float | None = None
    label: ArgLabel = ArgLabel.OTHER
    supports: frozenset[int] = frozenset()
    expert_like: bool = False

    def __post_init__(self):
        object.__setattr__(self, "supports", frozenset(self.supports))
        object.__setattr__(self, "label", ArgLabel(self.label))


@dataclass(frozen=True)
class Opinion:
    opinion_id: str
    stock_id: str
    release_day: TradingDay
    stance: Stance
    source: Source
    sentences: tuple[Sentence, ...]
    price_target: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "stance", Stance(self.stance))
        object.__setattr__(self, "source", Source(self.source))


@dataclass(frozen=True)
class AnalystEvent:
    stock_id: str
    day: TradingDay
    analyst_id: str
    kind: EventKind


@dataclass(frozen=True)
class FlowRecord:
    stock_id: str
    day: TradingDay
    category: FlowCategory
    net_units: int


def validate_opinion(op: Opinion) -> list[str]:
    """Return a human-readable description of every invariant `op` breaks."""
    problems = []
    if not op.sentences:
        problems.append(f"{op.opinion_id}: opinion has no sentences")
    if op.price_target is not None and not op.price_target > 0:
        problems.append(f"{op.opinion_id}: non-positive price_target {op.price_target}")
    labels = {}
    for pos, s in enumerate(op.sentences):
        if s.sent_id != pos:
            problems.append(f"{op.opinion_id}: sent_id {s.sent_id} at position {pos} (ids must be contiguous from 0)")
        labels[s.sent_id] = s.label
    for s in op.sentences:
        if s.fsd is not None and not 0.0 <= s.fsd <= 1.0:
            problems.append(f"{op.opinion_id}/{s.sent_id}: fsd {s.fsd} outside [0, 1]")
        if s.supports and s.label is not ArgLabel.PREMISE:
            problems.append(f"{op.opinion_id}/{s.sent_id}: only premises may support claims (label is {s.label.value})")
        for target in sorted(s.supports):
            if target not in labels:
                problems.append(f"{op.opinion_id}/{s.sent_id}: supports unknown sentence {target}")
            elif labels[target] is not ArgLabel.CLAIM:
                problems.append(
                    f"{op.opinion_id}/{s.sent_id}: supports sentence {target} labeled {labels[target].value}, not claim"
                )
    return problems


def sort_opinions(ops: Sequence[Opinion]) -> list[Opinion]:
    return sorted(ops, key=lambda o: o.opinion_id)
