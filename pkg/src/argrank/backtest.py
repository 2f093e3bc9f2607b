"""Maximum possible profit (MPP) and maximum loss (ML) over a post-release window.

Entry is the open of the first trading day after release. Exits scan every
bar in the following `horizon_days` trading days; bars missing from the
series are skipped, and a series ending early yields a truncated window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .core import ArgRankError, DailyBar, DomainError, Opinion, PriceSeries, Stance, TradingDay


class EquationMode(str, Enum):
    PROFIT_CONSISTENT = "profit_consistent"
    # bearish MPP as a min and bearish ML as a max
    LITERAL = "literal"


class NoEntryPrice(ArgRankError, LookupError):
    pass


@dataclass(frozen=True)
class BacktestConfig:
    horizon_days: int = 60
    equation_mode: EquationMode = EquationMode.PROFIT_CONSISTENT

    def __post_init__(self):
        if self.horizon_days < 1:
            raise DomainError(f"horizon_days must be >= 1, got {self.horizon_days}")
        object.__setattr__(self, "equation_mode", EquationMode(self.equation_mode))


@dataclass(frozen=True)
class BacktestOutcome:
    opinion_id: str
    stance: Stance
    mpp: float
    ml: float
    entry_day: TradingDay | None
    window_end: TradingDay | None
    truncated: bool


@dataclass(frozen=True)
class Skip:
    opinion_id: str
    reason: str


@dataclass
class BacktestRun:
    outcomes: list[BacktestOutcome] = field(default_factory=list)
    skipped: list[Skip] = field(default_factory=list)


def window(op: Opinion, series: PriceSeries, cfg: BacktestConfig) -> tuple[DailyBar, tuple[DailyBar, ...], bool]:
    """Entry bar, exit-candidate bars and the truncation flag for `op`."""
    t = op.release_day.index
    entry = series.bar_at(t + 1)
    if entry is None:
        raise NoEntryPrice(f"{op.opinion_id}: no entry price for {series.stock_id} on the day after {op.release_day}")
    last = t + cfg.horizon_days
    bars = series.between(t + 1, last)
    truncated = series.bars[-1].day.index < last
    return entry, bars, truncated


def _mpp(stance, o, bars, mode):
    if stance is Stance.BULLISH:
        return max((b.high - o) / o for b in bars)
    gains = [(o - b.low) / o for b in bars]
    return min(gains) if mode is EquationMode.LITERAL else max(gains)


def _ml(stance, o, bars, mode):
    if stance is Stance.BULLISH:
        return min((b.low - o) / o for b in bars)
    losses = [(o - b.high) / o for b in bars]
    return max(losses) if mode is EquationMode.LITERAL else min(losses)


def compute_mpp(op: Opinion, series: PriceSeries, cfg: BacktestConfig = BacktestConfig()) -> float:
    entry, bars, _ = window(op, series, cfg)
    return _mpp(op.stance, entry.open, bars, cfg.equation_mode)


def compute_ml(op: Opinion, series: PriceSeries, cfg: BacktestConfig = BacktestConfig()) -> float:
    entry, bars, _ = window(op, series, cfg)
    return _ml(op.stance, entry.open, bars, cfg.equation_mode)


def backtest_opinion(op: Opinion, series: PriceSeries, cfg: BacktestConfig = BacktestConfig()) -> BacktestOutcome:
    entry, bars, truncated = window(op, series, cfg)
    o, mode = entry.open, cfg.equation_mode
    return BacktestOutcome(
        opinion_id=op.opinion_id,
        stance=op.stance,
        mpp=_mpp(op.stance, o, bars, mode),
        ml=_ml(op.stance, o, bars, mode),
        entry_day=entry.day,
        window_end=bars[-1].day,
        truncated=truncated,
    )


def backtest_corpus(bundle, cfg: BacktestConfig = BacktestConfig()) -> BacktestRun:
    """Backtest every opinion in a bundle; unpriceable opinions land in `skipped`."""
    run = BacktestRun()
    for op in sorted(bundle.opinions, key=lambda o: o.opinion_id):
        series = bundle.prices.get(op.stock_id)
        if series is None:
            run.skipped.append(Skip(op.opinion_id, f"no price series for {op.stock_id}"))
            continue
        try:
            run.outcomes.append(backtest_opinion(op, series, cfg))
        except NoEntryPrice as e:
            run.skipped.append(Skip(op.opinion_id, str(e)))
    return run


OUTCOMES_HEADER = ["opinion_id", "stance", "mpp", "ml", "truncated"]


def write_outcomes(path, outcomes: Iterable[BacktestOutcome]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OUTCOMES_HEADER)
        for o in outcomes:
            w.writerow([o.opinion_id, o.stance.value, repr(o.mpp), repr(o.ml), "true" if o.truncated else "false"])


def write_skips(path, skips: Iterable[Skip]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["opinion_id", "reason"])
        for s in skips:
            w.writerow([s.opinion_id, s.reason])


def read_outcomes(path) -> dict[str, BacktestOutcome]:
    """Outcomes keyed by opinion id; entry/exit days are not stored in the file."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != OUTCOMES_HEADER:
            raise ArgRankError(f"{path}: expected header {','.join(OUTCOMES_HEADER)}")
        for row in reader:
            try:
                out[row["opinion_id"]] = BacktestOutcome(
                    opinion_id=row["opinion_id"],
                    stance=Stance(row["stance"]),
                    mpp=float(row["mpp"]),
                    ml=float(row["ml"]),
                    entry_day=None,
                    window_end=None,
                    truncated=row["truncated"] == "true",
                )
            except ValueError:
                raise ArgRankError(f"{path}:{reader.line_num}: bad row {row}") from None
    return out
