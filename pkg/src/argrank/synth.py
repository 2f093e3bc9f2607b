"""Synthetic corpora with a tunable link between sentence strength and future returns.

Every opinion gets a latent strength u in [0, 1]. Over its post-release
window the stock trends in the stance's direction by a total move of
``coupling * u * max_move`` (log-linear path), overlaid with noise scaled by
``1 - coupling``. Opinions on one stock get disjoint windows, so each window
carries exactly one opinion's signal. Sentence fsd is u plus gaussian noise,
clamped to [0, 1].
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import (
    AnalystEvent,
    ArgLabel,
    Calendar,
    DailyBar,
    DomainError,
    EventKind,
    FlowCategory,
    FlowRecord,
    Opinion,
    PriceSeries,
    Sentence,
    Source,
    Stance,
)
from .ingest import CorpusBundle, write_bundle

SCORES_FILE = "scores.csv"


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_stocks: int = 550
    n_days: int = 250
    n_opinions: int = 2000
    sentences_per_opinion: tuple[int, int] = (3, 8)
    strength_return_coupling: float = 0.6
    fsd_noise: float = 0.15
    claim_ratio: float = 0.25
    premise_ratio: float = 0.35
    event_rate: float = 0.3
    flow_agreement_rate: float = 0.5
    expert_like_rate: float = 0.3
    amateur_share: float = 0.0
    horizon_days: int = 60
    max_move: float = 0.3
    volatility: float = 0.02
    intraday_spread: float = 0.01
    start_date: str = "2020-01-01"

    def __post_init__(self):
        object.__setattr__(self, "sentences_per_opinion", tuple(self.sentences_per_opinion))
        lo, hi = self.sentences_per_opinion
        checks = [
            (self.n_stocks >= 1 and self.n_days >= 1 and self.n_opinions >= 1, "counts must be positive"),
            (1 <= lo <= hi, "sentences_per_opinion must satisfy 1 <= lo <= hi"),
            (0.0 <= self.strength_return_coupling <= 1.0, "coupling must lie in [0, 1]"),
            (self.fsd_noise >= 0, "fsd_noise must be non-negative"),
            (self.claim_ratio >= 0 and self.premise_ratio >= 0, "ratios must be non-negative"),
            (self.claim_ratio + self.premise_ratio <= 1.0, "claim_ratio + premise_ratio must be <= 1"),
            (0.0 <= self.event_rate <= 1.0, "event_rate must lie in [0, 1]"),
            (0.0 <= self.flow_agreement_rate <= 1.0, "flow_agreement_rate must lie in [0, 1]"),
            (0.0 <= self.expert_like_rate <= 1.0, "expert_like_rate must lie in [0, 1]"),
            (0.0 <= self.amateur_share <= 1.0, "amateur_share must lie in [0, 1]"),
            (self.horizon_days >= 1, "horizon_days must be >= 1"),
            (0.0 <= self.max_move < 1.0, "max_move must lie in [0, 1)"),
            (self.volatility >= 0 and self.intraday_spread >= 0, "volatility terms must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DomainError(msg)
        if self.horizon_days > self.n_days - 1:
            raise DomainError(f"horizon of {self.horizon_days} days does not fit in {self.n_days} days")
        if self.n_stocks * self.slots_per_stock < self.n_opinions:
            raise DomainError(
                f"{self.n_opinions} opinions need disjoint windows but only "
                f"{self.n_stocks} stocks x {self.slots_per_stock} slots are available"
            )

    @property
    def slots_per_stock(self) -> int:
        if self.horizon_days > self.n_days - 1:
            return 0
        return (self.n_days - 1 - self.horizon_days) // (self.horizon_days + 1) + 1

    @classmethod
    def from_dict(cls, d: dict) -> SynthConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> SynthConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sentences_per_opinion"] = list(self.sentences_per_opinion)
        return d


@dataclass
class SynthBundle:
    bundle: CorpusBundle
    strength: dict[str, float] = field(default_factory=dict)


def weekday_calendar(start: dt.date, n: int) -> Calendar:
    days = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return Calendar(days)


_POOL_BULL = ("growth", "expansion", "strong")
_POOL_BEAR = ("downturn", "slow", "weak")


def _sentence_text(rng, oid, j, fsd):
    words = f"{oid} sentence {j} tok{int(rng.integers(0, 1000)):03d}"
    if fsd >= 2 / 3:
        words += " " + _POOL_BULL[int(rng.integers(0, len(_POOL_BULL)))]
    elif fsd <= 1 / 3:
        words += " " + _POOL_BEAR[int(rng.integers(0, len(_POOL_BEAR)))]
    return words


def generate(cfg: SynthConfig) -> SynthBundle:
    """Deterministically build a corpus bundle from `cfg`."""
    rng = np.random.default_rng(cfg.seed)
    c = cfg.strength_return_coupling
    T = cfg.horizon_days
    cal = weekday_calendar(dt.date.fromisoformat(cfg.start_date), cfg.n_days)

    # disjoint (stock, slot) windows
    slots = cfg.slots_per_stock
    slack = cfg.n_days - 1 - ((slots - 1) * (T + 1) + T)
    stock_offset = rng.integers(0, slack + 1, size=cfg.n_stocks)
    cells = np.sort(rng.choice(cfg.n_stocks * slots, size=cfg.n_opinions, replace=False))
    stock_of = cells // slots
    release = stock_offset[stock_of] + (cells % slots) * (T + 1)

    u = rng.random(cfg.n_opinions)
    bullish = rng.random(cfg.n_opinions) < 0.5
    amateur = rng.random(cfg.n_opinions) < cfg.amateur_share

    # price paths: log-close increments
    drift = np.zeros((cfg.n_stocks, cfg.n_days))
    move = c * u * cfg.max_move
    step = np.where(bullish, np.log1p(move), np.log1p(-move)) / T
    for i in range(cfg.n_opinions):
        drift[stock_of[i], release[i] + 1:release[i] + T + 1] = step[i]
    noise = (1.0 - c) * cfg.volatility * rng.standard_normal((cfg.n_stocks, cfg.n_days))
    p0 = rng.uniform(20.0, 200.0, size=cfg.n_stocks)
    close = p0[:, None] * np.exp(np.cumsum(drift + noise, axis=1))
    open_ = np.empty_like(close)
    open_[:, 0] = p0
    open_[:, 1:] = close[:, :-1]
    spread = (1.0 - c) * cfg.intraday_spread
    high = np.maximum(open_, close) * (1.0 + spread * np.abs(rng.standard_normal(close.shape)))
    low = np.minimum(open_, close) * (1.0 - np.minimum(spread * np.abs(rng.standard_normal(close.shape)), 0.5))

    stock_ids = [f"S{j:04d}" for j in range(cfg.n_stocks)]
    days = list(cal)
    prices = {}
    for j, sid in enumerate(stock_ids):
        o, h, l, cl = open_[j].tolist(), high[j].tolist(), low[j].tolist(), close[j].tolist()
        prices[sid] = PriceSeries(sid, tuple(DailyBar(days[k], o[k], h[k], l[k], cl[k]) for k in range(cfg.n_days)))

    lo, hi = cfg.sentences_per_opinion
    label_p = [cfg.claim_ratio, cfg.premise_ratio, 1.0 - cfg.claim_ratio - cfg.premise_ratio]
    labels_all = (ArgLabel.CLAIM, ArgLabel.PREMISE, ArgLabel.OTHER)
    opinions, events, flows = [], [], []
    strength = {}
    for i in range(cfg.n_opinions):
        oid = f"OP{i:05d}"
        sid = stock_ids[stock_of[i]]
        t = int(release[i])
        stance = Stance.BULLISH if bullish[i] else Stance.BEARISH
        strength[oid] = float(u[i])

        k = int(rng.integers(lo, hi + 1))
        fsd = np.clip(u[i] + cfg.fsd_noise * rng.standard_normal(k), 0.0, 1.0)
        expert = rng.random(k) < cfg.expert_like_rate
        if amateur[i]:
            labels = [ArgLabel.OTHER] * k
        else:
            labels = [labels_all[x] for x in rng.choice(3, size=k, p=label_p)]
        claims = [j for j, lab in enumerate(labels) if lab is ArgLabel.CLAIM]
        sents = []
        for j in range(k):
            supports = frozenset()
            if labels[j] is ArgLabel.PREMISE and claims:
                supports = frozenset({claims[int(rng.integers(0, len(claims)))]})
            f = float(fsd[j])
            sents.append(Sentence(j, _sentence_text(rng, oid, j, f), f, labels[j], supports, bool(expert[j])))

        pt = None
        if not amateur[i]:
            pt = round(close[stock_of[i], t] * (1.0 + stance.sign * 0.4 * u[i]), 2)
        opinions.append(
            Opinion(oid, sid, days[t], stance, Source.AMATEUR if amateur[i] else Source.PROFESSIONAL, tuple(sents), pt)
        )

        tilt = (1.0 - c) + 2.0 * c * u[i]
        if rng.random() < min(1.0, cfg.event_rate * tilt):
            d = min(t + int(rng.integers(1, 7)), cfg.n_days - 1)
            events.append(AnalystEvent(sid, days[d], f"AN{int(rng.integers(0, 50)):03d}", EventKind.VIEW_CHANGE))
        if rng.random() < cfg.event_rate:
            d = int(rng.integers(0, cfg.n_days))
            events.append(AnalystEvent(sid, days[d], f"AN{int(rng.integers(0, 50)):03d}", EventKind.OTHER))
        agree_p = min(1.0, cfg.flow_agreement_rate * tilt)
        for cat in FlowCategory:
            units = int(rng.integers(1, 5001))
            direction = stance.sign if rng.random() < agree_p else -stance.sign
            flows.append(FlowRecord(sid, days[t + 1], cat, direction * units))

    events.sort(key=lambda e: (e.stock_id, e.day.index, e.analyst_id, e.kind.value))
    flows.sort(key=lambda f: (f.stock_id, f.day.index, f.category.value, f.net_units))
    bundle = CorpusBundle(opinions, prices, events, flows, cal)
    return SynthBundle(bundle, strength)


def write_scorefile(path, opinions) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["opinion_id", "sent_id", "fsd"])
        for op in opinions:
            for s in op.sentences:
                if s.fsd is not None:
                    w.writerow([op.opinion_id, s.sent_id, repr(s.fsd)])


def write_synth(cfg: SynthConfig, out_dir) -> list[Path]:
    """Generate and write the full file set; returns the paths written."""
    sb = generate(cfg)
    out = Path(out_dir)
    paths = write_bundle(out, sb.bundle)
    write_scorefile(out / SCORES_FILE, sb.bundle.opinions)
    paths.append(out / SCORES_FILE)
    return paths
