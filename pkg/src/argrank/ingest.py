"""Readers and writers for the on-disk corpus formats.

Files
-----
calendar.txt        one ISO date per line, strictly increasing
prices.csv          stock_id,date,open,high,low,close
opinions.jsonl      one JSON object per line (see `load_opinions`)
analyst_events.csv  stock_id,date,analyst_id,kind
flows.csv           stock_id,date,category,net_units
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .core import (
    AnalystEvent,
    ArgLabel,
    ArgRankError,
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
    sort_opinions,
    validate_opinion,
)

log = logging.getLogger(__name__)

PRICES_HEADER = ["stock_id", "date", "open", "high", "low", "close"]
EVENTS_HEADER = ["stock_id", "date", "analyst_id", "kind"]
FLOWS_HEADER = ["stock_id", "date", "category", "net_units"]

CALENDAR_FILE = "calendar.txt"
PRICES_FILE = "prices.csv"
OPINIONS_FILE = "opinions.jsonl"
EVENTS_FILE = "analyst_events.csv"
FLOWS_FILE = "flows.csv"


class IngestError(ArgRankError, ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        self.message = message
        super().__init__(f"{path}:{line}: {message}")


@dataclass(frozen=True)
class Rejection:
    record: int
    opinion_id: str | None
    reason: str


@dataclass
class CorpusBundle:
    opinions: list[Opinion]
    prices: dict[str, PriceSeries]
    analyst_events: list[AnalystEvent]
    flows: list[FlowRecord]
    calendar: Calendar
    rejections: list[Rejection] = field(default_factory=list)

    @property
    def missing_prices(self) -> list[str]:
        """Opinion ids whose stock has no price series."""
        return [o.opinion_id for o in self.opinions if o.stock_id not in self.prices]


def _fmt(x: float) -> str:
    return repr(float(x))


def _read_csv(path, header: list[str]):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise IngestError(path, 1, "missing header") from None
        if [c.strip() for c in first] != header:
            raise IngestError(path, 1, f"expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(path, reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row]


def _resolve(path, line, calendar: Calendar, text: str):
    try:
        return calendar.day(dt.date.fromisoformat(text))
    except ValueError:
        raise IngestError(path, line, f"bad date {text!r}") from None
    except KeyError:
        raise IngestError(path, line, f"date {text} is not on the trading calendar") from None


def load_calendar(path) -> Calendar:
    dates = []
    with open(path) as fh:
        for n, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                d = dt.date.fromisoformat(text)
            except ValueError:
                raise IngestError(path, n, f"bad date {text!r}") from None
            if dates and d <= dates[-1]:
                what = "duplicate date" if d == dates[-1] else "dates not increasing"
                raise IngestError(path, n, f"{what}: {text}")
            dates.append(d)
    if not dates:
        raise IngestError(path, 0, "empty calendar")
    return Calendar(dates)


def load_prices(path, calendar: Calendar) -> dict[str, PriceSeries]:
    grouped: dict[str, list[DailyBar]] = defaultdict(list)
    seen = set()
    for line, (stock, date, *ohlc) in _read_csv(path, PRICES_HEADER):
        day = _resolve(path, line, calendar, date)
        if (stock, day.index) in seen:
            raise IngestError(path, line, f"duplicate bar for {stock} on {date}")
        seen.add((stock, day.index))
        try:
            o, h, l, c = (float(v) for v in ohlc)
        except ValueError:
            raise IngestError(path, line, f"unparseable price in {ohlc}") from None
        try:
            grouped[stock].append(DailyBar(day, o, h, l, c))
        except DomainError as e:
            raise IngestError(path, line, str(e)) from None
    return {
        stock: PriceSeries(stock, tuple(sorted(bars, key=lambda b: b.day.index)))
        for stock, bars in sorted(grouped.items())
    }


def _parse_sentence(pos: int, raw) -> Sentence:
    if not isinstance(raw, Mapping):
        raise ValueError(f"sentence {pos} is not an object")
    if "text" not in raw:
        raise ValueError(f"sentence {pos} has no text")
    fsd = raw.get("fsd")
    if fsd is not None:
        fsd = float(fsd)
    try:
        label = ArgLabel(raw.get("label", "other"))
    except ValueError:
        raise _Reject(f"unknown label {raw.get('label')!r} in sentence {pos}") from None
    supports = raw.get("supports") or []
    if not isinstance(supports, list) or not all(isinstance(i, int) for i in supports):
        raise _Reject(f"sentence {pos}: supports must be a list of integers")
    sent_id = raw.get("sent_id", pos)
    return Sentence(
        sent_id=int(sent_id),
        text=str(raw["text"]),
        fsd=fsd,
        label=label,
        supports=frozenset(supports),
        expert_like=bool(raw.get("expert_like", False)),
    )


class _Reject(Exception):
    pass


_REQUIRED = ("opinion_id", "stock_id", "date", "stance", "source", "sentences")


def _parse_opinion(rec: dict, calendar: Calendar) -> Opinion:
    try:
        stance = Stance(rec["stance"])
    except ValueError:
        raise _Reject(f"unknown stance {rec['stance']!r}") from None
    try:
        source = Source(rec["source"])
    except ValueError:
        raise _Reject(f"unknown source {rec['source']!r}") from None
    try:
        day = calendar.day(dt.date.fromisoformat(rec["date"]))
    except KeyError:
        raise _Reject(f"date {rec['date']} is not on the trading calendar") from None
    pt = rec.get("price_target")
    sentences = rec["sentences"]
    if not isinstance(sentences, list):
        raise ValueError("sentences must be an array")
    return Opinion(
        opinion_id=str(rec["opinion_id"]),
        stock_id=str(rec["stock_id"]),
        release_day=day,
        stance=stance,
        source=source,
        sentences=tuple(_parse_sentence(i, s) for i, s in enumerate(sentences)),
        price_target=None if pt is None else float(pt),
    )


def load_opinions(path, calendar: Calendar, rejections: list[Rejection] | None = None) -> list[Opinion]:
    """Read line-delimited JSON opinion records.

    Each line holds an object with ``opinion_id``, ``stock_id``, ``date`` (ISO),
    ``stance`` (bullish/bearish), ``source`` (professional/amateur), optional
    ``price_target`` and a ``sentences`` array of ``{text, fsd?, label?,
    supports?, expert_like?}``. Sentence ids are array positions.

    Records that parse but break an opinion invariant are skipped and, when
    `rejections` is given, appended to it. Unparseable records raise
    `IngestError` with the record's line number.
    """
    out = []
    with open(path) as fh:
        for n, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise IngestError(path, n, f"malformed record: {e.msg}") from None
            if not isinstance(rec, dict):
                raise IngestError(path, n, "malformed record: not an object")
            missing = [k for k in _REQUIRED if k not in rec]
            if missing:
                raise IngestError(path, n, f"malformed record: missing {', '.join(missing)}")
            try:
                op = _parse_opinion(rec, calendar)
                problems = validate_opinion(op)
                if problems:
                    raise _Reject("; ".join(problems))
            except _Reject as e:
                log.warning("%s:%d rejected: %s", path, n, e)
                if rejections is not None:
                    rejections.append(Rejection(n, str(rec.get("opinion_id")), str(e)))
                continue
            except (TypeError, ValueError) as e:
                raise IngestError(path, n, f"malformed record: {e}") from None
            out.append(op)
    return out


def load_analyst_events(path, calendar: Calendar) -> list[AnalystEvent]:
    events = []
    for line, (stock, date, analyst, kind) in _read_csv(path, EVENTS_HEADER):
        day = _resolve(path, line, calendar, date)
        try:
            k = EventKind(kind)
        except ValueError:
            raise IngestError(path, line, f"unknown event kind {kind!r}") from None
        events.append(AnalystEvent(stock, day, analyst, k))
    events.sort(key=lambda e: (e.stock_id, e.day.index, e.analyst_id, e.kind.value))
    return events


def load_flows(path, calendar: Calendar) -> list[FlowRecord]:
    flows = []
    for line, (stock, date, category, units) in _read_csv(path, FLOWS_HEADER):
        day = _resolve(path, line, calendar, date)
        try:
            cat = FlowCategory(category)
        except ValueError:
            raise IngestError(path, line, f"unknown flow category {category!r}") from None
        try:
            n = int(units)
        except ValueError:
            raise IngestError(path, line, f"net_units must be an integer, got {units!r}") from None
        flows.append(FlowRecord(stock, day, cat, n))
    flows.sort(key=lambda f: (f.stock_id, f.day.index, f.category.value, f.net_units))
    return flows


def load_bundle(directory, *, calendar: Calendar | None = None) -> CorpusBundle:
    """Load every corpus file present in `directory`; absent optional files load empty."""
    d = Path(directory)
    cal = calendar or load_calendar(d / CALENDAR_FILE)
    rejections: list[Rejection] = []
    opinions = load_opinions(d / OPINIONS_FILE, cal, rejections)
    prices = load_prices(d / PRICES_FILE, cal) if (d / PRICES_FILE).exists() else {}
    events = load_analyst_events(d / EVENTS_FILE, cal) if (d / EVENTS_FILE).exists() else []
    flows = load_flows(d / FLOWS_FILE, cal) if (d / FLOWS_FILE).exists() else []
    return CorpusBundle(sort_opinions(opinions), prices, events, flows, cal, rejections)


# writers


def write_calendar(path, calendar: Calendar | Iterable[dt.date]) -> None:
    dates = calendar.dates if isinstance(calendar, Calendar) else list(calendar)
    with open(path, "w") as fh:
        fh.writelines(f"{d.isoformat()}\n" for d in dates)


def write_prices(path, prices: Mapping[str, PriceSeries]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICES_HEADER)
        for stock in sorted(prices):
            for b in prices[stock].bars:
                w.writerow([stock, str(b.day), _fmt(b.open), _fmt(b.high), _fmt(b.low), _fmt(b.close)])


def opinion_record(op: Opinion) -> dict:
    rec = {
        "opinion_id": op.opinion_id,
        "stock_id": op.stock_id,
        "date": str(op.release_day),
        "stance": op.stance.value,
        "source": op.source.value,
    }
    if op.price_target is not None:
        rec["price_target"] = op.price_target
    sents = []
    for s in op.sentences:
        item = {"text": s.text}
        if s.fsd is not None:
            item["fsd"] = s.fsd
        if s.label is not ArgLabel.OTHER:
            item["label"] = s.label.value
        if s.supports:
            item["supports"] = sorted(s.supports)
        if s.expert_like:
            item["expert_like"] = True
        sents.append(item)
    rec["sentences"] = sents
    return rec


def write_opinions(path, opinions: Iterable[Opinion]) -> None:
    with open(path, "w") as fh:
        for op in opinions:
            fh.write(json.dumps(opinion_record(op), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def write_analyst_events(path, events: Iterable[AnalystEvent]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for e in events:
            w.writerow([e.stock_id, str(e.day), e.analyst_id, e.kind.value])


def write_flows(path, flows: Iterable[FlowRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLOWS_HEADER)
        for f in flows:
            w.writerow([f.stock_id, str(f.day), f.category.value, f.net_units])


def write_bundle(directory, bundle: CorpusBundle) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = [d / n for n in (CALENDAR_FILE, PRICES_FILE, OPINIONS_FILE, EVENTS_FILE, FLOWS_FILE)]
    write_calendar(paths[0], bundle.calendar)
    write_prices(paths[1], bundle.prices)
    write_opinions(paths[2], bundle.opinions)
    write_analyst_events(paths[3], bundle.analyst_events)
    write_flows(paths[4], bundle.flows)
    return paths
