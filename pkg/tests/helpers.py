import datetime as dt

from argrank.core import (
    ArgLabel,
    Calendar,
    DailyBar,
    Opinion,
    PriceSeries,
    Sentence,
    Source,
    Stance,
)

START = dt.date(2020, 1, 6)


def calendar(n=120):
    days, d = [], START
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return Calendar(days)


def sentence(i, fsd=None, label="other", supports=(), expert=False, text=None):
    return Sentence(i, text or f"sentence {i}", fsd, ArgLabel(label), frozenset(supports), expert)


def opinion(sentences, oid="A", stock="X", day=None, stance="bullish", source="professional", pt=None, cal=None):
    cal = cal or calendar()
    if day is None:
        day = cal[0]
    elif isinstance(day, int):
        day = cal[day]
    if sentences and not isinstance(sentences[0], Sentence):
        sentences = [sentence(i, f) for i, f in enumerate(sentences)]
    return Opinion(oid, stock, day, Stance(stance), Source(source), tuple(sentences), pt)


def series(cal, opens, highs, lows, closes=None, stock="X", start=0):
    closes = closes or opens
    bars = [
        DailyBar(cal[start + i], o, h, l, c)
        for i, (o, h, l, c) in enumerate(zip(opens, highs, lows, closes))
    ]
    return PriceSeries(stock, tuple(bars))
