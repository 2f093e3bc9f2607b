import pytest
from hypothesis import given, strategies as st

from argrank.backtest import (
    BacktestConfig,
    EquationMode,
    NoEntryPrice,
    backtest_corpus,
    backtest_opinion,
    compute_ml,
    compute_mpp,
    read_outcomes,
    write_outcomes,
)
from argrank.core import DailyBar, DomainError, PriceSeries
from argrank.ingest import CorpusBundle
from helpers import calendar, opinion, series

CAL = calendar(120)
LIT = BacktestConfig(60, EquationMode.LITERAL)


def _op(stance="bullish", oid="A", stock="X"):
    return opinion([0.5], oid=oid, stock=stock, stance=stance, day=0, cal=CAL)


def _three_day(highs, lows):
    # release day 0 plus a three-day window; entry open 100 on day 1
    return series(CAL, [100, 100, 100, 100], [100] + highs, [100] + lows, [100] * 4)


def test_bullish_mpp_max_high():
    s = _three_day([110, 120, 105], [95, 90, 99])
    assert compute_mpp(_op(), s) == pytest.approx(0.20, abs=1e-15)
    assert compute_ml(_op(), s) == pytest.approx(-0.10, abs=1e-15)


def test_single_day_window_flat():
    s = series(CAL, [100, 100], [100, 100], [100, 100])
    cfg = BacktestConfig(horizon_days=1)
    assert compute_mpp(_op(), s, cfg) == 0.0
    assert compute_ml(_op(), s, cfg) == 0.0


def test_bearish_modes():
    s = _three_day([101, 130, 102], [95, 80, 90])
    bear = _op("bearish")
    assert compute_mpp(bear, s) == pytest.approx(0.20, abs=1e-15)
    assert compute_mpp(bear, s, LIT) == pytest.approx(0.05, abs=1e-15)
    assert compute_ml(bear, s) == pytest.approx(-0.30, abs=1e-15)
    assert compute_ml(bear, s, LIT) == pytest.approx(-0.01, abs=1e-15)


def test_bullish_ml_min_low():
    s = _three_day([101, 101, 101], [95, 85, 99])
    assert compute_ml(_op(), s) == pytest.approx(-0.15, abs=1e-15)


def test_no_entry_price():
    s = series(CAL, [100], [100], [100])
    with pytest.raises(NoEntryPrice, match="no entry price"):
        compute_mpp(_op(), s)


def test_truncated_window():
    s = _three_day([110, 120, 105], [95, 90, 99])
    out = backtest_opinion(_op(), s, BacktestConfig(horizon_days=60))
    assert out.truncated and out.window_end.index == 3 and out.entry_day.index == 1
    out = backtest_opinion(_op(), s, BacktestConfig(horizon_days=3))
    assert not out.truncated
    assert out.entry_day.index > _op().release_day.index


def test_horizon_must_be_positive():
    with pytest.raises(DomainError):
        BacktestConfig(horizon_days=0)


def test_backtest_corpus_skips_unpriced(tmp_path):
    s = _three_day([110, 120, 105], [95, 90, 99])
    ops = [_op(oid="B"), _op(oid="A"), _op(oid="C", stock="MISSING")]
    run = backtest_corpus(CorpusBundle(ops, {"X": s}, [], [], CAL))
    assert [o.opinion_id for o in run.outcomes] == ["A", "B"]
    assert [k.opinion_id for k in run.skipped] == ["C"]
    assert backtest_corpus(CorpusBundle([], {}, [], [], CAL)).outcomes == []

    write_outcomes(tmp_path / "o.csv", run.outcomes)
    assert (tmp_path / "o.csv").read_text().splitlines()[0] == "opinion_id,stance,mpp,ml,truncated"
    back = read_outcomes(tmp_path / "o.csv")
    assert back["A"].mpp == run.outcomes[0].mpp and back["A"].truncated


# random valid windows


@st.composite
def windows(draw, min_len=1, max_len=60):
    n = draw(st.integers(min_len, max_len))
    price = st.floats(1.0, 1000.0)
    bars = []
    for i in range(n + 1):
        o, c = draw(price), draw(price)
        h = max(o, c) * (1 + draw(st.floats(0, 0.2)))
        l = min(o, c) * (1 - draw(st.floats(0, 0.2)))
        bars.append(DailyBar(CAL[i], o, h, l, c))
    return PriceSeries("X", tuple(bars)), n


@given(windows(), st.sampled_from(["bullish", "bearish"]))
def test_sign_invariants(w, stance):
    s, n = w
    cfg = BacktestConfig(horizon_days=n)
    op = _op(stance)
    assert compute_mpp(op, s, cfg) >= 0
    assert compute_ml(op, s, cfg) <= 0


@given(windows(min_len=2), st.sampled_from(["bullish", "bearish"]), st.data())
def test_longer_horizon_is_monotone(w, stance, data):
    s, n = w
    short = data.draw(st.integers(1, n - 1))
    op = _op(stance)
    a, b = BacktestConfig(short), BacktestConfig(n)
    assert compute_mpp(op, s, b) >= compute_mpp(op, s, a)
    assert compute_ml(op, s, b) <= compute_ml(op, s, a)


@given(windows(max_len=20), st.sampled_from(["bullish", "bearish"]), st.floats(0.01, 100))
def test_scale_invariance(w, stance, k):
    s, n = w
    scaled = PriceSeries("X", tuple(
        DailyBar(b.day, b.open * k, b.high * k, b.low * k, b.close * k) for b in s.bars
    ))
    cfg = BacktestConfig(n)
    op = _op(stance)
    assert compute_mpp(op, scaled, cfg) == pytest.approx(compute_mpp(op, s, cfg), rel=1e-9, abs=1e-12)
    assert compute_ml(op, scaled, cfg) == pytest.approx(compute_ml(op, s, cfg), rel=1e-9, abs=1e-12)
