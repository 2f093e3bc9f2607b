"""Argument-based ranking of investor opinions, with profit, risk and behavior evaluation."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
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
    TradingDay,
    validate_opinion,
)
from .scoring import Strategy, StrategyScore, score_opinion  # noqa: E402
from .backtest import BacktestConfig, EquationMode, compute_ml, compute_mpp  # noqa: E402
from .evaluation import Metric, decile_report, friedman_test, ndcg, rank, top_k_report  # noqa: E402

__all__ = [
    "AnalystEvent", "ArgLabel", "Calendar", "DailyBar", "DomainError", "EventKind", "FlowCategory",
    "FlowRecord", "Opinion", "PriceSeries", "Sentence", "Source", "Stance", "TradingDay",
    "validate_opinion", "Strategy", "StrategyScore", "score_opinion", "BacktestConfig", "EquationMode",
    "compute_ml", "compute_mpp", "Metric", "decile_report", "friedman_test", "ndcg", "rank", "top_k_report",
]
