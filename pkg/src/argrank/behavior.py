"""Professional reactions to ranked opinions.

p_ana: share of opinions followed by an analyst view change on the same stock
within a trading-day window after release.
concurring_ratio: share of opinions whose stock saw institutional net flow in
the stance's direction on a fixed trading day after release.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import AnalystEvent, DomainError, EventKind, FlowCategory, FlowRecord, Opinion
from .evaluation import Ranking, decile_blocks


@dataclass(frozen=True)
class BehaviorConfig:
    ana_window_start: int = 1
    ana_window_end: int = 6
    cr_offset: int = 1

    def __post_init__(self):
        if not 1 <= self.ana_window_start <= self.ana_window_end:
            raise DomainError("need 1 <= ana_window_start <= ana_window_end")
        if self.cr_offset < 1:
            raise DomainError("cr_offset must be >= 1")


@dataclass(frozen=True)
class BehaviorReport:
    strategy: object
    decile: int
    p_ana: float
    cr_by_category: dict[FlowCategory, float]
    n: int
    n_view_change: int
    n_concurring: dict[FlowCategory, int] = field(default_factory=dict)


def _view_change_index(events: Iterable[AnalystEvent]) -> dict[str, list[int]]:
    idx = defaultdict(list)
    for e in events:
        if e.kind is EventKind.VIEW_CHANGE:
            idx[e.stock_id].append(e.day.index)
    return idx


def _net_flow_index(flows: Iterable[FlowRecord]) -> dict[tuple[str, int, FlowCategory], int]:
    net = defaultdict(int)
    for f in flows:
        net[(f.stock_id, f.day.index, f.category)] += f.net_units
    return net


def _count_view_changes(ops, idx, cfg):
    hits = 0
    for op in ops:
        lo = op.release_day.index + cfg.ana_window_start
        hi = op.release_day.index + cfg.ana_window_end
        if any(lo <= d <= hi for d in idx.get(op.stock_id, ())):
            hits += 1
    return hits


def _count_concurring(ops, net, category, cfg):
    hits = 0
    for op in ops:
        units = net.get((op.stock_id, op.release_day.index + cfg.cr_offset, category), 0)
        if units * op.stance.sign > 0:
            hits += 1
    return hits


def p_ana(decile_opinions: Sequence[Opinion], events: Iterable[AnalystEvent], cfg: BehaviorConfig = BehaviorConfig()) -> float:
    if not decile_opinions:
        raise DomainError("empty decile")
    return _count_view_changes(decile_opinions, _view_change_index(events), cfg) / len(decile_opinions)


def concurring_ratio(
    decile_opinions: Sequence[Opinion],
    flows: Iterable[FlowRecord],
    category: FlowCategory | str,
    cfg: BehaviorConfig = BehaviorConfig(),
) -> float:
    if not decile_opinions:
        raise DomainError("empty decile")
    category = FlowCategory(category)
    return _count_concurring(decile_opinions, _net_flow_index(flows), category, cfg) / len(decile_opinions)


def behavior_report(r: Ranking, bundle, cfg: BehaviorConfig = BehaviorConfig()) -> list[BehaviorReport]:
    """One report per decile (1..10); empty deciles report NaN ratios."""
    by_id = {o.opinion_id: o for o in bundle.opinions}
    missing = [oid for oid in r.ordered if oid not in by_id]
    if missing:
        raise DomainError(f"ranked opinions absent from bundle: {missing[:5]}")
    vc = _view_change_index(bundle.analyst_events)
    net = _net_flow_index(bundle.flows)
    reports = []
    for decile, block in enumerate(decile_blocks(r.ordered), start=1):
        ops = [by_id[oid] for oid in block]
        n = len(ops)
        n_vc = _count_view_changes(ops, vc, cfg)
        n_cr = {c: _count_concurring(ops, net, c, cfg) for c in FlowCategory}
        reports.append(
            BehaviorReport(
                strategy=r.strategy,
                decile=decile,
                p_ana=n_vc / n if n else math.nan,
                cr_by_category={c: (n_cr[c] / n if n else math.nan) for c in FlowCategory},
                n=n,
                n_view_change=n_vc,
                n_concurring=n_cr,
            )
        )
    return reports


BEHAVIOR_HEADER = ["strategy", "decile", "p_ana", "cr_qfii", "cr_fund", "cr_dealer", "n"]


def write_behavior(path, reports: Iterable[BehaviorReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BEHAVIOR_HEADER)
        for rep in reports:
            cr = rep.cr_by_category
            w.writerow([
                getattr(rep.strategy, "value", rep.strategy),
                rep.decile,
                repr(rep.p_ana),
                repr(cr[FlowCategory.QFII]),
                repr(cr[FlowCategory.FUND]),
                repr(cr[FlowCategory.DEALER]),
                rep.n,
            ])
