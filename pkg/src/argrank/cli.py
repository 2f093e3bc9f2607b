"""Command-line entry point: ``argrank {synth,score,backtest,evaluate,behavior}``.

Every command writes CSV outputs plus a ``manifest.json`` describing the run
into ``--out``. Outputs contain no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .backtest import BacktestConfig, EquationMode, backtest_corpus, read_outcomes, write_outcomes, write_skips
from .behavior import BehaviorConfig, behavior_report, write_behavior
from .core import ArgRankError, DomainError
from .evaluation import (
    Metric,
    decile_report,
    friedman_test,
    ndcg,
    rank,
    rank_position_matrix,
    top_k_report,
)
from .ingest import (
    CorpusBundle,
    load_analyst_events,
    load_calendar,
    load_flows,
    load_opinions,
    load_prices,
)
from .scoring import (
    EmbeddedProvider,
    LexiconProvider,
    ScoreFileProvider,
    Strategy,
    load_lexicon,
    read_strategy_scores,
    score_corpus,
    write_strategy_scores,
)
from .synth import SynthConfig, write_synth

log = logging.getLogger("argrank")


class UsageError(ArgRankError):
    pass


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    strategies: list[str] = field(default_factory=list)
    provider: str | None = None
    horizon: int | None = None
    equation_mode: str | None = None
    seed: int | None = None
    out: str = "."
    tool_version: str = __version__
    extra: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _parse_strategies(text: str) -> list[Strategy]:
    out = []
    for name in text.split(","):
        name = name.strip()
        try:
            out.append(Strategy(name))
        except ValueError:
            valid = ", ".join(s.value for s in Strategy)
            raise UsageError(f"unknown strategy {name!r} (choose from {valid})") from None
    return out


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required for '{args.command}'")


def _calendar(args):
    _need(args, "calendar")
    return load_calendar(args.calendar)


def _write_rejections(path, rejections):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "opinion_id", "reason"])
        for r in rejections:
            w.writerow([r.record, r.opinion_id, r.reason])


def cmd_synth(args) -> int:
    cfg = SynthConfig.from_json(args.config) if args.config else SynthConfig()
    if args.seed is not None:
        cfg = SynthConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    out = _out_dir(args)
    paths = write_synth(cfg, out)
    RunManifest(
        "synth",
        inputs={"config": str(args.config)} if args.config else {},
        seed=cfg.seed,
        horizon=cfg.horizon_days,
        out=str(out),
        extra={"synth_config": cfg.to_dict(), "files": [p.name for p in paths]},
    ).write(out)
    return 0


def cmd_score(args) -> int:
    _need(args, "opinions")
    if args.scores and args.lexicon:
        raise UsageError("give at most one of --scores and --lexicon")
    cal = _calendar(args)
    strategies = _parse_strategies(args.strategies)
    rejections = []
    opinions = load_opinions(args.opinions, cal, rejections)
    if args.scores:
        provider = ScoreFileProvider.from_csv(args.scores)
    elif args.lexicon:
        provider = LexiconProvider(None if args.lexicon == "builtin" else load_lexicon(args.lexicon))
    else:
        provider = EmbeddedProvider()
    out = _out_dir(args)
    scores = score_corpus(opinions, strategies, provider)
    write_strategy_scores(out / "strategy_scores.csv", scores)
    _write_rejections(out / "rejections.csv", rejections)
    inputs = {"opinions": args.opinions, "calendar": args.calendar}
    if args.scores:
        inputs["scores"] = args.scores
    if args.lexicon:
        inputs["lexicon"] = args.lexicon
    RunManifest(
        "score", inputs=inputs, strategies=[s.value for s in strategies], provider=provider.kind,
        seed=args.seed, out=str(out), extra={"n_opinions": len(opinions), "n_rejected": len(rejections)},
    ).write(out)
    return 0


def cmd_backtest(args) -> int:
    _need(args, "opinions", "prices")
    cal = _calendar(args)
    cfg = BacktestConfig(args.horizon, EquationMode(args.equation_mode.replace("-", "_")))
    rejections = []
    opinions = load_opinions(args.opinions, cal, rejections)
    prices = load_prices(args.prices, cal)
    bundle = CorpusBundle(opinions, prices, [], [], cal, rejections)
    run = backtest_corpus(bundle, cfg)
    out = _out_dir(args)
    write_outcomes(out / "outcomes.csv", run.outcomes)
    write_skips(out / "skipped.csv", run.skipped)
    if run.skipped:
        print(f"skipped {len(run.skipped)} opinion(s) without price data; see skipped.csv", file=sys.stderr)
    RunManifest(
        "backtest", inputs={"opinions": args.opinions, "prices": args.prices, "calendar": args.calendar},
        horizon=cfg.horizon_days, equation_mode=cfg.equation_mode.value, seed=args.seed, out=str(out),
        extra={"n_outcomes": len(run.outcomes), "n_skipped": len(run.skipped)},
    ).write(out)
    return 0


def _parse_ks(text):
    try:
        ks = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--topk expects comma-separated integers, got {text!r}") from None
    if any(k < 1 for k in ks):
        raise UsageError("--topk values must be positive")
    return ks


def cmd_evaluate(args) -> int:
    _need(args, "strategy_scores", "outcomes")
    grouped = read_strategy_scores(args.strategy_scores)
    outcomes = read_outcomes(args.outcomes)
    ks = _parse_ks(args.topk) if args.topk else []
    out = _out_dir(args)
    rankings = []
    dropped = {}
    for strategy in sorted(grouped, key=lambda s: list(Strategy).index(s)):
        r = rank(grouped[strategy])
        kept = r.restrict(outcomes)
        dropped[strategy.value] = len(r) - len(kept)
        if len(kept):
            rankings.append(kept)
    for name, n in dropped.items():
        if n:
            print(f"{name}: {n} scored opinion(s) have no outcome and were left out", file=sys.stderr)

    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "metric", "decile", "mean"])
        for r in rankings:
            for metric in Metric:
                rep = decile_report(r, outcomes, metric)
                for d in range(10, 0, -1):
                    w.writerow([r.strategy.value, metric.value, d, repr(rep.mean(d))])
        for r in rankings:
            for metric in Metric:
                for k in ks:
                    if k > len(r):
                        print(f"{r.strategy.value}: top-{k} needs {k} opinions, only {len(r)} ranked", file=sys.stderr)
                        continue
                    w.writerow([r.strategy.value, f"topk-{metric.value}", k, repr(top_k_report(r, outcomes, k, metric))])

    if args.ndcg:
        relevance = {oid: max(o.mpp, 0.0) for oid, o in outcomes.items()}
        with open(out / "ndcg.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["strategy", "cutoff", "ndcg"])
            for r in rankings:
                try:
                    value = repr(ndcg(r, relevance, args.ndcg_cutoff))
                except DomainError as e:
                    print(f"{r.strategy.value}: {e}", file=sys.stderr)
                    value = "undefined"
                w.writerow([r.strategy.value, args.ndcg_cutoff or "", value])

    friedman = None
    if len(rankings) < 2:
        print("friedman test refused: need >= 2 strategies", file=sys.stderr)
    else:
        blocks, matrix = rank_position_matrix(rankings)
        if len(blocks) < 2:
            print("friedman test refused: need >= 2 opinions common to all strategies", file=sys.stderr)
        else:
            stat, p = friedman_test(matrix)
            friedman = {"statistic": stat, "p_value": p}
            with open(out / "friedman.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["strategies", "n_blocks", "statistic", "p_value"])
                w.writerow([";".join(r.strategy.value for r in rankings), len(blocks), repr(stat), repr(p)])

    RunManifest(
        "evaluate", inputs={"strategy_scores": args.strategy_scores, "outcomes": args.outcomes},
        strategies=[r.strategy.value for r in rankings], seed=args.seed, out=str(out),
        extra={"topk": ks, "ndcg": bool(args.ndcg), "ndcg_cutoff": args.ndcg_cutoff, "friedman": friedman},
    ).write(out)
    return 0


def cmd_behavior(args) -> int:
    _need(args, "strategy_scores", "opinions", "events", "flows")
    cal = _calendar(args)
    cfg = BehaviorConfig(args.window[0], args.window[1], args.cr_offset)
    grouped = read_strategy_scores(args.strategy_scores)
    opinions = load_opinions(args.opinions, cal)
    bundle = CorpusBundle(opinions, {}, load_analyst_events(args.events, cal), load_flows(args.flows, cal), cal)
    known = {o.opinion_id for o in opinions}
    reports = []
    for strategy in sorted(grouped, key=lambda s: list(Strategy).index(s)):
        r = rank(grouped[strategy]).restrict(known)
        reports.extend(sorted(behavior_report(r, bundle, cfg), key=lambda rep: -rep.decile))
    out = _out_dir(args)
    write_behavior(out / "behavior.csv", reports)
    RunManifest(
        "behavior",
        inputs={k: getattr(args, k) for k in ("strategy_scores", "opinions", "events", "flows", "calendar")},
        strategies=[s.value for s in grouped], seed=args.seed, out=str(out),
        extra={"ana_window": list(args.window), "cr_offset": args.cr_offset},
    ).write(out)
    return 0


def _window(text):
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected START,END") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--calendar", default=argparse.SUPPRESS, help="trading calendar file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (recorded in manifest)")

    p = argparse.ArgumentParser(prog="argrank", description=__doc__.splitlines()[0])
    p.add_argument("--calendar", default=None)
    p.add_argument("--out", default=".")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    s.add_argument("--config", help="JSON file of SynthConfig fields")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("score", parents=[common], help="score opinions under strategies")
    s.add_argument("--opinions")
    s.add_argument("--scores", help="scores.csv for the scorefile provider")
    s.add_argument("--lexicon", help="lexicon.tsv for the lexicon provider, or 'builtin'")
    s.add_argument("--strategies", default="AllSent")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("backtest", parents=[common], help="compute MPP and ML per opinion")
    s.add_argument("--opinions")
    s.add_argument("--prices")
    s.add_argument("--horizon", type=int, default=60)
    s.add_argument("--equation-mode", choices=["profit-consistent", "literal"], default="profit-consistent")
    s.set_defaults(func=cmd_backtest)

    s = sub.add_parser("evaluate", parents=[common], help="decile, top-k, nDCG and Friedman reports")
    s.add_argument("--strategy-scores")
    s.add_argument("--outcomes")
    s.add_argument("--topk", default="", help="comma-separated k values, e.g. 10,20")
    s.add_argument("--ndcg", action="store_true", help="nDCG with relevance max(MPP, 0)")
    s.add_argument("--ndcg-cutoff", type=int, default=None)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("behavior", parents=[common], help="analyst view-change and concurring ratios")
    s.add_argument("--strategy-scores")
    s.add_argument("--opinions")
    s.add_argument("--events")
    s.add_argument("--flows")
    s.add_argument("--window", type=_window, default=(1, 6), help="view-change window START,END in trading days")
    s.add_argument("--cr-offset", type=int, default=1)
    s.set_defaults(func=cmd_behavior)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"argrank {args.command}: {e}", file=sys.stderr)
        return 2
    except (ArgRankError, OSError) as e:
        print(f"argrank {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
