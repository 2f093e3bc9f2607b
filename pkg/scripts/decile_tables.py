"""Decile, top-k and behavior tables for every strategy on synthetic corpora.

Prints the 10th/9th/2nd/1st decile means of MPP and ML per strategy averaged
over several seeds, followed by top-10/top-20 means and the KeyPremise
behavior ratios.

    python scripts/decile_tables.py --seeds 5 --coupling 0.6 --noise 0.15
"""

import argparse

import numpy as np

from argrank.backtest import backtest_corpus
from argrank.behavior import behavior_report
from argrank.core import FlowCategory
from argrank.evaluation import decile_report, friedman_test, rank, rank_position_matrix, top_k_report
from argrank.scoring import Strategy, score_corpus
from argrank.synth import SynthConfig, generate

SHOWN = (10, 9, 2, 1)


def run(seed, args):
    cfg = SynthConfig(seed=seed, n_opinions=args.opinions, strength_return_coupling=args.coupling,
                      fsd_noise=args.noise)
    sb = generate(cfg)
    outcomes = {o.opinion_id: o for o in backtest_corpus(sb.bundle).outcomes}
    scores = score_corpus(sb.bundle.opinions, list(Strategy))
    rankings = {s: rank([x for x in scores if x.strategy is s]) for s in Strategy}
    table = {}
    for s, r in rankings.items():
        row = []
        for metric in ("MPP", "ML"):
            rep = decile_report(r, outcomes, metric)
            row += [rep.mean(d) for d in SHOWN]
            row += [top_k_report(r, outcomes, k, metric) for k in (10, 20)]
        table[s] = row
    _, matrix = rank_position_matrix(list(rankings.values()))
    behavior = behavior_report(rankings[Strategy.KEY_PREMISE], sb.bundle)
    return table, friedman_test(matrix)[1], behavior


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--opinions", type=int, default=2000)
    ap.add_argument("--coupling", type=float, default=0.6)
    ap.add_argument("--noise", type=float, default=0.15)
    args = ap.parse_args()

    tables, pvals, behaviors = [], [], []
    for seed in range(args.seeds):
        t, p, b = run(seed, args)
        tables.append(t)
        pvals.append(p)
        behaviors.append(b)

    head = [f"MPP d{d}" for d in SHOWN] + ["MPP top10", "MPP top20"]
    head += [f"ML d{d}" for d in SHOWN] + ["ML top10", "ML top20"]
    print(f"{'strategy':<14}" + "".join(f"{h:>11}" for h in head))
    for s in Strategy:
        mean = np.mean([t[s] for t in tables], axis=0)
        print(f"{s.value:<14}" + "".join(f"{100 * v:>10.2f}%" for v in mean))
    print(f"\nFriedman p-value across strategies (median over seeds): {np.median(pvals):.3g}")

    print("\nKeyPremise behavior by decile (mean over seeds)")
    print(f"{'decile':>6} {'p_ana':>8} {'cr_qfii':>8} {'cr_fund':>8} {'cr_dealer':>9}")
    for d in SHOWN:
        reps = [b[d - 1] for b in behaviors]
        cr = {c: np.mean([r.cr_by_category[c] for r in reps]) for c in FlowCategory}
        print(f"{d:>6} {np.mean([r.p_ana for r in reps]):>8.3f} {cr[FlowCategory.QFII]:>8.3f} "
              f"{cr[FlowCategory.FUND]:>8.3f} {cr[FlowCategory.DEALER]:>9.3f}")


if __name__ == "__main__":
    main()
