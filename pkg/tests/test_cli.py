import csv
import json

import pytest

from argrank.cli import main
from argrank.synth import SynthConfig

SMALL = dict(seed=3, n_stocks=40, n_days=130, n_opinions=60, horizon_days=20)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def corpus(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SynthConfig(**SMALL).to_dict()))
    out = tmp_path / "corpus"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    return out


def test_synth_manifest_and_files(corpus):
    manifest = json.loads((corpus / "manifest.json").read_text())
    assert manifest["command"] == "synth" and manifest["seed"] == 3
    assert set(manifest["extra"]["files"]) == {
        "calendar.txt", "prices.csv", "opinions.jsonl", "analyst_events.csv", "flows.csv", "scores.csv"
    }


def test_synth_rejects_infeasible(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"horizon_days": 500, "n_days": 100}))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 1
    assert "does not fit" in capsys.readouterr().err


def test_global_flags_before_subcommand(tmp_path, corpus):
    out = tmp_path / "s"
    code = main(["--calendar", str(corpus / "calendar.txt"), "--out", str(out), "score",
                 "--opinions", str(corpus / "opinions.jsonl")])
    assert code == 0 and len(rows(out / "strategy_scores.csv")) == 60


def _score(corpus, out, *extra):
    return main(["score", "--opinions", str(corpus / "opinions.jsonl"), "--calendar", str(corpus / "calendar.txt"),
                 "--out", str(out), *extra])


def test_score_embedded_and_two_strategies(tmp_path, corpus):
    assert _score(corpus, tmp_path / "a") == 0
    got = rows(tmp_path / "a" / "strategy_scores.csv")
    assert len(got) == 60 and {r["strategy"] for r in got} == {"AllSent"}
    assert _score(corpus, tmp_path / "b", "--strategies", "AllSent,KeyPremise") == 0
    got = rows(tmp_path / "b" / "strategy_scores.csv")
    assert len(got) == 120 and {r["strategy"] for r in got} == {"AllSent", "KeyPremise"}
    manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert manifest["provider"] == "embedded" and manifest["strategies"] == ["AllSent", "KeyPremise"]


def test_score_scorefile_gap(tmp_path, corpus, capsys):
    lines = (corpus / "scores.csv").read_text().splitlines()
    gap = lines.pop(5).split(",")
    (tmp_path / "scores.csv").write_text("\n".join(lines) + "\n")
    assert _score(corpus, tmp_path / "o", "--scores", str(tmp_path / "scores.csv")) != 0
    assert f"{gap[0]}/{gap[1]}" in capsys.readouterr().err


def test_score_provider_conflict_and_bad_strategy(tmp_path, corpus):
    assert _score(corpus, tmp_path / "o", "--scores", "x", "--lexicon", "y") == 2
    assert _score(corpus, tmp_path / "o", "--strategies", "allsent") == 2


def test_score_lexicon(tmp_path, corpus):
    lex = tmp_path / "lex.tsv"
    lex.write_text("growth\t1\ndownturn\t-1\n")
    assert _score(corpus, tmp_path / "o", "--lexicon", str(lex)) == 0
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["provider"] == "lexicon"


def _backtest(corpus, out, *extra, prices=None):
    return main(["backtest", "--opinions", str(corpus / "opinions.jsonl"), "--prices", str(prices or corpus / "prices.csv"),
                 "--calendar", str(corpus / "calendar.txt"), "--out", str(out), *extra])


def test_backtest_default_and_horizon_one(tmp_path, corpus):
    from argrank.ingest import load_bundle

    assert _backtest(corpus, tmp_path / "a") == 0
    assert len(rows(tmp_path / "a" / "outcomes.csv")) == 60
    assert _backtest(corpus, tmp_path / "b", "--horizon", "1") == 0
    bundle = load_bundle(corpus)
    for row in rows(tmp_path / "b" / "outcomes.csv"):
        op = next(o for o in bundle.opinions if o.opinion_id == row["opinion_id"])
        bar = bundle.prices[op.stock_id].bar_at(op.release_day.index + 1)
        if op.stance.value == "bullish":
            assert float(row["mpp"]) == (bar.high - bar.open) / bar.open
        else:
            assert float(row["mpp"]) == (bar.open - bar.low) / bar.open


def test_backtest_missing_prices_is_not_fatal(tmp_path, corpus, capsys):
    lines = (corpus / "prices.csv").read_text().splitlines()
    from argrank.ingest import load_bundle

    stock = load_bundle(corpus).opinions[0].stock_id
    kept = [lines[0]] + [ln for ln in lines[1:] if not ln.startswith(stock + ",")]
    (tmp_path / "p.csv").write_text("\n".join(kept) + "\n")
    assert _backtest(corpus, tmp_path / "o", prices=tmp_path / "p.csv") == 0
    skipped = rows(tmp_path / "o" / "skipped.csv")
    assert skipped and all(stock in s["reason"] for s in skipped)
    assert "skipped" in capsys.readouterr().err


def test_backtest_literal_mode(tmp_path, corpus):
    assert _backtest(corpus, tmp_path / "o", "--equation-mode", "literal") == 0
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["equation_mode"] == "literal"


def _evaluate(scores, outcomes, out, *extra):
    return main(["evaluate", "--strategy-scores", str(scores), "--outcomes", str(outcomes), "--out", str(out), *extra])


def test_evaluate_one_strategy(tmp_path, corpus, capsys):
    _score(corpus, tmp_path / "s")
    _backtest(corpus, tmp_path / "b")
    assert _evaluate(tmp_path / "s" / "strategy_scores.csv", tmp_path / "b" / "outcomes.csv", tmp_path / "e") == 0
    got = rows(tmp_path / "e" / "report.csv")
    assert len(got) == 20 and {r["metric"] for r in got} == {"MPP", "ML"}
    assert not (tmp_path / "e" / "friedman.csv").exists()
    assert "need >= 2 strategies" in capsys.readouterr().err


def test_evaluate_topk_ndcg_friedman(tmp_path, corpus):
    _score(corpus, tmp_path / "s", "--strategies", "AllSent,KeyPremise,PremiseOnly")
    _backtest(corpus, tmp_path / "b")
    code = _evaluate(tmp_path / "s" / "strategy_scores.csv", tmp_path / "b" / "outcomes.csv", tmp_path / "e",
                     "--topk", "10,20", "--ndcg")
    assert code == 0
    topk = [r for r in rows(tmp_path / "e" / "report.csv") if r["metric"].startswith("topk")]
    all_sent = [(r["metric"], r["decile"]) for r in topk if r["strategy"] == "AllSent"]
    assert all_sent == [("topk-MPP", "10"), ("topk-MPP", "20"), ("topk-ML", "10"), ("topk-ML", "20")]
    nd = rows(tmp_path / "e" / "ndcg.csv")
    assert len(nd) == 3 and all(0 < float(r["ndcg"]) <= 1 for r in nd)
    fr = rows(tmp_path / "e" / "friedman.csv")[0]
    assert 0 <= float(fr["p_value"]) <= 1 and int(fr["n_blocks"]) == 60


def test_evaluate_ndcg_undefined(tmp_path, capsys):
    (tmp_path / "s.csv").write_text("opinion_id,strategy,score,defined\nA,AllSent,0.5,true\nB,AllSent,0.2,true\n")
    (tmp_path / "o.csv").write_text("opinion_id,stance,mpp,ml,truncated\nA,bullish,0.0,-0.1,false\nB,bearish,0.0,0.0,false\n")
    assert _evaluate(tmp_path / "s.csv", tmp_path / "o.csv", tmp_path / "e", "--ndcg") == 0
    assert "nDCG undefined" in capsys.readouterr().err
    assert rows(tmp_path / "e" / "ndcg.csv")[0]["ndcg"] == "undefined"


def test_behavior_command(tmp_path, corpus):
    _score(corpus, tmp_path / "s", "--strategies", "KeyPremise")
    code = main(["behavior", "--strategy-scores", str(tmp_path / "s" / "strategy_scores.csv"),
                 "--opinions", str(corpus / "opinions.jsonl"), "--events", str(corpus / "analyst_events.csv"),
                 "--flows", str(corpus / "flows.csv"), "--calendar", str(corpus / "calendar.txt"),
                 "--out", str(tmp_path / "h")])
    assert code == 0
    got = rows(tmp_path / "h" / "behavior.csv")
    assert [int(r["decile"]) for r in got] == list(range(10, 0, -1))
    assert sum(int(r["n"]) for r in got) == 60
    for r in got:
        for k in ("p_ana", "cr_qfii", "cr_fund", "cr_dealer"):
            assert 0.0 <= float(r[k]) <= 1.0


def test_missing_required_flag(tmp_path, capsys):
    assert main(["backtest", "--out", str(tmp_path)]) == 2
    assert "--opinions" in capsys.readouterr().err
