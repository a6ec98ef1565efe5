import math
import random

import pytest

from litir.evaluation import (
    Qrels,
    aggregate,
    average_precision,
    evaluate_run,
    evaluate_topic,
    format_per_topic_csv,
    ndcg_at_k,
    p_at_k,
    r_precision,
)
from litir.trec_io import RankedRun, RunEntry


def make_qrels(qid, grades):
    return Qrels({(qid, d): gr for d, gr in grades.items()})


def test_ap_pattern():
    qrels = make_qrels("1", {"r1": 1, "r2": 1, "r3": 1})
    ranked = ["r1", "n1", "r2", "n2", "r3"]
    expected = (1 / 1 + 2 / 3 + 3 / 5) / 3
    assert average_precision(ranked, "1", qrels) == pytest.approx(expected, abs=1e-15)
    assert average_precision(ranked, "1", qrels) == pytest.approx(0.755556, abs=1e-6)


def test_ap_edge_cases():
    qrels = make_qrels("1", {"a": 1, "b": 2, "c": 0})
    assert average_precision(["a", "b", "x"], "1", qrels) == 1.0
    assert average_precision(["x", "c"], "1", qrels) == 0.0
    with pytest.raises(ValueError, match="duplicate"):
        average_precision(["a", "a"], "1", qrels)


def test_p_at_k():
    qrels = make_qrels("1", {f"r{i}": 1 for i in range(10)})
    ranked = [f"r{i}" for i in range(4)] + [f"n{i}" for i in range(6)]
    assert p_at_k(ranked, "1", qrels) == 0.4
    assert p_at_k([], "1", qrels) == 0.0
    assert p_at_k([f"r{i}" for i in range(10)], "1", qrels) == 1.0
    assert p_at_k(["r0"], "1", qrels) == 0.1


def test_ndcg():
    qrels = make_qrels("1", {"a": 2, "c": 1})
    ranked = ["a", "b", "c"]
    dcg = 3 / math.log2(2) + 0 + 1 / math.log2(4)
    idcg = 3 / math.log2(2) + 1 / math.log2(3)
    assert ndcg_at_k(ranked, "1", qrels) == pytest.approx(dcg / idcg, abs=1e-15)
    assert ndcg_at_k(ranked, "1", qrels) == pytest.approx(0.963940, abs=1e-6)
    assert ndcg_at_k(["a", "c"], "1", qrels) == pytest.approx(1.0)
    assert ndcg_at_k(["a"], "1", make_qrels("1", {"a": 0, "b": 0})) == 0.0


def test_r_precision():
    qrels = make_qrels("1", {"a": 1, "b": 1, "c": 1, "d": 1})
    assert r_precision(["a", "x", "b", "y"], "1", qrels) == 0.5
    assert r_precision(["a", "b", "c", "d"], "1", qrels) == 1.0


def test_gmap_floor():
    reports = [evaluate_topic([], str(i), Qrels({(str(i), "z"): 1})) for i in range(3)]
    reports = [r.__class__(**{**r.__dict__, "ap": ap}) for r, ap in zip(reports, (0.5, 0.005, 0.0))]
    agg = aggregate(reports)
    expected = math.exp((math.log(0.5) + math.log(0.005) + math.log(1e-5)) / 3)
    assert agg.gmap == pytest.approx(expected, abs=1e-15)
    assert agg.gmap == pytest.approx(0.002924, abs=1e-6)
    assert agg.map == pytest.approx(0.505 / 3)


def test_aggregate_trivial_cases():
    qrels = Qrels({("1", "a"): 1, ("1", "b"): 1})
    r = evaluate_topic(["a", "x", "b"], "1", qrels)
    agg = aggregate([r])
    assert (agg.map, agg.gmap, agg.mean_p10, agg.mean_ndcg10, agg.mean_rprec) == pytest.approx(
        (r.ap, r.ap, r.p10, r.ndcg10, r.rprec)
    )
    same = [r, evaluate_topic(["a", "x", "b"], "1", qrels)]
    assert aggregate(same).gmap == pytest.approx(aggregate(same).map)
    with pytest.raises(ValueError):
        aggregate([])


def run_of(rankings, tag="t"):
    return RankedRun.from_rankings(
        tag, [(q, [type("D", (), {"doc_id": d, "rank": i, "score": -i})() for i, d in enumerate(ds, 1)])
              for q, ds in rankings.items()]
    )


def test_evaluate_run_excludes_unjudged_and_empty_topics():
    qrels = Qrels({("1", "a"): 1, ("2", "b"): 2, ("3", "c"): 0})
    run = run_of({"1": ["a", "x"], "2": ["x", "b"], "3": ["c"], "9": ["a"]})
    rep = evaluate_run(run, qrels)
    assert rep.unjudged == ("9",)
    assert [t.qid for t in rep.per_topic] == ["1", "2", "3"]
    assert rep.num_topics == 2
    assert rep.map == pytest.approx((1.0 + 0.5) / 2)
    with pytest.raises(ValueError):
        evaluate_run(RankedRun("t", []), qrels)


def test_judged_topic_missing_from_run_scores_zero():
    qrels = Qrels({("1", "a"): 1, ("2", "b"): 1})
    rep = evaluate_run(run_of({"1": ["a"]}), qrels)
    assert rep.map == pytest.approx(0.5)
    assert rep.per_topic[1].num_ret == 0


def test_depth_truncated_to_1000():
    qrels = Qrels({("1", "late"): 1})
    ranked = [f"n{i}" for i in range(1000)] + ["late"]
    rep = evaluate_topic(ranked, "1", qrels)
    assert rep.ap == 0.0 and rep.num_ret == 1000


def test_per_topic_csv():
    qrels = Qrels({("1", "a"): 1})
    text = format_per_topic_csv(evaluate_run(run_of({"1": ["a"]}), qrels))
    assert text.splitlines() == ["qid,ap,p10,ndcg10,rprec,num_rel,num_ret", "1,1.0000,0.1000,1.0000,1.0000,1,1"]


# -- properties ---------------------------------------------------------------------

def random_topic(rng):
    docs = [f"d{i}" for i in range(40)]
    grades = {d: rng.choice([0, 0, 1, 2]) for d in rng.sample(docs, 25)}
    if not any(grades.values()):
        grades[docs[0]] = 1
    ranked = rng.sample(docs, rng.randint(0, 40))
    return Qrels({("q", d): gr for d, gr in grades.items()}), ranked


def test_metric_properties():
    rng = random.Random(1)
    reports = []
    for _ in range(300):
        qrels, ranked = random_topic(rng)
        r = evaluate_topic(ranked, "q", qrels)
        reports.append(r)
        for v in (r.ap, r.p10, r.ndcg10, r.rprec):
            assert 0.0 <= v <= 1.0

        rel = [i for i, d in enumerate(ranked) if qrels.grade("q", d) >= 1]
        if rel:
            tail = ranked[rel[-1] + 1 :]
            rng.shuffle(tail)
            permuted = ranked[: rel[-1] + 1] + tail
            assert average_precision(permuted, "q", qrels) == pytest.approx(r.ap, abs=1e-15)

        # nDCG only guarantees this for an added document of the top grade.
        grades = qrels.grades("q")
        top = max(grades.values())
        unranked = [d for d, gr in grades.items() if gr == top and d not in ranked]
        if not unranked:
            continue
        b = evaluate_topic([unranked[0]] + ranked, "q", qrels)
        assert b.ap >= r.ap - 1e-15 and b.p10 >= r.p10 - 1e-15 and b.ndcg10 >= r.ndcg10 - 1e-15

    agg = aggregate(reports)
    assert agg.gmap <= agg.map + 1e-5


# -- agreement with trec_eval --------------------------------------------------------

def test_agrees_with_trec_eval():
    pytrec_eval = pytest.importorskip("pytrec_eval")
    rng = random.Random(77)
    qrels_d, run_d, rankings = {}, {}, {}
    judgments = {}
    for t in range(25):
        qid = str(100 + t)
        qrels, ranked = random_topic(rng)
        qrels_d[qid] = {d: gr for (_, d), gr in qrels.judgments.items()}
        judgments.update({(qid, d): gr for d, gr in qrels_d[qid].items()})
        # Strictly decreasing scores so trec_eval keeps our order.
        run_d[qid] = {d: float(len(ranked) - i) for i, d in enumerate(ranked)} or {"none": 0.0}
        rankings[qid] = ranked or ["none"]
    ours = evaluate_run(run_of(rankings), Qrels(judgments))
    ev = pytrec_eval.RelevanceEvaluator(qrels_d, {"map", "P_10", "Rprec"})
    theirs = ev.evaluate(run_d)
    for t in ours.per_topic:
        assert t.ap == pytest.approx(theirs[t.qid]["map"], abs=1e-4)
        assert t.p10 == pytest.approx(theirs[t.qid]["P_10"], abs=1e-4)
        assert t.rprec == pytest.approx(theirs[t.qid]["Rprec"], abs=1e-4)
