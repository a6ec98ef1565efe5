"""Per-topic and aggregate effectiveness metrics (AP, P@k, nDCG@k, R-precision, MAP, gMAP)."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from .trec_io import RankedRun

log = logging.getLogger(__name__)

EVAL_DEPTH = 1000
GMAP_FLOOR = 1e-5


class Qrels:
    """Graded judgments keyed by ``(qid, doc_id)``; relevant means grade >= 1."""

    def __init__(self, judgments: Mapping[tuple[str, str], int] | None = None):
        self._by_topic: dict[str, dict[str, int]] = defaultdict(dict)
        for (qid, doc_id), grade in (judgments or {}).items():
            self.set(qid, doc_id, grade)

    def set(self, qid: str, doc_id: str, grade: int) -> None:
        if grade < 0:
            raise ValueError(f"negative grade {grade} for ({qid}, {doc_id})")
        self._by_topic[qid][doc_id] = int(grade)

    def __contains__(self, key) -> bool:
        qid, doc_id = key
        return doc_id in self._by_topic.get(qid, {})

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_topic.values())

    @property
    def judgments(self) -> dict[tuple[str, str], int]:
        return {(q, d): gr for q, docs in self._by_topic.items() for d, gr in docs.items()}

    def topics(self) -> list[str]:
        return list(self._by_topic)

    def grade(self, qid: str, doc_id: str) -> int:
        return self._by_topic.get(qid, {}).get(doc_id, 0)

    def grades(self, qid: str) -> dict[str, int]:
        return dict(self._by_topic.get(qid, {}))

    def num_relevant(self, qid: str) -> int:
        return sum(1 for gr in self._by_topic.get(qid, {}).values() if gr >= 1)


@dataclass(frozen=True)
class TopicReport:
    qid: str
    ap: float
    p10: float
    ndcg10: float
    rprec: float
    num_rel: int
    num_ret: int
    # False when the run has this topic but qrels judge nothing relevant for it.
    judged: bool = True


@dataclass(frozen=True)
class RunReport:
    per_topic: tuple[TopicReport, ...]
    map: float
    gmap: float
    mean_p10: float
    mean_ndcg10: float
    mean_rprec: float
    unjudged: tuple[str, ...] = field(default=())

    @property
    def num_topics(self) -> int:
        return sum(1 for t in self.per_topic if t.judged)


def _check_unique(ranked: Sequence[str]) -> None:
    if len(set(ranked)) != len(ranked):
        seen = set()
        dup = next(d for d in ranked if d in seen or seen.add(d))
        raise ValueError(f"duplicate document in ranking: {dup}")


def average_precision(ranked: Sequence[str], qid: str, qrels: Qrels) -> float:
    _check_unique(ranked)
    num_rel = qrels.num_relevant(qid)
    if num_rel == 0:
        return 0.0
    hits = 0
    total = 0.0
    for i, doc_id in enumerate(ranked, start=1):
        if qrels.grade(qid, doc_id) >= 1:
            hits += 1
            total += hits / i
    return total / num_rel


def p_at_k(ranked: Sequence[str], qid: str, qrels: Qrels, k: int = 10) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum(1 for d in ranked[:k] if qrels.grade(qid, d) >= 1) / k


def _dcg(grades: Iterable[int]) -> float:
    return math.fsum((2.0**gr - 1.0) / math.log2(i + 1) for i, gr in enumerate(grades, start=1))


def ndcg_at_k(ranked: Sequence[str], qid: str, qrels: Qrels, k: int = 10) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    ideal = _dcg(sorted(qrels.grades(qid).values(), reverse=True)[:k])
    if ideal == 0.0:
        return 0.0
    return _dcg(qrels.grade(qid, d) for d in ranked[:k]) / ideal


def r_precision(ranked: Sequence[str], qid: str, qrels: Qrels) -> float:
    num_rel = qrels.num_relevant(qid)
    if num_rel == 0:
        return 0.0
    return sum(1 for d in ranked[:num_rel] if qrels.grade(qid, d) >= 1) / num_rel


def evaluate_topic(ranked: Sequence[str], qid: str, qrels: Qrels) -> TopicReport:
    ranked = list(ranked[:EVAL_DEPTH])
    num_rel = qrels.num_relevant(qid)
    return TopicReport(
        qid=qid,
        ap=average_precision(ranked, qid, qrels),
        p10=p_at_k(ranked, qid, qrels, 10),
        ndcg10=ndcg_at_k(ranked, qid, qrels, 10),
        rprec=r_precision(ranked, qid, qrels),
        num_rel=num_rel,
        num_ret=len(ranked),
        judged=num_rel > 0,
    )


def aggregate(reports: Sequence[TopicReport], unjudged: Sequence[str] = ()) -> RunReport:
    """Means over the judged topics; gMAP floors each AP at 1e-5 before the log."""
    reports = tuple(reports)
    judged = [r for r in reports if r.judged]
    if not judged:
        raise ValueError("no judged topics to aggregate")

    def mean(xs):
        return math.fsum(xs) / len(judged)

    gmap = math.exp(mean(math.log(max(r.ap, GMAP_FLOOR)) for r in judged))
    return RunReport(
        per_topic=reports,
        map=mean(r.ap for r in judged),
        gmap=gmap,
        mean_p10=mean(r.p10 for r in judged),
        mean_ndcg10=mean(r.ndcg10 for r in judged),
        mean_rprec=mean(r.rprec for r in judged),
        unjudged=tuple(unjudged),
    )


def _qid_key(qid: str):
    return (0, int(qid), qid) if qid.isdigit() else (1, 0, qid)


def evaluate_run(run: RankedRun, qrels: Qrels) -> RunReport:
    """Evaluate every topic with at least one relevant judgment.

    Judged topics missing from the run score 0 on every metric. Run topics
    absent from the qrels are listed in ``unjudged`` and left out of the
    aggregates.
    """
    by_topic = run.by_topic()
    if not by_topic:
        raise ValueError("run has no entries")
    judged_qids = {q for q in qrels.topics() if qrels.num_relevant(q) > 0}
    unjudged = sorted((q for q in by_topic if q not in set(qrels.topics())), key=_qid_key)
    for qid in unjudged:
        log.warning("topic %s has no judgments; excluded from aggregates", qid)

    reports = []
    for qid in sorted(judged_qids | set(by_topic), key=_qid_key):
        if qid in unjudged:
            continue
        ranked = [e.doc_id for e in by_topic.get(qid, [])]
        reports.append(evaluate_topic(ranked, qid, qrels))
    return aggregate(reports, unjudged)


def format_report(report: RunReport) -> str:
    lines = [
        f"num_topics\t{report.num_topics}",
        f"map\t{report.map:.4f}",
        f"gmap\t{report.gmap:.4f}",
        f"P10\t{report.mean_p10:.4f}",
        f"ndcg10\t{report.mean_ndcg10:.4f}",
        f"rprec\t{report.mean_rprec:.4f}",
    ]
    if report.unjudged:
        lines.append(f"unjudged_topics\t{','.join(report.unjudged)}")
    return "\n".join(lines) + "\n"


def format_per_topic_csv(report: RunReport) -> str:
    lines = ["qid,ap,p10,ndcg10,rprec,num_rel,num_ret"]
    for t in report.per_topic:
        lines.append(
            f"{t.qid},{t.ap:.4f},{t.p10:.4f},{t.ndcg10:.4f},{t.rprec:.4f},{t.num_rel},{t.num_ret}"
        )
    return "\n".join(lines) + "\n"
