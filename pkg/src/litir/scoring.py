"""Least-information scorers (LIB, LIF, fusions, LICos) and TF*IDF / BM25 baselines.

Per-term formulas are exposed as pure functions of raw counts
(``*_value``) so they can be checked without an index; the ``*_term``
functions read the same counts from an :class:`~litir.index.Index`.
"""

from __future__ import annotations

import enum
import heapq
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from .li_core import informative_entropy as g
from .text_pipeline import AnalyzerConfig, analyze

if TYPE_CHECKING:
    from .index import Index, TermStats


class ConfigurationError(ValueError):
    pass


class ScorerKind(enum.Enum):
    LIB = "lib"
    LIF = "lif"
    LIB2 = "lib2"
    LIF2 = "lif2"
    LIB_PLUS_LIF = "lib+lif"
    LIB_TIMES_LIF = "lib*lif"
    LICOS = "licos"
    TFIDF = "tfidf"
    TFNIDF = "tfnidf"
    BM25 = "bm25"


SCORER_NAMES = tuple(k.value for k in ScorerKind)


@dataclass(frozen=True)
class ScorerSpec:
    kind: ScorerKind
    bm25_b: float = 0.75
    bm25_k1: float = 1.5

    def __post_init__(self):
        if not isinstance(self.kind, ScorerKind):
            raise ConfigurationError(f"unknown scorer kind: {self.kind!r}")
        if not 0.0 <= self.bm25_b <= 1.0:
            raise ConfigurationError(f"bm25 b must be in [0, 1], got {self.bm25_b}")
        if self.bm25_k1 < 0.0:
            raise ConfigurationError(f"bm25 k1 must be >= 0, got {self.bm25_k1}")

    @classmethod
    def from_name(cls, name: str, b: float = 0.75, k1: float = 1.5) -> "ScorerSpec":
        try:
            kind = ScorerKind(name.strip().lower())
        except ValueError:
            raise ConfigurationError(
                f"unknown scorer {name!r}; choose from {', '.join(SCORER_NAMES)}"
            ) from None
        return cls(kind, bm25_b=b, bm25_k1=k1)

    @property
    def name(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class Query:
    qid: str
    tokens: tuple[str, ...]
    unique_terms: dict[str, int] = field(compare=False)

    @classmethod
    def from_tokens(cls, qid: str, tokens: Sequence[str]) -> "Query":
        tokens = tuple(tokens)
        return cls(qid, tokens, dict(Counter(tokens)))

    @classmethod
    def from_text(cls, qid: str, text: str, cfg: AnalyzerConfig) -> "Query":
        return cls.from_tokens(qid, analyze(text, cfg))


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float
    rank: int


# -- per-term formulas over raw counts -------------------------------------

def lib_value(df: int, n_docs: int, present: bool) -> float:
    prior = g(df / n_docs) if n_docs else 0.0
    return 1.0 - prior if present else -prior


def lif_value(tf: int, doc_len: int, cf: int, total_len: int) -> float:
    p_doc = tf / doc_len if doc_len else 0.0
    p_coll = cf / total_len if total_len else 0.0
    return g(p_doc) - g(p_coll)


def lib2_value(df: int, n_docs: int, present: bool) -> float:
    p_coll = df / n_docs if n_docs else 0.0
    p_doc = 1.0 if present else 0.0
    return g(p_doc) - g(p_coll) - g(1.0 - p_doc) - g(1.0 - p_coll)


def lif2_value(tf: int, doc_len: int, cf: int, total_len: int) -> float:
    p_doc = tf / doc_len if doc_len else 0.0
    p_coll = cf / total_len if total_len else 0.0
    return g(p_doc) - g(p_coll) + g(1.0 - p_coll) - g(1.0 - p_doc)


def idf_value(df: int, n_docs: int) -> float:
    return math.log(n_docs / df) if df else 0.0


def bm25_value(
    tf: int, df: int, n_docs: int, doc_len: int, avgdl: float, b: float = 0.75, k1: float = 1.5
) -> float:
    if tf == 0:
        return 0.0
    idf = math.log((n_docs - df + 0.5) / (df + 0.5))
    norm = 1.0 - b + b * (doc_len / avgdl) if avgdl else 1.0
    return idf * tf * (k1 + 1.0) / (tf + k1 * norm)


def licos_weight_from_counts(
    tf: int, doc_len: int, df: int, cf: int, n_docs: int, total_len: int
) -> float:
    return lib_value(df, n_docs, True) + lif_value(tf, doc_len, cf, total_len)


# -- index-backed term weights ---------------------------------------------

def _stats(ix: Index, term: str) -> TermStats | None:
    return ix.term_stats(term)


def lib_term(ix: Index, term: str, present: bool) -> float:
    if ix.N < 1:
        raise ValueError("LIB needs at least one document")
    st = _stats(ix, term)
    return lib_value(st.df if st else 0, ix.N, present)


def lif_term(ix: Index, term: str, doc: int) -> float:
    st = _stats(ix, term)
    return lif_value(ix.tf(term, doc), ix.doc_length(doc), st.cf if st else 0, ix.L)


def lib2_term(ix: Index, term: str, present: bool) -> float:
    st = _stats(ix, term)
    if st is None:
        return 0.0
    return lib2_value(st.df, ix.N, present)


def lif2_term(ix: Index, term: str, doc: int) -> float:
    st = _stats(ix, term)
    return lif2_value(ix.tf(term, doc), ix.doc_length(doc), st.cf if st else 0, ix.L)


def licos_weight(ix: Index, term: str, doc: int) -> float:
    tf = ix.tf(term, doc)
    if tf == 0:
        raise ValueError(f"term {term!r} does not occur in document {ix.doc_id(doc)!r}")
    st = ix.term_stats(term)
    return licos_weight_from_counts(tf, ix.doc_length(doc), st.df, st.cf, ix.N, ix.L)


# -- query scoring ----------------------------------------------------------

def _query_terms(ix: Index, q: Query) -> list[tuple[str, int, TermStats]]:
    """In-vocabulary query terms with multiplicity, in a fixed (sorted) order."""
    out = []
    for term in sorted(q.unique_terms):
        st = ix.term_stats(term)
        if st is not None:
            out.append((term, q.unique_terms[term], st))
    return out


def _score_with_tfs(spec: ScorerSpec, ix: Index, qterms, doc: int, tfs: dict[str, int]) -> float:
    kind = spec.kind
    n_docs, total_len = ix.N, ix.L
    doc_len = ix.doc_length(doc)

    if kind is ScorerKind.LICOS:
        return _licos_from_tfs(ix, qterms, doc, tfs)

    if kind in (ScorerKind.LIB, ScorerKind.LIB2):
        # Present and absent branches differ by exactly 1 (LIB) or 2 (LIB2),
        # so the score is an integer match count plus a document-independent
        # constant; building it that way keeps equal match counts bit-identical.
        matched = sum(count for term, count, _ in qterms if tfs.get(term, 0))
        if kind is ScorerKind.LIB:
            base = math.fsum(count * lib_value(st.df, n_docs, False) for _, count, st in qterms)
            return float(matched) + base
        base = math.fsum(count * lib2_value(st.df, n_docs, False) for _, count, st in qterms)
        return 2.0 * matched + base

    parts = []
    for term, count, st in qterms:
        tf = tfs.get(term, 0)
        if kind is ScorerKind.LIF:
            v = lif_value(tf, doc_len, st.cf, total_len)
        elif kind is ScorerKind.LIF2:
            v = lif2_value(tf, doc_len, st.cf, total_len)
        elif kind is ScorerKind.LIB_PLUS_LIF:
            v = lib_value(st.df, n_docs, tf > 0) + lif_value(tf, doc_len, st.cf, total_len)
        elif kind is ScorerKind.LIB_TIMES_LIF:
            v = (lib_value(st.df, n_docs, tf > 0) + 1.0) * (
                lif_value(tf, doc_len, st.cf, total_len) + 1.0
            )
        elif kind is ScorerKind.TFIDF:
            v = tf * idf_value(st.df, n_docs)
        elif kind is ScorerKind.TFNIDF:
            v = (tf / doc_len if doc_len else 0.0) * idf_value(st.df, n_docs)
        elif kind is ScorerKind.BM25:
            v = bm25_value(tf, st.df, n_docs, doc_len, ix.avgdl, spec.bm25_b, spec.bm25_k1)
        else:  # pragma: no cover - enum is closed
            raise ConfigurationError(f"unknown scorer kind: {kind!r}")
        parts.append(count * v)
    return math.fsum(parts)


def _licos_from_tfs(ix: Index, qterms, doc: int, tfs: dict[str, int]) -> float:
    if not qterms:
        return 0.0
    doc_len = ix.doc_length(doc)
    dot = math.fsum(
        licos_weight_from_counts(tfs[t], doc_len, st.df, st.cf, ix.N, ix.L)
        for t, _, st in qterms
        if tfs.get(t, 0)
    )
    norm = ix.licos_norm(doc)
    if dot == 0.0 or norm == 0.0:
        return 0.0
    return dot / (norm * math.sqrt(len(qterms)))


def score(spec: ScorerSpec, ix: Index, q: Query, doc: int) -> float:
    """Score one document (by ordinal) for a query."""
    if not isinstance(spec, ScorerSpec):
        raise ConfigurationError(f"expected a ScorerSpec, got {spec!r}")
    if not 0 <= doc < ix.N:
        raise IndexError(f"document ordinal {doc} out of range")
    qterms = _query_terms(ix, q)
    tfs = {t: ix.tf(t, doc) for t, _, _ in qterms}
    return _score_with_tfs(spec, ix, qterms, doc, tfs)


def licos_score(ix: Index, q: Query, doc: int) -> float:
    return score(ScorerSpec(ScorerKind.LICOS), ix, q, doc)


def rank(spec: ScorerSpec, ix: Index, q: Query, k: int = 1000) -> list[ScoredDoc]:
    """Top-``k`` documents matching at least one query term.

    Sorted by score descending, ties broken by ascending external doc id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    qterms = _query_terms(ix, q)
    cand: dict[int, dict[str, int]] = {}
    for term, _, _ in qterms:
        for p in ix.postings(term):
            cand.setdefault(p.doc_ordinal, {})[term] = p.tf
    scored = (
        (-_score_with_tfs(spec, ix, qterms, doc, tfs), ix.doc_id(doc))
        for doc, tfs in cand.items()
    )
    top = heapq.nsmallest(k, scored)
    return [ScoredDoc(doc_id, -neg, i) for i, (neg, doc_id) in enumerate(top, start=1)]
