"""Readers for TREC collections, topics and qrels; reader/writer for run files."""

from __future__ import annotations

import gzip
import logging
import re
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple, Sequence

from .evaluation import Qrels, _qid_key

log = logging.getLogger(__name__)

TOPIC_FIELDS = ("title", "desc", "smry", "narr", "concepts")


class TrecParseError(ValueError):
    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        where = ""
        if offset is not None:
            where = f" at byte {offset}"
        elif line is not None:
            where = f" at line {line}"
        super().__init__(message + where)
        self.offset = offset
        self.line = line


@dataclass
class ParseLog:
    """Counts of skipped records and the warnings explaining them."""

    skipped: int = 0
    duplicates: int = 0
    warnings: list[str] = field(default_factory=list)

    def skip(self, msg: str) -> None:
        self.skipped += 1
        self.warnings.append(msg)
        log.warning(msg)


@contextmanager
def open_input(path: str | Path):
    """Open a file for binary reading, transparently gunzipping by magic bytes."""
    with open(path, "rb") as raw:
        magic = raw.read(2)
    fh = gzip.open(path, "rb") if magic == b"\x1f\x8b" else open(path, "rb")
    try:
        yield fh
    finally:
        fh.close()


def _iter_bytes(stream: IO | Iterable) -> Iterator[bytes]:
    for chunk in stream:
        yield chunk.encode("utf-8") if isinstance(chunk, str) else chunk


def _read_text(stream) -> str:
    data = stream.read()
    return data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data


# -- documents ----------------------------------------------------------------

_DOC_TAG = re.compile(rb"<(/?)DOC>", re.IGNORECASE)
_DOCNO = re.compile(rb"<DOCNO>(.*?)</DOCNO>", re.IGNORECASE | re.DOTALL)
_ANY_TAG = re.compile(rb"<[^<>]*>")
_ENTITIES = ((b"&lt;", b"<"), (b"&gt;", b">"), (b"&amp;", b"&"))


def _decode_entities(b: bytes) -> bytes:
    for ent, ch in _ENTITIES:
        b = b.replace(ent, ch)
    return b


def _doc_record(body: bytes, offset: int, plog: ParseLog) -> tuple[str, str] | None:
    m = _DOCNO.search(body)
    if m is None:
        plog.skip(f"<DOC> without <DOCNO> at byte {offset}; skipped")
        return None
    doc_id = m.group(1).decode("utf-8", errors="replace").strip()
    if not doc_id:
        plog.skip(f"empty <DOCNO> at byte {offset}; skipped")
        return None
    rest = body[: m.start()] + b"<>" + body[m.end() :]
    pieces = (_decode_entities(p).strip() for p in _ANY_TAG.split(rest))
    text = b" ".join(p for p in pieces if p)
    return doc_id, text.decode("utf-8", errors="replace")


def parse_trec_docs(stream, plog: ParseLog | None = None) -> Iterator[tuple[str, str]]:
    """Yield ``(doc_id, text)`` for each ``<DOC>`` record, streaming.

    Only the current record is buffered. A record without ``<DOCNO>`` is
    skipped and counted in ``plog``; unbalanced ``<DOC>`` tags raise
    :class:`TrecParseError` with the byte offset.
    """
    plog = plog if plog is not None else ParseLog()
    buf = b""
    buf_start = 0  # absolute byte offset of buf[0]
    doc_start: int | None = None  # offset in buf just after the open tag
    doc_open_abs = 0
    scan = 0  # offset in buf where tag search resumes
    for chunk in _iter_bytes(stream):
        buf += chunk
        pos = scan
        while True:
            m = _DOC_TAG.search(buf, pos)
            if m is None:
                break
            closing = m.group(1) == b"/"
            if doc_start is None:
                if closing:
                    raise TrecParseError("</DOC> without matching <DOC>", buf_start + m.start())
                doc_start = m.end()
                doc_open_abs = buf_start + m.start()
            else:
                if not closing:
                    raise TrecParseError("nested <DOC> inside open record", buf_start + m.start())
                rec = _doc_record(buf[doc_start : m.start()], doc_open_abs, plog)
                if rec is not None:
                    yield rec
                doc_start = None
            pos = m.end()
        # A tag may straddle chunks: resume the search 5 bytes before the end.
        scan = max(pos, len(buf) - 5)
        drop = scan if doc_start is None else doc_start
        buf_start += drop
        buf = buf[drop:]
        scan -= drop
        if doc_start is not None:
            doc_start = 0
    if doc_start is not None:
        raise TrecParseError("unterminated <DOC> record", doc_open_abs)


# -- topics -------------------------------------------------------------------

@dataclass(frozen=True)
class Topic:
    number: str
    title: str | None = None
    desc: str | None = None
    narr: str | None = None
    smry: str | None = None
    concepts: str | None = None


_TOP = re.compile(r"<top>(.*?)</top>", re.IGNORECASE | re.DOTALL)
_TOPIC_TAG = re.compile(r"<(/?)([A-Za-z]+)[^<>]*>")
_FIELD_OF_TAG = {
    "num": "number",
    "title": "title",
    "desc": "desc",
    "narr": "narr",
    "smry": "smry",
    "con": "concepts",
}
_LABEL = re.compile(
    r"^\s*(number|topic|title|description|narrative|summary|concepts?)\s*:",
    re.IGNORECASE,
)


def _clean_field(text: str) -> str:
    text = _LABEL.sub("", text, count=1)
    return text.strip()


def parse_topics(stream, plog: ParseLog | None = None) -> list[Topic]:
    """Parse ``<top>`` records; field tags may be left unclosed."""
    plog = plog if plog is not None else ParseLog()
    topics = []
    for rec in _TOP.finditer(_read_text(stream)):
        body = rec.group(1)
        values: dict[str, str] = {}
        current = None
        pos = 0
        for m in _TOPIC_TAG.finditer(body):
            if current is not None:
                values.setdefault(current, _clean_field(body[pos : m.start()]))
            closing, name = m.group(1), m.group(2).lower()
            current = None if closing else _FIELD_OF_TAG.get(name)
            pos = m.end()
        if current is not None:
            values.setdefault(current, _clean_field(body[pos:]))
        number = values.pop("number", "")
        if not number:
            plog.skip(f"<top> without <num> at char {rec.start()}; skipped")
            continue
        content = {k: v for k, v in values.items() if v}
        if not content:
            plog.skip(f"topic {number} has no content fields; skipped")
            continue
        topics.append(Topic(number=number, **content))
    return topics


def topic_to_query_text(t: Topic, fields: Iterable[str]) -> str:
    fields = set(fields)
    if not fields:
        raise ValueError("at least one topic field is required")
    unknown = fields - set(TOPIC_FIELDS)
    if unknown:
        raise ValueError(f"unknown topic fields: {', '.join(sorted(unknown))}")
    parts = [getattr(t, f) for f in TOPIC_FIELDS if f in fields and getattr(t, f)]
    return " ".join(parts)


# -- qrels --------------------------------------------------------------------

def parse_qrels(stream, plog: ParseLog | None = None) -> Qrels:
    """Parse ``qid iter doc_id grade`` lines; the iter column is ignored."""
    plog = plog if plog is not None else ParseLog()
    qrels = Qrels()
    for lineno, line in enumerate(_read_text(stream).splitlines(), start=1):
        cols = line.split()
        if not cols:
            continue
        if len(cols) != 4:
            plog.skip(f"qrels line {lineno}: expected 4 columns, got {len(cols)}")
            continue
        qid, _, doc_id, grade = cols
        try:
            grade = int(grade)
        except ValueError:
            plog.skip(f"qrels line {lineno}: grade {grade!r} is not an integer")
            continue
        if grade < 0:
            plog.skip(f"qrels line {lineno}: negative grade {grade}")
            continue
        if (qid, doc_id) in qrels:
            plog.duplicates += 1
            plog.warnings.append(f"qrels line {lineno}: duplicate ({qid}, {doc_id}); last wins")
        qrels.set(qid, doc_id, grade)
    return qrels


# -- runs ---------------------------------------------------------------------

class RunEntry(NamedTuple):
    qid: str
    doc_id: str
    rank: int
    score: float


@dataclass
class RankedRun:
    tag: str
    entries: list[RunEntry] = field(default_factory=list)

    def by_topic(self) -> dict[str, list[RunEntry]]:
        out: dict[str, list[RunEntry]] = defaultdict(list)
        for e in self.entries:
            out[e.qid].append(e)
        for es in out.values():
            es.sort(key=lambda e: e.rank)
        return dict(out)

    def validate(self) -> None:
        for qid, es in self.by_topic().items():
            for i, e in enumerate(es, start=1):
                if e.rank != i:
                    raise ValueError(f"topic {qid}: ranks not dense from 1")
                if i > 1 and e.score > es[i - 2].score:
                    raise ValueError(f"topic {qid}: scores increase at rank {i}")

    @classmethod
    def from_rankings(cls, tag: str, rankings: Iterable[tuple[str, Sequence]]) -> "RankedRun":
        """Build from ``(qid, [ScoredDoc, ...])`` pairs."""
        entries = [
            RunEntry(qid, d.doc_id, d.rank, d.score) for qid, docs in rankings for d in docs
        ]
        return cls(tag, entries)


def _fmt_score(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def format_run(run: RankedRun) -> str:
    if not run.tag or any(c.isspace() for c in run.tag):
        raise ValueError(f"run tag must be a non-empty word, got {run.tag!r}")
    run.validate()
    lines = []
    topics = run.by_topic()
    for qid in sorted(topics, key=_qid_key):
        for e in topics[qid]:
            lines.append(f"{qid} Q0 {e.doc_id} {e.rank} {_fmt_score(e.score)} {run.tag}\n")
    return "".join(lines)


def write_run(run: RankedRun, sink) -> None:
    sink.write(format_run(run))


def read_run(stream) -> RankedRun:
    tag = ""
    entries = []
    for lineno, line in enumerate(_read_text(stream).splitlines(), start=1):
        cols = line.split()
        if not cols:
            continue
        if len(cols) != 6:
            raise TrecParseError(f"run line has {len(cols)} columns, expected 6", line=lineno)
        qid, _, doc_id, rank, score, tag = cols
        try:
            entries.append(RunEntry(qid, doc_id, int(rank), float(score)))
        except ValueError as exc:
            raise TrecParseError(f"bad rank or score: {exc}", line=lineno) from None
    return RankedRun(tag, entries)
