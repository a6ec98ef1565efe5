"""In-memory inverted index with collection statistics and a versioned file format.

File layout (all integers little-endian)::

    b"LITIDX"  magic
    u32        format version
    u32 + utf8 analyzer config as JSON (the fingerprint is derived from it)
    u32 + utf8 analyzer fingerprint
    u64        N (documents)
    per doc:   u32 + utf8 doc id, u64 length, f64 LICos norm
    u64        vocabulary size
    per term:  u32 + utf8 term, u32 df, u64 cf, df x (u32 ordinal, u32 tf)
    32 bytes   SHA-256 of everything above
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import struct
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from .scoring import licos_weight_from_counts
from .text_pipeline import AnalyzerConfig, analyze

MAGIC = b"LITIDX"
FORMAT_VERSION = 1
_CHECKSUM_LEN = 32


class BuildError(ValueError):
    pass


class DuplicateDocError(BuildError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate document id: {doc_id}")
        self.doc_id = doc_id


class IndexFormatError(ValueError):
    pass


class TermStats(NamedTuple):
    df: int
    cf: int


class Posting(NamedTuple):
    doc_ordinal: int
    tf: int


@dataclass(frozen=True)
class DocEntry:
    doc_id: str
    length: int
    licos_norm: float


class Index:
    """Immutable inverted index. Build with :func:`build_index` or :func:`load_index`."""

    def __init__(
        self,
        docs: list[DocEntry],
        vocab: dict[str, TermStats],
        postings: dict[str, tuple[Posting, ...]],
        analyzer: AnalyzerConfig,
        analyzer_fingerprint: str | None = None,
    ):
        self._docs = tuple(docs)
        self._vocab = vocab
        self._postings = postings
        self._ordinals = {d.doc_id: i for i, d in enumerate(self._docs)}
        # Ordinals only, for bisect lookups of tf.
        self._posting_ords = {t: [p.doc_ordinal for p in ps] for t, ps in postings.items()}
        self.analyzer = analyzer
        self.analyzer_fingerprint = analyzer_fingerprint or analyzer.fingerprint
        self.N = len(self._docs)
        self.L = sum(d.length for d in self._docs)

    @property
    def avgdl(self) -> float:
        return self.L / self.N if self.N else 0.0

    @property
    def vocab_size(self) -> int:
        return len(self._vocab)

    def terms(self) -> list[str]:
        return sorted(self._vocab)

    def term_stats(self, term: str) -> TermStats | None:
        return self._vocab.get(term)

    def postings(self, term: str) -> tuple[Posting, ...]:
        return self._postings.get(term, ())

    def tf(self, term: str, doc: int) -> int:
        ords = self._posting_ords.get(term)
        if not ords:
            return 0
        i = bisect_left(ords, doc)
        if i < len(ords) and ords[i] == doc:
            return self._postings[term][i].tf
        return 0

    def doc(self, ordinal: int) -> DocEntry:
        return self._docs[ordinal]

    def doc_id(self, ordinal: int) -> str:
        return self._docs[ordinal].doc_id

    def doc_length(self, ordinal: int) -> int:
        return self._docs[ordinal].length

    def licos_norm(self, ordinal: int) -> float:
        return self._docs[ordinal].licos_norm

    def ordinal(self, doc_id: str) -> int | None:
        return self._ordinals.get(doc_id)

    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self._docs]


def term_stats(ix: Index, term: str) -> TermStats | None:
    return ix.term_stats(term)


def postings(ix: Index, term: str) -> tuple[Posting, ...]:
    return ix.postings(term)


def build_index(doc_stream: Iterable[tuple[str, str]], cfg: AnalyzerConfig) -> Index:
    """Analyze every document and build the index; ordinals follow arrival order."""
    seen: set[str] = set()
    doc_ids: list[str] = []
    lengths: list[int] = []
    doc_tfs: list[Counter] = []
    for doc_id, text in doc_stream:
        if not doc_id:
            raise BuildError("empty document id")
        if doc_id in seen:
            raise DuplicateDocError(doc_id)
        seen.add(doc_id)
        tokens = analyze(text, cfg)
        doc_ids.append(doc_id)
        lengths.append(len(tokens))
        doc_tfs.append(Counter(tokens))
    return _assemble(doc_ids, lengths, doc_tfs, cfg)


def _assemble(doc_ids, lengths, doc_tfs, cfg: AnalyzerConfig) -> Index:
    plists: dict[str, list[Posting]] = {}
    for ordinal, tfs in enumerate(doc_tfs):
        for term, tf in tfs.items():
            plists.setdefault(term, []).append(Posting(ordinal, tf))
    vocab = {t: TermStats(len(ps), sum(p.tf for p in ps)) for t, ps in plists.items()}
    n_docs, total_len = len(doc_ids), sum(lengths)

    docs = []
    for ordinal, tfs in enumerate(doc_tfs):
        sq = math.fsum(
            licos_weight_from_counts(
                tf, lengths[ordinal], vocab[t].df, vocab[t].cf, n_docs, total_len
            ) ** 2
            for t, tf in sorted(tfs.items())
        )
        docs.append(DocEntry(doc_ids[ordinal], lengths[ordinal], math.sqrt(sq)))
    return Index(docs, vocab, {t: tuple(ps) for t, ps in plists.items()}, cfg)


# -- persistence ------------------------------------------------------------

def _put_str(buf: io.BytesIO, s: str) -> None:
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def dumps_index(ix: Index) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    _put_str(buf, json.dumps(ix.analyzer.to_dict(), sort_keys=True, separators=(",", ":")))
    _put_str(buf, ix.analyzer_fingerprint)
    buf.write(struct.pack("<Q", ix.N))
    for d in ix._docs:
        _put_str(buf, d.doc_id)
        buf.write(struct.pack("<Qd", d.length, d.licos_norm))
    terms = ix.terms()
    buf.write(struct.pack("<Q", len(terms)))
    for t in terms:
        st = ix.term_stats(t)
        _put_str(buf, t)
        buf.write(struct.pack("<IQ", st.df, st.cf))
        buf.write(b"".join(struct.pack("<II", p.doc_ordinal, p.tf) for p in ix.postings(t)))
    body = buf.getvalue()
    return body + hashlib.sha256(body).digest()


def save_index(ix: Index, path: str | Path) -> None:
    Path(path).write_bytes(dumps_index(ix))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError(f"truncated index at byte {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IndexFormatError(f"bad string at byte {self.pos - n}") from exc


def loads_index(data: bytes) -> Index:
    if len(data) < len(MAGIC) + 4 + _CHECKSUM_LEN:
        raise IndexFormatError("file too short to be an index")
    if not data.startswith(MAGIC):
        raise IndexFormatError("missing LITIDX magic")
    body, digest = data[:-_CHECKSUM_LEN], data[-_CHECKSUM_LEN:]
    r = _Reader(body)
    r.take(len(MAGIC))
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported format version {version} (expected {FORMAT_VERSION})")
    if hashlib.sha256(body).digest() != digest:
        raise IndexFormatError("checksum mismatch")

    try:
        analyzer = AnalyzerConfig.from_dict(json.loads(r.string()))
    except (json.JSONDecodeError, TypeError) as exc:
        raise IndexFormatError("bad analyzer section") from exc
    fingerprint = r.string()
    (n_docs,) = r.unpack("<Q")
    docs = []
    for _ in range(n_docs):
        doc_id = r.string()
        length, norm = r.unpack("<Qd")
        docs.append(DocEntry(doc_id, length, norm))
    (n_terms,) = r.unpack("<Q")
    vocab, plists = {}, {}
    for _ in range(n_terms):
        term = r.string()
        df, cf = r.unpack("<IQ")
        raw = r.take(8 * df)
        plists[term] = tuple(Posting(o, tf) for o, tf in struct.iter_unpack("<II", raw))
        vocab[term] = TermStats(df, cf)
    if r.pos != len(body):
        raise IndexFormatError(f"trailing bytes after postings at byte {r.pos}")
    return Index(docs, vocab, plists, analyzer, analyzer_fingerprint=fingerprint)


def load_index(path: str | Path) -> Index:
    return loads_index(Path(path).read_bytes())
