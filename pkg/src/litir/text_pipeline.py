"""Tokenization, casefolding, stopword removal and Porter stemming."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

from nltk.stem.porter import PorterStemmer

DEFAULT_STOPWORDS_FILE = "stopwords_smart_v1.txt"
TOKENIZER_ID = "alnum-runs-v1"
STEMMER_ID = "porter-1980"

# Unicode letters and digits; "_" is a word character for \w but not alphanumeric.
_TOKEN_RE = re.compile(r"[^\W_]+")

_porter = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def parse_stopwords(lines: Iterable[str]) -> frozenset[str]:
    words = set()
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return frozenset(words)


def load_stopwords(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8", errors="replace") as fh:
        return parse_stopwords(fh)


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    text = resources.files("litir.data").joinpath(DEFAULT_STOPWORDS_FILE).read_text("utf-8")
    return parse_stopwords(text.splitlines())


@dataclass(frozen=True)
class AnalyzerConfig:
    stemming: bool = False
    stopword_list: frozenset[str] = field(default_factory=frozenset)
    min_token_length: int = 1

    def __post_init__(self):
        object.__setattr__(self, "stopword_list", frozenset(self.stopword_list))
        if self.min_token_length < 1:
            raise ValueError("min_token_length must be >= 1")
        if any(w != w.lower() for w in self.stopword_list):
            raise ValueError("stopword entries must be lowercase")

    @classmethod
    def default(cls, stemming: bool = False) -> "AnalyzerConfig":
        return cls(stemming=stemming, stopword_list=default_stopwords())

    def to_dict(self) -> dict:
        return {
            "tokenizer": TOKENIZER_ID,
            "stemmer": STEMMER_ID if self.stemming else None,
            "stopwords": sorted(self.stopword_list),
            "min_token_length": self.min_token_length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalyzerConfig":
        return cls(
            stemming=data.get("stemmer") is not None,
            stopword_list=frozenset(data.get("stopwords", ())),
            min_token_length=int(data.get("min_token_length", 1)),
        )

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@lru_cache(maxsize=200_000)
def stem(token: str) -> str:
    """Porter (1980) stem of a lowercase token."""
    return _porter.stem(token)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def analyze(text: str | bytes, cfg: AnalyzerConfig) -> list[str]:
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8", errors="replace")
    stop = cfg.stopword_list
    min_len = cfg.min_token_length
    out = []
    for tok in tokenize(text):
        tok = tok.lower()
        if tok in stop or len(tok) < min_len:
            continue
        out.append(stem(tok) if cfg.stemming else tok)
    return out
