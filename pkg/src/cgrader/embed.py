"""Code-to-vector providers.

Two interchangeable sources: a JSON-Lines file of precomputed vectors
(produced offline by an external embedding model and joined on submission
id), and a built-in deterministic hashed TF-IDF so the whole pipeline runs
with no external artifacts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .clex import TokenStream, significant_tokens, tokenize

DEFAULT_TFIDF_DIM = 256
DEFAULT_SEQ_LEN = 512
DEFAULT_EXTERNAL_DIM = 768


class EmbeddingFormatError(ValueError):
    """Bad vector file contents."""


class EmbeddingLookupError(KeyError):
    """No stored vector for the requested id."""


class UnsupportedEmbedding(NotImplementedError):
    """Provider cannot embed this kind of input."""


@dataclass(frozen=True)
class Embedding:
    pooled: np.ndarray  # (d,)
    sequence: np.ndarray | None  # (L, d) or None
    d: int
    L: int

    def __post_init__(self):
        assert self.pooled.shape == (self.d,)
        assert np.all(np.isfinite(self.pooled))
        if self.sequence is not None:
            assert self.sequence.shape == (self.L, self.d)


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 1 << 64


def fnv1a_64(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) % _U64
    return h


@dataclass(frozen=True)
class TfIdfModel:
    d: int
    L: int
    doc_count: int
    doc_freq: np.ndarray  # (d,) ints
    idf: np.ndarray  # (d,)


def tfidf_fit(corpus: list[TokenStream], d: int = DEFAULT_TFIDF_DIM,
              L: int = DEFAULT_SEQ_LEN) -> TfIdfModel:
    if d < 8:
        raise ValueError(f"hash dimension must be >= 8, got {d}")
    if not corpus:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    doc_freq = np.zeros(d, dtype=np.int64)
    for stream in corpus:
        buckets = {fnv1a_64(tok.text) % d for tok in significant_tokens(stream)}
        for b in buckets:
            doc_freq[b] += 1
    n = len(corpus)
    idf = np.log((1.0 + n) / (1.0 + doc_freq)) + 1.0
    return TfIdfModel(d, L, n, doc_freq, idf)


def tfidf_embed(model: TfIdfModel, code: str) -> Embedding:
    tokens = significant_tokens(tokenize(code))
    buckets = [fnv1a_64(tok.text) % model.d for tok in tokens]
    pooled = np.zeros(model.d)
    if buckets:
        counts = np.bincount(buckets, minlength=model.d).astype(np.float64)
        pooled = (counts / len(buckets)) * model.idf
        norm = math.sqrt(float(pooled @ pooled))
        if norm > 0:
            pooled = pooled / norm
    sequence = np.zeros((model.L, model.d))
    for t, b in enumerate(buckets[: model.L]):
        sequence[t, b] = model.idf[b]
    return Embedding(pooled, sequence, model.d, model.L)


def pool(sequence: np.ndarray) -> np.ndarray:
    """Column-wise mean over non-padding (not-all-zero) rows."""
    if sequence.ndim != 2 or sequence.shape[0] < 1:
        raise ValueError("pool expects an L x d matrix with L >= 1")
    live = np.any(sequence != 0, axis=1)
    if not live.any():
        return np.zeros(sequence.shape[1])
    return sequence[live].mean(axis=0)


class TfIdfProvider:
    """Deterministic hashed TF-IDF embeddings fitted on a token corpus."""

    name = "tfidf"

    def __init__(self, model: TfIdfModel):
        self.model = model

    @classmethod
    def fit(cls, codes: list[str], d: int = DEFAULT_TFIDF_DIM,
            L: int = DEFAULT_SEQ_LEN) -> "TfIdfProvider":
        return cls(tfidf_fit([tokenize(code) for code in codes], d=d, L=L))

    @property
    def dimension(self) -> int:
        return self.model.d

    @property
    def seq_len(self) -> int:
        return self.model.L

    def embed_code(self, code: str) -> Embedding:
        return tfidf_embed(self.model, code)

    def embed_by_id(self, sub_id: str) -> Embedding:
        raise UnsupportedEmbedding("TF-IDF provider embeds code text, not ids")

    def config(self) -> dict:
        return {
            "provider": "tfidf",
            "d": self.model.d,
            "L": self.model.L,
            "doc_count": self.model.doc_count,
            "doc_freq": self.model.doc_freq.tolist(),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "TfIdfProvider":
        doc_freq = np.asarray(cfg["doc_freq"], dtype=np.int64)
        idf = np.log((1.0 + cfg["doc_count"]) / (1.0 + doc_freq)) + 1.0
        return cls(TfIdfModel(cfg["d"], cfg["L"], cfg["doc_count"], doc_freq, idf))


class ExternalProvider:
    """Precomputed vectors keyed by submission id (JSON Lines)."""

    name = "external"

    def __init__(self, table: dict[str, Embedding], d: int, L: int, path: str = ""):
        self._table = table
        self.dimension = d
        self.seq_len = L
        self.path = path

    def embed_by_id(self, sub_id: str) -> Embedding:
        try:
            return self._table[sub_id]
        except KeyError:
            raise EmbeddingLookupError(f"no stored vector for id {sub_id!r}") from None

    def embed_code(self, code: str) -> Embedding:
        raise UnsupportedEmbedding(
            "external vector files cannot embed ad-hoc code; use the tfidf provider"
        )

    def config(self) -> dict:
        return {"provider": "external", "path": self.path, "L": self.seq_len}


def load_external_embeddings(path, seq_len: int = DEFAULT_SEQ_LEN) -> ExternalProvider:
    """Load `{"id", "pooled", "tokens"?}` JSON-Lines vectors."""
    table: dict[str, Embedding] = {}
    d = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EmbeddingFormatError(
                    f"{path}: line {line_num}: invalid JSON: {exc}"
                ) from exc
            if not isinstance(obj, dict) or "id" not in obj or "pooled" not in obj:
                raise EmbeddingFormatError(
                    f"{path}: line {line_num}: object must have 'id' and 'pooled'"
                )
            pooled = np.asarray(obj["pooled"], dtype=np.float64)
            if d is None:
                d = int(pooled.shape[0]) if pooled.ndim == 1 else -1
            if pooled.ndim != 1 or pooled.shape[0] != d:
                raise EmbeddingFormatError(
                    f"{path}: line {line_num}: pooled vector has dimension "
                    f"{pooled.shape}, expected ({d},)"
                )
            sequence = None
            if "tokens" in obj and obj["tokens"] is not None:
                rows = np.asarray(obj["tokens"], dtype=np.float64)
                if rows.ndim != 2 or rows.shape[1] != d:
                    raise EmbeddingFormatError(
                        f"{path}: line {line_num}: token rows must be x-by-{d}"
                    )
                sequence = np.zeros((seq_len, d))
                keep = min(seq_len, rows.shape[0])
                sequence[:keep] = rows[:keep]
            table[str(obj["id"])] = Embedding(pooled, sequence, d, seq_len)
    if d is None:
        raise EmbeddingFormatError(f"{path}: no vectors found")
    return ExternalProvider(table, d, seq_len, str(path))
