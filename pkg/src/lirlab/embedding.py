"""Shared latent space: tokenizer and a deterministic signed-hash encoder.

Queries and documents are embedded by the *same* function into one unit-norm
vector space, so retrieval is inner-product (equivalently cosine) search.
The encoder is a seeded bag-of-features hasher: every token contributes a
word-level feature plus its character n-grams, each feature adds
``sign(h2(f)) * tf(f)`` at coordinate ``h1(f) mod dim``, and the result is
L2-normalized.

Two properties everything downstream relies on:

* determinism - same config, same text, bit-identical vector on any platform
  (features are summed as exact integers before the final normalization);
* linearity before normalization - the raw vector of a token sequence is the
  sum of the per-token raw vectors, which lets the decoder score candidate
  token bags incrementally instead of re-hashing every sequence.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, EmptyText

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Feature namespaces keep a length-n token's word feature distinct from its
# identical character n-gram.
_WORD_NS = "w:"
_CHAR_NS = "c:"


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs; empty tokens dropped."""
    return _WORD_RE.findall(text.lower())


@dataclass(frozen=True)
class EncoderConfig:
    """Parameters that fully determine encoder behaviour."""

    dim: int = 256
    seed: int = 0
    ngram_order: int = 3
    use_word_unigrams: bool = True

    def __post_init__(self) -> None:
        if self.dim < 8:
            raise ValueError(f"dim must be >= 8, got {self.dim}")
        if self.ngram_order < 1:
            raise ValueError(f"ngram_order must be >= 1, got {self.ngram_order}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def to_json(self) -> str:
        """Canonical JSON used in index headers; field order is fixed."""
        return json.dumps(
            {
                "dim": self.dim,
                "seed": self.seed,
                "ngram_order": self.ngram_order,
                "use_word_unigrams": self.use_word_unigrams,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, payload: str) -> "EncoderConfig":
        obj = json.loads(payload)
        return cls(
            dim=int(obj["dim"]),
            seed=int(obj["seed"]),
            ngram_order=int(obj["ngram_order"]),
            use_word_unigrams=bool(obj["use_word_unigrams"]),
        )


def _hash64(feature: str, seed: int, salt: bytes) -> int:
    h = hashlib.blake2b(
        feature.encode("utf-8"),
        digest_size=8,
        key=seed.to_bytes(8, "little"),
        salt=salt,
    )
    return int.from_bytes(h.digest(), "little")


def _features(tokens: list[str], cfg: EncoderConfig) -> Counter:
    feats: Counter = Counter()
    n = cfg.ngram_order
    for tok in tokens:
        if cfg.use_word_unigrams:
            feats[_WORD_NS + tok] += 1
        for i in range(len(tok) - n + 1):
            feats[_CHAR_NS + tok[i : i + n]] += 1
    return feats


def raw_vector(text: str, cfg: EncoderConfig) -> np.ndarray:
    """Unnormalized feature-hash vector; integer-valued float64 coordinates."""
    tokens = tokenize(text)
    if not tokens:
        raise EmptyText(f"no tokens in {text!r}")
    feats = _features(tokens, cfg)
    if not feats:
        raise EmptyText(
            f"no features in {text!r} (all tokens shorter than the n-gram "
            "order and word unigrams disabled)"
        )
    vec = np.zeros(cfg.dim, dtype=np.float64)
    # Sorted feature order: summation of exact integers, but sorting also makes
    # the loop order platform-independent by construction.
    for feat in sorted(feats):
        coord = _hash64(feat, cfg.seed, b"coord") % cfg.dim
        sign = 1.0 if _hash64(feat, cfg.seed, b"sign") & 1 == 0 else -1.0
        vec[coord] += sign * feats[feat]
    return vec


def token_raw_vector(token: str, cfg: EncoderConfig) -> np.ndarray:
    """Raw vector of a single already-tokenized token (decoder fast path)."""
    feats = Counter()
    if cfg.use_word_unigrams:
        feats[_WORD_NS + token] += 1
    n = cfg.ngram_order
    for i in range(len(token) - n + 1):
        feats[_CHAR_NS + token[i : i + n]] += 1
    vec = np.zeros(cfg.dim, dtype=np.float64)
    for feat in sorted(feats):
        coord = _hash64(feat, cfg.seed, b"coord") % cfg.dim
        sign = 1.0 if _hash64(feat, cfg.seed, b"sign") & 1 == 0 else -1.0
        vec[coord] += sign * feats[feat]
    return vec


def encode(text: str, cfg: EncoderConfig) -> np.ndarray:
    """Embed ``text`` as a unit-norm float64 vector of dimension ``cfg.dim``.

    Raises :class:`EmptyText` when the text yields no tokens.
    """
    vec = raw_vector(text, cfg)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # Possible only through hash-sign cancellation of every coordinate.
        raise EmptyText(f"features of {text!r} cancel to the zero vector")
    return vec / norm


def normalize(vec: np.ndarray) -> np.ndarray:
    """Return ``vec`` scaled to unit L2 norm."""
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return np.asarray(vec, dtype=np.float64) / norm


def is_normalized(vec: np.ndarray, tol: float = 1e-6) -> bool:
    return abs(float(np.linalg.norm(vec)) - 1.0) <= tol


def inner_product(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two embeddings; raises :class:`DimMismatch`."""
    if a.shape != b.shape:
        raise DimMismatch(f"shapes {a.shape} and {b.shape} differ")
    return float(np.dot(a, b))
