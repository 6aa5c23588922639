"""Tokenization, canonical forms and the hashed n-gram embedding."""

from __future__ import annotations

import hashlib
import math
import re
from functools import lru_cache

import numpy as np

from .lexicon import Lexicons

_WORD = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens with punctuation and whitespace removed."""
    return _WORD.findall(text.lower())


def normalize_synonyms(text: str, lex: Lexicons) -> str:
    """Rewrite every token to its canonical synonym, keeping token order."""
    return " ".join(lex.synonym_map.get(t, t) for t in tokenize(text))


def canonicalize(text: str, lex: Lexicons) -> str:
    """Order-insensitive canonical form: synonym-rewritten tokens, sorted."""
    return " ".join(sorted(lex.synonym_map.get(t, t) for t in tokenize(text)))


@lru_cache(maxsize=1 << 16)
def _ngram_hash(ngram: str) -> int:
    return int.from_bytes(hashlib.blake2b(ngram.encode("utf-8"), digest_size=8).digest(), "little")


def ngrams(tokens: list[str]) -> list[str]:
    return tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


@lru_cache(maxsize=1 << 14)
def _embed_cached(text: str, d: int) -> np.ndarray:
    vec = np.zeros(d)
    for g in ngrams(tokenize(text)):
        h = _ngram_hash(g)
        vec[h % d] += -1.0 if (h >> 63) & 1 else 1.0
    norm = math.sqrt(float(vec @ vec))
    if norm > 0.0:
        vec /= norm
    vec.setflags(write=False)
    return vec


def embed(text: str, d: int = 256) -> np.ndarray:
    """Signed feature-hashed bag of unigrams and bigrams, L2-normalized.

    Empty text maps to the zero vector. The returned array is read-only and
    shared between calls with the same arguments.
    """
    if d < 16:
        raise ValueError(f"embedding dimension must be >= 16, got {d}")
    return _embed_cached(text, d)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, float(a @ b) / (na * nb)))


def sim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine clamped to [0, 1]."""
    return max(0.0, cosine(a, b))


def literal_match(q: list[str], e: list[str]) -> float:
    """Jaccard coefficient of the two token sets (0 when both are empty)."""
    qs, es = set(q), set(e)
    union = qs | es
    if not union:
        return 0.0
    return len(qs & es) / len(union)
