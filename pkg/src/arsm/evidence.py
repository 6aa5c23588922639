"""Evidence store: ingest, literal-augmented retrieval and credibility ranking.

Evidence file: UTF-8 JSON Lines, one object per line with ``id``, ``text``,
``authority`` (in [0, 1]) and ``source``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .featurizer import embed, literal_match, tokenize

DEFAULT_MU = (0.4, 0.3, 0.3)
# scores equal to this many decimals count as tied, so summation order never flips a ranking
TIE_DIGITS = 12


class EvidenceError(ValueError):
    pass


@dataclass(frozen=True)
class EvidenceRecord:
    id: str
    text: str
    authority: float
    source: str
    vector: np.ndarray = field(repr=False, compare=False)
    tokens: tuple[str, ...] = field(repr=False, compare=False, default=())

    def as_record(self) -> dict:
        return {"id": self.id, "text": self.text, "authority": self.authority, "source": self.source}


@dataclass(frozen=True)
class ScoredEvidence:
    record: EvidenceRecord
    sim: float
    cons: float
    score: float


@dataclass(frozen=True)
class EvidenceBundle:
    selected: tuple[ScoredEvidence, ...]
    score_avg: float

    def as_record(self) -> dict:
        return {
            "score_avg": self.score_avg,
            "selected": [
                {"id": s.record.id, "sim": s.sim, "cons": s.cons, "score": s.score, "authority": s.record.authority}
                for s in self.selected
            ],
        }


EMPTY_BUNDLE = EvidenceBundle((), 0.0)
NEUTRAL_BUNDLE = EvidenceBundle((), 0.5)


def make_record(id: str, text: str, authority: float, source: str, d: int) -> EvidenceRecord:
    if not 0.0 <= authority <= 1.0:
        raise EvidenceError(f"authority {authority} of {id!r} outside [0, 1]")
    return EvidenceRecord(id, text, float(authority), source, embed(text, d), tuple(tokenize(text)))


class EvidenceStore:
    """Immutable collection of evidence records with a dense vector matrix."""

    def __init__(self, records: list[EvidenceRecord], d: int = 256):
        seen = set()
        for r in records:
            if r.id in seen:
                raise EvidenceError(f"duplicate evidence id {r.id!r}")
            seen.add(r.id)
        self.d = d
        self.records = tuple(records)
        self.matrix = np.array([r.vector for r in records]).reshape(len(records), d)
        self._token_sets = [r.tokens for r in records]

    def __len__(self) -> int:
        return len(self.records)

    def with_records(self, extra: list[EvidenceRecord]) -> EvidenceStore:
        return EvidenceStore(list(self.records) + list(extra), self.d)

    def dumps(self) -> str:
        return "".join(json.dumps(r.as_record(), sort_keys=True) + "\n" for r in self.records)


def ingest(path: str | Path, d: int = 256) -> EvidenceStore:
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            rec = make_record(str(obj["id"]), str(obj["text"]), float(obj["authority"]), str(obj.get("source", "")), d)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise EvidenceError(f"{path}:{lineno}: {exc}") from exc
        records.append(rec)
    try:
        return EvidenceStore(records, d)
    except EvidenceError as exc:
        raise EvidenceError(f"{path}: {exc}") from exc


def modified_similarity(x: np.ndarray, q_tokens: list[str], e: EvidenceRecord, lam: float = 0.2) -> float:
    """(max(x.e, 0) + lam * Match) / (|x| |e| + lam)."""
    if x.shape != e.vector.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {e.vector.shape}")
    dot = max(float(x @ e.vector), 0.0)
    denom = float(np.linalg.norm(x)) * float(np.linalg.norm(e.vector)) + lam
    if denom == 0.0:
        return 0.0
    return (dot + lam * literal_match(q_tokens, list(e.tokens))) / denom


def similarities(store: EvidenceStore, x: np.ndarray, q_tokens: list[str], lam: float = 0.2) -> np.ndarray:
    if x.shape != (store.d,):
        raise ValueError(f"dimension mismatch: query {x.shape} vs store dim {store.d}")
    match = np.array([literal_match(q_tokens, list(t)) for t in store._token_sets])
    return kernels.modified_sim_scan(np.ascontiguousarray(x, dtype=np.float64), store.matrix, match, float(lam))


def retrieve_topk(store: EvidenceStore, x: np.ndarray, q_tokens: list[str], k: int = 10, lam: float = 0.2) -> list[EvidenceRecord]:
    """Up to ``k`` records by descending modified similarity, ties by id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not len(store):
        return []
    sims = similarities(store, x, q_tokens, lam)
    order = sorted(range(len(store)), key=lambda i: (-round(float(sims[i]), TIE_DIGITS), store.records[i].id))
    return [store.records[i] for i in order[:k]]


def credibility_rank(
    candidates: list[EvidenceRecord],
    x: np.ndarray,
    q_tokens: list[str],
    mu: tuple[float, float, float] = DEFAULT_MU,
    m: int = 5,
    lam: float = 0.2,
) -> EvidenceBundle:
    """Score candidates by relevance, authority and mutual corroboration; keep the top ``m``."""
    if abs(sum(mu) - 1.0) > 1e-9:
        raise ValueError(f"credibility weights must sum to 1, got {mu}")
    if m < 1:
        raise ValueError("m must be >= 1")
    if not candidates:
        return EMPTY_BUNDLE
    cons = kernels.pairwise_mean_sim(np.array([c.vector for c in candidates]))
    scored = []
    for rec, c in zip(candidates, cons):
        s = modified_similarity(x, q_tokens, rec, lam)
        scored.append(ScoredEvidence(rec, s, float(c), mu[0] * s + mu[1] * rec.authority + mu[2] * float(c)))
    scored.sort(key=lambda se: (-round(se.score, TIE_DIGITS), se.record.id))
    top = tuple(scored[:m])
    return EvidenceBundle(top, sum(s.score for s in top) / len(top))
