"""Adversarial example generation: normalized-gradient feature attacks and text attacks."""

from __future__ import annotations

import enum
import logging
import math
import re
from dataclasses import dataclass

import numpy as np

from . import kernels
from .lexicon import FabricatedClaim, Lexicons
from .model import ModelParams

log = logging.getLogger(__name__)

_WORD = re.compile(r"[^\W_]+")


class AttackKind(str, enum.Enum):
    SEMANTIC = "semantic_perturbation"
    INJECTION = "prompt_injection"
    DRUG_CONFUSION = "drug_name_confusion"
    FALSE_EVIDENCE = "false_evidence_splice"
    CLEAN = "clean"

    @property
    def should_refuse(self) -> bool:
        return self in (AttackKind.INJECTION, AttackKind.FALSE_EVIDENCE)


ATTACK_KINDS = (AttackKind.SEMANTIC, AttackKind.INJECTION, AttackKind.DRUG_CONFUSION, AttackKind.FALSE_EVIDENCE)


# -- feature-space attack --------------------------------------------------------------


def input_gradient(x: np.ndarray, y: int, theta: ModelParams) -> np.ndarray:
    return kernels.input_grad(np.ascontiguousarray(x[None, :], dtype=np.float64), np.array([y], dtype=np.int64), theta.W, theta.b)[0]


def fgsm_perturb(x: np.ndarray, y_true: int, theta: ModelParams, eps: float = 0.01) -> np.ndarray:
    """Step of length ``eps`` along the L2-normalized input gradient of the cross-entropy.

    Returns ``x`` unchanged (and logs) when the gradient vanishes.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    g = input_gradient(x, y_true, theta)
    n = math.sqrt(float(g @ g))
    if n == 0.0:
        log.debug("zero input gradient; sample left unperturbed")
        return np.array(x, dtype=np.float64)
    return x + eps * g / n


def fgsm_batch(X: np.ndarray, y: np.ndarray, theta: ModelParams, eps: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`fgsm_perturb`; also returns the mask of zero-gradient rows."""
    G = kernels.input_grad(np.ascontiguousarray(X, dtype=np.float64), np.ascontiguousarray(y, dtype=np.int64), theta.W, theta.b)
    norms = np.sqrt((G * G).sum(axis=1))
    zero = norms == 0.0
    step = np.zeros_like(G)
    step[~zero] = G[~zero] / norms[~zero, None]
    return X + eps * step, zero


# -- text attacks --------------------------------------------------------------------


def _word_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in _WORD.finditer(text)]


def _rebuild(text: str, spans: list[tuple[int, int]], words: list[str]) -> str:
    out, prev = [], 0
    for (s, e), w in zip(spans, words):
        out.append(text[prev:s])
        out.append(w)
        prev = e
    out.append(text[prev:])
    return "".join(out)


def perturb_semantic(text: str, lex: Lexicons, rng: np.random.Generator, p_swap: float = 0.5, reorder: bool = True) -> str:
    """Rewrite tokens to synonym variants with probability ``p_swap``, then swap one adjacent word pair.

    Punctuation and token count are preserved.
    """
    spans = _word_spans(text)
    words = [text[s:e] for s, e in spans]
    for i, w in enumerate(words):
        variants = lex.variants_of(w.lower())
        if variants and rng.random() < p_swap:
            words[i] = variants[int(rng.integers(len(variants)))]
    if reorder and len(words) >= 2:
        i = int(rng.integers(len(words) - 1))
        words[i], words[i + 1] = words[i + 1], words[i]
    return _rebuild(text, spans, words)


def inject_prompt(text: str, rng: np.random.Generator, templates: list[str]) -> str:
    """Insert one injection block before or after the original text."""
    if not templates:
        raise ValueError("injection template pool is empty")
    block = templates[int(rng.integers(len(templates)))]
    body = text.strip()
    if not body:
        return block
    if rng.random() < 0.5:
        return f"{block} {text}"
    sep = " " if body[-1] in ".?!;" else ". "
    return f"{text}{sep}{block}"


def mentions_drug(text: str, lex: Lexicons) -> bool:
    return any(m.group(0).lower() in lex.confusables for m in _WORD.finditer(text))


def confuse_drug(text: str, lex: Lexicons, rng: np.random.Generator) -> tuple[str, bool]:
    """Replace one drug mention with its look-alike counterpart; ``(text, False)`` when none is found."""
    spans = _word_spans(text)
    words = [text[s:e] for s, e in spans]
    hits = [i for i, w in enumerate(words) if w.lower() in lex.confusables]
    if not hits:
        return text, False
    i = hits[int(rng.integers(len(hits)))]
    words[i] = lex.confusables[words[i].lower()]
    return _rebuild(text, spans, words), True


def splice_false_evidence(text: str, rng: np.random.Generator, pool: list[FabricatedClaim]) -> tuple[str, FabricatedClaim]:
    """Append a fabricated evidence sentence; returns the new text and the claim used."""
    if not pool:
        raise ValueError("fabricated evidence pool is empty")
    claim = pool[int(rng.integers(len(pool)))]
    body = text.rstrip()
    sep = " " if body and body[-1] in ".?!;" else ". "
    return f"{body}{sep}{claim.text}" if body else claim.text, claim


@dataclass(frozen=True)
class AdversarialSample:
    base_id: str
    kind: AttackKind
    text: str
    y_true: int
    should_refuse: bool
    x_adv: np.ndarray | None = None
    claim: FabricatedClaim | None = None


def attack_text(text: str, kind: AttackKind, lex: Lexicons, rng: np.random.Generator, p_swap: float = 0.5) -> tuple[str, FabricatedClaim | None, bool]:
    """Apply one text-level attack. Returns (text, spliced claim or None, applied)."""
    if kind is AttackKind.SEMANTIC:
        out = perturb_semantic(text, lex, rng, p_swap)
        return out, None, out != text
    if kind is AttackKind.INJECTION:
        return inject_prompt(text, rng, lex.injection_templates), None, True
    if kind is AttackKind.DRUG_CONFUSION:
        out, ok = confuse_drug(text, lex, rng)
        return out, None, ok
    if kind is AttackKind.FALSE_EVIDENCE:
        out, claim = splice_false_evidence(text, rng, lex.false_evidence)
        return out, claim, True
    return text, None, False


@dataclass(frozen=True)
class PoolEntry:
    index: int
    kind: str
    text: str
    should_refuse: bool
    x_adv: np.ndarray | None = None
    claim: FabricatedClaim | None = None


def build_pool(samples, X: np.ndarray, theta: ModelParams, ratio: float, eps: float, lex: Lexicons,
               rng: np.random.Generator, p_swap: float = 0.5) -> tuple[list[PoolEntry], dict[str, int]]:
    """Choose floor(ratio * N) samples to replace with adversarial variants.

    ``samples`` need ``text``, ``base_text``, ``y`` and ``should_refuse``;
    ``X`` holds their current feature rows. The first half of the chosen
    samples (rounded up) get a gradient attack on their features, the rest a
    text attack applied to the clean base text. Untouched samples are not
    listed. Returns the entries and a kind -> count composition.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must be in [0, 1]")
    n = len(samples)
    n_adv = math.floor(ratio * n + 1e-9)
    chosen = np.sort(rng.choice(n, size=n_adv, replace=False)) if n_adv else np.array([], dtype=int)
    order = rng.permutation(len(chosen))
    n_grad = (n_adv + 1) // 2
    grad_idx = np.sort(chosen[order[:n_grad]])
    text_idx = np.sort(chosen[order[n_grad:]])
    entries: list[PoolEntry] = []
    composition = {"fgsm": 0, **{k.value: 0 for k in ATTACK_KINDS}}
    if len(grad_idx):
        y = np.array([samples[i].y for i in grad_idx], dtype=np.int64)
        Xadv, _ = fgsm_batch(X[grad_idx], y, theta, eps)
        for row, i in enumerate(grad_idx):
            s = samples[i]
            entries.append(PoolEntry(int(i), "fgsm", s.text, s.should_refuse, Xadv[row]))
            composition["fgsm"] += 1
    for i in text_idx:
        s = samples[i]
        kinds = [k for k in ATTACK_KINDS if k is not AttackKind.DRUG_CONFUSION or mentions_drug(s.base_text, lex)]
        kind = kinds[int(rng.integers(len(kinds)))]
        text, claim, _ = attack_text(s.base_text, kind, lex, rng, p_swap)
        entries.append(PoolEntry(int(i), kind.value, text, kind.should_refuse, None, claim))
        composition[kind.value] += 1
    entries.sort(key=lambda e: e.index)
    return entries, composition
