"""Input risk perception: semantic-perturbation and prompt-injection scores."""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass

from .featurizer import canonicalize, embed, literal_match, sim, tokenize
from .lexicon import Lexicons

INJECTION_WEIGHTS = (1 / 3, 1 / 3, 1 / 3)
_SENTENCE_END = re.compile(r"[.?!;]")


@dataclass(frozen=True)
class RiskThresholds:
    tau_sem: float = 0.6
    tau_inj: float = 0.5
    tau_risk: float = 0.6


@dataclass(frozen=True)
class InjectionFeatures:
    f_abn: float
    d_role: float
    r_ctrl: float


@dataclass(frozen=True)
class RiskReport:
    r_sem: float
    r_inj: float
    r_total: float
    epsilon_est: float
    sem_flag: bool
    inj_flag: bool
    risk_flag: bool

    def as_record(self) -> dict:
        return asdict(self)


NEUTRAL_RISK = RiskReport(0.0, 0.0, 0.0, 0.0, False, False, False)


def sentences(text: str) -> list[list[str]]:
    """Token lists of the non-empty sentences, splitting on . ? ! ;"""
    out = [tokenize(part) for part in _SENTENCE_END.split(text)]
    return [s for s in out if s]


def estimate_epsilon(q: str, lex: Lexicons) -> float:
    """Lexical deviation of ``q`` from its canonical form (1 - Jaccard)."""
    toks = tokenize(q)
    if not toks:
        return 0.0
    return 1.0 - literal_match(toks, tokenize(canonicalize(q, lex)))


def semantic_risk_score(similarity: float, eps: float) -> float:
    """Dissimilarity to the canonical form, amplified by the lexical deviation."""
    return (1.0 - similarity) * math.exp(eps)


def semantic_risk(q: str, lex: Lexicons, d: int = 256) -> float:
    if not tokenize(q):
        return 0.0
    s = sim(embed(q, d), embed(canonicalize(q, lex), d))
    return semantic_risk_score(s, estimate_epsilon(q, lex))


def injection_features(q: str, lex: Lexicons) -> InjectionFeatures:
    sents = [" ".join(s) for s in sentences(q)]
    if not sents:
        return InjectionFeatures(0.0, 0.0, 1.0)
    abnormal = [any(p.search(s) for p in lex.injection_regexes) for s in sents]
    role_hits = sum(len(p.findall(s)) for s in sents for p in lex.role_regexes)
    role_flags = [any(p.search(s) for p in lex.role_regexes) for s in sents]
    imperative = [s.split(" ", 1)[0] in lex.imperative_verbs for s in sents]
    n_imp = sum(imperative)
    if n_imp == 0:
        r_ctrl = 1.0
    else:
        rational = sum(imp and not (ab or ro) for imp, ab, ro in zip(imperative, abnormal, role_flags))
        r_ctrl = rational / n_imp
    return InjectionFeatures(
        f_abn=min(1.0, sum(abnormal) / len(sents)),
        d_role=1.0 - math.exp(-role_hits),
        r_ctrl=r_ctrl,
    )


def injection_risk(f: InjectionFeatures) -> float:
    w1, w2, w3 = INJECTION_WEIGHTS
    return w1 * f.f_abn + w2 * f.d_role + w3 * (1.0 - f.r_ctrl)


def report_from_scores(r_sem: float, r_inj: float, eps: float, th: RiskThresholds) -> RiskReport:
    r_total = 0.5 * r_sem + 0.5 * r_inj
    return RiskReport(
        r_sem=r_sem,
        r_inj=r_inj,
        r_total=r_total,
        epsilon_est=eps,
        sem_flag=r_sem >= th.tau_sem,
        inj_flag=r_inj >= th.tau_inj,
        risk_flag=r_total >= th.tau_risk,
    )


def assess(q: str, lex: Lexicons, thresholds: RiskThresholds = RiskThresholds(), d: int = 256) -> RiskReport:
    return report_from_scores(
        semantic_risk(q, lex, d),
        injection_risk(injection_features(q, lex)),
        estimate_epsilon(q, lex),
        thresholds,
    )
