"""Confidence reweighting and the final answer / warn / refuse decision."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .evidence import EvidenceBundle
from .graph import ConsistencyResult
from .model import DecisionDistribution
from .risk import RiskReport

DEFAULT_ETA = (0.3, 0.4, 0.3)


class Verdict(str, enum.Enum):
    ANSWER = "Answer"
    WARN = "AnswerWithWarning"
    REFUSE = "Refuse"


INJECTION_FLAG = "INJECTION_FLAG"
HIGH_RISK = "HIGH_RISK"
CONSISTENCY_FAIL = "CONSISTENCY_FAIL"
LOW_CONFIDENCE = "LOW_CONFIDENCE"
REFUSAL_HEAD = "REFUSAL_HEAD"
MODERATE_CONFIDENCE = "MODERATE_CONFIDENCE"


@dataclass(frozen=True)
class GateThresholds:
    tau_conf: float = 0.7
    tau_conf_star: float = 0.85
    refusal: float = 0.5


@dataclass(frozen=True)
class GateDecision:
    verdict: Verdict
    class_index: int | None
    confidence: float
    reasons: tuple[str, ...] = field(default_factory=tuple)

    @property
    def answered(self) -> bool:
        return self.verdict is not Verdict.REFUSE

    def as_record(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "class_index": self.class_index,
            "confidence": self.confidence,
            "reasons": list(self.reasons),
        }


def reweight_factor(r_total: float, score_avg: float, consistency: float, eta=DEFAULT_ETA, literal: bool = False) -> float:
    e1, e2, e3 = eta
    return 1.0 - e1 * r_total + e2 * score_avg + (e3 if literal else e3 * consistency)


def reweight_confidence(conf_raw: float, r_total: float, score_avg: float, consistency: float,
                        eta=DEFAULT_ETA, literal: bool = False) -> float:
    """Raw confidence scaled by risk, evidence support and consistency, clamped to [0, 1].

    ``literal=True`` adds the third coefficient as a bare constant instead of
    weighting the consistency score with it.
    """
    conf = conf_raw * reweight_factor(r_total, score_avg, consistency, eta, literal)
    return min(1.0, max(0.0, conf))


def gate(
    p: DecisionDistribution,
    risk: RiskReport,
    bundle: EvidenceBundle,
    cons: ConsistencyResult,
    thresholds: GateThresholds = GateThresholds(),
    choice: int | None = None,
    reweight: bool = True,
    eta=DEFAULT_ETA,
    reweight_literal: bool = False,
) -> GateDecision:
    """Apply the decision table to the stage outputs.

    ``choice`` is the class the pipeline settled on (defaults to the argmax);
    with ``reweight=False`` the raw class probability is thresholded directly.
    """
    cls = p.argmax if choice is None else choice
    conf_raw = float(p.probs[cls])
    if reweight:
        conf = reweight_confidence(conf_raw, risk.r_total, bundle.score_avg, cons.c_edge_normalized, eta, reweight_literal)
    else:
        conf = conf_raw

    if risk.inj_flag:
        verdict, reasons = Verdict.REFUSE, [INJECTION_FLAG]
    elif risk.risk_flag and not cons.passed:
        verdict, reasons = Verdict.REFUSE, [HIGH_RISK, CONSISTENCY_FAIL]
    elif conf >= thresholds.tau_conf_star and cons.passed:
        verdict, reasons = Verdict.ANSWER, []
    elif thresholds.tau_conf <= conf < thresholds.tau_conf_star:
        verdict = Verdict.WARN
        reasons = [MODERATE_CONFIDENCE] if cons.passed else [MODERATE_CONFIDENCE, CONSISTENCY_FAIL]
    elif conf >= thresholds.tau_conf_star:
        verdict, reasons = Verdict.REFUSE, [CONSISTENCY_FAIL]
    else:
        verdict, reasons = Verdict.REFUSE, [LOW_CONFIDENCE]

    if p.refusal_prob >= thresholds.refusal:
        reasons.append(REFUSAL_HEAD)
        verdict = Verdict.REFUSE
    return GateDecision(verdict, None if verdict is Verdict.REFUSE else cls, conf, tuple(reasons))
