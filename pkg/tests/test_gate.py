import numpy as np
import pytest

from arsm.evidence import NEUTRAL_BUNDLE, EvidenceBundle
from arsm.gate import (
    CONSISTENCY_FAIL,
    HIGH_RISK,
    INJECTION_FLAG,
    LOW_CONFIDENCE,
    REFUSAL_HEAD,
    Verdict,
    gate,
    reweight_confidence,
    reweight_factor,
)
from arsm.graph import ConsistencyResult
from arsm.model import DecisionDistribution
from arsm.risk import NEUTRAL_RISK, RiskReport

PASS = ConsistencyResult(1.0, 1.0, True, 1)
FAIL = ConsistencyResult(0.0, 0.0, False, 1)
# factor 1 - 0 + 0.4*0.5 + 0.3*1 = 1.5 under the neutral bundle and a passing check
NEUTRAL_FACTOR = 1.5


def dist(conf, refusal=0.1, C=3):
    rest = (1.0 - conf) / (C - 1)
    return DecisionDistribution(np.array([conf] + [rest] * (C - 1)), refusal)


def risk(r_total=0.0, inj=False, flag=False):
    return RiskReport(0.0, 0.0, r_total, 0.0, False, inj, flag)


def test_reweight_clamps_high():
    assert reweight_factor(0.2, 0.8, 0.9) == pytest.approx(1.53, rel=1e-12)
    assert reweight_confidence(0.9, 0.2, 0.8, 0.9) == 1.0


def test_reweight_worst_case():
    assert reweight_confidence(0.9, 1.0, 0.0, 0.0) == pytest.approx(0.63, rel=1e-12)


def test_reweight_zero_raw():
    assert reweight_confidence(0.0, 0.3, 0.9, 1.0) == 0.0


def test_reweight_literal_mode():
    assert reweight_factor(0.0, 0.0, 0.0, literal=True) == pytest.approx(1.3)
    assert reweight_factor(0.0, 0.0, 0.0, literal=False) == 1.0


def test_benign_answer():
    d = gate(dist(0.9), NEUTRAL_RISK, NEUTRAL_BUNDLE, PASS)
    assert d.verdict is Verdict.ANSWER and d.class_index == 0 and d.reasons == ()


def test_injection_precedence():
    d = gate(dist(0.99), risk(inj=True), NEUTRAL_BUNDLE, PASS)
    assert d.verdict is Verdict.REFUSE and d.reasons == (INJECTION_FLAG,) and d.class_index is None


def test_high_risk_inconsistent():
    d = gate(dist(0.99), risk(0.7, flag=True), NEUTRAL_BUNDLE, FAIL)
    assert d.verdict is Verdict.REFUSE and d.reasons == (HIGH_RISK, CONSISTENCY_FAIL)


def test_high_risk_consistent_can_answer():
    d = gate(dist(0.99), risk(0.7, flag=True), NEUTRAL_BUNDLE, PASS)
    assert d.verdict is Verdict.ANSWER


def test_warning_band():
    d = gate(dist(0.75), NEUTRAL_RISK, NEUTRAL_BUNDLE, PASS, reweight=False)
    assert d.verdict is Verdict.WARN and d.confidence == 0.75


def test_warning_band_after_reweighting():
    d = gate(dist(0.75 / NEUTRAL_FACTOR), NEUTRAL_RISK, NEUTRAL_BUNDLE, PASS)
    assert d.confidence == pytest.approx(0.75)
    assert d.verdict is Verdict.WARN


def test_confident_but_inconsistent():
    d = gate(dist(0.99), NEUTRAL_RISK, NEUTRAL_BUNDLE, FAIL, reweight=False)
    assert d.verdict is Verdict.REFUSE and d.reasons == (CONSISTENCY_FAIL,)


def test_low_confidence():
    d = gate(dist(0.4), NEUTRAL_RISK, EvidenceBundle((), 0.0), PASS)
    assert d.verdict is Verdict.REFUSE and d.reasons == (LOW_CONFIDENCE,)


def test_refusal_head_overrides():
    d = gate(dist(0.99, refusal=0.7), NEUTRAL_RISK, NEUTRAL_BUNDLE, PASS)
    assert d.verdict is Verdict.REFUSE and d.reasons[-1] == REFUSAL_HEAD


def test_choice_overrides_argmax():
    d = gate(dist(0.5), NEUTRAL_RISK, NEUTRAL_BUNDLE, PASS, choice=1, reweight=False)
    assert d.confidence == pytest.approx(0.25)


def test_boundaries_inclusive():
    assert gate(dist(0.85), NEUTRAL_RISK, NEUTRAL_BUNDLE, PASS, reweight=False).verdict is Verdict.ANSWER
    assert gate(dist(0.7), NEUTRAL_RISK, NEUTRAL_BUNDLE, PASS, reweight=False).verdict is Verdict.WARN
