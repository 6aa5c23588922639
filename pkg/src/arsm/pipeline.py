"""End-to-end inference: risk -> evidence -> decision head -> consistency -> gate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import GlobalConfig
from .corpus import World
from .evidence import NEUTRAL_BUNDLE, EvidenceBundle, credibility_rank, retrieve_topk
from .featurizer import embed, normalize_synonyms, tokenize
from .gate import GateDecision, gate
from .graph import NEUTRAL_CONSISTENCY, ConsistencyResult, consistency_score, extract_entities, scan_entities
from .model import DecisionDistribution, ModelParams, forward
from .risk import NEUTRAL_RISK, RiskReport, assess


@dataclass(frozen=True)
class AblationSpec:
    """Stages to switch off; a disabled stage feeds its neutral output downstream."""

    risk_perception: bool = False
    evidence_retrieval: bool = False
    consistency_verification: bool = False
    confidence_reweighting: bool = False

    @property
    def name(self) -> str:
        off = [f for f in ("risk_perception", "evidence_retrieval", "consistency_verification", "confidence_reweighting") if getattr(self, f)]
        return "full" if not off else "no_" + "+".join(off)


FULL = AblationSpec()
SINGLE_ABLATIONS = (
    AblationSpec(risk_perception=True),
    AblationSpec(evidence_retrieval=True),
    AblationSpec(consistency_verification=True),
    AblationSpec(confidence_reweighting=True),
)
ALL_DISABLED = AblationSpec(True, True, True, True)


@dataclass(frozen=True)
class ClassConsistency:
    """Consistency of every class's rendered answer for one set of query entities."""

    results: tuple[ConsistencyResult, ...]

    @property
    def scores(self) -> np.ndarray:
        return np.array([r.c_edge_normalized for r in self.results])

    @property
    def support(self) -> np.ndarray:
        """Per-class consistency credit for training: answers touching no graph edge earn none."""
        return np.array([r.c_edge_normalized if r.n_edges else 0.0 for r in self.results])


@dataclass(frozen=True)
class Trace:
    text: str
    risk: RiskReport
    bundle: EvidenceBundle
    dist: DecisionDistribution
    raw_class: int
    chosen_class: int
    consistency: ConsistencyResult
    true_consistency: ConsistencyResult
    decision: GateDecision
    output: str | None

    def as_record(self, class_names: list[str]) -> dict:
        return {
            "query": self.text,
            "risk": self.risk.as_record(),
            "evidence": self.bundle.as_record(),
            "decision_head": {
                "top_class": class_names[self.raw_class],
                "raw_confidence": float(self.dist.probs[self.raw_class]),
                "refusal_prob": self.dist.refusal_prob,
            },
            "chosen_class": class_names[self.chosen_class],
            "consistency": {
                "c_pairs": self.consistency.c_pairs,
                "c_edge_normalized": self.consistency.c_edge_normalized,
                "passed": self.consistency.passed,
                "n_edges": self.consistency.n_edges,
            },
            "gate": self.decision.as_record() | {
                "class": None if self.decision.class_index is None else class_names[self.decision.class_index]
            },
            "output": self.output,
        }


class Pipeline:
    def __init__(self, world: World, theta: ModelParams, cfg: GlobalConfig):
        if theta.n_classes != len(world.templates):
            raise ValueError(f"checkpoint has {theta.n_classes} classes, world has {len(world.templates)}")
        if theta.dim != cfg.d:
            raise ValueError(f"checkpoint dim {theta.dim} differs from configured d={cfg.d}")
        self.world = world
        self.theta = theta
        self.cfg = cfg
        self._cons_cache: dict[frozenset, ClassConsistency] = {}

    # -- shared by training and inference --

    def view(self, text: str, ablation: AblationSpec = FULL) -> str:
        """Text as seen by the decision head and the entity scan.

        Synonym normalization is part of the risk-perception stage, so an
        ablated pipeline sees the raw query.
        """
        if self.cfg.risk_encoding and not ablation.risk_perception:
            return normalize_synonyms(text, self.world.lex)
        return text

    def encode(self, text: str, ablation: AblationSpec = FULL) -> np.ndarray:
        return embed(self.view(text, ablation), self.cfg.d)

    def query_entities(self, text: str, ablation: AblationSpec = FULL) -> frozenset[str]:
        return frozenset(scan_entities(self.view(text, ablation), self.world.lex))

    def class_consistency(self, entities: frozenset[str]) -> ClassConsistency:
        hit = self._cons_cache.get(entities)
        if hit is None:
            lex, g = self.world.lex, self.world.graph
            results = []
            for t in self.world.templates:
                out = extract_entities(t.render(set(entities), lex), lex, t)
                results.append(consistency_score(out, g, self.cfg.tau_cons, self.cfg.consistency_gate))
            hit = self._cons_cache[entities] = ClassConsistency(tuple(results))
        return hit

    # -- inference --

    def run(self, text: str, ablation: AblationSpec = FULL) -> Trace:
        cfg, lex = self.cfg, self.world.lex
        risk = NEUTRAL_RISK if ablation.risk_perception else assess(text, lex, cfg.risk_thresholds, cfg.d)

        if ablation.evidence_retrieval:
            bundle = NEUTRAL_BUNDLE
        else:
            x_raw = embed(text, cfg.d)
            q_tokens = tokenize(text)
            cands = retrieve_topk(self.world.store, x_raw, q_tokens, cfg.k, cfg.lam)
            bundle = credibility_rank(cands, x_raw, q_tokens, cfg.mu, cfg.m, cfg.lam)

        dist = forward(self.encode(text, ablation), self.theta)
        raw = dist.argmax
        cc = self.class_consistency(self.query_entities(text, ablation))
        chosen = raw
        if ablation.consistency_verification:
            cons = NEUTRAL_CONSISTENCY
        else:
            if not cc.results[raw].passed:
                ok = [c for c, r in enumerate(cc.results) if r.passed and r.n_edges > 0]
                if ok:
                    chosen = max(ok, key=lambda c: (dist.probs[c], -c))
            cons = cc.results[chosen]

        decision = gate(
            dist, risk, bundle, cons, cfg.gate_thresholds, choice=chosen,
            reweight=not ablation.confidence_reweighting, eta=cfg.eta, reweight_literal=cfg.reweight_literal,
        )
        output = None
        if decision.answered:
            tpl = self.world.templates[chosen]
            output = tpl.render(set(self.query_entities(text, ablation)), lex)
        return Trace(text, risk, bundle, dist, raw, chosen, cons, cc.results[chosen], decision, output)
