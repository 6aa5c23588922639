"""Property-based checks of the invariants every stage must keep."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arsm.adversarial import fgsm_perturb, inject_prompt, perturb_semantic
from arsm.evaluation import Outcome, metrics
from arsm.evidence import EvidenceRecord, credibility_rank, modified_similarity
from arsm.featurizer import canonicalize, embed, literal_match, tokenize
from arsm.gate import reweight_confidence
from arsm.graph import KnowledgeGraph, OutputEntities, consistency_score, dump_graph, parse_graph
from arsm.lexicon import default_lexicons
from arsm.model import ModelParams, loss_rob, softmax
from arsm.risk import InjectionFeatures, estimate_epsilon, injection_features, injection_risk
from arsm.trainer import reward

import oracles

LEX = default_lexicons()
unit = st.floats(0.0, 1.0)
finite = st.floats(-5.0, 5.0, allow_nan=False)
words = st.sampled_from(sorted(LEX.synonym_map) + ["fever", "chest", "pain", "ignore", "you", "are", "now", "give", "the", "x"])
texts = st.lists(words, max_size=12).map(" ".join) | st.text(max_size=60)
token_lists = st.lists(st.sampled_from("abcdef"), max_size=6)


@given(texts)
def test_tokenize_idempotent(t):
    assert tokenize(" ".join(tokenize(t))) == tokenize(t)


@given(texts)
def test_canonicalize_idempotent(t):
    c = canonicalize(t, LEX)
    assert canonicalize(c, LEX) == c


@given(texts)
def test_embed_unit_or_zero(t):
    n = np.linalg.norm(embed(t, 64))
    assert math.isclose(n, 1.0, abs_tol=1e-9) or (n == 0.0 and not tokenize(t))


@given(token_lists, token_lists)
def test_literal_match_symmetric_bounded(a, b):
    j = literal_match(a, b)
    assert j == literal_match(b, a) and 0.0 <= j <= 1.0


@given(texts)
def test_epsilon_in_unit_interval(t):
    assert 0.0 <= estimate_epsilon(t, LEX) <= 1.0


@given(texts)
def test_injection_scores_bounded(t):
    f = injection_features(t, LEX)
    assert all(0.0 <= v <= 1.0 for v in (f.f_abn, f.d_role, f.r_ctrl))
    assert 0.0 <= injection_risk(f) <= 1.0 + 1e-12


@given(unit, unit, unit)
def test_injection_risk_bounded(a, b, c):
    assert -1e-12 <= injection_risk(InjectionFeatures(a, b, c)) <= 1.0 + 1e-12


@given(arrays(float, 8, elements=finite), arrays(float, 8, elements=finite), token_lists, token_lists, st.floats(0.0, 2.0))
def test_modified_similarity_bounded_and_matches_oracle(x, v, q, e, lam):
    rec = EvidenceRecord("e", "", 0.5, "", v, tuple(e))
    s = modified_similarity(x, q, rec, lam)
    assert -1e-12 <= s <= 1.0 + 1e-12
    assert math.isclose(s, oracles.modified_sim(x, q, v, e, lam), rel_tol=1e-9, abs_tol=1e-12)


@given(st.lists(st.tuples(arrays(float, 8, elements=finite), unit), min_size=1, max_size=6), arrays(float, 8, elements=finite))
def test_credibility_scores_bounded(cands, x):
    recs = [EvidenceRecord(f"e{i}", "", a, "", v, ()) for i, (v, a) in enumerate(cands)]
    bundle = credibility_rank(recs, x, [], m=3)
    assert all(-1e-12 <= s.score <= 1.0 + 1e-12 for s in bundle.selected)
    assert -1e-12 <= bundle.score_avg <= 1.0 + 1e-12


@given(unit, st.floats(0.0, 3.0), unit, unit, st.booleans())
def test_reweighted_confidence_bounded(conf, r, s, c, literal):
    assert 0.0 <= reweight_confidence(conf, r, s, c, literal=literal) <= 1.0


@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite))
def test_kl_nonnegative(a, b):
    assert loss_rob(softmax(a), softmax(b)) >= -1e-12


@st.composite
def graph_and_output(draw):
    n = draw(st.integers(0, 6))
    ents = [f"e{i}" for i in range(n)]
    labels = ["r", "s", "t"]
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                edges[frozenset((ents[i], ents[j]))] = draw(st.sampled_from(labels))
    exclusive = frozenset(frozenset(p) for p in [("r", "s")] if draw(st.booleans()))
    out = draw(st.sets(st.sampled_from(ents), max_size=n)) if ents else set()
    rels = set()
    for h in out:
        for t in out:
            if h != t and draw(st.integers(0, 3)) == 0:
                rels.add((h, t, draw(st.sampled_from(labels))))
    return KnowledgeGraph(frozenset(ents), edges, exclusive), OutputEntities(frozenset(out), frozenset(rels))


@given(graph_and_output())
def test_consistency_matches_enumeration(case):
    g, out = case
    res = consistency_score(out, g)
    c_pairs, c_edge = oracles.consistency(out.entity_ids, out.asserted_relations, g.edges, g.exclusive)
    assert math.isclose(res.c_pairs, c_pairs) and math.isclose(res.c_edge_normalized, c_edge)
    assert 0.0 <= res.c_pairs <= res.c_edge_normalized <= 1.0


@given(graph_and_output())
def test_graph_dump_roundtrip(case):
    g, _ = case
    again = parse_graph(dump_graph(g))
    assert again.edges == g.edges and again.exclusive == g.exclusive


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 1.0))
def test_fgsm_step_is_eps(seed, eps):
    rng = np.random.default_rng(seed)
    theta = ModelParams(rng.normal(size=(3, 6)), rng.normal(size=3), np.zeros(6), 0.0)
    x = rng.normal(size=6)
    assert math.isclose(np.linalg.norm(fgsm_perturb(x, int(rng.integers(3)), theta, eps) - x), eps, abs_tol=1e-9)


@given(texts, st.integers(0, 1000), unit)
def test_semantic_keeps_token_count(t, seed, p):
    assert len(tokenize(perturb_semantic(t, LEX, np.random.default_rng(seed), p))) == len(tokenize(t))


@given(texts, st.integers(0, 1000))
def test_injection_keeps_original(t, seed):
    assume(t.strip())
    assert t in inject_prompt(t, np.random.default_rng(seed), LEX.injection_templates)


@given(unit, unit, unit, unit, st.booleans())
def test_reward_bounded(a, b, c, d, three):
    assert -1e-12 <= reward(a, b, c, d, three_term=three).reward <= 1.0 + 1e-12


outcomes = st.builds(
    Outcome,
    st.sampled_from(["clean", "semantic_perturbation", "prompt_injection", "drug_name_confusion", "false_evidence_splice"]),
    st.integers(0, 3),
    st.booleans(),
    st.booleans(),
    st.integers(0, 3),
    unit,
    st.booleans(),
)


@given(st.lists(outcomes, max_size=30), st.booleans())
def test_metric_rates_bounded(outs, strict):
    rep = metrics(outs, strict)
    for v in (rep.accuracy, rep.f1_macro, rep.attack_success_rate, rep.safe_rejection_rate,
              rep.hallucination_rate, rep.consistency_mean, rep.secure_output_rate, *rep.asr_by_kind.values()):
        assert 0.0 <= v <= 1.0
    assert len(rep.asr_by_kind) == 4
