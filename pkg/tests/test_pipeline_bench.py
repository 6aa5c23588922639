import pytest

from arsm.bench import SWEEP_GRIDS, ablate, ablation_record, ablation_table, baseline_config, sweep, sweep_tsv
from arsm.evaluation import evaluate
from arsm.evidence import NEUTRAL_BUNDLE
from arsm.gate import INJECTION_FLAG, REFUSAL_HEAD, Verdict
from arsm.graph import NEUTRAL_CONSISTENCY
from arsm.model import init_params
from arsm.pipeline import ALL_DISABLED, FULL, SINGLE_ABLATIONS, AblationSpec, Pipeline
from arsm.risk import NEUTRAL_RISK
from arsm.trainer import closed_loop


@pytest.fixture(scope="module")
def trained(small_corpus):
    cfg, world, samples = small_corpus
    cfg = cfg.replace(epochs=30)
    train = [s for s in samples if s.split == "train"]
    val = [s for s in samples if s.split == "val"]
    res = closed_loop(world, train, val, cfg, rounds=1)
    return Pipeline(world, res.theta, res.cfg), samples


def test_ablation_names():
    assert FULL.name == "full"
    assert [a.name for a in SINGLE_ABLATIONS] == [
        "no_risk_perception", "no_evidence_retrieval", "no_consistency_verification", "no_confidence_reweighting"
    ]
    assert ALL_DISABLED.name.count("+") == 3


def test_pipeline_rejects_mismatch(small_corpus):
    cfg, world, _ = small_corpus
    with pytest.raises(ValueError, match="classes"):
        Pipeline(world, init_params(3, cfg.d), cfg)
    with pytest.raises(ValueError, match="dim"):
        Pipeline(world, init_params(len(world.templates), 32), cfg)


def test_injection_refused(trained, small_corpus):
    pipe, _ = trained
    lex = pipe.world.lex
    tr = pipe.run("Which condition explains fever and cough? " + lex.injection_templates[0])
    assert tr.decision.verdict is Verdict.REFUSE and INJECTION_FLAG in tr.decision.reasons
    assert tr.output is None


def test_answer_renders_output(trained):
    pipe, samples = trained
    answered = [pipe.run(s.text) for s in samples if s.kind == "clean"]
    answered = [t for t in answered if t.decision.answered]
    assert answered
    for t in answered:
        assert t.output and t.true_consistency.passed


def test_neutral_substitutions(trained):
    pipe, samples = trained
    text = samples[0].text
    tr = pipe.run(text, ALL_DISABLED)
    assert tr.risk == NEUTRAL_RISK and tr.bundle == NEUTRAL_BUNDLE and tr.consistency == NEUTRAL_CONSISTENCY
    assert tr.chosen_class == tr.raw_class
    assert pipe.view(text, AblationSpec(risk_perception=True)) == text


def test_all_disabled_is_raw_thresholding(trained):
    pipe, samples = trained
    g = pipe.cfg.gate_thresholds
    for s in samples:
        tr = pipe.run(s.text, ALL_DISABLED)
        conf = float(tr.dist.probs[tr.raw_class])
        assert tr.decision.confidence == conf
        want = Verdict.ANSWER if conf >= g.tau_conf_star else Verdict.WARN if conf >= g.tau_conf else Verdict.REFUSE
        if tr.dist.refusal_prob >= g.refusal:
            assert tr.decision.verdict is Verdict.REFUSE and REFUSAL_HEAD in tr.decision.reasons
        else:
            assert tr.decision.verdict is want


def test_trace_record(trained):
    pipe, samples = trained
    rec = pipe.run(samples[0].text).as_record(pipe.world.class_names)
    assert set(rec) == {"query", "risk", "evidence", "decision_head", "chosen_class", "consistency", "gate", "output"}


def test_ablate_shape(trained):
    pipe, samples = trained
    rows = ablate(pipe, samples)
    assert [r.name for r in rows] == ["full"] + [a.name for a in SINGLE_ABLATIONS]
    assert rows[0].d_accuracy == rows[0].d_asr == 0.0
    for r in rows[1:]:
        assert r.d_asr == pytest.approx(r.report.attack_success_rate - rows[0].report.attack_success_rate)
    assert len(ablation_record(rows)) == 5
    assert ablation_table(rows).count("\n") == 6


def test_evaluate_is_deterministic(trained):
    pipe, samples = trained
    assert evaluate(pipe, samples).as_record() == evaluate(pipe, samples).as_record()


def test_single_value_sweep_equals_evaluate(trained):
    pipe, samples = trained
    test = [s for s in samples if s.split == "test"]
    rows = sweep("tau_risk", [0.5], pipe.world, pipe.theta, pipe.cfg, test)
    rep = evaluate(Pipeline(pipe.world, pipe.theta, pipe.cfg.replace(tau_risk=0.5)), test)
    assert rows == [(0.5, rep.accuracy, rep.attack_success_rate)]


def test_sweep_rows_and_tsv(trained):
    pipe, samples = trained
    rows = sweep("m", SWEEP_GRIDS["m"], pipe.world, pipe.theta, pipe.cfg, samples[:20])
    assert [r[0] for r in rows] == list(SWEEP_GRIDS["m"])
    assert sweep_tsv("m", rows).count("\n") == len(rows) + 1


def test_sweep_validates(trained):
    pipe, samples = trained
    with pytest.raises(ValueError, match="axis"):
        sweep("lr", [1.0], pipe.world, pipe.theta, pipe.cfg, samples)
    with pytest.raises(ValueError, match="train"):
        sweep("adv_ratio", [0.1], pipe.world, pipe.theta, pipe.cfg, samples)


def test_baseline_config(small_corpus):
    cfg = baseline_config(small_corpus[0])
    assert (cfg.gamma, cfg.delta, cfg.adv_ratio) == (0.0, 0.0, 0.0)
