import pytest

from arsm.graph import (
    AnswerTemplate,
    GraphError,
    OutputEntities,
    consistency_score,
    dump_graph,
    dump_templates,
    extract_entities,
    load_graph,
    load_templates,
    parse_graph,
    scan_entities,
)

import oracles

TREAT = AnswerTemplate("prescribe_cefarin", "Prescribe {head} for {tail}.", "treats", "drug.cefarin", "type:disease")


def test_load_fixture(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("entities\ta\tb\tc\td\na\tb\tx\nb\tc\ty\nc\td\tz\n")
    g = load_graph(p)
    assert len(g) == 3
    assert g.label("b", "a") == "x"
    assert g.neighbors("b") == {"a", "c"}


@pytest.mark.parametrize(
    "text, match",
    [
        ("entities\ta\na\ta\tx\n", "self-loop"),
        ("entities\ta\tb\na\tc\tx\n", "unknown endpoint"),
        ("entities\ta\tb\na\tb\n", "needs"),
        ("entities\ta\tb\na\tb\tx\nb\ta\ty\n", "asymmetric"),
        ("entities\ta\tb\n[exclusive]\nx\n", "2 labels"),
    ],
)
def test_rejects(text, match):
    with pytest.raises(GraphError, match=match):
        parse_graph(text)


def test_empty_graph_is_vacuous():
    g = parse_graph("entities\ta\tb\n")
    res = consistency_score(OutputEntities(frozenset({"a", "b"}), frozenset()), g)
    assert res.c_edge_normalized == 1.0 and res.passed and res.n_edges == 0


def test_dump_roundtrip(tiny_graph):
    again = parse_graph(dump_graph(tiny_graph))
    assert again.edges == tiny_graph.edges
    assert again.exclusive == tiny_graph.exclusive


def test_templates_roundtrip(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text(dump_templates([TREAT]))
    assert load_templates(p) == [TREAT]


def test_extract_treatment(lex):
    out = extract_entities("prescribe cefarin for pneumonia", lex, TREAT)
    assert out.entity_ids == {"drug.cefarin", "disease.pneumonia"}
    assert out.asserted_relations == {("drug.cefarin", "disease.pneumonia", "treats")}


def test_extract_nothing(lex):
    out = extract_entities("nothing relevant here", lex, TREAT)
    assert not out.entity_ids and not out.asserted_relations


def test_extract_dedup(lex):
    assert extract_entities("fever, fever and more fever", lex).entity_ids == {"symptom.fever"}


def test_alias_resolves(lex):
    assert scan_entities("take ceforin", lex) == {"drug.cefarin"}


def test_render(lex):
    assert TREAT.render({"disease.pneumonia", "symptom.fever"}, lex) == "Prescribe cefarin for pneumonia."
    assert TREAT.render(set(), lex) == "Prescribe cefarin for unspecified."


def test_two_entity_example():
    g = parse_graph("entities\ta\tb\na\tb\ttreats\n")
    out = OutputEntities(frozenset({"a", "b"}), frozenset({("a", "b", "treats")}))
    res = consistency_score(out, g)
    assert res.c_pairs == pytest.approx(0.5, rel=1e-12)
    assert res.c_edge_normalized == pytest.approx(1.0, rel=1e-12)
    assert res.passed


def test_empty_output():
    res = consistency_score(OutputEntities(frozenset(), frozenset()), parse_graph(""))
    assert (res.c_pairs, res.c_edge_normalized, res.passed) == (1.0, 1.0, True)


def test_contradiction_fails(tiny_graph):
    out = OutputEntities(frozenset({"drug.a", "disease.b"}), frozenset({("drug.a", "disease.b", "contraindicated")}))
    res = consistency_score(out, tiny_graph)
    assert res.c_edge_normalized == 0.0 and not res.passed


def test_partial_contradiction_matches_oracle(tiny_graph):
    ents = frozenset({"drug.a", "disease.b", "symptom.c"})
    rels = frozenset({("drug.a", "disease.b", "contraindicated"), ("disease.b", "symptom.c", "indicates")})
    res = consistency_score(OutputEntities(ents, rels), tiny_graph)
    want = oracles.consistency(ents, rels, tiny_graph.edges, tiny_graph.exclusive)
    assert (res.c_pairs, res.c_edge_normalized) == pytest.approx(want, rel=1e-12)
    assert res.c_edge_normalized == pytest.approx(0.5)


def test_pairs_gate_mode(tiny_graph):
    out = OutputEntities(frozenset({"drug.a", "disease.b"}), frozenset())
    assert consistency_score(out, tiny_graph, gate_on="edge").passed
    assert not consistency_score(out, tiny_graph, gate_on="pairs").passed
