"""Medical knowledge graph, answer templates and the knowledge-consistency score.

Graph file (UTF-8, TAB-separated)::

    entities<TAB>e1<TAB>e2<TAB>...          header, may be repeated
    e1<TAB>e2<TAB>label                      one undirected edge per line
    [exclusive]
    label_x<TAB>label_y                      mutually exclusive relation labels

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .featurizer import tokenize
from .lexicon import Lexicons, entity_type


class GraphError(ValueError):
    pass


@dataclass
class KnowledgeGraph:
    entities: frozenset[str]
    edges: dict[frozenset, str]
    exclusive: frozenset[frozenset] = frozenset()
    _neighbors: dict[str, set[str]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._neighbors = {e: set() for e in self.entities}
        for pair in self.edges:
            if len(pair) != 2:
                raise GraphError(f"self-loop on {sorted(pair)}")
            for e in pair:
                if e not in self.entities:
                    raise GraphError(f"edge endpoint {e!r} is not a declared entity")
            a, b = sorted(pair)
            self._neighbors[a].add(b)
            self._neighbors[b].add(a)

    def label(self, a: str, b: str) -> str | None:
        return self.edges.get(frozenset((a, b)))

    def neighbors(self, e: str) -> set[str]:
        return self._neighbors.get(e, set())

    def contradicts(self, asserted: str, actual: str) -> bool:
        return frozenset((asserted, actual)) in self.exclusive

    def __len__(self) -> int:
        return len(self.edges)


def load_graph(path: str | Path) -> KnowledgeGraph:
    path = Path(path)
    return parse_graph(path.read_text(encoding="utf-8"), str(path))


def parse_graph(text: str, source: str = "<string>") -> KnowledgeGraph:
    entities: set[str] = set()
    edges: dict[frozenset, str] = {}
    exclusive: set[frozenset] = set()
    in_exclusive = False
    pending: list[tuple[int, str, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[exclusive]":
            in_exclusive = True
            continue
        parts = [p.strip() for p in raw.split("\t")]
        if parts[0] == "entities":
            entities.update(p for p in parts[1:] if p)
            continue
        if in_exclusive:
            if len(parts) != 2:
                raise GraphError(f"{source}:{lineno}: exclusivity line needs 2 labels")
            exclusive.add(frozenset(parts))
            continue
        if len(parts) != 3 or not all(parts):
            raise GraphError(f"{source}:{lineno}: edge line needs entity_a, entity_b, label")
        pending.append((lineno, *parts))
    for lineno, a, b, label in pending:
        if a == b:
            raise GraphError(f"{source}:{lineno}: self-loop on {a!r}")
        for e in (a, b):
            if e not in entities:
                raise GraphError(f"{source}:{lineno}: unknown endpoint {e!r}")
        key = frozenset((a, b))
        if key in edges and edges[key] != label:
            raise GraphError(f"{source}:{lineno}: asymmetric edge {a}-{b}: {edges[key]!r} vs {label!r}")
        edges[key] = label
    return KnowledgeGraph(frozenset(entities), edges, frozenset(exclusive))


def dump_graph(g: KnowledgeGraph) -> str:
    lines = ["entities\t" + "\t".join(sorted(g.entities))]
    for pair, label in sorted(g.edges.items(), key=lambda kv: sorted(kv[0])):
        a, b = sorted(pair)
        lines.append(f"{a}\t{b}\t{label}")
    if g.exclusive:
        lines.append("[exclusive]")
        lines += ["\t".join(sorted(p)) for p in sorted(g.exclusive, key=sorted)]
    return "\n".join(lines) + "\n"


# -- answer templates ------------------------------------------------------------


@dataclass(frozen=True)
class AnswerTemplate:
    """Typed output template of one decision class.

    ``head`` and ``tail`` are either an entity id (the class's answer entity)
    or ``type:<kind>`` (every extracted entity of that kind). The template
    asserts ``(h, t, label)`` for each head/tail combination.
    """

    name: str
    text: str
    label: str
    head: str
    tail: str

    def _select(self, slot: str, entities: set[str]) -> list[str]:
        if slot.startswith("type:"):
            kind = slot[5:]
            return sorted(e for e in entities if entity_type(e) == kind)
        return [slot]

    def relations(self, entities: set[str]) -> set[tuple[str, str, str]]:
        return {
            (h, t, self.label)
            for h in self._select(self.head, entities)
            for t in self._select(self.tail, entities)
            if h != t
        }

    def render(self, query_entities: set[str], lex: Lexicons) -> str:
        """Output text mentioning the answer entity and the query entities it speaks about."""
        heads = self._select(self.head, query_entities)
        tails = self._select(self.tail, query_entities)
        return self.text.format(
            head=", ".join(lex.surface(e) for e in heads) or "unspecified",
            tail=", ".join(lex.surface(e) for e in tails) or "unspecified",
        )


def load_templates(path: str | Path) -> list[AnswerTemplate]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 5:
            raise GraphError(f"{path}:{lineno}: template line needs name, text, label, head, tail")
        out.append(AnswerTemplate(*parts))
    return out


def dump_templates(templates: list[AnswerTemplate]) -> str:
    rows = ["# name\ttext\tlabel\thead\ttail"]
    rows += [f"{t.name}\t{t.text}\t{t.label}\t{t.head}\t{t.tail}" for t in templates]
    return "\n".join(rows) + "\n"


# -- extraction and scoring --------------------------------------------------------


@dataclass(frozen=True)
class OutputEntities:
    entity_ids: frozenset[str]
    asserted_relations: frozenset[tuple[str, str, str]]


@dataclass(frozen=True)
class ConsistencyResult:
    c_pairs: float
    c_edge_normalized: float
    passed: bool
    n_edges: int = 0


def scan_entities(text: str, lex: Lexicons) -> set[str]:
    """Longest-match scan of the entity vocabulary over the token stream."""
    toks = tokenize(text)
    found: set[str] = set()
    i = 0
    longest = lex.max_entity_len
    while i < len(toks):
        for n in range(min(longest, len(toks) - i), 0, -1):
            eid = lex.entity_vocab.get(" ".join(toks[i : i + n]))
            if eid is not None:
                found.add(eid)
                i += n
                break
        else:
            i += 1
    return found


def extract_entities(output_text: str, lex: Lexicons, template: AnswerTemplate | None = None) -> OutputEntities:
    ents = scan_entities(output_text, lex)
    rels = template.relations(ents) if template is not None else set()
    rels = {r for r in rels if r[0] in ents and r[1] in ents}
    return OutputEntities(frozenset(ents), frozenset(rels))


def consistency_numerator(out: OutputEntities, g: KnowledgeGraph) -> tuple[int, int]:
    """(sum over ordered pairs of A_ij * Rel_ij, number of graph edges inside V_Y)."""
    by_pair: dict[frozenset, list[str]] = {}
    for h, t, label in out.asserted_relations:
        by_pair.setdefault(frozenset((h, t)), []).append(label)
    numerator = 0
    n_edges = 0
    for a, b in itertools.combinations(sorted(out.entity_ids), 2):
        actual = g.label(a, b)
        if actual is None:
            continue
        n_edges += 1
        if not any(g.contradicts(lbl, actual) for lbl in by_pair.get(frozenset((a, b)), ())):
            numerator += 2
    return numerator, n_edges


def consistency_score(out: OutputEntities, g: KnowledgeGraph, tau_cons: float = 0.8, gate_on: str = "edge") -> ConsistencyResult:
    """Knowledge-consistency of an output against the graph.

    ``c_pairs`` normalizes by |V_Y|^2 over ordered pairs; ``c_edge_normalized``
    normalizes by the ordered pairs that carry a graph edge. ``gate_on`` picks
    which one is compared against ``tau_cons``.
    """
    n = len(out.entity_ids)
    if n <= 1:
        return ConsistencyResult(1.0, 1.0, True, 0)
    numerator, n_edges = consistency_numerator(out, g)
    c_pairs = numerator / (n * n)
    c_edge = numerator / (2 * n_edges) if n_edges else 1.0
    operative = c_pairs if gate_on == "pairs" else c_edge
    return ConsistencyResult(c_pairs, c_edge, operative >= tau_cons, n_edges)


NEUTRAL_CONSISTENCY = ConsistencyResult(1.0, 1.0, True, 0)
