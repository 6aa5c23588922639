"""Lexicon data: synonyms, detector patterns, entity vocabulary and attack pools.

File grammar (UTF-8, one record per line, fields separated by a TAB)::

    # comment lines start with '#'; blank lines are ignored
    [synonyms]            variant<TAB>canonical
    [injection_patterns]  python regular expression, matched against the
                          lowercased, punctuation-free sentence text
    [role_patterns]       same, counts role-tampering hits
    [imperative_verbs]    one verb per line (sentence-initial imperative cue)
    [entities]            surface form<TAB>entity_id   (surface may be multi-word)
    [confusables]         drug_a<TAB>drug_b            (look-alike drug names)
    [injection_templates] one injected instruction block per line
    [false_evidence]      sentence<TAB>entity_a<TAB>entity_b<TAB>relation_label

Entity ids are typed as ``<type>.<name>``, e.g. ``drug.cefarin``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

SECTIONS = (
    "synonyms",
    "injection_patterns",
    "role_patterns",
    "imperative_verbs",
    "entities",
    "confusables",
    "injection_templates",
    "false_evidence",
)


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class FabricatedClaim:
    """A false evidence sentence and the relation it asserts."""

    text: str
    head: str
    tail: str
    label: str


@dataclass
class Lexicons:
    synonym_map: dict[str, str]
    injection_patterns: list[str]
    role_patterns: list[str]
    imperative_verbs: frozenset[str]
    entity_vocab: dict[str, str]
    confusables: dict[str, str] = field(default_factory=dict)
    injection_templates: list[str] = field(default_factory=list)
    false_evidence: list[FabricatedClaim] = field(default_factory=list)

    def __post_init__(self) -> None:
        for variant, canonical in self.synonym_map.items():
            if self.synonym_map.get(canonical, canonical) != canonical:
                raise LexiconError(f"synonym map not idempotent: {variant} -> {canonical} -> {self.synonym_map[canonical]}")
        if not self.injection_patterns or not self.role_patterns:
            raise LexiconError("injection and role pattern lists must be non-empty")
        for a, b in self.confusables.items():
            if self.confusables.get(b) != a:
                raise LexiconError(f"confusable pair {a}/{b} is not symmetric")
        self._injection_re = [re.compile(p) for p in self.injection_patterns]
        self._role_re = [re.compile(p) for p in self.role_patterns]
        self._surface_of: dict[str, str] = {}
        for surface, eid in self.entity_vocab.items():
            self._surface_of.setdefault(eid, surface)
        self._max_entity_len = max((len(s.split()) for s in self.entity_vocab), default=0)
        variants: dict[str, list[str]] = {}
        for variant, canonical in sorted(self.synonym_map.items()):
            if variant != canonical:
                variants.setdefault(canonical, []).append(variant)
        self._variants = variants

    @property
    def injection_regexes(self) -> list[re.Pattern]:
        return self._injection_re

    @property
    def role_regexes(self) -> list[re.Pattern]:
        return self._role_re

    @property
    def max_entity_len(self) -> int:
        return self._max_entity_len

    def surface(self, entity_id: str) -> str:
        return self._surface_of[entity_id]

    def variants_of(self, token: str) -> list[str]:
        return self._variants.get(token, [])

    def entities_of_type(self, kind: str) -> list[str]:
        return sorted({e for e in self.entity_vocab.values() if entity_type(e) == kind})


def entity_type(entity_id: str) -> str:
    return entity_id.split(".", 1)[0]


def parse_lexicons(text: str, source: str = "<string>") -> Lexicons:
    rows: dict[str, list[tuple[int, list[str]]]] = {s: [] for s in SECTIONS}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = re.fullmatch(r"\s*\[(\w+)\]\s*", line)
        if m:
            section = m.group(1)
            if section not in rows:
                raise LexiconError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise LexiconError(f"{source}:{lineno}: entry outside of any section")
        rows[section].append((lineno, [f.strip() for f in line.split("\t")]))

    def fields(name: str, n: int) -> list[list[str]]:
        out = []
        for lineno, parts in rows[name]:
            if len(parts) != n or not all(parts):
                raise LexiconError(f"{source}:{lineno}: [{name}] expects {n} tab-separated field(s)")
            out.append(parts)
        return out

    confusables: dict[str, str] = {}
    for a, b in fields("confusables", 2):
        confusables[a.lower()] = b.lower()
        confusables[b.lower()] = a.lower()
    try:
        for p, in fields("injection_patterns", 1) + fields("role_patterns", 1):
            re.compile(p)
    except re.error as exc:
        raise LexiconError(f"{source}: bad pattern: {exc}") from exc
    return Lexicons(
        synonym_map={v.lower(): c.lower() for v, c in fields("synonyms", 2)},
        injection_patterns=[p for p, in fields("injection_patterns", 1)],
        role_patterns=[p for p, in fields("role_patterns", 1)],
        imperative_verbs=frozenset(v.lower() for v, in fields("imperative_verbs", 1)),
        entity_vocab={" ".join(s.lower().split()): e for s, e in fields("entities", 2)},
        confusables=confusables,
        injection_templates=[t for t, in fields("injection_templates", 1)],
        false_evidence=[FabricatedClaim(*f) for f in fields("false_evidence", 4)],
    )


def load_lexicons(path: str | Path) -> Lexicons:
    path = Path(path)
    return parse_lexicons(path.read_text(encoding="utf-8"), str(path))


def default_lexicons() -> Lexicons:
    text = resources.files("arsm").joinpath("data/default.lex").read_text(encoding="utf-8")
    return parse_lexicons(text, "default.lex")


def dump_lexicons(lex: Lexicons) -> str:
    out = ["# arsm lexicon"]
    out.append("[synonyms]")
    out += [f"{v}\t{c}" for v, c in sorted(lex.synonym_map.items())]
    out.append("[injection_patterns]")
    out += lex.injection_patterns
    out.append("[role_patterns]")
    out += lex.role_patterns
    out.append("[imperative_verbs]")
    out += sorted(lex.imperative_verbs)
    out.append("[entities]")
    out += [f"{s}\t{e}" for s, e in sorted(lex.entity_vocab.items())]
    out.append("[confusables]")
    out += [f"{a}\t{b}" for a, b in sorted(lex.confusables.items()) if a < b]
    out.append("[injection_templates]")
    out += lex.injection_templates
    out.append("[false_evidence]")
    out += [f"{c.text}\t{c.head}\t{c.tail}\t{c.label}" for c in lex.false_evidence]
    return "\n".join(out) + "\n"
