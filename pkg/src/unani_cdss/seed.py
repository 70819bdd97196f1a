"""Loaders for the packaged corpus, rules, and prompt templates."""

from __future__ import annotations

from importlib.resources import files

from .ingest import TaggedDocument, parse_tagged_text, records_to_kb
from .model import KnowledgeBase, kb_add_synonyms
from .rules import RuleAst, canonicalize_ruleset, parse_ruleset

# Free-text phrases beyond the finding labels themselves.
SEED_SYNONYMS: dict[str, list[str]] = {"headache_generic": ["headache"]}

_DATA = files("unani_cdss").joinpath("data")


def seed_documents() -> list[TaggedDocument]:
    corpus = _DATA.joinpath("corpus")
    return [
        TaggedDocument(source_name=entry.name, text=entry.read_text(encoding="utf-8"))
        for entry in sorted(corpus.iterdir(), key=lambda e: e.name)
        if entry.name.endswith(".umt")
    ]


def build_seed_kb() -> KnowledgeBase:
    records = [rec for doc in seed_documents() for rec in parse_tagged_text(doc)]
    return kb_add_synonyms(records_to_kb(records), SEED_SYNONYMS)


def load_seed_rules() -> list[RuleAst]:
    rules_dir = _DATA.joinpath("rules")
    rules: list[RuleAst] = []
    for entry in sorted(rules_dir.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".umr"):
            rules.extend(parse_ruleset(entry.read_text(encoding="utf-8"), entry.name))
    return canonicalize_ruleset(rules)


def load_seed_templates() -> list[str]:
    text = _DATA.joinpath("templates.txt").read_text(encoding="utf-8")
    return parse_templates(text)


def parse_templates(text: str) -> list[str]:
    lines = (line.strip() for line in text.splitlines())
    return [line for line in lines if line and not line.startswith("#")]
