"""Tag-annotated text ingestion.

Source excerpts are marked up with seven inline tags: DIS wraps one disease
block; ALT, SYM, CAU, TRP, REG, PRE are leaves inside it carrying the
alternate name, symptoms, causes, treatment principles, regimental therapies,
and preventions. Parsing yields flat DiseaseRecord values which can be merged
into a KnowledgeBase or formatted back out losslessly.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .ids import normalize_id
from .model import (
    CATEGORY_ORDER,
    Disease,
    Finding,
    FindingKind,
    KnowledgeBase,
    TreatmentCategory,
    TreatmentItem,
    kb_upsert_disease,
)

log = logging.getLogger(__name__)

BLOCK_TAG = "DIS"
LEAF_TAGS = ("ALT", "SYM", "CAU", "TRP", "REG", "PRE")
ALL_TAGS = (BLOCK_TAG,) + LEAF_TAGS

LIST_FIELD_BY_TAG = {
    "SYM": "symptoms",
    "CAU": "causes",
    "TRP": "principles",
    "REG": "regimental",
    "PRE": "preventions",
}

_TAG_RE = re.compile(r"<(/?)([A-Za-z]+)>")


class IngestError(Exception):
    pass


class TaggedTextError(IngestError):
    def __init__(self, message: str, line: int, col: int | None = None):
        super().__init__(message)
        self.line = line
        self.col = col


class UnknownTag(TaggedTextError):
    def __init__(self, name: str, line: int, col: int):
        super().__init__(f"unknown tag <{name}> at line {line}, col {col}", line, col)
        self.name = name


class UnbalancedTag(TaggedTextError):
    def __init__(self, name: str, line: int, message: str | None = None):
        super().__init__(message or f"unbalanced tag <{name}> at line {line}", line)
        self.name = name


class TagOutsideDiseaseBlock(TaggedTextError):
    def __init__(self, name: str, line: int):
        super().__init__(f"<{name}> outside a <{BLOCK_TAG}> block at line {line}", line)
        self.name = name


class EmptyDiseaseName(TaggedTextError):
    pass


class FindingKindCollision(IngestError):
    """Same normalized id tagged both as symptom and as cause."""

    def __init__(self, ids: list[str]):
        super().__init__(f"findings tagged as both symptom and cause: {', '.join(ids)}")
        self.ids = ids


@dataclass(frozen=True)
class TaggedDocument:
    source_name: str
    text: str


@dataclass
class DiseaseRecord:
    """One disease block flattened to lists of normalized ids.

    The two label maps carry the original tagged phrase per id (findings and
    treatments are separate namespaces) so downstream consumers can show
    source wording.
    """

    disease: str
    alt_name: str | None = None
    symptoms: list[str] = field(default_factory=list)
    causes: list[str] = field(default_factory=list)
    principles: list[str] = field(default_factory=list)
    regimental: list[str] = field(default_factory=list)
    preventions: list[str] = field(default_factory=list)
    finding_labels: dict[str, str] = field(default_factory=dict)
    treatment_labels: dict[str, str] = field(default_factory=dict)


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    last_nl = text.rfind("\n", 0, pos)
    return line, pos - last_nl  # col is 1-based


def parse_tagged_text(doc: TaggedDocument) -> list[DiseaseRecord]:
    """Parse one document into records, one per DIS block, in order.

    Text outside any DIS block is ignored (source files carry surrounding
    prose). Duplicate items within a list and empty leaf values are dropped
    with a warning; tag structure violations raise.
    """
    text = doc.text
    records: list[DiseaseRecord] = []
    record: DiseaseRecord | None = None
    name_parts: list[str] = []
    name_open = False  # collecting the disease name (before the first leaf)
    leaf: str | None = None
    leaf_parts: list[str] = []
    leaf_line = 0
    block_line = 0
    pos = 0

    def close_leaf() -> None:
        nonlocal leaf
        assert record is not None and leaf is not None
        value = " ".join("".join(leaf_parts).split())
        if not value:
            log.warning("%s:%d: empty <%s> dropped", doc.source_name, leaf_line, leaf)
        elif leaf == "ALT":
            if record.alt_name is None:
                record.alt_name = value
            else:
                log.warning("%s:%d: extra <ALT> %r ignored", doc.source_name, leaf_line, value)
        else:
            item_id = normalize_id(value)
            bucket = getattr(record, LIST_FIELD_BY_TAG[leaf])
            if item_id in bucket:
                log.warning(
                    "%s:%d: duplicate <%s> %r dropped", doc.source_name, leaf_line, leaf, value
                )
            else:
                bucket.append(item_id)
                labels = (
                    record.finding_labels if leaf in ("SYM", "CAU") else record.treatment_labels
                )
                labels.setdefault(item_id, value)
        leaf = None
        leaf_parts.clear()

    for match in _TAG_RE.finditer(text):
        chunk = text[pos : match.start()]
        if leaf is not None:
            leaf_parts.append(chunk)
        elif name_open:  # prose after the first leaf tag is context, not name
            name_parts.append(chunk)
        pos = match.end()

        closing, name = match.group(1) == "/", match.group(2).upper()
        line, col = _line_col(text, match.start())
        if name not in ALL_TAGS:
            raise UnknownTag(match.group(2), line, col)

        if not closing:
            if name == BLOCK_TAG:
                if record is not None:
                    raise UnbalancedTag(name, line, f"nested <{BLOCK_TAG}> at line {line}")
                record = DiseaseRecord(disease="")
                name_open = True
                block_line = line
            else:
                if record is None:
                    raise TagOutsideDiseaseBlock(name, line)
                if leaf is not None:
                    raise UnbalancedTag(name, line, f"<{name}> inside <{leaf}> at line {line}")
                if name_open:
                    record.disease = " ".join("".join(name_parts).split())
                    name_parts.clear()
                    name_open = False
                leaf = name
                leaf_line = line
        else:
            if leaf is not None:
                if name != leaf:
                    raise UnbalancedTag(name, line, f"</{name}> closes <{leaf}> at line {line}")
                close_leaf()
            elif record is not None and name == BLOCK_TAG:
                if name_open:
                    record.disease = " ".join("".join(name_parts).split())
                    name_parts.clear()
                    name_open = False
                if not record.disease:
                    raise EmptyDiseaseName(
                        f"<{BLOCK_TAG}> block at line {block_line} has no disease name",
                        block_line,
                    )
                records.append(record)
                record = None
            else:
                raise UnbalancedTag(name, line, f"stray </{name}> at line {line}")

    if leaf is not None:
        raise UnbalancedTag(leaf, leaf_line, f"<{leaf}> never closed (line {leaf_line})")
    if record is not None:
        raise UnbalancedTag(BLOCK_TAG, block_line, f"<{BLOCK_TAG}> never closed (line {block_line})")
    return records


def format_records(records: list[DiseaseRecord]) -> str:
    """Render records back to canonical tagged text (inverse of parse)."""
    blocks: list[str] = []
    for rec in records:
        parts = [f"<{BLOCK_TAG}>{rec.disease}"]
        if rec.alt_name is not None:
            parts.append(f"<ALT>{rec.alt_name}</ALT>")
        for tag, fname in LIST_FIELD_BY_TAG.items():
            labels = rec.finding_labels if tag in ("SYM", "CAU") else rec.treatment_labels
            for item_id in getattr(rec, fname):
                parts.append(f"<{tag}>{labels.get(item_id, item_id)}</{tag}>")
        parts.append(f"</{BLOCK_TAG}>")
        blocks.append("".join(parts))
    return "\n".join(blocks) + ("\n" if blocks else "")


CATEGORY_BY_FIELD = {
    "principles": TreatmentCategory.PRINCIPLE,
    "regimental": TreatmentCategory.REGIMENTAL,
    "preventions": TreatmentCategory.PREVENTION,
}

KIND_BY_FIELD = {"symptoms": FindingKind.SYMPTOM, "causes": FindingKind.CAUSE}


def records_to_kb(records: list[DiseaseRecord]) -> KnowledgeBase:
    """Merge parsed records into one KnowledgeBase.

    Shared ids across diseases collapse to one node. Merges are order
    insensitive: labels take the lexicographically smallest variant and a
    treatment tagged in several families keeps the highest-priority category
    (principle, then regimental, then prevention). An id tagged both as
    symptom and cause is a data error and raises.
    """
    sym_ids = {i for r in records for i in r.symptoms}
    cau_ids = {i for r in records for i in r.causes}
    collisions = sorted(sym_ids & cau_ids)
    if collisions:
        raise FindingKindCollision(collisions)

    finding_labels: dict[str, str] = {}
    treatment_labels: dict[str, str] = {}
    for rec in records:
        for item_id, label in rec.finding_labels.items():
            finding_labels[item_id] = min(finding_labels.get(item_id, label), label)
        for item_id, label in rec.treatment_labels.items():
            treatment_labels[item_id] = min(treatment_labels.get(item_id, label), label)

    categories: dict[str, TreatmentCategory] = {}
    for rec in records:
        for fname, category in CATEGORY_BY_FIELD.items():
            for item_id in getattr(rec, fname):
                prior = categories.get(item_id, category)
                categories[item_id] = min(prior, category, key=CATEGORY_ORDER.index)

    merged: dict[str, list[DiseaseRecord]] = {}
    for rec in records:
        merged.setdefault(normalize_id(rec.disease), []).append(rec)

    kb = KnowledgeBase()
    for disease_id in merged:
        group = merged[disease_id]
        disease = Disease(
            id=disease_id,
            name=min(r.disease for r in group),
            alt_name=min((r.alt_name for r in group if r.alt_name is not None), default=None),
        )
        finding_ids: dict[str, FindingKind] = {}
        treatment_ids: dict[str, TreatmentCategory] = {}
        for rec in group:
            for fname, kind in KIND_BY_FIELD.items():
                for item_id in getattr(rec, fname):
                    finding_ids.setdefault(item_id, kind)
            for fname in CATEGORY_BY_FIELD:
                for item_id in getattr(rec, fname):
                    treatment_ids.setdefault(item_id, categories[item_id])
        kb = kb_upsert_disease(
            kb,
            disease,
            findings=[
                Finding(id=i, kind=k, label=finding_labels.get(i, i))
                for i, k in finding_ids.items()
            ],
            treatments=[
                TreatmentItem(id=i, category=c, label=treatment_labels.get(i, i))
                for i, c in treatment_ids.items()
            ],
        )
    return kb
