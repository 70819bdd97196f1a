"""Domain model: diseases, findings, treatments, and the knowledge graph.

The KnowledgeBase is an immutable value; every mutation helper returns a new
instance. One canonical JSON document format (keys sorted, arrays sorted by
id, UTF-8) makes exports byte-reproducible, and a second "graph" projection
emits plain node/edge lists for graph tooling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum

from .ids import is_valid_id, require_valid_id


class FindingKind(str, Enum):
    SYMPTOM = "symptom"
    CAUSE = "cause"


class TreatmentCategory(str, Enum):
    """The three rule-encoded treatment families."""

    PRINCIPLE = "principle"
    REGIMENTAL = "regimental"
    PREVENTION = "prevention"


CATEGORY_ORDER = (
    TreatmentCategory.PRINCIPLE,
    TreatmentCategory.REGIMENTAL,
    TreatmentCategory.PREVENTION,
)


@dataclass(frozen=True)
class Finding:
    """An observable input: a symptom or a cause attached to diseases."""

    id: str
    kind: FindingKind
    label: str
    synonyms: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Disease:
    id: str
    name: str
    alt_name: str | None = None
    description: str = ""


@dataclass(frozen=True)
class TreatmentItem:
    id: str
    category: TreatmentCategory
    label: str


@dataclass(frozen=True)
class KnowledgeBase:
    """Typed graph of diseases, findings, treatments, and labeled edges.

    Treat instances as read-only; `upsert_disease` and friends return fresh
    values, so a KB can be shared across concurrent readers.
    """

    findings: dict[str, Finding] = field(default_factory=dict)
    diseases: dict[str, Disease] = field(default_factory=dict)
    treatments: dict[str, TreatmentItem] = field(default_factory=dict)
    finding_edges: frozenset[tuple[str, str]] = frozenset()
    treatment_edges: frozenset[tuple[str, str]] = frozenset()

    def findings_of(self, disease_id: str) -> set[str]:
        return {f for d, f in self.finding_edges if d == disease_id}

    def treatments_of(self, disease_id: str) -> set[str]:
        return {t for d, t in self.treatment_edges if d == disease_id}


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    subject: str
    message: str
    severity: str = "error"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    @property
    def empty(self) -> bool:
        return not self.issues

    def codes(self) -> list[str]:
        return [issue.code for issue in self.issues]

    def render(self) -> str:
        if not self.issues:
            return "ok"
        return "\n".join(
            f"{i.severity}[{i.code}] {i.subject}: {i.message}" for i in self.issues
        )


class KbError(Exception):
    """Base class for knowledge-base failures."""


class UnknownNode(KbError):
    pass


class KbImportError(KbError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


def kb_validate(kb: KnowledgeBase) -> ValidationReport:
    """Check every structural invariant; an empty report means well-formed."""
    issues: list[ValidationIssue] = []

    def bad_id(node_id: str, kind: str) -> None:
        issues.append(
            ValidationIssue("id_format", node_id, f"{kind} id must match [a-z][a-z0-9_]*")
        )

    for fid, finding in kb.findings.items():
        if not is_valid_id(fid):
            bad_id(fid, "finding")
        for syn in finding.synonyms:
            if syn != syn.lower():
                issues.append(
                    ValidationIssue("synonym_case", fid, f"synonym {syn!r} is not lowercase")
                )
            if syn in kb.findings and syn != fid:
                issues.append(
                    ValidationIssue(
                        "synonym_id_collision",
                        fid,
                        f"synonym {syn!r} collides with finding id {syn!r}",
                    )
                )
    for did, disease in kb.diseases.items():
        if not is_valid_id(did):
            bad_id(did, "disease")
        if not disease.name:
            issues.append(ValidationIssue("empty_name", did, "disease name must be non-empty"))
    for tid in kb.treatments:
        if not is_valid_id(tid):
            bad_id(tid, "treatment")

    for dis, fid in sorted(kb.finding_edges):
        if dis not in kb.diseases:
            issues.append(
                ValidationIssue("dangling_disease_edge", f"{dis}->{fid}", "unknown disease")
            )
        if fid not in kb.findings:
            issues.append(
                ValidationIssue("dangling_finding_edge", f"{dis}->{fid}", "unknown finding")
            )
    for dis, tid in sorted(kb.treatment_edges):
        if dis not in kb.diseases:
            issues.append(
                ValidationIssue("dangling_disease_edge", f"{dis}->{tid}", "unknown disease")
            )
        if tid not in kb.treatments:
            issues.append(
                ValidationIssue("dangling_treatment_edge", f"{dis}->{tid}", "unknown treatment")
            )

    linked = {d for d, _ in kb.finding_edges}
    for did in sorted(kb.diseases):
        if did not in linked:
            issues.append(
                ValidationIssue("disease_without_findings", did, "disease has no finding edge")
            )

    return ValidationReport(tuple(issues))


def kb_upsert_disease(
    kb: KnowledgeBase,
    disease: Disease,
    findings: list[Finding],
    treatments: list[TreatmentItem],
) -> KnowledgeBase:
    """Insert or replace one disease and its edge sets; returns a new KB.

    Existing finding/treatment nodes referenced again are kept as-is; only
    missing ones are created. Idempotent for identical input.
    """
    require_valid_id(disease.id, "disease id")
    for f in findings:
        require_valid_id(f.id, "finding id")
    for t in treatments:
        require_valid_id(t.id, "treatment id")

    new_findings = dict(kb.findings)
    for f in findings:
        new_findings.setdefault(f.id, f)
    new_treatments = dict(kb.treatments)
    for t in treatments:
        new_treatments.setdefault(t.id, t)
    new_diseases = dict(kb.diseases)
    new_diseases[disease.id] = disease

    finding_edges = {e for e in kb.finding_edges if e[0] != disease.id}
    finding_edges.update((disease.id, f.id) for f in findings)
    treatment_edges = {e for e in kb.treatment_edges if e[0] != disease.id}
    treatment_edges.update((disease.id, t.id) for t in treatments)

    return KnowledgeBase(
        findings=new_findings,
        diseases=new_diseases,
        treatments=new_treatments,
        finding_edges=frozenset(finding_edges),
        treatment_edges=frozenset(treatment_edges),
    )


def kb_add_synonyms(kb: KnowledgeBase, synonyms: dict[str, list[str]]) -> KnowledgeBase:
    """Attach lowercase synonym phrases to existing findings (new KB)."""
    new_findings = dict(kb.findings)
    for fid, phrases in synonyms.items():
        if fid not in new_findings:
            raise UnknownNode(f"unknown finding {fid!r}")
        current = new_findings[fid]
        merged = frozenset(current.synonyms | {p.lower() for p in phrases})
        new_findings[fid] = replace(current, synonyms=merged)
    return replace(kb, findings=new_findings)


def kb_find_diseases_by_finding(kb: KnowledgeBase, finding_id: str) -> list[str]:
    """Sorted disease ids carrying the given finding. Treatments never match."""
    if finding_id not in kb.findings:
        raise UnknownNode(f"unknown finding {finding_id!r}")
    return sorted(d for d, f in kb.finding_edges if f == finding_id)


# ---------------------------------------------------------------------------
# Canonical JSON document


def kb_to_document(kb: KnowledgeBase) -> dict:
    return {
        "findings": [
            {
                "id": f.id,
                "kind": f.kind.value,
                "label": f.label,
                "synonyms": sorted(f.synonyms),
            }
            for f in (kb.findings[k] for k in sorted(kb.findings))
        ],
        "diseases": [
            {
                "id": d.id,
                "name": d.name,
                "alt_name": d.alt_name,
                "description": d.description,
            }
            for d in (kb.diseases[k] for k in sorted(kb.diseases))
        ],
        "treatments": [
            {"id": t.id, "category": t.category.value, "label": t.label}
            for t in (kb.treatments[k] for k in sorted(kb.treatments))
        ],
        "finding_edges": [list(e) for e in sorted(kb.finding_edges)],
        "treatment_edges": [list(e) for e in sorted(kb.treatment_edges)],
    }


def kb_to_json(kb: KnowledgeBase) -> str:
    return json.dumps(kb_to_document(kb), ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def kb_from_document(doc: dict) -> KnowledgeBase:
    try:
        findings = {
            f["id"]: Finding(
                id=f["id"],
                kind=FindingKind(f["kind"]),
                label=f["label"],
                synonyms=frozenset(f.get("synonyms", [])),
            )
            for f in doc["findings"]
        }
        diseases = {
            d["id"]: Disease(
                id=d["id"],
                name=d["name"],
                alt_name=d.get("alt_name"),
                description=d.get("description", ""),
            )
            for d in doc["diseases"]
        }
        treatments = {
            t["id"]: TreatmentItem(
                id=t["id"], category=TreatmentCategory(t["category"]), label=t["label"]
            )
            for t in doc["treatments"]
        }
        finding_edges = frozenset((src, dst) for src, dst in doc["finding_edges"])
        treatment_edges = frozenset((src, dst) for src, dst in doc["treatment_edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise KbImportError(f"malformed knowledge-base document: {exc}") from exc
    return KnowledgeBase(
        findings=findings,
        diseases=diseases,
        treatments=treatments,
        finding_edges=finding_edges,
        treatment_edges=treatment_edges,
    )


def kb_from_json(text: str) -> KnowledgeBase:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise KbImportError(f"invalid JSON at byte {exc.pos}: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(doc, dict):
        raise KbImportError("knowledge-base document must be a JSON object")
    return kb_from_document(doc)


# ---------------------------------------------------------------------------
# Graph export

EDGE_TYPE_BY_KIND = {
    FindingKind.SYMPTOM: "HAS_SYMPTOM",
    FindingKind.CAUSE: "HAS_CAUSE",
}


def kb_export_graph(kb: KnowledgeBase) -> dict:
    """Project the KB into plain node/edge lists, deterministically ordered.

    Node count = |findings| + |diseases| + |treatments|; edge count =
    |finding_edges| + |treatment_edges|. Requires a valid KB because edge
    types are derived from the referenced finding's kind.
    """
    report = kb_validate(kb)
    if not report.ok:
        raise KbError(f"cannot export invalid KB:\n{report.render()}")

    nodes: list[dict] = []
    for did in sorted(kb.diseases):
        d = kb.diseases[did]
        nodes.append(
            {
                "id": did,
                "node_type": "disease",
                "properties": {"name": d.name, "alt_name": d.alt_name, "description": d.description},
            }
        )
    for fid in sorted(kb.findings):
        f = kb.findings[fid]
        nodes.append(
            {
                "id": fid,
                "node_type": "finding",
                "properties": {"kind": f.kind.value, "label": f.label, "synonyms": sorted(f.synonyms)},
            }
        )
    for tid in sorted(kb.treatments):
        t = kb.treatments[tid]
        nodes.append(
            {
                "id": tid,
                "node_type": "treatment",
                "properties": {"category": t.category.value, "label": t.label},
            }
        )
    nodes.sort(key=lambda n: (n["id"], n["node_type"]))

    edges: list[dict] = []
    for dis, fid in kb.finding_edges:
        edges.append({"src": dis, "dst": fid, "edge_type": EDGE_TYPE_BY_KIND[kb.findings[fid].kind]})
    for dis, tid in kb.treatment_edges:
        edges.append({"src": dis, "dst": tid, "edge_type": "HAS_TREATMENT"})
    edges.sort(key=lambda e: (e["src"], e["dst"], e["edge_type"]))

    return {"nodes": nodes, "edges": edges}


def graph_to_json(graph: dict) -> str:
    return json.dumps(graph, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
