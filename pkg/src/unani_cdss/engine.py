"""Forward chaining, differential scoring, and treatment recommendation.

A WorkingMemory holds ground atoms for one diagnostic episode. The chainer
computes the least fixpoint of a canonicalized ruleset; on top of it,
`diagnose` ranks diseases by pooled antecedent coverage and
`recommend_treatments` turns a confirmed diagnosis into a grouped plan.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .model import FindingKind, KnowledgeBase
from .rules import (
    Predicate,
    RuleAst,
    canonicalize_ruleset,
    diagnostic_index,
    format_rule,
)


@dataclass(frozen=True)
class GroundAtom:
    predicate: Predicate
    constant: str

    def sort_key(self) -> tuple[str, str]:
        return (self.predicate.value, self.constant)


@dataclass(frozen=True)
class WorkingMemory:
    atoms: frozenset[GroundAtom] = frozenset()
    trace: tuple[tuple[str, frozenset[GroundAtom]], ...] = ()


class InferenceError(Exception):
    pass


class EmptyFindings(InferenceError):
    def __init__(self) -> None:
        super().__init__("at least one finding is required")


class UnknownFinding(InferenceError):
    def __init__(self, finding_id: str):
        super().__init__(f"unknown finding {finding_id!r}")
        self.finding_id = finding_id


class UnknownDisease(InferenceError):
    def __init__(self, disease_id: str):
        super().__init__(f"unknown disease {disease_id!r}")
        self.disease_id = disease_id


class DiseaseNotInDifferential(InferenceError):
    def __init__(self, disease_id: str):
        super().__init__(f"disease {disease_id!r} not present in differential")
        self.disease_id = disease_id


@dataclass(frozen=True)
class DiagnosisParams:
    threshold: float = 0.0
    strict_vocabulary: bool = False
    kind_weights: dict[str, float] = field(
        default_factory=lambda: {"symptom": 1.0, "cause": 1.0}
    )


@dataclass(frozen=True)
class DifferentialEntry:
    disease_id: str
    score: float
    matched: frozenset[GroundAtom]
    missing: frozenset[str]
    fired_rules: tuple[str, ...]


@dataclass(frozen=True)
class Differential:
    entries: tuple[DifferentialEntry, ...]
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class TreatmentPlan:
    principle: tuple[str, ...] = ()
    regimental: tuple[str, ...] = ()
    prevention: tuple[str, ...] = ()
    provenance: dict[str, tuple[str, ...]] = field(default_factory=dict)


def forward_chain(rules: list[RuleAst], wm: WorkingMemory) -> WorkingMemory:
    """Run all rules to fixpoint; returns the grown memory plus firing trace.

    Indexed worklist: each rule keeps a count of unmet antecedents and is
    enqueued once the count hits zero, so work is linear in atoms x rules
    touched. Each rule fires at most once (atoms are ground, adding is
    idempotent). Cascade order is made deterministic by sorting new atoms.
    """
    atoms: set[GroundAtom] = set(wm.atoms)
    trace = list(wm.trace)

    waiting: dict[GroundAtom, list[int]] = {}
    unmet: list[int] = []
    fired = [False] * len(rules)
    ready: deque[int] = deque()
    for idx, rule in enumerate(rules):
        need = {GroundAtom(a.predicate, a.constant) for a in rule.antecedents} - atoms
        unmet.append(len(need))
        if not need:
            ready.append(idx)
        for atom in need:
            waiting.setdefault(atom, []).append(idx)

    while ready:
        idx = ready.popleft()
        if fired[idx]:
            continue
        fired[idx] = True
        rule = rules[idx]
        added = frozenset(
            ga
            for c in rule.consequents
            if (ga := GroundAtom(c.predicate, c.constant)) not in atoms
        )
        trace.append((rule.id, added))
        for ga in sorted(added, key=GroundAtom.sort_key):
            atoms.add(ga)
            for widx in waiting.get(ga, ()):
                unmet[widx] -= 1
                if unmet[widx] == 0 and not fired[widx]:
                    ready.append(widx)

    return WorkingMemory(atoms=frozenset(atoms), trace=tuple(trace))


_KIND_NAME_BY_PREDICATE = {Predicate.SYMPTOMS: "symptom", Predicate.CAUSES: "cause"}


def diagnose(
    kb: KnowledgeBase,
    rules: list[RuleAst],
    findings: set[str],
    params: DiagnosisParams | None = None,
) -> Differential:
    """Rank every rule-diagnosable disease by antecedent coverage.

    For disease d, A(d) pools antecedent constants across all its diagnostic
    rules; score = covered weight / total weight (plain coverage ratio at the
    default equal weights). Entries below params.threshold are dropped;
    fired_rules lists the diagnostic rules whose antecedents are fully met.
    """
    if not findings:
        raise EmptyFindings()
    params = params or DiagnosisParams()

    unknown = sorted(f for f in findings if f not in kb.findings)
    if unknown and params.strict_vocabulary:
        raise UnknownFinding(unknown[0])
    known = set(findings) - set(unknown)

    rules = canonicalize_ruleset(rules)
    entries: list[DifferentialEntry] = []
    for disease_id, dx_rules in diagnostic_index(rules).items():
        pooled: dict[str, Predicate] = {}
        for rule in dx_rules:
            for atom in rule.antecedents:
                pooled.setdefault(atom.constant, atom.predicate)
        for constant in pooled:
            finding = kb.findings.get(constant)
            if finding is not None:
                pooled[constant] = (
                    Predicate.SYMPTOMS
                    if finding.kind is FindingKind.SYMPTOM
                    else Predicate.CAUSES
                )

        def weight(predicate: Predicate) -> float:
            kind = _KIND_NAME_BY_PREDICATE.get(predicate)
            return params.kind_weights.get(kind, 1.0) if kind else 1.0

        total = sum(weight(p) for p in pooled.values())
        covered = sum(weight(p) for c, p in pooled.items() if c in known)
        score = covered / total if total else 0.0
        if score < params.threshold:
            continue
        entries.append(
            DifferentialEntry(
                disease_id=disease_id,
                score=score,
                matched=frozenset(
                    GroundAtom(p, c) for c, p in pooled.items() if c in known
                ),
                missing=frozenset(c for c in pooled if c not in known),
                fired_rules=tuple(
                    sorted(
                        r.id
                        for r in dx_rules
                        if all(a.constant in known for a in r.antecedents)
                    )
                ),
            )
        )

    entries.sort(key=lambda e: (-e.score, e.disease_id))
    return Differential(entries=tuple(entries), warnings=tuple(unknown))


_PLAN_FIELD_BY_PREDICATE = {
    Predicate.TREATMENT_PRINCIPLES: "principle",
    Predicate.REGIMENTAL_THERAPY: "regimental",
    Predicate.PREVENTION: "prevention",
}


def recommend_treatments(
    kb: KnowledgeBase, rules: list[RuleAst], disease_id: str
) -> TreatmentPlan:
    """Chain from Disease(disease_id) and group derived treatments.

    Rule-derived items come first in firing order; KB treatment edges not
    produced by any rule are appended sorted, with provenance "kb".
    """
    if disease_id not in kb.diseases:
        raise UnknownDisease(disease_id)

    rules = canonicalize_ruleset(rules)
    seed = WorkingMemory(atoms=frozenset({GroundAtom(Predicate.DISEASE, disease_id)}))
    result = forward_chain(rules, seed)

    rules_by_id = {r.id: r for r in rules}
    lists: dict[str, list[str]] = {"principle": [], "regimental": [], "prevention": []}
    provenance: dict[str, list[str]] = {}
    for rule_id, _added in result.trace:
        for atom in rules_by_id[rule_id].consequents:
            plan_field = _PLAN_FIELD_BY_PREDICATE.get(atom.predicate)
            if plan_field is None:
                continue
            if atom.constant not in provenance:
                lists[plan_field].append(atom.constant)
                provenance[atom.constant] = [rule_id]
            elif rule_id not in provenance[atom.constant]:
                provenance[atom.constant].append(rule_id)

    for tid in sorted(kb.treatments_of(disease_id)):
        if tid not in provenance:
            lists[kb.treatments[tid].category.value].append(tid)
            provenance[tid] = ["kb"]

    return TreatmentPlan(
        principle=tuple(lists["principle"]),
        regimental=tuple(lists["regimental"]),
        prevention=tuple(lists["prevention"]),
        provenance={tid: tuple(src) for tid, src in provenance.items()},
    )


def explain(
    differential: Differential, disease_id: str, rules: list[RuleAst] | None = None
) -> str:
    """Render one differential entry for humans; rule lines re-parse as rules."""
    entry = next((e for e in differential.entries if e.disease_id == disease_id), None)
    if entry is None:
        raise DiseaseNotInDifferential(disease_id)
    rules_by_id = {r.id: r for r in rules} if rules else {}

    lines = [f"disease: {entry.disease_id}", f"score: {entry.score:.6f}", "matched:"]
    for atom in sorted(entry.matched, key=GroundAtom.sort_key):
        lines.append(f"  {atom.predicate.value}(?p, {atom.constant})")
    lines.append("missing:")
    for constant in sorted(entry.missing):
        lines.append(f"  {constant}")
    lines.append("fired rules:")
    for rule_id in entry.fired_rules:
        rule = rules_by_id.get(rule_id)
        lines.append(f"  {rule_id}: {format_rule(rule)}" if rule else f"  {rule_id}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Serialization


def differential_to_doc(differential: Differential) -> dict:
    return {
        "entries": [
            {
                "disease_id": e.disease_id,
                "score": e.score,
                "matched": [
                    {"predicate": a.predicate.value, "constant": a.constant}
                    for a in sorted(e.matched, key=GroundAtom.sort_key)
                ],
                "missing": sorted(e.missing),
                "fired_rules": list(e.fired_rules),
            }
            for e in differential.entries
        ],
        "warnings": list(differential.warnings),
    }


def differential_to_json(differential: Differential) -> str:
    return json.dumps(differential_to_doc(differential), sort_keys=True, indent=2) + "\n"


def differential_from_doc(doc: dict) -> Differential:
    return Differential(
        entries=tuple(
            DifferentialEntry(
                disease_id=e["disease_id"],
                score=e["score"],
                matched=frozenset(
                    GroundAtom(Predicate(a["predicate"]), a["constant"])
                    for a in e["matched"]
                ),
                missing=frozenset(e["missing"]),
                fired_rules=tuple(e["fired_rules"]),
            )
            for e in doc["entries"]
        ),
        warnings=tuple(doc.get("warnings", ())),
    )


def plan_to_doc(plan: TreatmentPlan) -> dict:
    return {
        "principle": list(plan.principle),
        "regimental": list(plan.regimental),
        "prevention": list(plan.prevention),
        "provenance": {tid: list(src) for tid, src in sorted(plan.provenance.items())},
    }


def plan_from_doc(doc: dict) -> TreatmentPlan:
    return TreatmentPlan(
        principle=tuple(doc["principle"]),
        regimental=tuple(doc["regimental"]),
        prevention=tuple(doc["prevention"]),
        provenance={tid: tuple(src) for tid, src in doc.get("provenance", {}).items()},
    )
