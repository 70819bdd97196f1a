"""Clinical rule language: horn clauses over one case variable.

Surface syntax, one rule per statement (whitespace and newlines are
insignificant, `#` comments run to end of line):

    Symptoms(?p, running_nose), Symptoms(?p, headache_generic) -> Disease(?p, zukam)

An optional `@id <token>` annotation names the following rule; unnamed rules
get positional ids r1, r2, ... Six predicates are recognized; two legacy
spellings (hasDisease, Treatment) are mapped to canonical ones at parse time.
Rules are either diagnostic (findings imply a disease) or prescriptive (a
disease implies treatment-family atoms); anything else is rejected.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from enum import Enum

from .ids import is_valid_id, normalize_id
from .model import KnowledgeBase, ValidationIssue, ValidationReport

log = logging.getLogger(__name__)


class Predicate(str, Enum):
    SYMPTOMS = "Symptoms"
    CAUSES = "Causes"
    DISEASE = "Disease"
    TREATMENT_PRINCIPLES = "TreatmentPrinciples"
    REGIMENTAL_THERAPY = "RegimentalTherapy"
    PREVENTION = "Prevention"


TREATMENT_FAMILY = frozenset(
    {Predicate.TREATMENT_PRINCIPLES, Predicate.REGIMENTAL_THERAPY, Predicate.PREVENTION}
)

FINDING_PREDICATES = frozenset({Predicate.SYMPTOMS, Predicate.CAUSES})

PREDICATE_ALIASES = {"hasdisease": Predicate.DISEASE, "treatment": Predicate.TREATMENT_PRINCIPLES}

_PREDICATE_LOOKUP = {p.value.lower(): p for p in Predicate} | PREDICATE_ALIASES


class RuleKind(str, Enum):
    DIAGNOSTIC = "diagnostic"
    PRESCRIPTIVE = "prescriptive"


@dataclass(frozen=True)
class Atom:
    predicate: Predicate
    variable: str
    constant: str


@dataclass(frozen=True)
class RuleAst:
    id: str = field(compare=False)
    antecedents: tuple[Atom, ...]
    consequents: tuple[Atom, ...]
    kind: RuleKind
    provenance: str = field(default="", compare=False)


class RuleError(Exception):
    pass


class RuleSyntaxError(RuleError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class UnknownPredicate(RuleSyntaxError):
    def __init__(self, name: str, line: int, col: int):
        super().__init__(f"unknown predicate {name!r}", line, col)
        self.name = name


class MixedRuleKind(RuleError):
    def __init__(self, rule_id: str, line: int):
        super().__init__(
            f"rule {rule_id} (line {line}) mixes diagnostic and prescriptive shapes"
        )
        self.rule_id = rule_id
        self.line = line


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<arrow>->)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_&]*)"
    r"|(?P<punct>[(),?@])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise RuleSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = match.lastgroup or ""
        value = match.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, value, line, match.start() - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = match.start() + value.rindex("\n") + 1
        pos = match.end()
    return tokens


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[_Token], source_name: str):
        self.tokens = tokens
        self.source_name = source_name
        self.pos = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, kind: str, value: str | None = None) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("", "", 1, 1)
            raise RuleSyntaxError(f"unexpected end of input, expected {kind}", last.line, last.col)
        if tok.kind != kind or (value is not None and tok.value != value):
            want = repr(value) if value is not None else kind
            raise RuleSyntaxError(
                f"expected {want}, found {tok.value!r}", tok.line, tok.col
            )
        self.pos += 1
        return tok

    def parse_atom(self, variable: str | None) -> tuple[Atom, str]:
        pred_tok = self.take("ident")
        predicate = _PREDICATE_LOOKUP.get(pred_tok.value.lower())
        if predicate is None:
            raise UnknownPredicate(pred_tok.value, pred_tok.line, pred_tok.col)
        self.take("punct", "(")
        self.take("punct", "?")
        var_tok = self.take("ident")
        if variable is not None and var_tok.value != variable:
            raise RuleSyntaxError(
                f"variable ?{var_tok.value} differs from ?{variable}", var_tok.line, var_tok.col
            )
        self.take("punct", ",")
        const_tok = self.take("ident")
        constant = normalize_id(const_tok.value)
        if not is_valid_id(constant):
            raise RuleSyntaxError(
                f"constant {const_tok.value!r} has no valid identifier form",
                const_tok.line,
                const_tok.col,
            )
        self.take("punct", ")")
        return Atom(predicate, var_tok.value, constant), var_tok.value

    def parse_atom_list(self, variable: str | None) -> tuple[tuple[Atom, ...], str]:
        atoms: list[Atom] = []
        atom, variable = self.parse_atom(variable)
        atoms.append(atom)
        while (tok := self.peek()) is not None and tok.kind == "punct" and tok.value == ",":
            self.pos += 1
            atom, variable = self.parse_atom(variable)
            if atom not in atoms:  # repeated atoms collapse
                atoms.append(atom)
        return tuple(atoms), variable

    def parse_rule(self, rule_id: str) -> RuleAst:
        first = self.peek()
        assert first is not None
        antecedents, variable = self.parse_atom_list(None)
        self.take("arrow")
        consequents, _ = self.parse_atom_list(variable)
        kind = _infer_kind(rule_id, first.line, antecedents, consequents)
        return RuleAst(
            id=rule_id,
            antecedents=antecedents,
            consequents=consequents,
            kind=kind,
            provenance=f"{self.source_name}:{first.line}",
        )


def _infer_kind(
    rule_id: str, line: int, antecedents: tuple[Atom, ...], consequents: tuple[Atom, ...]
) -> RuleKind:
    if all(c.predicate is Predicate.DISEASE for c in consequents) and not any(
        a.predicate is Predicate.DISEASE for a in antecedents
    ):
        return RuleKind.DIAGNOSTIC
    if all(a.predicate is Predicate.DISEASE for a in antecedents) and all(
        c.predicate in TREATMENT_FAMILY for c in consequents
    ):
        return RuleKind.PRESCRIPTIVE
    raise MixedRuleKind(rule_id, line)


def parse_ruleset(text: str, source_name: str = "<rules>") -> list[RuleAst]:
    parser = _Parser(_tokenize(text), source_name)
    rules: list[RuleAst] = []
    pending_id: str | None = None
    while (tok := parser.peek()) is not None:
        if tok.kind == "punct" and tok.value == "@":
            parser.pos += 1
            key = parser.take("ident")
            if key.value != "id":
                raise RuleSyntaxError(f"unknown annotation @{key.value}", key.line, key.col)
            pending_id = parser.take("ident").value
            continue
        rule_id = pending_id if pending_id is not None else f"r{len(rules) + 1}"
        pending_id = None
        rules.append(parser.parse_rule(rule_id))
    if pending_id is not None:
        last = parser.tokens[-1]
        raise RuleSyntaxError(f"@id {pending_id} has no following rule", last.line, last.col)
    return rules


def parse_rule(text: str, rule_id: str = "r1", source_name: str = "<rule>") -> RuleAst:
    rules = parse_ruleset(text, source_name)
    if len(rules) != 1:
        raise RuleError(f"expected exactly one rule, found {len(rules)}")
    return replace(rules[0], id=rule_id) if rules[0].id != rule_id else rules[0]


# ---------------------------------------------------------------------------
# Formatting


def format_atom(atom: Atom) -> str:
    return f"{atom.predicate.value}(?{atom.variable}, {atom.constant})"


def format_rule(rule: RuleAst) -> str:
    left = ", ".join(format_atom(a) for a in rule.antecedents)
    right = ", ".join(format_atom(c) for c in rule.consequents)
    return f"{left} -> {right}"


def format_ruleset(rules: list[RuleAst]) -> str:
    lines: list[str] = []
    for n, rule in enumerate(rules, start=1):
        if rule.id != f"r{n}":
            lines.append(f"@id {rule.id}")
        lines.append(format_rule(rule))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Canonicalization


def canonicalize_rule(rule: RuleAst) -> RuleAst:
    """Flip treatments->Disease rules into Disease->treatments form.

    Source equations state prescriptions in both directions; the engine wants
    the disease on the left. Only the exact flippable shape is touched, so
    the function is idempotent.
    """
    if (
        rule.kind is RuleKind.DIAGNOSTIC
        and len(rule.consequents) == 1
        and all(a.predicate in TREATMENT_FAMILY for a in rule.antecedents)
    ):
        flipped = RuleAst(
            id=rule.id,
            antecedents=rule.consequents,
            consequents=rule.antecedents,
            kind=_infer_kind(rule.id, 0, rule.consequents, rule.antecedents),
            provenance=rule.provenance,
        )
        log.info("rule %s flipped to prescriptive form", rule.id)
        return flipped
    return rule


def canonicalize_ruleset(rules: list[RuleAst]) -> list[RuleAst]:
    return [canonicalize_rule(r) for r in rules]


# ---------------------------------------------------------------------------
# Validation against a knowledge base

_NAMESPACE_BY_PREDICATE = {
    Predicate.SYMPTOMS: "findings",
    Predicate.CAUSES: "findings",
    Predicate.DISEASE: "diseases",
    Predicate.TREATMENT_PRINCIPLES: "treatments",
    Predicate.REGIMENTAL_THERAPY: "treatments",
    Predicate.PREVENTION: "treatments",
}


def diagnostic_index(rules: list[RuleAst]) -> dict[str, list[RuleAst]]:
    """disease id -> diagnostic rules concluding it, in ruleset order."""
    index: dict[str, list[RuleAst]] = {}
    for rule in rules:
        if rule.kind is RuleKind.DIAGNOSTIC:
            for c in rule.consequents:
                index.setdefault(c.constant, []).append(rule)
    return index


def prescriptive_index(rules: list[RuleAst]) -> dict[str, list[RuleAst]]:
    """disease id -> prescriptive rules keyed on it, in ruleset order."""
    index: dict[str, list[RuleAst]] = {}
    for rule in rules:
        if rule.kind is RuleKind.PRESCRIPTIVE:
            for a in rule.antecedents:
                index.setdefault(a.constant, []).append(rule)
    return index


def validate_ruleset(
    rules: list[RuleAst],
    kb: KnowledgeBase,
    unknown_constant_severity: str = "error",
) -> ValidationReport:
    """Cross-check a ruleset against a KB; empty report means fully aligned."""
    issues: list[ValidationIssue] = []

    seen_ids: set[str] = set()
    for rule in rules:
        if rule.id in seen_ids:
            issues.append(
                ValidationIssue("duplicate_rule_id", rule.id, "rule id used more than once")
            )
        seen_ids.add(rule.id)

    namespaces = {"findings": kb.findings, "diseases": kb.diseases, "treatments": kb.treatments}
    for rule in rules:
        for atom in rule.antecedents + rule.consequents:
            space = _NAMESPACE_BY_PREDICATE[atom.predicate]
            if atom.constant not in namespaces[space]:
                issues.append(
                    ValidationIssue(
                        "unknown_constant",
                        f"{rule.id}:{atom.constant}",
                        f"{atom.predicate.value} constant not among KB {space}",
                        severity=unknown_constant_severity,
                    )
                )

    diagnosable = set(diagnostic_index(rules))
    prescribable = set(prescriptive_index(rules))
    for disease_id in sorted(kb.diseases):
        if disease_id not in diagnosable:
            issues.append(
                ValidationIssue(
                    "disease_without_diagnostic_rule", disease_id, "no rule concludes this disease"
                )
            )
        if disease_id not in prescribable:
            issues.append(
                ValidationIssue(
                    "disease_without_prescriptive_rule",
                    disease_id,
                    "no rule prescribes for this disease",
                )
            )

    return ValidationReport(tuple(issues))
