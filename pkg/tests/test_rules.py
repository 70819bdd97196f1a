"""Rule language: parsing, formatting, canonicalization, KB cross-checks."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from unani_cdss.rules import (
    Atom,
    MixedRuleKind,
    Predicate,
    RuleAst,
    RuleError,
    RuleKind,
    RuleSyntaxError,
    UnknownPredicate,
    canonicalize_rule,
    canonicalize_ruleset,
    diagnostic_index,
    format_rule,
    format_ruleset,
    parse_rule,
    parse_ruleset,
    prescriptive_index,
    validate_ruleset,
)

# ---------------------------------------------------------------------------
# parsing


def test_diagnostic_rule_with_alias_predicate():
    rule = parse_rule(
        "Symptoms(?p, half_head_episodic_throbbing_pain),"
        " Symptoms(?p, whole_head_sometimes) -> hasDisease(?p, Migraine)"
    )
    assert rule.kind is RuleKind.DIAGNOSTIC
    assert len(rule.antecedents) == 2
    assert rule.consequents == (Atom(Predicate.DISEASE, "p", "migraine"),)


def test_prescriptive_rule_with_many_consequents():
    rule = parse_rule(
        "Disease(?p, Insomnia) -> TreatmentPrinciples(?p, moist_Production),"
        " TreatmentPrinciples(?p, Analgesia), TreatmentPrinciples(?p, Physical_&mentalRest),"
        " TreatmentPrinciples(?p, extremitiesMassage), TreatmentPrinciples(?p, Irrigation)"
    )
    assert rule.kind is RuleKind.PRESCRIPTIVE
    assert [c.constant for c in rule.consequents] == [
        "moist_production",
        "analgesia",
        "physical_mental_rest",
        "extremities_massage",
        "irrigation",
    ]


def test_treatment_alias_maps_to_principles():
    rule = parse_rule("Disease(?p, x) -> Treatment(?p, Analgesia)")
    assert rule.consequents[0].predicate is Predicate.TREATMENT_PRINCIPLES


def test_comments_and_newlines_are_insignificant():
    rules = parse_ruleset(
        "# header comment\n"
        "Symptoms(?p, a)  # trailing note\n"
        "  -> Disease(?p, d)\n"
    )
    assert len(rules) == 1


def test_positional_and_annotated_ids():
    rules = parse_ruleset(
        "Symptoms(?p, a) -> Disease(?p, d)\n"
        "@id named_rule\n"
        "Symptoms(?p, b) -> Disease(?p, d)\n"
        "Symptoms(?p, c) -> Disease(?p, d)\n"
    )
    assert [r.id for r in rules] == ["r1", "named_rule", "r3"]


def test_provenance_records_source_line():
    rules = parse_ruleset("\n\nSymptoms(?p, a) -> Disease(?p, d)", source_name="f.umr")
    assert rules[0].provenance == "f.umr:3"


def test_duplicate_atoms_collapse():
    rule = parse_rule("Symptoms(?p, a), Symptoms(?p, a) -> Disease(?p, d)")
    assert len(rule.antecedents) == 1


def test_parse_rule_rejects_multiple_rules():
    with pytest.raises(RuleError):
        parse_rule("Symptoms(?p, a) -> Disease(?p, d)\nSymptoms(?p, b) -> Disease(?p, d)")


@pytest.mark.parametrize(
    ("text", "fragment"),
    [
        ("Symptoms(?p x) -> Disease(?p, d)", "expected ','"),
        ("Symptoms(?p, a) Disease(?p, d)", "expected arrow"),
        ("Symptoms(?p, a) ->", "unexpected end of input"),
        ("Symptoms(?p, a) -> Disease(?q, d)", "differs from ?p"),
        ("Symptoms(?p, _) -> Disease(?p, d)", "no valid identifier form"),
        ("Symptoms(?p, a) -> Disease(?p, d) %", "unexpected character"),
        ("@author me\nSymptoms(?p, a) -> Disease(?p, d)", "unknown annotation"),
        ("@id dangling", "no following rule"),
    ],
)
def test_syntax_errors(text, fragment):
    with pytest.raises(RuleSyntaxError) as err:
        parse_ruleset(text)
    assert fragment in str(err.value)


def test_syntax_error_carries_position():
    with pytest.raises(RuleSyntaxError) as err:
        parse_ruleset("Symptoms(?p, a) -> Disease(?p, d)\nSymptoms(?p x) -> Disease(?p, d)")
    assert err.value.line == 2
    assert err.value.col == 13


def test_unknown_predicate():
    with pytest.raises(UnknownPredicate) as err:
        parse_rule("Weather(?p, rainy) -> Disease(?p, d)")
    assert err.value.name == "Weather"


@pytest.mark.parametrize(
    "text",
    [
        "Disease(?p, a), Symptoms(?p, s) -> Disease(?p, d)",  # disease on both sides
        "Disease(?p, a) -> Disease(?p, d)",
        "Symptoms(?p, s) -> TreatmentPrinciples(?p, t)",
        "Disease(?p, a) -> Disease(?p, d), Prevention(?p, t)",
    ],
)
def test_mixed_rule_kinds_are_rejected(text):
    with pytest.raises(MixedRuleKind):
        parse_rule(text)


# ---------------------------------------------------------------------------
# formatting round trip

constants = st.from_regex(r"[a-z][a-z0-9]{0,3}(_[a-z0-9]{1,3}){0,2}", fullmatch=True)
variables = st.from_regex(r"[a-z][a-z0-9]{0,2}", fullmatch=True)
rule_names = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True)

_NON_DISEASE = sorted(set(Predicate) - {Predicate.DISEASE}, key=lambda p: p.value)
_TREATMENTS = sorted(
    {Predicate.TREATMENT_PRINCIPLES, Predicate.REGIMENTAL_THERAPY, Predicate.PREVENTION},
    key=lambda p: p.value,
)


@st.composite
def rulesets(draw):
    rules = []
    for position in range(1, draw(st.integers(min_value=1, max_value=5)) + 1):
        variable = draw(variables)
        if draw(st.booleans()):
            ants = draw(
                st.lists(
                    st.tuples(st.sampled_from(_NON_DISEASE), constants),
                    min_size=1, max_size=3, unique=True,
                )
            )
            cons = draw(
                st.lists(
                    st.tuples(st.just(Predicate.DISEASE), constants),
                    min_size=1, max_size=2, unique=True,
                )
            )
            kind = RuleKind.DIAGNOSTIC
        else:
            ants = draw(
                st.lists(
                    st.tuples(st.just(Predicate.DISEASE), constants),
                    min_size=1, max_size=2, unique=True,
                )
            )
            cons = draw(
                st.lists(
                    st.tuples(st.sampled_from(_TREATMENTS), constants),
                    min_size=1, max_size=3, unique=True,
                )
            )
            kind = RuleKind.PRESCRIPTIVE
        rules.append(
            RuleAst(
                id=draw(st.one_of(st.just(f"r{position}"), rule_names)),
                antecedents=tuple(Atom(p, variable, c) for p, c in ants),
                consequents=tuple(Atom(p, variable, c) for p, c in cons),
                kind=kind,
            )
        )
    return rules


@given(rulesets())
def test_parse_format_round_trip(rules):
    reparsed = parse_ruleset(format_ruleset(rules))
    assert reparsed == rules
    assert [r.id for r in reparsed] == [r.id for r in rules]


def test_format_uses_canonical_predicate_names():
    rule = parse_rule("Symptoms(?p, a) -> hasDisease(?p, D)")
    assert format_rule(rule) == "Symptoms(?p, a) -> Disease(?p, d)"


def test_format_ruleset_annotates_only_non_positional_ids():
    text = format_ruleset(
        parse_ruleset("@id alpha\nSymptoms(?p, a) -> Disease(?p, d)\nSymptoms(?p, b) -> Disease(?p, d)")
    )
    assert text == "@id alpha\nSymptoms(?p, a) -> Disease(?p, d)\nSymptoms(?p, b) -> Disease(?p, d)\n"


def test_format_empty_ruleset():
    assert format_ruleset([]) == ""


def test_seed_ruleset_round_trips(seed_rules):
    reparsed = parse_ruleset(format_ruleset(seed_rules))
    assert reparsed == seed_rules
    assert [r.id for r in reparsed] == [r.id for r in seed_rules]


# ---------------------------------------------------------------------------
# canonicalization


def test_flips_treatments_to_disease_rule():
    rule = parse_rule(
        "Treatment(?p, Analgesia), TreatmentPrinciples(?p, Causative_humouur_Evacuation),"
        " TreatmentPrinciples(?p, ToningUp_Of_Brain) -> hasDisease(?p, Migraine)"
    )
    assert rule.kind is RuleKind.DIAGNOSTIC
    flipped = canonicalize_rule(rule)
    assert flipped.kind is RuleKind.PRESCRIPTIVE
    assert flipped.antecedents == (Atom(Predicate.DISEASE, "p", "migraine"),)
    assert [c.constant for c in flipped.consequents] == [
        "analgesia",
        "causative_humouur_evacuation",
        "toning_up_of_brain",
    ]
    assert flipped.id == rule.id


def test_already_prescriptive_rule_is_unchanged():
    rule = parse_rule("Disease(?p, d) -> Prevention(?p, t)")
    assert canonicalize_rule(rule) is rule


def test_symptom_rule_is_unchanged():
    rule = parse_rule("Symptoms(?p, s) -> Disease(?p, d)")
    assert canonicalize_rule(rule) is rule


def test_multi_disease_consequent_is_not_flipped():
    rule = parse_rule("Prevention(?p, t) -> Disease(?p, a), Disease(?p, b)")
    assert canonicalize_rule(rule) is rule


@given(rulesets())
def test_canonicalize_is_idempotent(rules):
    once = canonicalize_ruleset(rules)
    assert canonicalize_ruleset(once) == once


def test_seed_ruleset_kinds(seed_rules):
    kinds = [r.kind for r in seed_rules]
    assert kinds.count(RuleKind.DIAGNOSTIC) == 5
    assert kinds.count(RuleKind.PRESCRIPTIVE) == 7


# ---------------------------------------------------------------------------
# indexes and validation


def test_indexes_preserve_ruleset_order(seed_rules):
    dx = diagnostic_index(seed_rules)
    assert [r.id for r in dx["migraine"]] == ["migraine_symptoms", "migraine_causes"]
    rx = prescriptive_index(seed_rules)
    assert [r.id for r in rx["insomnia"]] == [
        "insomnia_principles",
        "insomnia_regimental",
        "insomnia_prevention",
    ]


def test_seed_ruleset_validates_clean(seed_kb, seed_rules):
    assert validate_ruleset(seed_rules, seed_kb).empty


def test_unknown_constant_is_flagged(seed_kb, seed_rules):
    rules = seed_rules + parse_ruleset("Symptoms(?p, unknown_symptom) -> Disease(?p, Zukam)")
    report = validate_ruleset(rules, seed_kb)
    assert not report.ok
    flagged = [i for i in report.issues if i.code == "unknown_constant"]
    assert [i.subject for i in flagged] == ["r1:unknown_symptom"]


def test_unknown_constant_severity_is_configurable(seed_kb, seed_rules):
    rules = seed_rules + parse_ruleset("Symptoms(?p, unknown_symptom) -> Disease(?p, Zukam)")
    report = validate_ruleset(rules, seed_kb, unknown_constant_severity="warning")
    assert report.ok
    assert "unknown_constant" in report.codes()


def test_duplicate_rule_ids_are_flagged(seed_kb, seed_rules):
    rules = seed_rules + parse_ruleset(
        "@id zukam_symptoms\nSymptoms(?p, running_nose) -> Disease(?p, Zukam)"
    )
    assert "duplicate_rule_id" in validate_ruleset(rules, seed_kb).codes()


def test_uncovered_diseases_are_flagged(seed_kb):
    rules = parse_ruleset("Symptoms(?p, running_nose) -> Disease(?p, Zukam)")
    codes = validate_ruleset(rules, seed_kb).codes()
    assert codes.count("disease_without_diagnostic_rule") == 2  # insomnia, migraine
    assert codes.count("disease_without_prescriptive_rule") == 3
