"""Knowledge-base model: validation, mutation helpers, JSON and graph export."""

from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from unani_cdss.ids import is_valid_id, normalize_id
from unani_cdss.model import (
    Disease,
    Finding,
    FindingKind,
    KbError,
    KbImportError,
    KnowledgeBase,
    TreatmentCategory,
    TreatmentItem,
    UnknownNode,
    graph_to_json,
    kb_add_synonyms,
    kb_export_graph,
    kb_find_diseases_by_finding,
    kb_from_json,
    kb_to_json,
    kb_upsert_disease,
    kb_validate,
)

ids = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True)
labels = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd", "Zs")),
    min_size=1,
    max_size=20,
).map(str.strip).filter(bool)


def symptom(fid, label=None):
    return Finding(fid, FindingKind.SYMPTOM, label or fid)


def cause(fid, label=None):
    return Finding(fid, FindingKind.CAUSE, label or fid)


def principle(tid, label=None):
    return TreatmentItem(tid, TreatmentCategory.PRINCIPLE, label or tid)


@st.composite
def knowledge_bases(draw):
    kb = KnowledgeBase()
    for did in draw(st.lists(ids, min_size=1, max_size=4, unique=True)):
        findings = [
            Finding(fid, draw(st.sampled_from(list(FindingKind))), draw(labels))
            for fid in draw(st.lists(ids, min_size=1, max_size=4, unique=True))
        ]
        treatments = [
            TreatmentItem(tid, draw(st.sampled_from(list(TreatmentCategory))), draw(labels))
            for tid in draw(st.lists(ids, max_size=3, unique=True))
        ]
        kb = kb_upsert_disease(kb, Disease(did, draw(labels)), findings, treatments)
    return kb


# ---------------------------------------------------------------------------
# validation


def test_seed_kb_is_clean_and_has_expected_shape(seed_kb):
    assert kb_validate(seed_kb).empty
    assert sorted(seed_kb.diseases) == ["insomnia", "migraine", "zukam"]
    assert len(seed_kb.findings) == 21
    assert len(seed_kb.treatments) == 19
    assert len(seed_kb.finding_edges) == 21
    assert len(seed_kb.treatment_edges) == 23


def test_empty_kb_is_vacuously_valid():
    assert kb_validate(KnowledgeBase()).empty


def test_dangling_finding_edge_is_reported():
    kb = kb_upsert_disease(KnowledgeBase(), Disease("d", "D"), [symptom("s")], [])
    broken = KnowledgeBase(
        findings=kb.findings,
        diseases=kb.diseases,
        treatments=kb.treatments,
        finding_edges=kb.finding_edges | {("d", "ghost")},
        treatment_edges=kb.treatment_edges,
    )
    report = kb_validate(broken)
    assert report.codes() == ["dangling_finding_edge"]
    assert not report.ok


def test_dangling_disease_and_treatment_edges_are_reported():
    broken = KnowledgeBase(
        findings={"s": symptom("s")},
        diseases={},
        treatments={},
        finding_edges=frozenset({("ghost", "s")}),
        treatment_edges=frozenset({("ghost", "potion")}),
    )
    codes = kb_validate(broken).codes()
    assert codes.count("dangling_disease_edge") == 2
    assert "dangling_treatment_edge" in codes


def test_malformed_ids_are_reported():
    kb = KnowledgeBase(
        findings={"Bad Id": symptom("Bad Id")},
        diseases={"1up": Disease("1up", "One Up")},
        treatments={"X": TreatmentItem("X", TreatmentCategory.PRINCIPLE, "X")},
    )
    assert kb_validate(kb).codes().count("id_format") == 3


def test_synonym_issues_are_reported():
    shouty = Finding("ache", FindingKind.SYMPTOM, "Ache", synonyms=frozenset({"HeadAche"}))
    colliding = Finding("pain", FindingKind.SYMPTOM, "Pain", synonyms=frozenset({"ache"}))
    kb = KnowledgeBase(findings={"ache": shouty, "pain": colliding})
    codes = kb_validate(kb).codes()
    assert "synonym_case" in codes
    assert "synonym_id_collision" in codes


def test_empty_disease_name_and_missing_findings_are_reported():
    kb = KnowledgeBase(diseases={"d": Disease("d", "")})
    codes = kb_validate(kb).codes()
    assert "empty_name" in codes
    assert "disease_without_findings" in codes


def test_report_render_lists_each_issue():
    kb = KnowledgeBase(diseases={"d": Disease("d", "")})
    text = kb_validate(kb).render()
    assert "empty_name" in text
    assert kb_validate(KnowledgeBase()).render() == "ok"


# ---------------------------------------------------------------------------
# mutation helpers


def test_upsert_creates_nodes_and_edges():
    kb = kb_upsert_disease(
        KnowledgeBase(),
        Disease("migraine", "Migraine"),
        [symptom("half_head_pain"), symptom("whole_head_pain")],
        [principle("analgesia"), principle("evacuation"), principle("toning_up")],
    )
    assert len(kb.diseases) == 1
    assert len(kb.finding_edges) == 2
    assert len(kb.treatment_edges) == 3


def test_upsert_is_idempotent():
    args = (
        Disease("d", "D"),
        [symptom("s1"), cause("c1")],
        [principle("t1")],
    )
    once = kb_upsert_disease(KnowledgeBase(), *args)
    twice = kb_upsert_disease(once, *args)
    assert kb_to_json(once) == kb_to_json(twice)


def test_upsert_replaces_edge_sets():
    kb = kb_upsert_disease(
        KnowledgeBase(), Disease("d", "D"), [symptom("s1"), symptom("s2")], []
    )
    kb = kb_upsert_disease(kb, Disease("d", "D"), [symptom("s2")], [])
    assert kb.finding_edges == frozenset({("d", "s2")})
    assert "s1" in kb.findings  # node outlives its last edge


def test_upsert_keeps_existing_node_definitions():
    kb = kb_upsert_disease(
        KnowledgeBase(), Disease("a", "A"), [symptom("shared", "original label")], []
    )
    kb = kb_upsert_disease(
        kb, Disease("b", "B"), [symptom("shared", "different label")], []
    )
    assert kb.findings["shared"].label == "original label"


def test_upsert_rejects_malformed_ids():
    with pytest.raises(ValueError):
        kb_upsert_disease(KnowledgeBase(), Disease("Half Head", "x"), [], [])
    with pytest.raises(ValueError):
        kb_upsert_disease(KnowledgeBase(), Disease("d", "x"), [symptom("Bad Id")], [])


def test_add_synonyms_returns_new_kb_and_lowercases():
    kb = kb_upsert_disease(KnowledgeBase(), Disease("d", "D"), [symptom("s")], [])
    grown = kb_add_synonyms(kb, {"s": ["Sore", "ache"]})
    assert grown.findings["s"].synonyms == frozenset({"sore", "ache"})
    assert kb.findings["s"].synonyms == frozenset()


def test_add_synonyms_rejects_unknown_finding():
    with pytest.raises(UnknownNode):
        kb_add_synonyms(KnowledgeBase(), {"ghost": ["x"]})


def test_find_diseases_by_finding(seed_kb):
    assert kb_find_diseases_by_finding(seed_kb, "headache_generic") == ["zukam"]
    with pytest.raises(UnknownNode):
        kb_find_diseases_by_finding(seed_kb, "irrigation")  # treatment, not finding
    with pytest.raises(UnknownNode):
        kb_find_diseases_by_finding(seed_kb, "ghost")


# ---------------------------------------------------------------------------
# JSON document round trip


def test_seed_kb_json_round_trip(seed_kb):
    assert kb_from_json(kb_to_json(seed_kb)) == seed_kb


def test_json_preserves_unicode_labels(seed_kb):
    text = kb_to_json(seed_kb)
    assert "Shaqīqa" in text
    assert kb_from_json(text).diseases["migraine"].alt_name == "Shaqīqa"


@given(knowledge_bases())
def test_json_round_trip_over_generated_kbs(kb):
    assert kb_from_json(kb_to_json(kb)) == kb


def test_truncated_json_reports_byte_offset(seed_kb):
    text = kb_to_json(seed_kb)[:100]
    with pytest.raises(KbImportError) as err:
        kb_from_json(text)
    assert err.value.offset is not None


def test_non_object_json_is_rejected():
    with pytest.raises(KbImportError):
        kb_from_json("[1, 2, 3]")


def test_missing_section_is_rejected():
    with pytest.raises(KbImportError):
        kb_from_json('{"findings": []}')


def test_bad_enum_value_is_rejected():
    doc = {
        "findings": [{"id": "s", "kind": "mood", "label": "s"}],
        "diseases": [],
        "treatments": [],
        "finding_edges": [],
        "treatment_edges": [],
    }
    with pytest.raises(KbImportError):
        kb_from_json(json.dumps(doc))


# ---------------------------------------------------------------------------
# graph export


def test_seed_graph_counts(seed_kb):
    graph = kb_export_graph(seed_kb)
    assert len(graph["nodes"]) == 43
    assert len(graph["edges"]) == 44
    by_type = {}
    for edge in graph["edges"]:
        by_type[edge["edge_type"]] = by_type.get(edge["edge_type"], 0) + 1
    assert by_type == {"HAS_SYMPTOM": 11, "HAS_CAUSE": 10, "HAS_TREATMENT": 23}


def test_graph_is_sorted_and_deterministic(seed_kb):
    graph = kb_export_graph(seed_kb)
    node_keys = [(n["id"], n["node_type"]) for n in graph["nodes"]]
    assert node_keys == sorted(node_keys)
    edge_keys = [(e["src"], e["dst"], e["edge_type"]) for e in graph["edges"]]
    assert edge_keys == sorted(edge_keys)
    assert graph_to_json(graph) == graph_to_json(kb_export_graph(seed_kb))


def test_minimal_graph():
    kb = kb_upsert_disease(KnowledgeBase(), Disease("d", "D"), [symptom("s")], [])
    graph = kb_export_graph(kb)
    assert len(graph["nodes"]) == 2
    assert graph["edges"] == [{"src": "d", "dst": "s", "edge_type": "HAS_SYMPTOM"}]


def test_cause_edges_get_their_own_type():
    kb = kb_upsert_disease(KnowledgeBase(), Disease("d", "D"), [cause("c")], [])
    assert kb_export_graph(kb)["edges"][0]["edge_type"] == "HAS_CAUSE"


def test_invalid_kb_cannot_be_exported():
    kb = KnowledgeBase(diseases={"d": Disease("d", "")})
    with pytest.raises(KbError):
        kb_export_graph(kb)


@given(knowledge_bases())
def test_generated_kbs_export_with_matching_counts(kb):
    graph = kb_export_graph(kb)
    assert len(graph["nodes"]) == len(kb.findings) + len(kb.diseases) + len(kb.treatments)
    assert len(graph["edges"]) == len(kb.finding_edges) + len(kb.treatment_edges)


# ---------------------------------------------------------------------------
# identifier normalization


@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("half_head_episodic_throbbing_pain", "half_head_episodic_throbbing_pain"),
        ("Grief_Avoidance", "grief_avoidance"),
        ("extremitiesMassage", "extremities_massage"),
        ("Physical_&mentalRest", "physical_mental_rest"),
        ("Shaqīqa", "shaqiqa"),
        ("Taskīn-i Dard", "taskin_i_dard"),
        ("  running nose  ", "running_nose"),
    ],
)
def test_normalize_id_examples(raw, expected):
    assert normalize_id(raw) == expected


@given(st.text(max_size=40))
def test_normalize_id_is_idempotent(text):
    once = normalize_id(text)
    assert normalize_id(once) == once


@given(st.from_regex(r"[a-z][a-z0-9]{0,4}(_[a-z0-9]{1,4}){0,3}", fullmatch=True))
def test_canonical_ids_normalize_to_themselves(fid):
    # underscore-collapsed, no leading/trailing underscore: the image grammar
    assert normalize_id(fid) == fid
    assert is_valid_id(fid)
