"""Tagged-text parsing, formatting, and record-to-KB merging."""

from __future__ import annotations

import logging
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from unani_cdss.ids import normalize_id
from unani_cdss.ingest import (
    DiseaseRecord,
    EmptyDiseaseName,
    FindingKindCollision,
    TaggedDocument,
    TagOutsideDiseaseBlock,
    UnbalancedTag,
    UnknownTag,
    format_records,
    parse_tagged_text,
    records_to_kb,
)
from unani_cdss.model import TreatmentCategory, kb_to_json, kb_validate


def parse(text: str) -> list[DiseaseRecord]:
    return parse_tagged_text(TaggedDocument("test", text))


# ---------------------------------------------------------------------------
# parsing


def test_single_block():
    records = parse(
        "<DIS>Migraine"
        "<SYM>half head episodic throbbing pain</SYM>"
        "<SYM>whole head sometimes</SYM>"
        "</DIS>"
    )
    assert len(records) == 1
    rec = records[0]
    assert rec.disease == "Migraine"
    assert rec.symptoms == ["half_head_episodic_throbbing_pain", "whole_head_sometimes"]
    assert rec.finding_labels["whole_head_sometimes"] == "whole head sometimes"


def test_empty_document():
    assert parse("") == []
    assert parse("prose with no tags at all") == []


def test_all_leaf_tags_route_to_their_lists():
    rec = parse(
        "<DIS>X<ALT>Y</ALT><SYM>s</SYM><CAU>c</CAU>"
        "<TRP>t</TRP><REG>r</REG><PRE>p</PRE></DIS>"
    )[0]
    assert rec.alt_name == "Y"
    assert rec.symptoms == ["s"]
    assert rec.causes == ["c"]
    assert rec.principles == ["t"]
    assert rec.regimental == ["r"]
    assert rec.preventions == ["p"]
    assert rec.treatment_labels == {"t": "t", "r": "r", "p": "p"}


def test_prose_around_and_inside_blocks_is_ignored():
    records = parse(
        "Chapter intro.\n"
        "<DIS>Zukam\n common in winter <SYM>running nose</SYM>\n"
        "It typically resolves on its own.\n"
        "<SYM>headache</SYM></DIS>\n"
        "Closing remarks."
    )
    assert len(records) == 1
    # the name is the text before the first leaf; later prose is context
    assert records[0].disease == "Zukam common in winter"
    assert records[0].symptoms == ["running_nose", "headache"]


def test_two_blocks_in_document_order():
    records = parse("<DIS>B<SYM>s1</SYM></DIS><DIS>A<SYM>s2</SYM></DIS>")
    assert [r.disease for r in records] == ["B", "A"]


def test_lowercase_tags_are_accepted():
    rec = parse("<dis>X<sym>s</sym></dis>")[0]
    assert rec.disease == "X"
    assert rec.symptoms == ["s"]


def test_values_are_whitespace_normalized():
    rec = parse("<DIS>X<SYM>  running\n   nose </SYM></DIS>")[0]
    assert rec.symptoms == ["running_nose"]
    assert rec.finding_labels["running_nose"] == "running nose"


def test_first_alt_wins(caplog):
    with caplog.at_level(logging.WARNING):
        rec = parse("<DIS>X<ALT>First</ALT><ALT>Second</ALT><SYM>s</SYM></DIS>")[0]
    assert rec.alt_name == "First"
    assert "extra <ALT>" in caplog.text


def test_duplicate_items_are_dropped(caplog):
    with caplog.at_level(logging.WARNING):
        rec = parse("<DIS>X<SYM>Running Nose</SYM><SYM>running  nose</SYM></DIS>")[0]
    assert rec.symptoms == ["running_nose"]
    assert rec.finding_labels["running_nose"] == "Running Nose"
    assert "duplicate <SYM>" in caplog.text


def test_empty_leaf_is_dropped(caplog):
    with caplog.at_level(logging.WARNING):
        rec = parse("<DIS>X<SYM>   </SYM><SYM>s</SYM></DIS>")[0]
    assert rec.symptoms == ["s"]
    assert "empty <SYM>" in caplog.text


# ---------------------------------------------------------------------------
# structural errors


def test_unknown_tag_reports_position():
    with pytest.raises(UnknownTag) as err:
        parse("<DIS>X\n<BOGUS>y</BOGUS></DIS>")
    assert err.value.name == "BOGUS"
    assert (err.value.line, err.value.col) == (2, 1)


def test_leaf_outside_block():
    with pytest.raises(TagOutsideDiseaseBlock) as err:
        parse("<SYM>x</SYM>")
    assert err.value.line == 1


def test_nested_disease_blocks():
    with pytest.raises(UnbalancedTag):
        parse("<DIS>X<DIS>Y</DIS></DIS>")


def test_leaf_inside_leaf():
    with pytest.raises(UnbalancedTag):
        parse("<DIS>X<SYM>a<CAU>b</CAU></SYM></DIS>")


def test_mismatched_close():
    with pytest.raises(UnbalancedTag):
        parse("<DIS>X<SYM>a</CAU></DIS>")


def test_stray_close():
    with pytest.raises(UnbalancedTag):
        parse("</SYM>")


def test_unclosed_leaf():
    with pytest.raises(UnbalancedTag):
        parse("<DIS>X<SYM>a</DIS>")


def test_unclosed_block():
    with pytest.raises(UnbalancedTag) as err:
        parse("text\n<DIS>X<SYM>a</SYM>")
    assert err.value.name == "DIS"
    assert err.value.line == 2


def test_block_without_name():
    with pytest.raises(EmptyDiseaseName):
        parse("<DIS><SYM>a</SYM></DIS>")
    with pytest.raises(EmptyDiseaseName):
        parse("<DIS>   </DIS>")


# ---------------------------------------------------------------------------
# format round trip

words = st.from_regex(r"[A-Za-z][a-z0-9]{0,5}", fullmatch=True)
phrases = st.lists(words, min_size=1, max_size=3).map(" ".join)


@st.composite
def disease_records(draw):
    labels = draw(
        st.lists(phrases, min_size=1, max_size=8, unique_by=normalize_id)
    )
    rec = DiseaseRecord(disease=draw(phrases))
    if draw(st.booleans()):
        rec.alt_name = draw(phrases)
    buckets = ("symptoms", "causes", "principles", "regimental", "preventions")
    for position, label in enumerate(labels):
        item_id = normalize_id(label)
        # a disease needs at least one finding to make a loadable KB
        bucket = "symptoms" if position == 0 else draw(st.sampled_from(buckets))
        getattr(rec, bucket).append(item_id)
        target = rec.finding_labels if bucket in ("symptoms", "causes") else rec.treatment_labels
        target[item_id] = label
    return rec


@given(st.lists(disease_records(), max_size=4))
def test_parse_format_round_trip(records):
    assert parse(format_records(records)) == records


def test_format_of_empty_list_is_empty():
    assert format_records([]) == ""


# ---------------------------------------------------------------------------
# records_to_kb


def test_shared_treatment_collapses_to_one_node():
    a = parse("<DIS>A<SYM>s1</SYM><REG>Irrigation</REG></DIS>")
    b = parse("<DIS>B<SYM>s2</SYM><REG>Irrigation</REG></DIS>")
    kb = records_to_kb(a + b)
    assert list(kb.treatments) == ["irrigation"]
    assert kb.treatment_edges == frozenset({("a", "irrigation"), ("b", "irrigation")})


def test_empty_record_list_gives_empty_kb():
    kb = records_to_kb([])
    assert not kb.diseases and not kb.findings and not kb.treatments


def test_symptom_cause_collision_is_an_error():
    records = parse("<DIS>A<SYM>dryness</SYM></DIS><DIS>B<CAU>dryness</CAU></DIS>")
    with pytest.raises(FindingKindCollision) as err:
        records_to_kb(records)
    assert err.value.ids == ["dryness"]


def test_same_text_in_different_namespaces_is_fine():
    # a cause and a prevention may share surface text: separate namespaces
    records = parse("<DIS>A<SYM>s</SYM><CAU>dryness</CAU><PRE>Dryness</PRE></DIS>")
    kb = records_to_kb(records)
    assert kb.findings["dryness"].label == "dryness"
    assert kb.treatments["dryness"].label == "Dryness"


def test_labels_merge_to_lexicographic_minimum():
    records = parse(
        "<DIS>A<SYM>running nose</SYM></DIS><DIS>B<SYM>Running Nose</SYM></DIS>"
    )
    kb = records_to_kb(records)
    assert kb.findings["running_nose"].label == "Running Nose"


def test_treatment_category_priority():
    records = parse("<DIS>A<SYM>s</SYM><REG>Irrigation</REG></DIS>")
    records += parse("<DIS>B<SYM>s</SYM><TRP>Irrigation</TRP></DIS>")
    kb = records_to_kb(records)
    assert kb.treatments["irrigation"].category is TreatmentCategory.PRINCIPLE


def test_duplicate_disease_blocks_merge():
    records = parse(
        "<DIS>Zukam<SYM>running nose</SYM></DIS>"
        "<DIS>zukam<SYM>headache</SYM><ALT>Flu</ALT></DIS>"
    )
    kb = records_to_kb(records)
    assert list(kb.diseases) == ["zukam"]
    assert kb.diseases["zukam"].name == "Zukam"  # capital sorts first
    assert kb.diseases["zukam"].alt_name == "Flu"
    assert kb.findings_of("zukam") == {"running_nose", "headache"}


def test_record_order_does_not_change_the_kb():
    text = (
        "<DIS>A<SYM>s1</SYM><CAU>c1</CAU><TRP>t1</TRP></DIS>"
        "<DIS>B<SYM>s1</SYM><PRE>p1</PRE></DIS>"
        "<DIS>C<SYM>s3</SYM><REG>t1</REG></DIS>"
    )
    records = parse(text)
    shuffled = records[:]
    random.Random(7).shuffle(shuffled)
    assert kb_to_json(records_to_kb(records)) == kb_to_json(records_to_kb(shuffled))


@given(st.lists(disease_records(), max_size=4))
def test_generated_records_load_into_a_valid_kb(records):
    try:
        kb = records_to_kb(records)
    except FindingKindCollision:
        return  # cross-record collisions are legal generator output
    assert kb_validate(kb).ok
    produced = {i for r in records for i in r.symptoms + r.causes}
    assert set(kb.findings) == produced


def test_seed_documents_parse_to_three_diseases(seed_kb):
    from unani_cdss.seed import seed_documents

    records = [r for doc in seed_documents() for r in parse_tagged_text(doc)]
    assert [normalize_id(r.disease) for r in records] == ["insomnia", "migraine", "zukam"]
    assert records_to_kb(records).finding_edges == seed_kb.finding_edges
