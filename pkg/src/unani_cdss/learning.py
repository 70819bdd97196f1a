"""Dataset derivation and the two learned engines.

The KB flattens into a binary feature matrix (one row per disease over the
sorted finding ids). Leave-one-out augmentation grows it without ever letting
one vector name two diseases. On top sit a from-scratch Gini decision tree
and a bag-of-words naive-Bayes classifier trained on template-generated
sentences; both immutable after training and persisted as versioned JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from enum import Enum

from .engine import Differential, DifferentialEntry
from .model import FindingKind, KnowledgeBase


class LearningError(Exception):
    pass


class EmptyKnowledgeBase(LearningError):
    pass


class NonUniqueSourceVectors(LearningError):
    pass


class VectorLengthMismatch(LearningError):
    pass


class UnknownPlaceholder(LearningError):
    def __init__(self, name: str):
        super().__init__(f"unknown placeholder {{{name}}}")
        self.name = name


class EmptyCorpus(LearningError):
    pass


class EmptyText(LearningError):
    pass


class ModelFormatError(LearningError):
    pass


class RowOrigin(str, Enum):
    SOURCE = "source"
    AUGMENTED = "augmented"


@dataclass(frozen=True)
class FeatureSpace:
    features: tuple[str, ...]

    def __post_init__(self) -> None:
        if list(self.features) != sorted(set(self.features)):
            raise LearningError("feature space must be sorted and duplicate-free")

    def vector_of(self, present: set[str]) -> tuple[int, ...]:
        return tuple(1 if f in present else 0 for f in self.features)


@dataclass(frozen=True)
class Row:
    vector: tuple[int, ...]
    label: str
    origin: RowOrigin


@dataclass(frozen=True)
class LabeledDataset:
    space: FeatureSpace
    rows: tuple[Row, ...]


def kb_to_dataset(kb: KnowledgeBase) -> LabeledDataset:
    """One source row per disease over the sorted finding-id feature space."""
    if not kb.diseases:
        raise EmptyKnowledgeBase("knowledge base has no diseases")
    space = FeatureSpace(tuple(sorted(kb.findings)))
    rows = tuple(
        Row(space.vector_of(kb.findings_of(d)), d, RowOrigin.SOURCE)
        for d in sorted(kb.diseases)
    )
    return LabeledDataset(space, rows)


def augment_leave_one_out(ds: LabeledDataset, depth: int = 1) -> LabeledDataset:
    """Grow the dataset by dropping one set bit at a time, `depth` times over.

    Candidates are pooled per level (row order, then ascending bit index). A
    candidate is kept only if its vector is new AND no other-label candidate
    in the same pool produced the same vector; ambiguous vectors are dropped
    from every label so the vector-to-label map stays a function. Accepted
    rows seed the next level.
    """
    label_by_vector: dict[tuple[int, ...], str] = {}
    for row in ds.rows:
        prior = label_by_vector.get(row.vector)
        if row.origin is RowOrigin.SOURCE and prior is not None and prior != row.label:
            raise NonUniqueSourceVectors(f"vector shared by {prior} and {row.label}")
        label_by_vector.setdefault(row.vector, row.label)

    accepted: list[Row] = []
    frontier = [r for r in ds.rows if r.origin is RowOrigin.SOURCE]
    for _ in range(depth):
        pool: list[tuple[tuple[int, ...], str]] = []
        labels_of: dict[tuple[int, ...], set[str]] = {}
        for row in frontier:
            for bit, value in enumerate(row.vector):
                if not value:
                    continue
                candidate = row.vector[:bit] + (0,) + row.vector[bit + 1 :]
                if not any(candidate):
                    continue
                pool.append((candidate, row.label))
                labels_of.setdefault(candidate, set()).add(row.label)

        frontier = []
        for vector, label in pool:
            if len(labels_of[vector]) > 1:
                continue  # ambiguous within this level: dropped for every label
            if vector in label_by_vector:
                continue  # duplicate of an existing row (any label)
            row = Row(vector, label, RowOrigin.AUGMENTED)
            label_by_vector[vector] = label
            accepted.append(row)
            frontier.append(row)
        if not frontier:
            break

    return LabeledDataset(ds.space, ds.rows + tuple(accepted))


# ---------------------------------------------------------------------------
# CSV round trip


def dataset_to_csv(ds: LabeledDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(ds.space.features) + ["label", "origin"])
    for row in ds.rows:
        writer.writerow(list(row.vector) + [row.label, row.origin.value])
    return buf.getvalue()


def dataset_from_csv(text: str) -> LabeledDataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise LearningError("empty CSV") from None
    if len(header) < 3 or header[-2:] != ["label", "origin"]:
        raise LearningError("CSV header must end with label,origin")
    space = FeatureSpace(tuple(header[:-2]))
    rows: list[Row] = []
    for record in reader:
        if len(record) != len(header):
            raise LearningError(f"CSV row has {len(record)} fields, expected {len(header)}")
        try:
            vector = tuple(int(v) for v in record[:-2])
            origin = RowOrigin(record[-1])
        except ValueError as exc:
            raise LearningError(str(exc)) from None
        if any(v not in (0, 1) for v in vector):
            raise LearningError("feature values must be 0 or 1")
        rows.append(Row(vector, record[-2], origin))
    return LabeledDataset(space, tuple(rows))


# ---------------------------------------------------------------------------
# Decision tree


@dataclass(frozen=True)
class TreeLeaf:
    label: str
    counts: dict[str, int]


@dataclass(frozen=True)
class TreeSplit:
    feature: int
    absent: TreeLeaf | TreeSplit
    present: TreeLeaf | TreeSplit


@dataclass(frozen=True)
class DecisionTree:
    space: FeatureSpace
    root: TreeLeaf | TreeSplit


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_leaf: int = 1


def _gini(counts: dict[str, int]) -> float:
    total = sum(counts.values())
    return 1.0 - sum((n / total) ** 2 for n in counts.values())


def _counts(rows: list[Row]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for row in rows:
        counts[row.label] = counts.get(row.label, 0) + 1
    return counts


def _majority(counts: dict[str, int]) -> str:
    best = max(counts.values())
    return min(label for label, n in counts.items() if n == best)


def train_decision_tree(ds: LabeledDataset, params: TreeParams | None = None) -> DecisionTree:
    """Greedy binary CART on presence/absence features, Gini criterion.

    Ties in impurity decrease go to the lowest feature index; each path tests
    a feature at most once; leaves carry full class counts.
    """
    params = params or TreeParams()
    if not ds.rows:
        raise LearningError("cannot train on an empty dataset")

    def build(rows: list[Row], used: frozenset[int], depth: int) -> TreeLeaf | TreeSplit:
        counts = _counts(rows)
        if (
            len(counts) == 1
            or (params.max_depth is not None and depth >= params.max_depth)
            or len(rows) < 2 * params.min_samples_leaf
        ):
            return TreeLeaf(_majority(counts), counts)

        parent_gini = _gini(counts)
        # Start below zero: a separating split beats a leaf even at zero
        # decrease, otherwise XOR-shaped label-unique data stalls impure.
        best_feature, best_decrease = None, -1.0
        for f in range(len(ds.space.features)):
            if f in used:
                continue
            left = [r for r in rows if not r.vector[f]]
            right = [r for r in rows if r.vector[f]]
            if len(left) < params.min_samples_leaf or len(right) < params.min_samples_leaf:
                continue
            weighted = (
                len(left) * _gini(_counts(left)) + len(right) * _gini(_counts(right))
            ) / len(rows)
            decrease = parent_gini - weighted
            if decrease > best_decrease + 1e-12:
                best_feature, best_decrease = f, decrease
        if best_feature is None:
            return TreeLeaf(_majority(counts), counts)

        left = [r for r in rows if not r.vector[best_feature]]
        right = [r for r in rows if r.vector[best_feature]]
        used = used | {best_feature}
        return TreeSplit(
            feature=best_feature,
            absent=build(left, used, depth + 1),
            present=build(right, used, depth + 1),
        )

    return DecisionTree(ds.space, build(list(ds.rows), frozenset(), 0))


def tree_predict(tree: DecisionTree, vector: tuple[int, ...]) -> tuple[str, dict[str, float]]:
    if len(vector) != len(tree.space.features):
        raise VectorLengthMismatch(
            f"vector has {len(vector)} features, space has {len(tree.space.features)}"
        )
    node = tree.root
    while isinstance(node, TreeSplit):
        node = node.present if vector[node.feature] else node.absent
    total = sum(node.counts.values())
    return node.label, {label: n / total for label, n in sorted(node.counts.items())}


def tree_to_doc(tree: DecisionTree) -> dict:
    def encode(node: TreeLeaf | TreeSplit) -> dict:
        if isinstance(node, TreeLeaf):
            return {"type": "leaf", "label": node.label, "counts": dict(sorted(node.counts.items()))}
        return {
            "type": "split",
            "feature": node.feature,
            "absent": encode(node.absent),
            "present": encode(node.present),
        }

    return {
        "version": 1,
        "kind": "decision_tree",
        "space": list(tree.space.features),
        "root": encode(tree.root),
    }


def tree_from_doc(doc: dict) -> DecisionTree:
    if doc.get("kind") != "decision_tree" or doc.get("version") != 1:
        raise ModelFormatError("not a version-1 decision_tree document")

    def decode(node: dict) -> TreeLeaf | TreeSplit:
        if node["type"] == "leaf":
            return TreeLeaf(node["label"], dict(node["counts"]))
        return TreeSplit(node["feature"], decode(node["absent"]), decode(node["present"]))

    try:
        return DecisionTree(FeatureSpace(tuple(doc["space"])), decode(doc["root"]))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed decision_tree document: {exc}") from None


# ---------------------------------------------------------------------------
# Template prompts and the text engine


@dataclass(frozen=True)
class PromptCorpus:
    sentences: tuple[tuple[str, str], ...]  # (text, disease id)


_PLACEHOLDER_RE = re.compile(r"\{([a-z_]*)\}")
_PLACEHOLDERS = {"disease", "symptom_list", "cause_list", "symptom", "cause"}


def generate_prompts(kb: KnowledgeBase, templates: list[str]) -> PromptCorpus:
    """Expand each template per disease with finding labels, deterministically.

    {symptom}/{cause} expand once per item (cartesian product if both
    appear); {symptom_list}/{cause_list} join all labels. A template that
    references a category the disease lacks produces no sentence for it.
    """
    for template in templates:
        for name in _PLACEHOLDER_RE.findall(template):
            if name not in _PLACEHOLDERS:
                raise UnknownPlaceholder(name)

    sentences: list[tuple[str, str]] = []
    for disease_id in sorted(kb.diseases):
        disease = kb.diseases[disease_id]
        findings = [kb.findings[f] for f in sorted(kb.findings_of(disease_id))]
        symptoms = [f.label for f in findings if f.kind is FindingKind.SYMPTOM]
        causes = [f.label for f in findings if f.kind is FindingKind.CAUSE]
        for template in templates:
            names = set(_PLACEHOLDER_RE.findall(template))
            if ({"symptom", "symptom_list"} & names and not symptoms) or (
                {"cause", "cause_list"} & names and not causes
            ):
                continue
            values = {
                "disease": disease.name,
                "symptom_list": ", ".join(symptoms),
                "cause_list": ", ".join(causes),
            }
            sym_slots = symptoms if "symptom" in names else [None]
            cau_slots = causes if "cause" in names else [None]
            for sym in sym_slots:
                for cau in cau_slots:
                    text = template.format(
                        **values, symptom=sym or "", cause=cau or ""
                    ).strip()
                    if text:
                        sentences.append((text, disease_id))
    return PromptCorpus(tuple(sentences))


def tokenize(text: str) -> list[str]:
    return [t for t in re.split(r"[^a-z0-9]+", text.lower()) if t]


@dataclass(frozen=True)
class TextModel:
    label_docs: dict[str, int]
    token_counts: dict[str, dict[str, int]]
    vocabulary: tuple[str, ...]


def train_text_classifier(corpus: PromptCorpus) -> TextModel:
    if not corpus.sentences:
        raise EmptyCorpus("corpus has no sentences")
    label_docs: dict[str, int] = {}
    token_counts: dict[str, dict[str, int]] = {}
    vocab: set[str] = set()
    for text, label in corpus.sentences:
        label_docs[label] = label_docs.get(label, 0) + 1
        counts = token_counts.setdefault(label, {})
        for token in tokenize(text):
            counts[token] = counts.get(token, 0) + 1
            vocab.add(token)
    return TextModel(label_docs, token_counts, tuple(sorted(vocab)))


def classify_text(model: TextModel, text: str) -> Differential:
    """Per-label multinomial posterior with add-one smoothing, as entries.

    Tokens outside the training vocabulary are skipped; scores are true
    posteriors (sum to 1). The matched/missing/fired fields stay empty since
    no rule participates.
    """
    tokens = tokenize(text)
    if not tokens:
        raise EmptyText("no tokens after normalization")
    vocab = set(model.vocabulary)
    tokens = [t for t in tokens if t in vocab]

    total_docs = sum(model.label_docs.values())
    vsize = len(model.vocabulary)
    log_scores: dict[str, float] = {}
    for label, docs in model.label_docs.items():
        counts = model.token_counts.get(label, {})
        total_tokens = sum(counts.values())
        score = math.log(docs / total_docs)
        for token in tokens:
            score += math.log((counts.get(token, 0) + 1) / (total_tokens + vsize))
        log_scores[label] = score

    peak = max(log_scores.values())
    raw = {label: math.exp(s - peak) for label, s in log_scores.items()}
    norm = sum(raw.values())
    entries = tuple(
        DifferentialEntry(label, raw[label] / norm, frozenset(), frozenset(), ())
        for label in sorted(raw, key=lambda l: (-raw[l], l))
    )
    return Differential(entries=entries)


def text_model_to_doc(model: TextModel) -> dict:
    return {
        "version": 1,
        "kind": "text_classifier",
        "label_docs": dict(sorted(model.label_docs.items())),
        "token_counts": {
            label: dict(sorted(counts.items()))
            for label, counts in sorted(model.token_counts.items())
        },
        "vocabulary": list(model.vocabulary),
    }


def text_model_from_doc(doc: dict) -> TextModel:
    if doc.get("kind") != "text_classifier" or doc.get("version") != 1:
        raise ModelFormatError("not a version-1 text_classifier document")
    try:
        return TextModel(
            label_docs=dict(doc["label_docs"]),
            token_counts={k: dict(v) for k, v in doc["token_counts"].items()},
            vocabulary=tuple(doc["vocabulary"]),
        )
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed text_classifier document: {exc}") from None


def model_to_json(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Free-text symptom resolution

STOPWORDS = frozenset(
    """a an and are am been complains complaining feel feeling feels for had has
    have he i is me my of or patient plus reports she since some the they with
    """.split()
)


def _phrase_table(kb: KnowledgeBase) -> dict[tuple[str, ...], set[str]]:
    table: dict[tuple[str, ...], set[str]] = {}
    for finding in kb.findings.values():
        for phrase in {finding.label.lower()} | set(finding.synonyms):
            words = tuple(tokenize(phrase))
            if words:
                table.setdefault(words, set()).add(finding.id)
    return table


def text_to_findings(kb: KnowledgeBase, text: str) -> set[str]:
    ids, _ = resolve_text(kb, text)
    return ids


def resolve_text(kb: KnowledgeBase, text: str) -> tuple[set[str], list[str]]:
    """Longest-match scan of finding labels/synonyms over the tokenized text.

    Returns resolved finding ids and the leftover word runs (connectives
    dropped) so callers can surface what was not understood.
    """
    words = tokenize(text)
    table = _phrase_table(kb)
    longest = max((len(p) for p in table), default=0)

    resolved: set[str] = set()
    unresolved: list[str] = []
    run: list[str] = []
    i = 0
    while i < len(words):
        match_len = 0
        for length in range(min(longest, len(words) - i), 0, -1):
            ids = table.get(tuple(words[i : i + length]))
            if ids:
                resolved.update(ids)
                match_len = length
                break
        if match_len:
            if run:
                unresolved.append(" ".join(run))
                run = []
            i += match_len
        else:
            if words[i] not in STOPWORDS:
                run.append(words[i])
            elif run:
                unresolved.append(" ".join(run))
                run = []
            i += 1
    if run:
        unresolved.append(" ".join(run))
    return resolved, unresolved
