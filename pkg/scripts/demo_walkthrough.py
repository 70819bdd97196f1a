"""End-to-end console walkthrough: complaint text to treatment plan.

Runs entirely in process (no HTTP service): resolves free-text complaints
against the seed knowledge base, ranks diseases with all three engines, and
prints the treatment plan for the top-ranked disease.

    python3 scripts/demo_walkthrough.py
    python3 scripts/demo_walkthrough.py --text "dryness and lean body"
"""

from __future__ import annotations

import argparse
import sys

from unani_cdss.engine import diagnose, explain, recommend_treatments
from unani_cdss.learning import (
    augment_leave_one_out,
    classify_text,
    generate_prompts,
    kb_to_dataset,
    resolve_text,
    train_decision_tree,
    train_text_classifier,
    tree_predict,
)
from unani_cdss.model import kb_validate
from unani_cdss.rules import validate_ruleset
from unani_cdss.seed import build_seed_kb, load_seed_rules, load_seed_templates


def print_differential(title: str, entries) -> None:
    print(f"\n{title}")
    if not entries:
        print("  (no candidates)")
        return
    width = max(len(e[0]) for e in entries)
    for disease_id, score, note in entries:
        print(f"  {disease_id:<{width}}  {score:.4f}  {note}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--text",
        default="Patient complains of running nose and headache",
        help="free-text complaint to resolve against the knowledge base",
    )
    args = parser.parse_args(argv)

    kb = build_seed_kb()
    rules = load_seed_rules()
    print(
        f"knowledge base: {len(kb.diseases)} diseases, "
        f"{len(kb.findings)} findings, {len(kb.treatments)} treatments"
    )
    for report in (kb_validate(kb), validate_ruleset(rules, kb)):
        if not report.ok:
            print(report.render(), file=sys.stderr)
            return 1
    print(f"validation: knowledge base and {len(rules)} rules are clean")

    found, leftover = resolve_text(kb, args.text)
    print(f'\ncomplaint: "{args.text}"')
    print(f"resolved findings: {sorted(found) or '(none)'}")
    if leftover:
        print(f"unrecognized: {leftover}")
    if not found:
        print("nothing to diagnose", file=sys.stderr)
        return 1

    differential = diagnose(kb, rules, found)
    print_differential(
        "rule engine differential (score = matched/required findings):",
        [
            (e.disease_id, e.score, ", ".join(e.fired_rules) or "-")
            for e in differential.entries
        ],
    )

    dataset = augment_leave_one_out(kb_to_dataset(kb), depth=1)
    tree = train_decision_tree(dataset)
    label, distribution = tree_predict(tree, dataset.space.vector_of(found))
    print_differential(
        f"decision tree (trained on {len(dataset.rows)} rows):",
        [(d, p, "") for d, p in sorted(distribution.items(), key=lambda kv: -kv[1])],
    )

    model = train_text_classifier(generate_prompts(kb, load_seed_templates()))
    text_differential = classify_text(model, args.text)
    print_differential(
        f"text classifier (vocabulary of {len(model.vocabulary)} tokens):",
        [(e.disease_id, e.score, "") for e in text_differential.entries],
    )

    top = differential.entries[0].disease_id
    print(f"\nexplanation for top-ranked disease:\n{explain(differential, top, rules)}")

    plan = recommend_treatments(kb, rules, top)
    print(f"treatment plan for {kb.diseases[top].name}:")
    for category, ids in (
        ("principles", plan.principle),
        ("regimental", plan.regimental),
        ("prevention", plan.prevention),
    ):
        print(f"  {category}:")
        if not ids:
            print("    (none recorded)")
        for item_id in ids:
            via = ", ".join(plan.provenance[item_id])
            print(f"    {kb.treatments[item_id].label}  [{via}]")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
