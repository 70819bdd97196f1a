"""Depth sweep for leave-one-out augmentation on the seed knowledge base.

For each depth the script reports how many synthetic rows the level pools
contribute per disease, the shape of the tree trained on the result, and two
probe accuracies: the training rows themselves and every single-finding
vector. The single-finding probe is the point of the exercise; a tree trained
on source rows alone has never seen a one-finding presentation.

    python3 scripts/augmentation_study.py
    python3 scripts/augmentation_study.py --max-depth 6 --random 50
"""

from __future__ import annotations

import argparse
import random
import statistics
from collections import Counter

from unani_cdss.learning import (
    DecisionTree,
    RowOrigin,
    TreeLeaf,
    augment_leave_one_out,
    kb_to_dataset,
    train_decision_tree,
    tree_predict,
)
from unani_cdss.seed import build_seed_kb


def tree_shape(tree: DecisionTree) -> tuple[int, int]:
    def walk(node, level):
        if isinstance(node, TreeLeaf):
            return 1, level
        left_n, left_d = walk(node.absent, level + 1)
        right_n, right_d = walk(node.present, level + 1)
        return left_n + right_n + 1, max(left_d, right_d)

    return walk(tree.root, 0)


def training_accuracy(tree, dataset) -> float:
    hits = sum(tree_predict(tree, row.vector)[0] == row.label for row in dataset.rows)
    return hits / len(dataset.rows)


def one_hot_agreement(tree, dataset, kb) -> tuple[int, int]:
    """How many single-finding vectors land on a disease listing that finding."""
    hits = 0
    for position, finding_id in enumerate(dataset.space.features):
        vector = tuple(int(i == position) for i in range(len(dataset.space.features)))
        label, _ = tree_predict(tree, vector)
        hits += finding_id in kb.findings_of(label)
    return hits, len(dataset.space.features)


def seed_sweep(max_depth: int) -> None:
    kb = build_seed_kb()
    source = kb_to_dataset(kb)
    print(
        f"seed dataset: {len(source.rows)} source rows over "
        f"{len(source.space.features)} findings"
    )
    print(f"{'depth':>5}  {'rows':>4}  {'added per disease':<34}  "
          f"{'nodes':>5}  {'height':>6}  {'train':>5}  {'one-hot':>7}")
    for depth in range(max_depth + 1):
        dataset = augment_leave_one_out(source, depth=depth)
        added = Counter(
            row.label for row in dataset.rows if row.origin is RowOrigin.AUGMENTED
        )
        tree = train_decision_tree(dataset)
        nodes, height = tree_shape(tree)
        hits, total = one_hot_agreement(tree, dataset, kb)
        added_text = ", ".join(f"{d}={n}" for d, n in sorted(added.items())) or "-"
        print(
            f"{depth:>5}  {len(dataset.rows):>4}  {added_text:<34}  "
            f"{nodes:>5}  {height:>6}  {training_accuracy(tree, dataset):>5.3f}  "
            f"{hits:>4}/{total}"
        )


def random_sweep(count: int, seed: int) -> None:
    import sys
    from pathlib import Path

    sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
    from generators import random_dataset

    rng = random.Random(seed)
    added_counts, accuracies = [], []
    for _ in range(count):
        dataset = random_dataset(rng)
        augmented = augment_leave_one_out(dataset, depth=1)
        added_counts.append(len(augmented.rows) - len(dataset.rows))
        tree = train_decision_tree(augmented)
        accuracies.append(training_accuracy(tree, augmented))
    print(
        f"\n{count} random datasets (seed {seed}): "
        f"depth-1 rows added min/median/max = "
        f"{min(added_counts)}/{statistics.median(added_counts)}/{max(added_counts)}, "
        f"mean training accuracy = {statistics.fmean(accuracies):.3f}"
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-depth", type=int, default=4)
    parser.add_argument(
        "--random", type=int, default=0, metavar="N",
        help="also summarize N randomly generated datasets",
    )
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args(argv)

    seed_sweep(args.max_depth)
    if args.random:
        random_sweep(args.random, args.seed)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
