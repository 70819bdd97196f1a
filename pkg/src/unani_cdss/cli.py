"""Operator command line: ingest, validate, train, diagnose, serve.

Exit codes: 0 success, 1 domain error (bad data, failed validation), 2 usage
error. Every command takes --json for machine-readable output.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click

from .engine import (
    DiagnosisParams,
    Differential,
    DifferentialEntry,
    InferenceError,
    diagnose as run_diagnosis,
    differential_to_doc,
)
from .ids import normalize_id
from .ingest import IngestError, TaggedDocument, parse_tagged_text, records_to_kb
from .learning import (
    LearningError,
    augment_leave_one_out,
    classify_text,
    dataset_from_csv,
    dataset_to_csv,
    generate_prompts,
    kb_to_dataset,
    model_to_json,
    resolve_text,
    text_model_to_doc,
    train_decision_tree,
    train_text_classifier,
    tree_predict,
    tree_to_doc,
)
from .model import (
    KbError,
    KnowledgeBase,
    graph_to_json,
    kb_export_graph,
    kb_from_json,
    kb_to_json,
    kb_validate,
)
from .rules import RuleError, canonicalize_ruleset, parse_ruleset, validate_ruleset
from .seed import build_seed_kb, load_seed_rules, load_seed_templates
from .service.config import ServiceConfig

DOMAIN_ERRORS = (IngestError, RuleError, KbError, InferenceError, LearningError, OSError)


def domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DOMAIN_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.option("--kb", "kb_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Knowledge-base JSON (default: packaged seed corpus).")
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Rule file (default: packaged rule files).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable JSON output.")
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Service data directory (serve).")
@click.pass_context
def main(ctx: click.Context, kb_path: Path | None, rules_path: Path | None,
         as_json: bool, data_dir: Path | None) -> None:
    ctx.obj = {
        "kb_path": kb_path,
        "rules_path": rules_path,
        "json": as_json,
        "data_dir": data_dir,
    }


def load_kb(ctx: click.Context) -> KnowledgeBase:
    path = ctx.obj["kb_path"]
    if path is None:
        return build_seed_kb()
    return kb_from_json(path.read_text(encoding="utf-8"))


def load_rules(ctx: click.Context):
    path = ctx.obj["rules_path"]
    if path is None:
        return load_seed_rules()
    return canonicalize_ruleset(parse_ruleset(path.read_text(encoding="utf-8"), path.name))


def emit(ctx: click.Context, doc: dict, text: str) -> None:
    if ctx.obj["json"]:
        click.echo(json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2))
    else:
        click.echo(text)


@main.command()
@click.argument("files", nargs=-1, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=Path("kb.json"),
              help="Output knowledge-base JSON path.")
@click.pass_context
@domain_errors
def ingest(ctx: click.Context, files: tuple[Path, ...], out: Path) -> None:
    """Parse tagged .umt FILES into one knowledge base."""
    if not files:
        raise click.UsageError("at least one tagged input file is required")
    records = []
    errors: list[str] = []
    for path in files:
        doc = TaggedDocument(source_name=path.name, text=path.read_text(encoding="utf-8"))
        try:
            records.extend(parse_tagged_text(doc))
        except IngestError as exc:
            errors.append(f"{path}: {exc}")
    if errors:
        for message in errors:
            click.echo(f"error: {message}", err=True)
        sys.exit(1)
    kb = records_to_kb(records)
    out.write_text(kb_to_json(kb), encoding="utf-8")
    graph = kb_export_graph(kb)
    counts = {
        "diseases": len(kb.diseases),
        "findings": len(kb.findings),
        "treatments": len(kb.treatments),
        "nodes": len(graph["nodes"]),
        "edges": len(graph["edges"]),
        "out": str(out),
    }
    emit(ctx, counts,
         f"{counts['diseases']} diseases, {counts['findings']} findings, "
         f"{counts['treatments']} treatments ({counts['nodes']} nodes, "
         f"{counts['edges']} edges) -> {out}")


@main.command()
@click.pass_context
@domain_errors
def validate(ctx: click.Context) -> None:
    """Check KB structure and rule/KB alignment."""
    kb = load_kb(ctx)
    rules = load_rules(ctx)
    report_kb = kb_validate(kb)
    report_rules = validate_ruleset(rules, kb)
    issues = list(report_kb.issues) + list(report_rules.issues)
    ok = report_kb.ok and report_rules.ok
    doc = {
        "ok": ok,
        "issues": [dataclasses.asdict(i) for i in issues],
    }
    text = "ok" if not issues else "\n".join(
        f"{i.severity}[{i.code}] {i.subject}: {i.message}" for i in issues
    )
    emit(ctx, doc, text)
    if not ok:
        sys.exit(1)


@main.command("export-graph")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Output path (default: stdout).")
@click.pass_context
@domain_errors
def export_graph(ctx: click.Context, out: Path | None) -> None:
    """Write the node/edge projection of the knowledge base."""
    graph = kb_export_graph(load_kb(ctx))
    payload = graph_to_json(graph)
    if out is None:
        click.echo(payload, nl=False)
    else:
        out.write_text(payload, encoding="utf-8")
        emit(ctx, {"nodes": len(graph["nodes"]), "edges": len(graph["edges"]), "out": str(out)},
             f"{len(graph['nodes'])} nodes, {len(graph['edges'])} edges -> {out}")


@main.group()
def rules() -> None:
    """Rule file operations."""


@rules.command("check")
@click.pass_context
@domain_errors
def rules_check(ctx: click.Context) -> None:
    """Parse the ruleset and validate it against the knowledge base."""
    kb = load_kb(ctx)
    ruleset = load_rules(ctx)
    report = validate_ruleset(ruleset, kb)
    doc = {
        "ok": report.ok,
        "rules": len(ruleset),
        "issues": [dataclasses.asdict(i) for i in report.issues],
    }
    emit(ctx, doc, f"{len(ruleset)} rules: {report.render()}")
    if not report.ok:
        sys.exit(1)


@main.command("diagnose")
@click.option("--findings", "findings_csv", default=None,
              help="Comma-separated finding ids.")
@click.option("--text", "free_text", default=None, help="Free-text symptom description.")
@click.option("--engine", type=click.Choice(["rules", "tree", "text"]), default="rules")
@click.option("--threshold", type=float, default=0.0, help="Minimum score to report.")
@click.option("--strict", is_flag=True, help="Reject findings unknown to the KB.")
@click.pass_context
@domain_errors
def diagnose_cmd(ctx: click.Context, findings_csv: str | None, free_text: str | None,
                 engine: str, threshold: float, strict: bool) -> None:
    """Rank diseases for a set of findings or a textual description."""
    if findings_csv is None and free_text is None:
        raise click.UsageError("provide --findings or --text")
    if findings_csv is not None and free_text is not None:
        raise click.UsageError("--findings and --text are mutually exclusive")
    kb = load_kb(ctx)

    if engine == "text":
        if free_text is None:
            raise click.UsageError("--engine text requires --text")
        model = train_text_classifier(generate_prompts(kb, load_seed_templates()))
        differential = classify_text(model, free_text)
    else:
        if free_text is not None:
            findings, unresolved = resolve_text(kb, free_text)
            for fragment in unresolved:
                click.echo(f"warning: unrecognized: {fragment}", err=True)
        else:
            findings = {normalize_id(f) for f in findings_csv.split(",") if f.strip()}
        if engine == "rules":
            params = DiagnosisParams(threshold=threshold, strict_vocabulary=strict)
            differential = run_diagnosis(kb, load_rules(ctx), findings, params)
        else:
            tree = train_decision_tree(augment_leave_one_out(kb_to_dataset(kb), depth=1))
            label, dist = tree_predict(tree, tree.space.vector_of(findings))
            ranked = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
            differential = Differential(entries=tuple(
                DifferentialEntry(d, p, frozenset(), frozenset(), ()) for d, p in ranked
            ))

    doc = differential_to_doc(differential)
    width = max([len("disease"), *(len(e.disease_id) for e in differential.entries)])
    lines = [f"{'disease':<{width}}  score   fired"]
    for e in differential.entries:
        lines.append(f"{e.disease_id:<{width}}  {e.score:.4f}  {','.join(e.fired_rules) or '-'}")
    for warning in differential.warnings:
        lines.append(f"warning: unknown finding {warning}")
    emit(ctx, doc, "\n".join(lines))


@main.command()
@click.option("--depth", type=int, default=1, help="Removal passes per row.")
@click.option("--csv-in", "csv_in", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Dataset CSV (default: derive from the KB).")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the augmented dataset CSV here.")
@click.pass_context
@domain_errors
def augment(ctx: click.Context, depth: int, csv_in: Path | None, out: Path | None) -> None:
    """Grow the training dataset by leave-one-out removal."""
    if depth < 0:
        raise click.UsageError("--depth must be >= 0")
    if csv_in is not None:
        dataset = dataset_from_csv(csv_in.read_text(encoding="utf-8"))
    else:
        dataset = kb_to_dataset(load_kb(ctx))
    augmented = augment_leave_one_out(dataset, depth=depth)
    added = len(augmented.rows) - len(dataset.rows)
    if out is not None:
        out.write_text(dataset_to_csv(augmented), encoding="utf-8")
    doc = {"augmented": added, "total": len(augmented.rows)}
    if out is not None:
        doc["out"] = str(out)
    emit(ctx, doc, f"{added} augmented rows")


@main.command()
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path),
              default=Path("models"), help="Directory for model files.")
@click.option("--depth", type=int, default=1, help="Augmentation depth before training.")
@click.pass_context
@domain_errors
def train(ctx: click.Context, out_dir: Path, depth: int) -> None:
    """Train the decision tree and the text classifier; write versioned JSON."""
    kb = load_kb(ctx)
    dataset = augment_leave_one_out(kb_to_dataset(kb), depth=depth)
    tree = train_decision_tree(dataset)
    correct = sum(
        1 for row in dataset.rows if tree_predict(tree, row.vector)[0] == row.label
    )
    text_model = train_text_classifier(generate_prompts(kb, load_seed_templates()))

    out_dir.mkdir(parents=True, exist_ok=True)
    tree_path = out_dir / "tree.json"
    text_path = out_dir / "text_model.json"
    tree_path.write_text(model_to_json(tree_to_doc(tree)), encoding="utf-8")
    text_path.write_text(model_to_json(text_model_to_doc(text_model)), encoding="utf-8")
    doc = {
        "rows": len(dataset.rows),
        "training_accuracy": correct / len(dataset.rows),
        "tree": str(tree_path),
        "text_model": str(text_path),
    }
    emit(ctx, doc,
         f"tree -> {tree_path} (training accuracy {doc['training_accuracy']:.3f}), "
         f"text model -> {text_path}")


@main.command()
@click.option("--host", default=None, help="Bind address (default from env).")
@click.option("--port", type=int, default=None, help="Bind port (default from env).")
@click.pass_context
@domain_errors
def serve(ctx: click.Context, host: str | None, port: int | None) -> None:
    """Run the REST service until interrupted."""
    from .service.app import run_service

    config = ServiceConfig.from_env()
    overrides = {}
    if host is not None:
        overrides["host"] = host
    if port is not None:
        overrides["port"] = port
    if ctx.obj["data_dir"] is not None:
        overrides["data_dir"] = ctx.obj["data_dir"]
    if ctx.obj["kb_path"] is not None:
        overrides["kb_path"] = ctx.obj["kb_path"]
    if ctx.obj["rules_path"] is not None:
        overrides["rules_path"] = ctx.obj["rules_path"]
    run_service(dataclasses.replace(config, **overrides))


if __name__ == "__main__":
    main()
