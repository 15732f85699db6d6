"""Command-line front door.

Exit codes: 0 success, 1 domain error, 2 usage error.  Human-readable text
goes to stdout and is unstable; ``--json`` emits the underlying report
verbatim and is the compatibility contract.  Logs go to stderr.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import click

from . import __version__
from .analytics import (
    EventSpan,
    concept_pyramid,
    density_to_csv,
    distribution_to_csv,
    icd as compute_icd,
    pyramid_to_csv,
    render_pyramid,
    stroke_distribution,
)
from .classify import (
    Dataset,
    cross_validate_grid,
    evaluate,
    load_model,
    save_model,
    train as train_model,
)
from .errors import InvalidSpec, MalformedInput, SketchError
from .features import export_feature_matrix, extract_features
from .repo import Repository, replay_session
from .sessions import load_session, save_session
from .strokes import load_strokes, parse_stroke, record_to_obj
from .summarize import LlmClientConfig, chronicle_from_repo, summarize_deterministic, summarize_llm
from .synth import (
    MANUAL_BASELINE_SHAPE,
    TRACKED_SESSION_SHAPE,
    StrokeGenSpec,
    gen_dataset,
    gen_session,
    gen_stroke,
    read_dataset,
    write_dataset,
)
from .similarity import (
    layer_rank,
    load_activation,
    load_activation_csv,
    mann_whitney_u,
    mean_pool,
    similarity_matrix,
)


class DomainErrorGroup(click.Group):
    """Translates domain errors to exit code 1 (usage errors stay 2)."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except SketchError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(1)


def emit(payload: dict, as_json: bool, text: str | None = None) -> None:
    if as_json:
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(text if text is not None else json.dumps(payload, indent=2))


@click.group(cls=DomainErrorGroup)
@click.version_option(__version__, prog_name="sketchvc")
def cli():
    """Stroke-level version control and stroke analytics."""


# --- repo ------------------------------------------------------------------

@cli.group()
def repo():
    """Repository operations."""


@repo.command("init")
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--author", default="designer", show_default=True)
@click.option("--author-id", default=None)
def repo_init(path, author, author_id):
    """Create an empty repository."""
    Repository.init(path, author_name=author, author_id=author_id)
    click.echo(f"initialised repository at {path}")


@repo.command("commit")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("-m", "--message", default="", help="Commit intent message.")
@click.option("--strokes", "strokes_file", type=click.Path(exists=True, path_type=Path),
              help="JSON stroke file appended to the canvas before committing.")
@click.option("--source", type=click.Choice(["typed", "speech"]), default="typed", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def repo_commit(path, message, strokes_file, source, as_json):
    """Snapshot the canvas as a new commit."""
    repository = Repository.open(path)
    if strokes_file:
        for record in load_strokes(strokes_file):
            repository.add_stroke(record)
    commit_id = repository.commit(message, transcript_source=source)
    kind, value = repository.head()
    emit({"commit_id": commit_id, "head": {"kind": kind, "value": value}}, as_json, commit_id)


@repo.command("checkout")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.argument("commit_id")
@click.option("--json", "as_json", is_flag=True)
def repo_checkout(path, commit_id, as_json):
    """Restore the canvas to a commit (dirty strokes auto-stash)."""
    repository = Repository.open(path)
    canvas = repository.checkout(commit_id)
    kind, value = repository.head()
    emit(
        {"base": canvas.base, "stroke_count": len(canvas.strokes),
         "stroke_ids": canvas.stroke_ids(), "head": {"kind": kind, "value": value}},
        as_json,
        f"restored {len(canvas.strokes)} strokes at {commit_id[:12]}",
    )


@repo.command("diff")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.argument("a")
@click.argument("b")
@click.option("--json", "as_json", is_flag=True)
def repo_diff(path, a, b, as_json):
    """Stroke-set difference between two commits."""
    report = Repository.open(path).diff(a, b)
    emit(report.to_dict(), as_json,
         f"+{len(report.added)} -{len(report.removed)} (delta {report.stroke_count_delta:+d})")


@repo.command("log")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def repo_log(path, as_json):
    """All commits, parents before children."""
    nodes = Repository.open(path).log()
    payload = {"commits": [n.to_obj() for n in nodes]}
    text = "\n".join(f"{n.id[:12]} [{n.branch_hint}] {n.message}" for n in nodes)
    emit(payload, as_json, text)


@repo.command("slideshow")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.argument("tip")
@click.option("--json", "as_json", is_flag=True)
def repo_slideshow(path, tip, as_json):
    """Root-to-tip playback order."""
    frames = Repository.open(path).slideshow(tip)
    payload = {"frames": [n.to_obj() for n in frames]}
    emit(payload, as_json, "\n".join(f"{i}: {n.id[:12]} {n.message}" for i, n in enumerate(frames)))


@repo.command("tree")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def repo_tree(path, as_json):
    """Version tree (nodes, edges, branch tips)."""
    tree = Repository.open(path).version_tree()
    text = "\n".join(
        f"{n['id'][:12]} <- {(n['parent'] or 'root')[:12]} [{n['branch_hint']}] {n['message']}"
        for n in tree["nodes"]
    )
    emit(tree, as_json, text)


@repo.command("stash")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.argument("action", type=click.Choice(["save", "restore", "show"]))
@click.option("--strokes", "strokes_file", type=click.Path(exists=True, path_type=Path),
              help="Strokes to stash (for save).")
@click.option("--json", "as_json", is_flag=True)
def repo_stash(path, action, strokes_file, as_json):
    """Single-slot auto-recovery cache."""
    repository = Repository.open(path)
    if action == "save":
        if strokes_file:
            for record in load_strokes(strokes_file):
                repository.add_stroke(record)
        repository.stash_save()
        emit({"stashed": len(repository.canvas.strokes)}, as_json,
             f"stashed {len(repository.canvas.strokes)} strokes")
    elif action == "restore":
        canvas = repository.stash_restore()
        emit({"base": canvas.base, "strokes": [record_to_obj(s) for s in canvas.strokes]},
             as_json, f"restored {len(canvas.strokes)} strokes")
    else:
        canvas = repository.stash_peek()
        occupied = canvas is not None
        emit({"occupied": occupied, "stroke_count": len(canvas.strokes) if occupied else 0},
             as_json, "occupied" if occupied else "empty")


# --- generators ----------------------------------------------------------------

@cli.group()
def gen():
    """Synthetic strokes, datasets, and sessions."""


@gen.command("strokes")
@click.option("--category", type=click.Choice(["constraining", "defining", "detailing", "hatches"]), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), help="Write JSON here instead of stdout.")
def gen_strokes_cmd(category, seed, count, out):
    """Generate one or more strokes of a training class."""
    records = [
        gen_stroke(StrokeGenSpec(category=category, seed=seed + i), stroke_number=i + 1)
        for i in range(count)
    ]
    payload = json.dumps([record_to_obj(r) for r in records], indent=2)
    if out:
        Path(out).write_text(payload, encoding="utf-8")
        click.echo(f"wrote {count} strokes to {out}")
    else:
        click.echo(payload)


@gen.command("dataset")
@click.option("--n-per-class", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def gen_dataset_cmd(n_per_class, seed, out):
    """Class-balanced labeled dataset dump (stroke files + labels.tsv)."""
    labeled = gen_dataset(n_per_class, seed=seed)
    index = write_dataset(out, labeled)
    click.echo(f"wrote {len(labeled)} strokes to {out} (index {index.name})")


SHAPE_ALIASES = {
    "manual-baseline": MANUAL_BASELINE_SHAPE,
    "tracked-reference": TRACKED_SESSION_SHAPE,
}


def parse_shape(text: str):
    if text in SHAPE_ALIASES:
        return list(SHAPE_ALIASES[text])
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InvalidSpec(f"bad shape {text!r}; use comma-separated heights or one of {sorted(SHAPE_ALIASES)}") from None


@gen.command("session")
@click.option("--shape", required=True,
              help="Comma-separated branch heights, or 'manual-baseline' / 'tracked-reference'.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), help="Session JSON output file.")
@click.option("--replay-into", type=click.Path(path_type=Path),
              help="Also replay the session into a fresh repository at this path.")
def gen_session_cmd(shape, seed, out, replay_into):
    """Generate a session log whose replay yields the given pyramid shape."""
    log = gen_session(parse_shape(shape), seed=seed)
    if out:
        save_session(log, out)
        click.echo(f"wrote session with {len(log.events)} events to {out}")
    if replay_into:
        repository = Repository.init(replay_into, author_name=log.author)
        replay_session(repository, log)
        click.echo(f"replayed into {replay_into}")
    if not out and not replay_into:
        click.echo(json.dumps({"events": len(log.events), "concepts": log.concept_count}))


# --- features ---------------------------------------------------------------------

@cli.group()
def features():
    """Feature extraction."""


@features.command("extract")
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), required=True, help="CSV output path.")
@click.option("--rate", type=float, default=60.0, show_default=True,
              help="Assumed sampling rate when strokes lack timing.")
def features_extract(source, out, rate):
    """Extract the 158-feature matrix from a stroke file or dataset dir."""
    if Path(source).is_dir():
        labeled = read_dataset(source)
    else:
        labeled = [(r, r.category.training_label or r.category.value) for r in load_strokes(source)]
    export_feature_matrix(out, labeled, sampling_rate_hz=rate)
    click.echo(f"wrote {len(labeled)} rows to {out}")


# --- training / evaluation -----------------------------------------------------------

def _load_dataset(path: Path) -> Dataset:
    return Dataset.from_labeled_records(read_dataset(path))


@cli.command("train")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--algo", type=click.Choice(["decision_tree", "random_forest", "knn", "logistic_regression", "gaussian_nb"]), required=True)
@click.option("--hyper", default=None, help="Hyperparameters as a JSON object.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def train_cmd(data, algo, hyper, seed, out):
    """Train one model family on a dataset dump."""
    hyperparams = json.loads(hyper) if hyper else None
    model = train_model(_load_dataset(data), algo, hyperparams, seed=seed)
    save_model(model, out)
    click.echo(f"trained {algo} (converged={model.converged}) -> {out}")


@cli.command("cv")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--algo", type=click.Choice(["decision_tree", "random_forest", "knn", "logistic_regression", "gaussian_nb"]), required=True)
@click.option("--grid", required=True, help="JSON array of hyperparameter objects.")
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def cv_cmd(data, algo, grid, k, seed, as_json):
    """Stratified k-fold grid search."""
    candidates = json.loads(grid)
    if not isinstance(candidates, list):
        raise MalformedInput("--grid must be a JSON array of objects")
    best, results = cross_validate_grid(_load_dataset(data), algo, candidates, k=k, seed=seed)
    payload = {"best": best, "results": [{"hyperparams": c, "mean_accuracy": a} for c, a in results]}
    emit(payload, as_json, "\n".join(f"{c} -> {a:.4f}" for c, a in results) + f"\nbest: {best}")


@cli.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--json", "as_json", is_flag=True)
def eval_cmd(model_path, data, as_json):
    """Evaluate a saved model on a dataset dump."""
    report = evaluate(load_model(model_path), _load_dataset(data))
    emit(report.to_dict(), as_json,
         f"accuracy={report.accuracy:.4f} macroF1={report.macro_f1:.4f}")


@cli.command("classify")
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--stroke", "stroke_file", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--rate", type=float, default=60.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def classify_cmd(model_path, stroke_file, rate, as_json):
    """Classify one stroke with a saved model."""
    record = parse_stroke(Path(stroke_file).read_bytes())
    label, probabilities = load_model(model_path).predict(extract_features(record, rate))
    emit({"label": label, "probabilities": probabilities}, as_json, label)


# --- analytics --------------------------------------------------------------------------

def _repo_or_session(target: Path) -> Repository:
    if target.is_dir():
        return Repository.open(target)
    log = load_session(target)
    workdir = Path(tempfile.mkdtemp(prefix="sketchvc-replay-"))
    repository = Repository.init(workdir / "repo", author_name=log.author)
    replay_session(repository, log)
    return repository


@cli.command("pyramid")
@click.argument("target", type=click.Path(exists=True, path_type=Path))
@click.option("--csv", "csv_out", type=click.Path(path_type=Path), help="Also write a CSV table.")
@click.option("--json", "as_json", is_flag=True)
def pyramid_cmd(target, csv_out, as_json):
    """Concept-pyramid metrics for a repository (or a session JSON, which is
    replayed into a scratch repository first)."""
    report = concept_pyramid(_repo_or_session(target))
    if csv_out:
        Path(csv_out).write_text(pyramid_to_csv(report), encoding="utf-8")
    emit(report.to_dict(), as_json, render_pyramid(report))


@cli.command("icd")
@click.option("--text", "text_file", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--events", "events_file", type=click.Path(exists=True, path_type=Path), required=True,
              help="JSON array of {kind, label?, start?, end?} spans.")
@click.option("--csv", "csv_out", type=click.Path(path_type=Path), help="Also write a CSV row.")
@click.option("--json", "as_json", is_flag=True)
def icd_cmd(text_file, events_file, csv_out, as_json):
    """Information content density of a summary text."""
    spans = [
        EventSpan(kind=o["kind"], label=o.get("label", ""), start=o.get("start", -1), end=o.get("end", -1))
        for o in json.loads(Path(events_file).read_text("utf-8"))
    ]
    report = compute_icd(Path(text_file).read_text("utf-8"), spans)
    if csv_out:
        Path(csv_out).write_text(density_to_csv(report), encoding="utf-8")
    emit(report.to_dict(), as_json,
         f"{report.specific_events} events / {report.word_count} words = {report.density:.6f}\n"
         f"note: {report.notes}")


@cli.command("distribution")
@click.argument("session_file", type=click.Path(exists=True, path_type=Path))
@click.option("--csv", "csv_out", type=click.Path(path_type=Path), help="Also write a CSV table.")
@click.option("--json", "as_json", is_flag=True)
def distribution_cmd(session_file, csv_out, as_json):
    """Per-concept stroke-type distribution of a session log."""
    report = stroke_distribution(load_session(session_file))
    if csv_out:
        Path(csv_out).write_text(distribution_to_csv(report), encoding="utf-8")
    lines = []
    for cid, row in report.per_concept_percent.items():
        top = ", ".join(f"{cat} {pct:.1f}%" for cat, pct in row.items() if pct > 0)
        lines.append(f"concept {cid}: {top}")
    emit(report.to_dict(), as_json, "\n".join(lines))


# --- similarity ---------------------------------------------------------------------------

@cli.group()
def sim():
    """Activation-based similarity tools."""


def _load_matrix(path: Path):
    if path.suffix == ".csv":
        return load_activation_csv(path, sketch_id=path.stem, layer=0)
    return load_activation(path)


@sim.command("pool")
@click.argument("activation", type=click.Path(exists=True, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def sim_pool(activation, as_json):
    """Mean-pool an activation matrix to one vector."""
    pooled = mean_pool(_load_matrix(activation))
    payload = {"sketch_id": pooled.sketch_id, "layer": pooled.layer,
               "dim": int(pooled.vector.size), "vector": [float(v) for v in pooled.vector]}
    emit(payload, as_json, f"{pooled.sketch_id} layer {pooled.layer}: dim {pooled.vector.size}")


@sim.command("matrix")
@click.argument("activations", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), help="Write the matrix as CSV.")
@click.option("--json", "as_json", is_flag=True)
def sim_matrix(activations, out, as_json):
    """Pairwise cosine similarity matrix over sketches."""
    result = similarity_matrix(_load_matrix(p) for p in activations)
    if out:
        result.to_csv(out)
    payload = {"ids": list(result.ids), "values": [[float(v) for v in row] for row in result.values]}
    emit(payload, as_json, f"{len(result.ids)}x{len(result.ids)} matrix" + (f" -> {out}" if out else ""))


@sim.command("rank")
@click.argument("scores_file", type=click.Path(exists=True, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def sim_rank(scores_file, as_json):
    """Rank layers by how well they separate similar from dissimilar pairs.

    Input: JSON object mapping layer index to {"similar": [...], "dissimilar": [...]}."""
    raw = json.loads(Path(scores_file).read_text("utf-8"))
    scores = {int(layer): (v["similar"], v["dissimilar"]) for layer, v in raw.items()}
    report = layer_rank(scores)
    text = "\n".join(
        f"layer {layer:>2}: auc={report.metrics[layer]['auc_roc']:.3f} "
        f"d={report.metrics[layer]['cohens_d']:+.3f} "
        f"diff={report.metrics[layer]['mean_difference']:+.4f}"
        for layer in report.layers
    )
    emit(report.to_dict(), as_json, text)


@sim.command("mwu")
@click.option("--a", "file_a", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--b", "file_b", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--json", "as_json", is_flag=True)
def sim_mwu(file_a, file_b, as_json):
    """Mann-Whitney U test between two JSON arrays of scores."""
    a = json.loads(Path(file_a).read_text("utf-8"))
    b = json.loads(Path(file_b).read_text("utf-8"))
    u, p = mann_whitney_u(a, b)
    emit({"U": u, "p_two_sided": p}, as_json, f"U={u} p={p:.6g}")


# --- summaries ------------------------------------------------------------------------------

@cli.command("summarize")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--mode", type=click.Choice(["deterministic", "llm"]), default="deterministic", show_default=True)
@click.option("--endpoint", default=None, help="LLM endpoint URL (llm mode).")
@click.option("--model", default="default", show_default=True)
@click.option("--timeout", type=float, default=10.0, show_default=True)
@click.option("--retries", type=int, default=2, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def summarize_cmd(path, mode, endpoint, model, timeout, retries, as_json):
    """Narrative summary of a repository's evolution."""
    narrative = chronicle_from_repo(Repository.open(path))
    if mode == "llm" and endpoint:
        config = LlmClientConfig(endpoint=endpoint, model=model, timeout_s=timeout, max_retries=retries)
        result = summarize_llm(narrative, config)
    else:
        result = summarize_deterministic(narrative)
    emit(result.to_dict(), as_json, f"[{result.provenance}]\n{result.text}")


# --- service ---------------------------------------------------------------------------------

@cli.command("serve")
@click.option("--bind", default=None, help="host:port (env SKETCHVC_BIND).")
@click.option("--data-root", type=click.Path(path_type=Path), default=None,
              help="Repository storage root (env SKETCHVC_DATA_ROOT).")
@click.option("--model", "model_path", type=click.Path(path_type=Path), default=None,
              help="Classifier model file (env SKETCHVC_MODEL).")
@click.option("--llm-endpoint", default=None, help="Summary LLM endpoint (env SKETCHVC_LLM_ENDPOINT).")
@click.option("--static", "static_dir", type=click.Path(path_type=Path), default=None,
              help="Static UI bundle to serve at / (env SKETCHVC_STATIC).")
def serve_cmd(bind, data_root, model_path, llm_endpoint, static_dir):
    """Run the HTTP service (flags beat environment variables)."""
    from .service import serve

    bind = bind or os.environ.get("SKETCHVC_BIND", "127.0.0.1:8008")
    data_root = data_root or os.environ.get("SKETCHVC_DATA_ROOT", "./sketchvc-data")
    model_path = model_path or os.environ.get("SKETCHVC_MODEL") or None
    llm_endpoint = llm_endpoint or os.environ.get("SKETCHVC_LLM_ENDPOINT") or None
    static_dir = static_dir or os.environ.get("SKETCHVC_STATIC") or None
    llm_config = LlmClientConfig(endpoint=llm_endpoint) if llm_endpoint else None
    serve(bind, data_root, model_path=model_path, llm_config=llm_config, static_dir=static_dir)


def main(argv=None):
    cli.main(args=argv, prog_name="sketchvc")


if __name__ == "__main__":
    main()
