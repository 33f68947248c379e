"""Command-line entry points: simulate, rank, serve, and a thin review client."""
from __future__ import annotations

import json
import re
import sys
from collections import defaultdict
from pathlib import Path

import click
import numpy as np

from .corpus import CorpusError, build_features, load_corpus
from .experiments import (
    MetricError,
    TREATMENT_GRAMMAR,
    TreatmentError,
    TreatmentSpec,
    curve_to_csv,
    ranking_to_csv,
    read_results_csv,
    results_to_csv,
    run_experiments,
    scott_knott,
)
from .service.store import write_atomic


@click.group()
def cli():
    """Active-learning support for screening large pools of candidate papers."""


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", text).strip("_")


def _build_spec(treatment, seeding, stop, correct, reviewer, query) -> TreatmentSpec:
    import dataclasses

    if treatment:
        spec = TreatmentSpec.parse(treatment)
        if query and not spec.query_terms:
            spec = dataclasses.replace(spec, query_terms=tuple(query.split()))
        return spec
    clauses = [f"seeding:{seeding}", f"stop:{stop}", f"correct:{correct}", f"reviewer:{reviewer}"]
    if query:
        clauses.append("query:" + "+".join(query.split()))
    return TreatmentSpec.parse(",".join(clauses))


@cli.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Dataset CSV (id,title,abstract,label).")
@click.option("--format", "data_format", default="fast2", show_default=True,
              type=click.Choice(["fast2", "fastread"]))
@click.option("--dataset-name", default=None, help="Name used in result rows (default: file stem).")
@click.option("--query", default="", help="Seed keywords, whitespace-separated.")
@click.option("--treatment", default=None,
              help=f"Compact treatment string: {TREATMENT_GRAMMAR}")
@click.option("--seeding", default="rank_bm25", show_default=True)
@click.option("--stop", default="semi:0.95", show_default=True)
@click.option("--correct", default="none", show_default=True)
@click.option("--reviewer", default="1/1", show_default=True, help="precision/recall")
@click.option("--repeats", default=30, show_default=True, type=int)
@click.option("--seed", default=1, show_default=True, type=int, help="Master seed.")
@click.option("--max-features", default=4000, show_default=True, type=int)
@click.option("--workers", default=None, type=int, help="Defaults to FAST2_THREADS or CPU count.")
@click.option("--out", "out_dir", default="results", show_default=True, type=click.Path(file_okay=False))
def simulate(data_path, data_format, dataset_name, query, treatment, seeding, stop,
             correct, reviewer, repeats, seed, max_features, workers, out_dir):
    """Run seeded review simulations and write results.csv plus recall curves."""
    if repeats < 1:
        raise click.UsageError("--repeats must be >= 1")
    try:
        spec = _build_spec(treatment, seeding.replace("-", "_"), stop, correct, reviewer, query)
    except TreatmentError as exc:
        raise click.UsageError(str(exc))
    if spec.seeding != "random" and not spec.query_terms:
        raise click.UsageError("BM25 seeding needs --query (or a query: clause)")

    dataset = dataset_name or Path(data_path).stem
    try:
        corpus = build_features(load_corpus(data_path, format=data_format), max_features)
    except CorpusError as exc:
        raise click.ClickException(str(exc))
    if not corpus.has_ground_truth():
        raise click.ClickException("simulation needs a fully labeled dataset")

    results = run_experiments(corpus, [spec], repeats=repeats, master_seed=seed,
                              dataset=dataset, workers=workers)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_atomic(out / "results.csv", results_to_csv(results))
    curve_dir = out / "curves"
    curve_dir.mkdir(exist_ok=True)
    for r in results:
        name = f"{_slug(r.dataset)}__{_slug(r.treatment)}__{r.seed}.csv"
        write_atomic(curve_dir / name, curve_to_csv(r))

    reached = [r.x95 for r in results if r.x95 is not None]
    click.echo(f"treatment: {spec.treatment_id}")
    click.echo(f"runs: {len(results)}  reached-95-recall: {len(reached)}")
    if reached:
        click.echo(f"median x95: {np.median(reached):g}")
        click.echo(f"median wss95: {np.median([r.wss95 for r in results if r.wss95 is not None]):.4f}")
    click.echo(f"median recall: {np.median([r.final_recall for r in results]):.4f}")
    click.echo(f"median precision: {np.median([r.final_precision for r in results]):.4f}")
    click.echo(f"median effort: {np.median([r.effort for r in results]):g}")
    click.echo(f"wrote {out / 'results.csv'}")


@cli.command()
@click.argument("results", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default="ranking.csv", show_default=True,
              type=click.Path(dir_okay=False))
def rank(results, out_path):
    """Scott-Knott ranking of treatments across result files, per dataset and metric."""
    if len(results) < 2:
        raise click.UsageError("need at least two result files to rank")
    try:
        frames = [read_results_csv(p) for p in results]
    except MetricError as exc:
        raise click.ClickException(str(exc))

    datasets_per_file = [sorted({row["dataset"] for row in rows}) for rows in frames]
    if len({tuple(d) for d in datasets_per_file}) > 1:
        raise click.ClickException(
            f"mismatched datasets across inputs: {datasets_per_file}")

    samples: dict = defaultdict(lambda: defaultdict(list))
    for rows in frames:
        for row in sorted(rows, key=lambda r: (r["dataset"], r["treatment"], r["seed"])):
            key = (row["dataset"], row["treatment"])
            if row["x95"]:
                samples["x95"][key].append(float(row["x95"]))
            if row["wss95"]:
                samples["wss95"][key].append(float(row["wss95"]))

    tables = {}
    for metric, ascending in (("x95", True), ("wss95", False)):
        by_dataset: dict = defaultdict(dict)
        for (dataset, treatment), values in samples[metric].items():
            by_dataset[dataset][treatment] = values
        for dataset, groups in by_dataset.items():
            if not groups:
                continue
            tables[(dataset, metric)] = scott_knott(
                groups, rng=np.random.default_rng(0), ascending=ascending)

    if not tables:
        raise click.ClickException("no rankable rows (no run reached 95% recall)")
    write_atomic(Path(out_path), ranking_to_csv(tables))
    click.echo(f"wrote {out_path}")


@cli.command()
@click.option("--data", "data_specs", multiple=True, required=True,
              help="name=path dataset registrations (repeatable).")
@click.option("--format", "data_format", default="fast2", show_default=True,
              type=click.Choice(["fast2", "fastread"]))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--sessions", "session_dir", default="sessions", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--max-features", default=4000, show_default=True, type=int)
@click.option("--cors", "cors_origins", multiple=True, help="Allowed UI origins.")
@click.option("--ui", "ui_dir", default=None, type=click.Path(file_okay=False),
              help="Static directory with the built web UI.")
def serve(data_specs, data_format, host, port, session_dir, max_features, cors_origins, ui_dir):
    """Serve the interactive review API (and optionally the web UI bundle)."""
    import uvicorn

    from .service import create_app

    datasets = {}
    for spec in data_specs:
        name, _, path = spec.partition("=")
        if not path:
            raise click.UsageError("--data expects name=path")
        try:
            datasets[name] = build_features(load_corpus(path, format=data_format), max_features)
        except (CorpusError, OSError) as exc:
            raise click.ClickException(f"dataset {name}: {exc}")

    app = create_app(datasets, session_dir, cors_origins=list(cors_origins) or None,
                     ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except SystemExit as exc:  # uvicorn signals bind failures via SystemExit
        raise click.ClickException(f"server failed to start on {host}:{port}") from exc


@cli.group()
def review():
    """Thin HTTP client for a running review service."""


def _client(server):
    import httpx

    return httpx.Client(base_url=server.rstrip("/") + "/api/v1", timeout=30.0)


def _api_error(response) -> None:
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except Exception:
            detail = response.text
        raise click.ClickException(f"{response.status_code}: {detail}")


@review.command("create")
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.option("--dataset", required=True)
@click.option("--query", required=True, help="Seed keywords, whitespace-separated.")
@click.option("--target-recall", default=0.95, show_default=True, type=float)
@click.option("--seed", default=None, type=int)
def review_create(server, dataset, query, target_recall, seed):
    """Create a review session."""
    body = {"dataset": dataset, "query_terms": query.split(),
            "target_recall": target_recall}
    if seed is not None:
        body["seed"] = seed
    with _client(server) as client:
        resp = client.post("/sessions", json=body)
        _api_error(resp)
        click.echo(json.dumps(resp.json(), indent=2))


@review.command("next")
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.option("--session", "session_id", required=True)
@click.option("--force", is_flag=True, help="Continue past an advisory stop.")
def review_next(server, session_id, force):
    """Fetch the next paper to screen."""
    with _client(server) as client:
        resp = client.get(f"/sessions/{session_id}/next", params={"force": force})
        _api_error(resp)
        click.echo(json.dumps(resp.json(), indent=2))


@review.command("label")
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.option("--session", "session_id", required=True)
@click.option("--doc", "document_id", required=True)
@click.option("--relevant/--not-relevant", required=True)
def review_label(server, session_id, document_id, relevant):
    """Submit a relevance decision."""
    with _client(server) as client:
        resp = client.post(f"/sessions/{session_id}/labels",
                           json={"document_id": document_id, "relevant": relevant})
        _api_error(resp)
        click.echo(json.dumps(resp.json(), indent=2))


@review.command("status")
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.option("--session", "session_id", required=True)
def review_status(server, session_id):
    """Show session counts, status, and the current estimate."""
    with _client(server) as client:
        resp = client.get(f"/sessions/{session_id}")
        _api_error(resp)
        click.echo(json.dumps(resp.json(), indent=2))


def main(argv=None) -> int:
    """Entry point with single-line diagnostics and 0/1/2 exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        print(f"usage error: {exc.format_message()}", file=sys.stderr)
        return 2
    except click.ClickException as exc:
        print(f"error: {exc.format_message()}", file=sys.stderr)
        return 1
    except click.exceptions.Abort:
        return 130


if __name__ == "__main__":
    sys.exit(main())
