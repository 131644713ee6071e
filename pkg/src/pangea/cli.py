"""Administrator command line: serve, ingest-env, seed-tasks, align, metrics, export.

One binary for operations. Commands are idempotent where possible and say
what changed; every command exits non-zero on the first reported error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path as FsPath

import click

from .config import AppConfig, build_transcriber, load_config
from .jobs import AlignmentJobRunner
from .metrics import EvalParams
from .navgraph import GraphError, NavigationGraph, Path, load_graph
from .reporting import summarize_store
from .store import (
    GUIDE,
    FOLLOWER,
    STATUS_RAW,
    TASK_OPEN,
    LocalStore,
    NotFoundError,
    TaskRecord,
)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config file.")
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="Store directory (overrides config).")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, data_dir: str | None) -> None:
    """Annotation-pipeline administration tool."""
    config = load_config(config_path)
    if data_dir is not None:
        config.data_dir = data_dir
    ctx.obj = config


def _store(config: AppConfig) -> LocalStore:
    return LocalStore(config.data_dir)


@main.command()
@click.pass_obj
def serve(config: AppConfig) -> None:
    """Run the annotation server."""
    import uvicorn

    from .app import create_app

    uvicorn.run(create_app(config), host=config.host, port=config.port)


@main.command("ingest-env")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.pass_obj
def ingest_env(config: AppConfig, directory: str) -> None:
    """Validate DIRECTORY/graph.json plus its panorama images and store them.

    Node panorama fields are treated as file paths relative to DIRECTORY and
    become blob keys. Nothing is written unless everything validates.
    """
    root = FsPath(directory)
    graph_file = root / "graph.json"
    if not graph_file.is_file():
        raise click.ClickException(f"{graph_file}: no graph.json in environment directory")
    raw = graph_file.read_bytes()
    try:
        graph = load_graph(raw)
    except GraphError as e:
        raise click.ClickException(f"{graph_file}: {e}")

    panoramas: dict[str, bytes] = {}
    for node_id in sorted(graph.node_ids()):
        key = graph.node(node_id).panorama
        if key in panoramas:
            continue
        image = root / key
        if not image.is_file():
            raise click.ClickException(
                f"node {node_id!r}: panorama file {key!r} not found under {root}")
        panoramas[key] = image.read_bytes()

    store = _store(config)
    store.blob_put(f"env/{graph.environment_id}/graph.json", raw)
    for key, data in panoramas.items():
        store.blob_put(key, data)
    store.put_doc(store.ENVIRONMENTS, graph.environment_id, {
        "environment_id": graph.environment_id,
        "nodes": len(graph),
        "edges": graph.edge_count(),
        "panoramas": len(panoramas),
    })
    click.echo(f"{len(graph)} nodes, {graph.edge_count()} edges, "
               f"{len(panoramas)} panoramas ingested")


def _parse_instruction(raw) -> dict:
    if isinstance(raw, str):
        return {"kind": "text", "text": raw}
    if isinstance(raw, dict) and "annotation_id" in raw:
        return {"kind": "audio", "annotation_id": raw["annotation_id"]}
    if isinstance(raw, dict) and "text" in raw:
        return {"kind": "text", "text": raw["text"]}
    raise click.ClickException(
        f"instruction must be a string or have annotation_id/text, got {raw!r}")


def _validated_path(graph: NavigationGraph, nodes, what: str) -> list[str]:
    try:
        path = Path(tuple(nodes))
    except (ValueError, TypeError) as e:
        raise click.ClickException(f"{what}: {e}")
    violations = graph.validate_path(path)
    if violations:
        v = violations[0]
        raise click.ClickException(f"{what}: {v.kind} at index {v.index}: {v.detail}")
    return list(path.nodes)


@main.command("seed-tasks")
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def seed_tasks(config: AppConfig, spec_file: str) -> None:
    """Create open tasks from a JSON seed file (all-or-nothing validation)."""
    raw = json.loads(FsPath(spec_file).read_text("utf-8"))
    env = raw.get("environment_id")
    if not env:
        raise click.ClickException("seed file needs an environment_id")
    store = _store(config)
    try:
        graph = load_graph(store.blob_get(f"env/{env}/graph.json"))
    except NotFoundError:
        raise click.ClickException(f"environment {env!r} is not ingested")
    restrict = bool(raw.get("restrict_movement", False))

    tasks: list[TaskRecord] = []
    for i, nodes in enumerate(raw.get("guide_paths", [])):
        path = _validated_path(graph, nodes, f"guide_paths[{i}]")
        tasks.append(TaskRecord(
            task_id=f"{env}-guide-{i:03d}", environment_id=env, kind=GUIDE,
            payload={"path": path, "restrict_movement": restrict},
            status=TASK_OPEN))
    for i, entry in enumerate(raw.get("follower_tasks", [])):
        start = entry.get("start_node")
        if start not in graph:
            raise click.ClickException(
                f"follower_tasks[{i}]: start node {start!r} is not in {env!r}")
        payload = {"start_node": start,
                   "instruction": _parse_instruction(entry.get("instruction"))}
        if entry.get("reference_path"):
            payload["reference_path"] = _validated_path(
                graph, entry["reference_path"], f"follower_tasks[{i}].reference_path")
        tasks.append(TaskRecord(
            task_id=f"{env}-follower-{i:03d}", environment_id=env, kind=FOLLOWER,
            payload=payload, status=TASK_OPEN))

    created = skipped = 0
    for task in tasks:
        try:
            store.get_task(task.task_id)
            skipped += 1
        except NotFoundError:
            store.put_task(task)
            created += 1
    click.echo(f"{created} tasks created, {skipped} already present")


@main.command()
@click.option("--all", "align_all", is_flag=True, help="Align every raw guide annotation.")
@click.option("--id", "annotation_id", default=None, help="Align one annotation.")
@click.pass_obj
def align(config: AppConfig, align_all: bool, annotation_id: str | None) -> None:
    """Run transcript alignment synchronously over raw guide annotations."""
    if align_all == (annotation_id is not None):
        raise click.ClickException("pass exactly one of --all or --id")
    store = _store(config)
    runner = AlignmentJobRunner(
        store, build_transcriber(config),
        retries=config.asr.retries, backoff_s=config.asr.backoff_s,
        pool_size=config.worker_pool_size)
    if align_all:
        targets = [d.annotation_id
                   for d in store.list_annotations(kind=GUIDE, status=STATUS_RAW)]
    else:
        try:
            store.get_annotation(annotation_id)
        except NotFoundError:
            raise click.ClickException(f"unknown annotation {annotation_id!r}")
        targets = [annotation_id]
    failed = 0
    for aid, status in runner.run_over(targets).items():
        doc = store.get_annotation(aid)
        note = f" ({doc.error})" if doc.error else ""
        click.echo(f"{aid}: {status}{note}")
        if status == STATUS_RAW:
            failed += 1
    if failed:
        raise click.ClickException(f"{failed} annotation(s) could not be aligned")
    if not targets:
        click.echo("nothing to align")


@main.command()
@click.option("--env", "environment_id", default=None, help="Restrict to one environment.")
@click.pass_obj
def metrics(config: AppConfig, environment_id: str | None) -> None:
    """Print the follower evaluation report as JSON."""
    report = summarize_store(_store(config), EvalParams(config.success_threshold_m),
                             environment_id=environment_id)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False), help="Output directory.")
@click.pass_obj
def export(config: AppConfig, out_dir: str) -> None:
    """Write every annotation document to OUT/annotations.jsonl."""
    store = _store(config)
    docs = store.list_annotations()
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "annotations.jsonl"
    with target.open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_dict(), sort_keys=True) + "\n")
    click.echo(f"{len(docs)} annotations exported to {target}")


if __name__ == "__main__":
    sys.exit(main())
