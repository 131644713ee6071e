"""Store-level metric reporting shared by the dashboard endpoint and the CLI.

Follower annotations are scored against a reference path: the task's
explicit ``reference_path`` when present, otherwise the path of the guide
annotation whose instruction the follower heard. Followers with no
resolvable reference (or an unevaluable path) are skipped rather than
failing the whole report.
"""

from __future__ import annotations

from typing import Callable

from .metrics import EvalParams, MetricError, PathEval, MetricsReport, evaluate, summarize
from .navgraph import GraphError, NavigationGraph, Path, UnknownNodeError, load_graph
from .store import FOLLOWER, AnnotationDoc, LocalStore, NotFoundError

GraphLoader = Callable[[str], NavigationGraph]


def graph_loader(store: LocalStore) -> GraphLoader:
    """A caching environment-id -> NavigationGraph loader over store blobs."""
    cache: dict[str, NavigationGraph] = {}

    def load(environment_id: str) -> NavigationGraph:
        if environment_id not in cache:
            raw = store.blob_get(f"env/{environment_id}/graph.json")
            cache[environment_id] = load_graph(raw)
        return cache[environment_id]

    return load


def reference_path(store: LocalStore, doc: AnnotationDoc) -> Path | None:
    try:
        task = store.get_task(doc.task_id)
    except NotFoundError:
        return None
    ref = task.payload.get("reference_path")
    if ref:
        return Path(tuple(ref))
    instruction = task.payload.get("instruction") or {}
    annotation_id = instruction.get("annotation_id")
    if annotation_id:
        try:
            return store.get_annotation(annotation_id).path_obj()
        except NotFoundError:
            return None
    return None


def evaluate_follower(store: LocalStore, graphs: GraphLoader, doc: AnnotationDoc,
                      params: EvalParams) -> PathEval | None:
    ref = reference_path(store, doc)
    if ref is None:
        return None
    try:
        graph = graphs(doc.environment_id)
        return evaluate(graph, doc.path_obj(), ref, params)
    except (MetricError, UnknownNodeError, GraphError, NotFoundError):
        return None


def summarize_store(store: LocalStore, params: EvalParams,
                    environment_id: str | None = None,
                    graphs: GraphLoader | None = None) -> MetricsReport:
    graphs = graphs or graph_loader(store)
    evals = []
    for doc in store.list_annotations(kind=FOLLOWER, environment_id=environment_id):
        ev = evaluate_follower(store, graphs, doc, params)
        if ev is not None:
            evals.append((doc.worker_id, ev))
    return summarize(evals)
