"""Annotation-quality metrics over Guide paths and Follower traces.

Standard VLN-style evaluation feeds the monitoring dashboard: navigation
error (geodesic distance between endpoints), success under a distance
threshold, success weighted by path length, and a continuous path
similarity derived from DTW over node sequences. All functions are pure
over immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dtw
from .navgraph import NavigationGraph, Path


class MetricError(ValueError):
    """Invalid path or mismatched inputs for an evaluation."""


@dataclass(frozen=True)
class EvalParams:
    success_threshold_m: float = 3.0

    def __post_init__(self) -> None:
        if not (self.success_threshold_m > 0 and math.isfinite(self.success_threshold_m)):
            raise MetricError(f"success threshold must be positive and finite, "
                              f"got {self.success_threshold_m}")


@dataclass(frozen=True)
class PathEval:
    ne_m: float
    success: bool
    pred_length_m: float
    shortest_m: float
    spl: float
    path_sim: float

    def to_dict(self) -> dict:
        return {
            "ne_m": self.ne_m,
            "success": self.success,
            "pred_length_m": self.pred_length_m,
            "shortest_m": self.shortest_m,
            "spl": self.spl,
            "path_sim": self.path_sim,
        }


def _require_valid(graph: NavigationGraph, path: Path, label: str) -> None:
    violations = graph.validate_path(path)
    if violations:
        raise MetricError(f"{label} path invalid: {violations[0].detail}")


def path_length(graph: NavigationGraph, path: Path) -> float:
    """Walked length in meters; revisited edges count every time."""
    _require_valid(graph, path, "input")
    return sum(graph.edge_weight(a, b) for a, b in zip(path.nodes, path.nodes[1:]))


def navigation_error(graph: NavigationGraph, pred: Path, ref: Path) -> float:
    """Geodesic distance between the two endpoints; symmetric in its arguments."""
    _require_valid(graph, pred, "predicted")
    _require_valid(graph, ref, "reference")
    return graph.geodesic_distance(pred.goal, ref.goal)


def path_dtw_cost(graph: NavigationGraph, pred: Path, ref: Path) -> float:
    """DTW over the node sequences with geodesic local cost."""
    costs = np.array([[graph.geodesic_distance(p, r) for r in ref.nodes]
                      for p in pred.nodes])
    _, cost = dtw.warp(costs)
    return cost


def evaluate(graph: NavigationGraph, pred: Path, ref: Path,
             params: EvalParams = EvalParams()) -> PathEval:
    """Full evaluation of a predicted path against its reference.

    Success is strict: ne < threshold. SPL penalizes length mismatch
    symmetrically, min(p, l)/max(p, l), so 1.0 means a successful path of
    exactly the shortest length; a successful path that stops short still
    scores below 1. Path similarity is exp(-dtw / (|ref| * threshold)).
    """
    _require_valid(graph, pred, "predicted")
    _require_valid(graph, ref, "reference")
    if pred.start != ref.start:
        raise MetricError(f"paths must share a start node: "
                          f"{pred.start!r} != {ref.start!r}")
    ne = graph.geodesic_distance(pred.goal, ref.goal)
    success = ne < params.success_threshold_m
    shortest = graph.geodesic_distance(ref.start, ref.goal)
    pred_len = path_length(graph, pred)
    if not success:
        spl = 0.0
    elif max(pred_len, shortest) == 0.0:
        spl = 1.0
    else:
        spl = min(pred_len, shortest) / max(pred_len, shortest)
    sim = math.exp(-path_dtw_cost(graph, pred, ref)
                   / (len(ref) * params.success_threshold_m))
    return PathEval(ne_m=ne, success=success, pred_length_m=pred_len,
                    shortest_m=shortest, spl=spl, path_sim=sim)


@dataclass
class Aggregate:
    count: int = 0
    ne_mean_m: float = 0.0
    success_rate: float = 0.0
    spl_mean: float = 0.0
    path_sim_mean: float = 0.0

    def to_dict(self) -> dict:
        return {
            "ne_mean_m": self.ne_mean_m,
            "success_rate": self.success_rate,
            "spl_mean": self.spl_mean,
            "path_sim_mean": self.path_sim_mean,
            "count": self.count,
        }


def _aggregate(evals: list[PathEval]) -> Aggregate:
    n = len(evals)
    return Aggregate(
        count=n,
        ne_mean_m=sum(e.ne_m for e in evals) / n,
        success_rate=sum(e.success for e in evals) / n,
        spl_mean=sum(e.spl for e in evals) / n,
        path_sim_mean=sum(e.path_sim for e in evals) / n,
    )


@dataclass
class MetricsReport:
    overall: Aggregate | None
    workers: dict[str, Aggregate] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict() if self.overall else None,
            "workers": {w: a.to_dict() for w, a in sorted(self.workers.items())},
        }


def summarize(evals: list[tuple[str, PathEval]]) -> MetricsReport:
    """Per-worker and overall aggregates; empty input yields an empty report."""
    if not evals:
        return MetricsReport(overall=None)
    by_worker: dict[str, list[PathEval]] = {}
    for worker_id, ev in evals:
        by_worker.setdefault(worker_id, []).append(ev)
    return MetricsReport(
        overall=_aggregate([ev for _, ev in evals]),
        workers={w: _aggregate(lst) for w, lst in by_worker.items()},
    )
