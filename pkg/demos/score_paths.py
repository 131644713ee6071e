#!/usr/bin/env python3
"""Score a few candidate walks against a reference route."""

import json

from pangea import demo
from pangea.metrics import EvalParams, evaluate
from pangea.navgraph import Path, load_graph

graph = load_graph(json.dumps(demo.demo_graph_document()))
print(f"graph: {len(graph)} nodes, {graph.edge_count()} edges")

reference = Path(("n0", "n1", "n2"))
candidates = {
    "same route": Path(("n0", "n1", "n2")),
    "long way round": Path(("n0", "n3", "n2")),
    "overshoot and return": Path(("n0", "n1", "n2", "n3", "n2")),
    "gave up at start": Path(("n0",)),
    "wrong corner": Path(("n0", "n3")),
}

params = EvalParams(success_threshold_m=3.0)
print(f"{'candidate':<22} {'ne_m':>6} {'success':>8} {'spl':>6} {'path_sim':>9}")
for label, pred in candidates.items():
    ev = evaluate(graph, pred, reference, params)
    print(f"{label:<22} {ev.ne_m:6.2f} {str(ev.success):>8} "
          f"{ev.spl:6.3f} {ev.path_sim:9.3f}")
