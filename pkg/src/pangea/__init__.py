"""Panoramic-graph annotation toolkit: navigation graphs, pose traces,
transcript alignment, evaluation metrics, and the collection server."""

from .align import align_transcript, tokenize
from .metrics import EvalParams, evaluate, summarize
from .navgraph import NavigationGraph, Path, load_graph
from .trace import Pose, PoseTrace

__version__ = "0.1.0"

__all__ = [
    "NavigationGraph",
    "Path",
    "load_graph",
    "Pose",
    "PoseTrace",
    "align_transcript",
    "tokenize",
    "EvalParams",
    "evaluate",
    "summarize",
    "__version__",
]
