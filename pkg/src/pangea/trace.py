"""Pose traces: timestamped virtual-camera state captured during a session.

A pose records where the annotator's camera is (node, heading, pitch) on the
session clock; Follower poses additionally carry the Guide-audio playhead.
Clients emit a pose on every state change plus a 200 ms heartbeat, so traces
stay small while keeping token-level synchronization resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .navgraph import NavigationGraph, Path, Violation

TWO_PI = 2.0 * math.pi
HALF_PI = math.pi / 2.0


class TraceError(ValueError):
    """Pose outside its invariants or appended out of order."""


@dataclass(frozen=True)
class Pose:
    t_ms: int
    node: str
    heading_rad: float
    pitch_rad: float
    audio_t_ms: int | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.t_ms) or self.t_ms < 0:
            raise TraceError(f"t_ms must be finite and >= 0, got {self.t_ms}")
        if not (0.0 <= self.heading_rad < TWO_PI):
            raise TraceError(f"heading_rad {self.heading_rad} outside [0, 2*pi)")
        if not (-HALF_PI <= self.pitch_rad <= HALF_PI):
            raise TraceError(f"pitch_rad {self.pitch_rad} outside [-pi/2, pi/2]")

    def to_dict(self) -> dict:
        return {
            "t_ms": self.t_ms,
            "node": self.node,
            "heading_rad": self.heading_rad,
            "pitch_rad": self.pitch_rad,
            "audio_t_ms": self.audio_t_ms,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Pose":
        return cls(
            t_ms=int(raw["t_ms"]),
            node=raw["node"],
            heading_rad=float(raw["heading_rad"]),
            pitch_rad=float(raw["pitch_rad"]),
            audio_t_ms=None if raw.get("audio_t_ms") is None else int(raw["audio_t_ms"]),
        )


@dataclass
class PoseTrace:
    """Ordered pose log for one session; appends must be time-monotonic.

    Owned by exactly one session while live (appends serialized by the
    owner); completed traces are treated as immutable.
    """

    session_id: str = ""
    poses: list[Pose] = field(default_factory=list)

    def append(self, pose: Pose) -> "PoseTrace":
        if self.poses and pose.t_ms < self.poses[-1].t_ms:
            raise TraceError(
                f"non-monotonic timestamp: {pose.t_ms} after {self.poses[-1].t_ms}")
        self.poses.append(pose)
        return self

    def __len__(self) -> int:
        return len(self.poses)

    def extract_path(self) -> Path:
        """Node sequence with consecutive duplicates collapsed; revisits kept."""
        if not self.poses:
            raise TraceError("cannot extract a path from an empty trace")
        nodes = [self.poses[0].node]
        for pose in self.poses[1:]:
            if pose.node != nodes[-1]:
                nodes.append(pose.node)
        return Path(tuple(nodes))

    def slice_by_interval(self, start_ms: int, end_ms: int) -> list[int]:
        """Indices of poses with start_ms <= t_ms <= end_ms, in order."""
        if start_ms > end_ms:
            raise TraceError(f"inverted interval [{start_ms}, {end_ms}]")
        return [i for i, p in enumerate(self.poses) if start_ms <= p.t_ms <= end_ms]

    def validate_against(self, graph: NavigationGraph) -> list[Violation]:
        """Flag unknown nodes and node changes that are not graph edges."""
        violations: list[Violation] = []
        for i, pose in enumerate(self.poses):
            if pose.node not in graph:
                violations.append(Violation("unknown-node", i,
                                            f"pose {i} at unknown node {pose.node!r}"))
        for i in range(len(self.poses) - 1):
            a, b = self.poses[i].node, self.poses[i + 1].node
            if a != b and a in graph and b in graph and not graph.has_edge(a, b):
                violations.append(Violation(
                    "teleport", i, f"pose {i}->{i + 1} jumps {a!r}->{b!r} with no edge"))
        return violations

    def to_dicts(self) -> list[dict]:
        return [p.to_dict() for p in self.poses]

    @classmethod
    def from_dicts(cls, session_id: str, raw: list[dict]) -> "PoseTrace":
        trace = cls(session_id=session_id)
        for entry in raw:
            trace.append(Pose.from_dict(entry))
        return trace


def append_pose(trace: PoseTrace, pose: Pose) -> PoseTrace:
    return trace.append(pose)


def extract_path(trace: PoseTrace) -> Path:
    return trace.extract_path()


def slice_by_interval(trace: PoseTrace, start_ms: int, end_ms: int) -> list[int]:
    return trace.slice_by_interval(start_ms, end_ms)


def validate_trace(trace: PoseTrace, graph: NavigationGraph) -> list[Violation]:
    return trace.validate_against(graph)
