"""Session state machines for the Guide and Follower protocols.

Guide sessions: created -> recording <-> paused -> transcribing -> completed,
with audio chunk uploads running in the background through recording,
paused, and transcribing (submit then blocks until the blob is finalized).
Follower sessions start in navigating and end in completed. Event batches
carry strictly increasing sequence numbers; duplicates are idempotent
no-ops and gaps are rejected, so client retries are exactly-once.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .store import FOLLOWER, GUIDE, BlobRef, TaskRecord
from .trace import Pose, PoseTrace

CREATED = "created"
RECORDING = "recording"
PAUSED = "paused"
TRANSCRIBING = "transcribing"
NAVIGATING = "navigating"
COMPLETED = "completed"

GUIDE_STATES = (CREATED, RECORDING, PAUSED, TRANSCRIBING, COMPLETED)
FOLLOWER_STATES = (NAVIGATING, COMPLETED)

# action -> {legal source state: target state}
GUIDE_TRANSITIONS: dict[str, dict[str, str]] = {
    "start-recording": {CREATED: RECORDING},
    "pause": {RECORDING: PAUSED},
    "resume": {PAUSED: RECORDING},
    "stop-recording": {RECORDING: TRANSCRIBING, PAUSED: TRANSCRIBING},
    "submit": {TRANSCRIBING: COMPLETED},
}
FOLLOWER_TRANSITIONS: dict[str, dict[str, str]] = {
    "complete": {NAVIGATING: COMPLETED},
}

# states in which non-transition operations are legal, per kind
EVENT_STATES = {GUIDE: {RECORDING}, FOLLOWER: {NAVIGATING}}
CHUNK_STATES = {GUIDE: {RECORDING, PAUSED, TRANSCRIBING}, FOLLOWER: frozenset()}
FINALIZE_STATES = {GUIDE: {TRANSCRIBING}, FOLLOWER: frozenset()}
TRANSCRIPT_STATES = {GUIDE: {TRANSCRIBING}, FOLLOWER: frozenset()}
INSTRUCTION_STATES = {GUIDE: frozenset(), FOLLOWER: {NAVIGATING}}


class IllegalTransition(RuntimeError):
    """The requested action is not legal from the session's current state."""


class SequenceGap(RuntimeError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"event sequence gap: expected seq {expected}, got {got}")
        self.expected = expected
        self.got = got


@dataclass
class Session:
    session_id: str
    task: TaskRecord
    worker_id: str
    kind: str  # guide | follower
    state: str
    trace: PoseTrace
    started_at: float
    next_event_seq: int = 1
    audio_key: str | None = None
    audio_ref: BlobRef | None = None
    transcript_text: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def transitions(self) -> dict[str, dict[str, str]]:
        return GUIDE_TRANSITIONS if self.kind == GUIDE else FOLLOWER_TRANSITIONS

    def apply(self, action: str) -> str:
        """Transition on an action; raises IllegalTransition otherwise."""
        targets = self.transitions().get(action, {})
        if self.state not in targets:
            raise IllegalTransition(
                f"action {action!r} is not legal in state {self.state!r} "
                f"for a {self.kind} session")
        self.state = targets[self.state]
        return self.state

    def can(self, table: dict[str, frozenset | set]) -> bool:
        return self.state in table[self.kind]

    def ingest_events(self, seq: int, events: list[dict]) -> int:
        """Apply one event batch; returns the highest accepted sequence number.

        Duplicate batches (seq already applied) are acknowledged without
        effect; a gap raises SequenceGap. The whole batch is validated
        before any pose is appended, so a bad batch changes nothing.
        """
        if seq < self.next_event_seq:
            return self.next_event_seq - 1
        if seq > self.next_event_seq:
            raise SequenceGap(expected=self.next_event_seq, got=seq)
        poses = [Pose.from_dict(e) for e in events]
        last_t = self.trace.poses[-1].t_ms if self.trace.poses else None
        for pose in poses:
            if last_t is not None and pose.t_ms < last_t:
                from .trace import TraceError
                raise TraceError(f"non-monotonic timestamp: {pose.t_ms} after {last_t}")
            last_t = pose.t_ms
        for pose in poses:
            self.trace.append(pose)
        self.next_event_seq = seq + 1
        return seq

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "task": self.task.to_dict(),
            "worker_id": self.worker_id,
            "kind": self.kind,
            "state": self.state,
            "started_at": self.started_at,
            "next_event_seq": self.next_event_seq,
            "audio_key": self.audio_key,
            "transcript": self.transcript_text,
            "trace_len": len(self.trace),
        }


def initial_state(kind: str) -> str:
    return CREATED if kind == GUIDE else NAVIGATING
