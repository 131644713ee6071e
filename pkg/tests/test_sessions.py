from __future__ import annotations

import pytest

from pangea import sessions as sm
from pangea.store import FOLLOWER, GUIDE, TASK_CLAIMED, TaskRecord
from pangea.trace import PoseTrace, TraceError


GUIDE_LEGAL = {
    ("created", "start-recording"): "recording",
    ("recording", "pause"): "paused",
    ("paused", "resume"): "recording",
    ("recording", "stop-recording"): "transcribing",
    ("paused", "stop-recording"): "transcribing",
    ("transcribing", "submit"): "completed",
}

FOLLOWER_LEGAL = {
    ("navigating", "complete"): "completed",
}

GUIDE_ACTIONS = ("start-recording", "pause", "resume", "stop-recording", "submit")
FOLLOWER_ACTIONS = ("complete",)


def make_session(kind):
    task = TaskRecord(task_id="t", environment_id="e", kind=kind,
                      payload={"path": ["A"]} if kind == GUIDE
                      else {"start_node": "A",
                            "instruction": {"kind": "text", "text": "go"}},
                      status=TASK_CLAIMED, claimed_by="w", lease_expiry=10.0)
    return sm.Session(session_id="s", task=task, worker_id="w", kind=kind,
                      state=sm.initial_state(kind), trace=PoseTrace(session_id="s"),
                      started_at=0.0)


def event(t_ms, node="A"):
    return {"t_ms": t_ms, "node": node, "heading_rad": 0.0, "pitch_rad": 0.0}


class TestTransitionMatrix:
    """Every (state, action) pair, both kinds: the legal table and nothing else."""

    @pytest.mark.parametrize("state", sm.GUIDE_STATES)
    @pytest.mark.parametrize("action", GUIDE_ACTIONS)
    def test_guide(self, state, action):
        session = make_session(GUIDE)
        session.state = state
        if (state, action) in GUIDE_LEGAL:
            assert session.apply(action) == GUIDE_LEGAL[(state, action)]
        else:
            with pytest.raises(sm.IllegalTransition):
                session.apply(action)
            assert session.state == state  # unchanged after rejection

    @pytest.mark.parametrize("state", sm.FOLLOWER_STATES)
    @pytest.mark.parametrize("action", FOLLOWER_ACTIONS)
    def test_follower(self, state, action):
        session = make_session(FOLLOWER)
        session.state = state
        if (state, action) in FOLLOWER_LEGAL:
            assert session.apply(action) == FOLLOWER_LEGAL[(state, action)]
        else:
            with pytest.raises(sm.IllegalTransition):
                session.apply(action)

    def test_guide_actions_on_follower_all_illegal(self):
        for state in sm.FOLLOWER_STATES:
            for action in GUIDE_ACTIONS:
                session = make_session(FOLLOWER)
                session.state = state
                with pytest.raises(sm.IllegalTransition):
                    session.apply(action)

    def test_initial_states(self):
        assert sm.initial_state(GUIDE) == "created"
        assert sm.initial_state(FOLLOWER) == "navigating"


class TestGateTables:
    def test_guide_events_only_while_recording(self):
        session = make_session(GUIDE)
        for state, expected in [("created", False), ("recording", True),
                                ("paused", False), ("transcribing", False),
                                ("completed", False)]:
            session.state = state
            assert session.can(sm.EVENT_STATES) is expected

    def test_guide_chunks_through_transcribing(self):
        session = make_session(GUIDE)
        for state, expected in [("created", False), ("recording", True),
                                ("paused", True), ("transcribing", True),
                                ("completed", False)]:
            session.state = state
            assert session.can(sm.CHUNK_STATES) is expected

    def test_follower_never_uploads_audio(self):
        session = make_session(FOLLOWER)
        for state in sm.FOLLOWER_STATES:
            session.state = state
            assert not session.can(sm.CHUNK_STATES)
            assert not session.can(sm.FINALIZE_STATES)

    def test_instruction_only_while_navigating(self):
        session = make_session(FOLLOWER)
        assert session.can(sm.INSTRUCTION_STATES)
        session.state = "completed"
        assert not session.can(sm.INSTRUCTION_STATES)


class TestEventIngestion:
    def test_sequential_batches(self):
        session = make_session(FOLLOWER)
        assert session.ingest_events(1, [event(0)]) == 1
        assert session.ingest_events(2, [event(10)]) == 2
        assert len(session.trace) == 2

    def test_duplicate_is_noop_ack(self):
        session = make_session(FOLLOWER)
        session.ingest_events(1, [event(0), event(5)])
        assert session.ingest_events(1, [event(0), event(5)]) == 1
        assert len(session.trace) == 2

    def test_gap_names_expected_seq(self):
        session = make_session(FOLLOWER)
        session.ingest_events(1, [event(0)])
        with pytest.raises(sm.SequenceGap) as info:
            session.ingest_events(3, [event(10)])
        assert "expected seq 2" in str(info.value)

    def test_bad_batch_changes_nothing(self):
        session = make_session(FOLLOWER)
        session.ingest_events(1, [event(100)])
        with pytest.raises(TraceError):
            session.ingest_events(2, [event(200), event(50)])
        assert len(session.trace) == 1
        assert session.next_event_seq == 2  # failed batch not consumed

    def test_replaying_any_prefix_is_stable(self):
        batches = [[event(0), event(10)], [event(20)], [event(30), event(40)]]
        session = make_session(FOLLOWER)
        for seq, batch in enumerate(batches, start=1):
            session.ingest_events(seq, batch)
        reference = [p.t_ms for p in session.trace.poses]

        for prefix in range(len(batches) + 1):
            replayed = make_session(FOLLOWER)
            log = batches[:prefix] + batches  # client retries a whole prefix
            seqs = list(range(1, prefix + 1)) + list(range(1, len(batches) + 1))
            for seq, batch in zip(seqs, log):
                replayed.ingest_events(seq, batch)
            assert [p.t_ms for p in replayed.trace.poses] == reference
