"""Release acceptance gate: one test per shipping criterion.

`pytest tests/test_acceptance.py -v` yields exactly one pass/fail line per
criterion. Each test also prints a one-line summary with the measured
numbers (shown under -rP, or automatically on failure). Everything here runs
headless against in-process servers and temp-dir stores; no browser, no
network, no secondary component.
"""
from __future__ import annotations

import hashlib
import json
import random
import threading
import time

from pangea import demo
from pangea.align import TimedToken, Token, align_transcript, dtw_align, token_cost, tokenize
from pangea.metrics import evaluate, navigation_error
from pangea.navgraph import Path, UnreachableError, load_graph
from pangea.sessions import (
    FOLLOWER_STATES,
    GUIDE_STATES,
    IllegalTransition,
    initial_state,
)
from pangea.store import FOLLOWER, GUIDE, TASK_OPEN, LocalStore, TaskRecord

from conftest import build_harness
from oracles import (
    brute_dtw,
    brute_geodesic,
    doc_adjacency,
    doc_edges,
    doc_positions,
    random_graph_doc,
    random_walk,
)
from scripted import run_follower, run_guide
from test_sessions import FOLLOWER_LEGAL, GUIDE_LEGAL, make_session

VOCAB = [
    "turn", "left", "right", "walk", "past", "the", "kitchen", "table",
    "then", "stop", "at", "sofa", "door", "stairs", "around", "corner",
    "hall", "into", "room", "window", "chair", "lamp", "next", "go",
    "straight", "ahead", "behind", "red", "blue", "exit",
]


class FixedAsr:
    def __init__(self, tokens: list[TimedToken]):
        self.tokens = tokens

    def transcribe(self, audio: bytes) -> list[TimedToken]:
        return self.tokens


def timed(index: int, word: str, start_ms: int, end_ms: int) -> TimedToken:
    return TimedToken(token=Token(text=word, original=word, index=index),
                      start_ms=start_ms, end_ms=end_ms)


def random_spans(rng: random.Random, count: int) -> list[tuple[int, int]]:
    """Monotone, non-overlapping word spans with small random gaps."""
    spans = []
    t = rng.randint(0, 300)
    for _ in range(count):
        duration = rng.randint(180, 420)
        spans.append((t, t + duration))
        t += duration + rng.randint(0, 120)
    return spans


def report(line: str) -> None:
    print(f"[criterion] {line}")


# ---------------------------------------------------------------------------
# 1. warping agrees with an exhaustive oracle
# ---------------------------------------------------------------------------

def test_dtw_agrees_with_exhaustive_oracle():
    """1,000 random token pairs up to 6 a side: cost and path match brute force."""
    rng = random.Random(60601)
    started = time.monotonic()
    mismatches = 0
    for _ in range(1000):
        auto_words = [rng.choice(VOCAB) for _ in range(rng.randint(1, 6))]
        manual_words = [rng.choice(VOCAB) for _ in range(rng.randint(1, 6))]
        auto = [timed(i, w, 100 * i, 100 * i + 90)
                for i, w in enumerate(auto_words)]
        manual = [Token(text=w, original=w, index=i)
                  for i, w in enumerate(manual_words)]
        costs = [[token_cost(a.token, m) for m in manual] for a in auto]
        expected_cost, optimal = brute_dtw(costs)
        path, cost = dtw_align(auto, manual)
        if abs(cost - expected_cost) > 1e-9:
            mismatches += 1
        elif path.steps not in [tuple(p) for p in optimal]:
            mismatches += 1
    elapsed = time.monotonic() - started
    assert mismatches == 0
    assert elapsed < 60.0
    report(f"dtw oracle: 1000 pairs, {mismatches} mismatches, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. verbatim transcription reproduces its own timestamps
# ---------------------------------------------------------------------------

def test_verbatim_asr_alignment_is_exact():
    """100 transcripts where the recognizer echoes the manual tokens: 0 ms error."""
    rng = random.Random(60602)
    off_by = 0
    for _ in range(100):
        words = [rng.choice(VOCAB) for _ in range(rng.randint(5, 20))]
        spans = random_spans(rng, len(words))
        asr_tokens = [timed(i, w, *spans[i]) for i, w in enumerate(words)]
        # dress the manual text up with case and punctuation noise; the
        # normalizer has to see through it for the costs to hit zero
        dressed = []
        for w in words:
            if rng.random() < 0.3:
                w = w.capitalize()
            if rng.random() < 0.2:
                w += rng.choice([",", ".", "!", "?"])
            dressed.append(w)
        aligned = align_transcript(b"irrelevant", " ".join(dressed),
                                   FixedAsr(asr_tokens))
        assert not aligned.degraded
        assert len(aligned.tokens) == len(words)
        for i, tok in enumerate(aligned.tokens):
            if (tok.start_ms, tok.end_ms) != spans[i]:
                off_by += 1
    assert off_by == 0
    report(f"verbatim fixpoint: 100 transcripts, {off_by} tokens off")


# ---------------------------------------------------------------------------
# 3. alignment survives recognizer word errors
# ---------------------------------------------------------------------------

def test_alignment_tolerates_asr_word_substitutions():
    """10% word substitutions in the recognizer output: >=90% of token
    onsets still land within 250 ms of ground truth."""
    rng = random.Random(20240817)
    total = within = 0
    end_within = 0
    for _ in range(30):
        words = [rng.choice(VOCAB) for _ in range(rng.randint(30, 60))]
        spans = random_spans(rng, len(words))
        noisy = []
        for i, w in enumerate(words):
            if rng.random() < 0.10:
                w = rng.choice([v for v in VOCAB if v != w])
            noisy.append(timed(i, w, *spans[i]))
        aligned = align_transcript(b"irrelevant", " ".join(words),
                                   FixedAsr(noisy))
        assert not aligned.degraded
        for i, tok in enumerate(aligned.tokens):
            total += 1
            if abs(tok.start_ms - spans[i][0]) <= 250:
                within += 1
            if abs(tok.end_ms - spans[i][1]) <= 250:
                end_within += 1
    rate = within / total
    assert rate >= 0.90
    report(f"noise robustness: {within}/{total} onsets within 250ms "
           f"({rate:.1%}; ends {end_within / total:.1%})")


# ---------------------------------------------------------------------------
# 4. metric invariants on random instances
# ---------------------------------------------------------------------------

def test_metric_invariants_hold_on_random_instances():
    """1,000 random graphs with random walk pairs: SPL bounds and the
    equality condition, error symmetry, and geodesics equal to the
    brute-force simple-path minimum. Zero violations allowed."""
    rng = random.Random(60604)
    violations: list[str] = []
    spls, successes = [], []
    for trial in range(1000):
        doc = random_graph_doc(rng, p_edge=0.6)
        graph = load_graph(json.dumps(doc))
        ids = graph.node_ids()

        a, b = rng.choice(ids), rng.choice(ids)
        expected = brute_geodesic(doc_positions(doc), doc_edges(doc), a, b)
        try:
            distance, path = graph.geodesic(a, b)
            got = (distance, path.nodes)
        except UnreachableError:
            got = None
        if expected is None or got is None:
            if (expected is None) != (got is None):
                violations.append(f"{trial}: reachability disagrees for {a}->{b}")
        elif abs(got[0] - expected[0]) > 1e-9 or got[1] != expected[1]:
            violations.append(f"{trial}: geodesic {got} != oracle {expected}")

        adj = doc_adjacency(doc)
        start = rng.choice(ids)
        pred = Path(random_walk(adj, rng, start))
        ref = Path(random_walk(adj, rng, start))
        ev = evaluate(graph, pred, ref)
        spls.append(ev.spl)
        successes.append(ev.success)
        if not (0.0 <= ev.spl <= 1.0):
            violations.append(f"{trial}: spl {ev.spl} out of bounds")
        if (ev.spl == 1.0) != (ev.success and ev.pred_length_m == ev.shortest_m):
            violations.append(f"{trial}: spl=1 condition broken ({ev})")
        if not ev.success and ev.spl != 0.0:
            violations.append(f"{trial}: failed run scored spl {ev.spl}")
        if not (0.0 < ev.path_sim <= 1.0):
            violations.append(f"{trial}: path_sim {ev.path_sim} out of bounds")
        forward = navigation_error(graph, pred, ref)
        backward = navigation_error(graph, ref, pred)
        if abs(forward - backward) > 1e-9:
            violations.append(f"{trial}: ne asymmetric {forward} vs {backward}")
    mean_spl = sum(spls) / len(spls)
    success_rate = sum(successes) / len(successes)
    if mean_spl > success_rate + 1e-12:
        violations.append(f"mean spl {mean_spl} exceeds success rate {success_rate}")
    assert violations == []
    report(f"metric invariants: 1000 instances, {len(violations)} violations "
           f"(mean spl {mean_spl:.3f} <= success rate {success_rate:.3f})")


# ---------------------------------------------------------------------------
# 5. scripted end-to-end round trip
# ---------------------------------------------------------------------------

def test_scripted_session_round_trip(tmp_path):
    """Scripted guide records, uploads, submits; alignment lands; scripted
    follower walks the same route; the dashboard reads 1.0/0.0/1.0."""
    started = time.monotonic()
    h = build_harness(tmp_path)
    try:
        h.seed_guide_task(path=("n0", "n1", "n2"))
        guide = run_guide(h.client, h.wav, demo.DEMO_INSTRUCTION)
        h.app_state.runner.drain()

        doc = h.store.get_annotation(guide["annotation_id"])
        assert doc.status == "aligned", doc.error
        assert doc.path == ["n0", "n1", "n2"]
        expected_tokens = len(tokenize(demo.DEMO_INSTRUCTION))
        assert len(doc.timed_transcript) == expected_tokens

        h.seed_follower_task(
            start_node="n0",
            instruction={"kind": "audio", "annotation_id": guide["annotation_id"]},
            reference_path=("n0", "n1", "n2"))
        follower = run_follower(h.client, path=("n0", "n1", "n2"))
        follower_doc = h.store.get_annotation(follower["annotation_id"])
        assert follower_doc.path == ["n0", "n1", "n2"]

        r = h.client.get("/api/dashboard/summary")
        assert r.status_code == 200
        overall = r.json()["overall"]
        assert overall == {"ne_mean_m": 0.0, "success_rate": 1.0,
                           "spl_mean": 1.0, "path_sim_mean": 1.0, "count": 1}
    finally:
        h.app_state.runner.stop()
    elapsed = time.monotonic() - started
    assert elapsed < 30.0
    report(f"round trip: guide aligned ({expected_tokens} tokens), follower "
           f"scored 1.0/0.0/1.0, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 6. contention: claims exactly once, uploads bit-exact
# ---------------------------------------------------------------------------

def test_claims_and_chunk_uploads_under_concurrency(tmp_path):
    """8 workers race for 20 tasks and every task is claimed exactly once;
    100 shuffled chunked uploads reassemble hash-identical."""
    store = LocalStore(tmp_path / "claims")
    task_ids = [f"task-{i:03d}" for i in range(20)]
    for task_id in task_ids:
        store.put_task(TaskRecord(task_id=task_id, environment_id="e",
                                  kind=GUIDE, payload={"path": ["A"]},
                                  status=TASK_OPEN))
    claims: list[list[str]] = [[] for _ in range(8)]
    barrier = threading.Barrier(8)

    def worker(slot: int) -> None:
        barrier.wait()
        while True:
            task = store.claim_task(GUIDE, f"worker-{slot}")
            if task is None:
                return
            claims[slot].append(task.task_id)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    claimed = [task_id for per_worker in claims for task_id in per_worker]
    assert sorted(claimed) == task_ids  # each exactly once, none dropped

    blob_store = LocalStore(tmp_path / "blobs")
    rng = random.Random(60606)
    for trial in range(100):
        payload = rng.randbytes(rng.randint(1, 4096))
        pieces = []
        cursor = 0
        while cursor < len(payload):
            step = rng.randint(1, max(1, len(payload) // 4))
            pieces.append(payload[cursor:cursor + step])
            cursor += step
        order = list(range(len(pieces)))
        rng.shuffle(order)
        key = f"audio/trial-{trial}.wav"
        for index in order:
            blob_store.blob_append(key, index, pieces[index])
            if rng.random() < 0.2:  # retried chunk, same bytes
                blob_store.blob_append(key, index, pieces[index])
        ref = blob_store.blob_finalize(key, len(pieces))
        assert ref.content_hash == hashlib.sha256(payload).hexdigest()
        assert blob_store.blob_get(key) == payload
    report("concurrency: 20/20 tasks claimed exactly once by 8 workers; "
           "100/100 shuffled uploads bit-exact")


# ---------------------------------------------------------------------------
# 7. transition matrices are airtight
# ---------------------------------------------------------------------------

def test_transition_matrices_reject_every_illegal_action():
    """Every (state, action) cell for both session kinds, including actions
    from the other kind's protocol: the legal table and nothing else."""
    all_actions = ("start-recording", "pause", "resume", "stop-recording",
                   "submit", "complete")
    cells = legal = rejected = 0
    for kind, states, table in ((GUIDE, GUIDE_STATES, GUIDE_LEGAL),
                                (FOLLOWER, FOLLOWER_STATES, FOLLOWER_LEGAL)):
        for state in states:
            for action in all_actions:
                cells += 1
                session = make_session(kind)
                session.state = state
                if (state, action) in table and kind == (
                        GUIDE if action != "complete" else FOLLOWER):
                    assert session.apply(action) == table[(state, action)]
                    legal += 1
                else:
                    try:
                        session.apply(action)
                    except IllegalTransition:
                        rejected += 1
                    else:
                        raise AssertionError(
                            f"{kind} session in {state!r} accepted {action!r}")
                    assert session.state == state
    assert (cells, legal, rejected) == (42, 7, 35)
    assert initial_state(GUIDE) == "created"
    assert initial_state(FOLLOWER) == "navigating"
    report(f"state machines: {cells} cells, {legal} legal applied, "
           f"{rejected} illegal rejected")
