"""HTTP service: environments, Guide/Follower session protocol, audio upload,
alignment jobs, and the monitoring dashboard.

Everything a session does goes through these endpoints, so the state
machines in :mod:`pangea.sessions` are the single source of truth for what
a client may do next. Ids and the clock are injectable to keep end-to-end
runs deterministic under test.
"""

from __future__ import annotations

import threading
import time
import uuid
from typing import Any, Callable

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import sessions as sm
from .align import TimedToken
from .audio import AudioError, compute_waveform
from .config import AppConfig, build_transcriber
from .jobs import AlignmentJobRunner
from .metrics import EvalParams
from .navgraph import NavigationGraph, UnknownNodeError
from .reporting import evaluate_follower, graph_loader, summarize_store
from .store import (
    FOLLOWER,
    GUIDE,
    OUTCOME_DONE,
    OUTCOME_GAVE_UP,
    OUTCOME_SUBMITTED,
    STATUS_RAW,
    AnnotationDoc,
    BlobError,
    LocalStore,
    NotFoundError,
)
from .trace import PoseTrace, TraceError


class SessionCreate(BaseModel):
    worker_id: str
    kind: str


class EventBatch(BaseModel):
    seq: int
    events: list[dict]


class TranscriptBody(BaseModel):
    text: str


class FinalizeBody(BaseModel):
    total_chunks: int


class CompleteBody(BaseModel):
    outcome: str


def graph_blob_key(environment_id: str) -> str:
    return f"env/{environment_id}/graph.json"


class ServerState:
    """Mutable service state shared by the endpoints."""

    def __init__(self, config: AppConfig, store: LocalStore, transcriber,
                 id_factory: Callable[[], str], clock: Callable[[], float]):
        self.config = config
        self.store = store
        self.transcriber = transcriber
        self.id_factory = id_factory
        self.clock = clock
        self.sessions: dict[str, sm.Session] = {}
        self.sessions_lock = threading.Lock()
        self.graphs = graph_loader(store)
        self.runner = AlignmentJobRunner(
            store, transcriber,
            retries=config.asr.retries, backoff_s=config.asr.backoff_s,
            pool_size=config.worker_pool_size)

    def graph(self, environment_id: str) -> NavigationGraph:
        try:
            return self.graphs(environment_id)
        except NotFoundError:
            raise HTTPException(404, f"unknown environment {environment_id!r}")

    def session(self, session_id: str) -> sm.Session:
        with self.sessions_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return session

    def persist_session(self, session: sm.Session) -> None:
        self.store.put_doc(self.store.SESSIONS, session.session_id, session.to_dict())


def _sniff_image_type(data: bytes) -> str:
    if data.startswith(b"\x89PNG\r\n\x1a\n"):
        return "image/png"
    if data.startswith(b"\xff\xd8"):
        return "image/jpeg"
    return "application/octet-stream"


def _session_payload(session: sm.Session) -> dict:
    return {"session_id": session.session_id, "task": session.task.to_dict(),
            "state": session.state, "kind": session.kind,
            "worker_id": session.worker_id}


def create_app(config: AppConfig | None = None, store: LocalStore | None = None,
               transcriber=None, id_factory: Callable[[], str] | None = None,
               clock: Callable[[], float] = time.time) -> FastAPI:
    config = config or AppConfig()
    store = store or LocalStore(config.data_dir, clock=clock)
    transcriber = transcriber if transcriber is not None else build_transcriber(config)
    id_factory = id_factory or (lambda: uuid.uuid4().hex[:12])
    state = ServerState(config, store, transcriber, id_factory, clock)

    app = FastAPI(title="pangea", docs_url=None, redoc_url=None)
    app.state.pangea = state

    # ---- environment hosting ------------------------------------------

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/config")
    def bootstrap_config() -> dict:
        return {
            "waveform_bins": config.waveform_bins,
            "heartbeat_ms": config.heartbeat_ms,
            "success_threshold_m": config.success_threshold_m,
            "lease_minutes": config.lease_minutes,
        }

    @app.get("/api/environments/{env}/graph")
    def get_graph(env: str) -> Response:
        try:
            raw = state.store.blob_get(graph_blob_key(env))
        except NotFoundError:
            raise HTTPException(404, f"unknown environment {env!r}")
        return Response(content=raw, media_type="application/json")

    @app.get("/api/environments/{env}/pano/{node_id}")
    def get_panorama(env: str, node_id: str) -> Response:
        graph = state.graph(env)
        try:
            node = graph.node(node_id)
        except UnknownNodeError:
            raise HTTPException(404, f"unknown node {node_id!r} in environment {env!r}")
        try:
            data = state.store.blob_get(node.panorama)
        except NotFoundError:
            raise HTTPException(
                404, f"panorama blob {node.panorama!r} for node {node_id!r} is missing")
        return Response(content=data, media_type=_sniff_image_type(data))

    # ---- session lifecycle --------------------------------------------

    @app.post("/api/sessions")
    def create_session(body: SessionCreate) -> dict:
        if body.kind not in (GUIDE, FOLLOWER):
            raise HTTPException(422, f"kind must be guide|follower, got {body.kind!r}")
        task = state.store.claim_task(body.kind, body.worker_id,
                                      lease_minutes=config.lease_minutes)
        if task is None:
            raise HTTPException(409, f"no {body.kind} tasks available")
        session = sm.Session(
            session_id=state.id_factory(),
            task=task,
            worker_id=body.worker_id,
            kind=body.kind,
            state=sm.initial_state(body.kind),
            trace=PoseTrace(),
            started_at=state.clock(),
        )
        session.trace.session_id = session.session_id
        session.audio_key = f"audio/{session.session_id}.wav"
        with state.sessions_lock:
            state.sessions[session.session_id] = session
        state.persist_session(session)
        return _session_payload(session)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _session_payload(state.session(session_id))

    @app.post("/api/sessions/{session_id}/events")
    def post_events(session_id: str, body: EventBatch) -> dict:
        session = state.session(session_id)
        with session.lock:
            if not session.can(sm.EVENT_STATES):
                raise HTTPException(
                    409, f"events are not accepted in state {session.state!r}")
            graph = state.graph(session.task.environment_id)
            restricted = (session.kind == GUIDE
                          and session.task.payload.get("restrict_movement"))
            allowed = set(session.task.payload.get("path", [])) if restricted else None
            for event in body.events:
                node = event.get("node")
                if node not in graph:
                    raise HTTPException(422, f"unknown node {node!r}")
                if allowed is not None and node not in allowed:
                    raise HTTPException(
                        422, f"movement restricted to the task path; {node!r} is off-path")
            try:
                accepted = session.ingest_events(body.seq, body.events)
            except sm.SequenceGap as e:
                raise HTTPException(409, str(e))
            except TraceError as e:
                raise HTTPException(422, str(e))
            return {"accepted_through_seq": accepted}

    def _apply_transition(session_id: str, action: str) -> dict:
        session = state.session(session_id)
        with session.lock:
            try:
                session.apply(action)
            except sm.IllegalTransition as e:
                raise HTTPException(409, str(e))
            state.persist_session(session)
            return {"state": session.state}

    @app.post("/api/sessions/{session_id}/start-recording")
    def start_recording(session_id: str) -> dict:
        return _apply_transition(session_id, "start-recording")

    @app.post("/api/sessions/{session_id}/pause")
    def pause(session_id: str) -> dict:
        return _apply_transition(session_id, "pause")

    @app.post("/api/sessions/{session_id}/resume")
    def resume(session_id: str) -> dict:
        return _apply_transition(session_id, "resume")

    @app.post("/api/sessions/{session_id}/stop-recording")
    def stop_recording(session_id: str) -> dict:
        return _apply_transition(session_id, "stop-recording")

    @app.post("/api/sessions/{session_id}/transcript")
    def set_transcript(session_id: str, body: TranscriptBody) -> dict:
        session = state.session(session_id)
        with session.lock:
            if not session.can(sm.TRANSCRIPT_STATES):
                raise HTTPException(
                    409, f"transcript is not accepted in state {session.state!r}")
            session.transcript_text = body.text
            return {"state": session.state}

    # ---- background audio upload --------------------------------------

    @app.put("/api/sessions/{session_id}/audio/{chunk_index}")
    async def put_audio_chunk(session_id: str, chunk_index: int,
                              request: Request) -> dict:
        session = state.session(session_id)
        data = await request.body()
        with session.lock:
            if not session.can(sm.CHUNK_STATES):
                raise HTTPException(
                    409, f"audio chunks are not accepted in state {session.state!r}")
            try:
                state.store.blob_append(session.audio_key, chunk_index, data)
            except BlobError as e:
                raise HTTPException(409, str(e))
            return {"received": chunk_index}

    @app.post("/api/sessions/{session_id}/audio/finalize")
    def finalize_audio(session_id: str, body: FinalizeBody) -> dict:
        session = state.session(session_id)
        with session.lock:
            if not session.can(sm.FINALIZE_STATES):
                raise HTTPException(
                    409, f"audio finalize is not accepted in state {session.state!r}")
            try:
                session.audio_ref = state.store.blob_finalize(session.audio_key,
                                                              body.total_chunks)
            except BlobError as e:
                raise HTTPException(409, str(e))
            return {"audio_key": session.audio_key,
                    "size_bytes": session.audio_ref.size_bytes,
                    "content_hash": session.audio_ref.content_hash}

    # ---- guide submit -------------------------------------------------

    @app.post("/api/sessions/{session_id}/submit")
    def submit(session_id: str) -> dict:
        session = state.session(session_id)
        with session.lock:
            if session.kind != GUIDE:
                raise HTTPException(409, "submit is a guide action")
            if session.state != sm.TRANSCRIBING:
                raise HTTPException(
                    409, f"submit is not legal in state {session.state!r}")
            if not (session.transcript_text or "").strip():
                raise HTTPException(422, "transcript must be non-empty before submit")
            if session.audio_ref is None:
                raise HTTPException(
                    409, "audio upload not finalized yet; retry after finalize",
                    headers={"Retry-After": "1"})
            session.apply("submit")
            if session.task.payload.get("path"):
                path = list(session.task.payload["path"])
            else:
                path = list(session.trace.extract_path().nodes)
            doc = AnnotationDoc(
                annotation_id=state.id_factory(),
                task_id=session.task.task_id,
                worker_id=session.worker_id,
                environment_id=session.task.environment_id,
                kind=GUIDE,
                path=path,
                pose_trace=session.trace.to_dicts(),
                created_at=state.clock(),
                audio_ref=session.audio_key,
                transcript=session.transcript_text,
                outcome=OUTCOME_SUBMITTED,
                status=STATUS_RAW,
            )
            state.store.put_annotation(doc)
            state.store.complete_task(session.task.task_id)
            state.persist_session(session)
            state.runner.enqueue(doc.annotation_id)
            return {"annotation_id": doc.annotation_id, "state": session.state}

    # ---- follower -----------------------------------------------------

    def _instruction(session: sm.Session) -> dict:
        payload = session.task.payload.get("instruction")
        if not payload:
            raise HTTPException(404, "task has no instruction")
        return payload

    def _guide_annotation_for(session: sm.Session) -> AnnotationDoc:
        instruction = _instruction(session)
        annotation_id = instruction.get("annotation_id")
        if not annotation_id:
            raise HTTPException(404, "instruction has no audio annotation")
        try:
            return state.store.get_annotation(annotation_id)
        except NotFoundError:
            raise HTTPException(
                404, f"instruction annotation {annotation_id!r} does not exist")

    @app.get("/api/sessions/{session_id}/instruction")
    def get_instruction(session_id: str) -> Response:
        session = state.session(session_id)
        if not session.can(sm.INSTRUCTION_STATES):
            raise HTTPException(
                409, f"instruction is not served in state {session.state!r}")
        instruction = _instruction(session)
        if instruction.get("kind") == "text":
            return JSONResponse({"kind": "text", "text": instruction.get("text", "")})
        guide_doc = _guide_annotation_for(session)
        try:
            audio = state.store.blob_get(guide_doc.audio_ref)
        except (NotFoundError, BlobError):
            raise HTTPException(
                404, f"instruction audio {guide_doc.audio_ref!r} is missing")
        return Response(content=audio, media_type="audio/wav")

    @app.get("/api/sessions/{session_id}/waveform")
    def get_waveform(session_id: str) -> dict:
        session = state.session(session_id)
        if not session.can(sm.INSTRUCTION_STATES):
            raise HTTPException(
                409, f"waveform is not served in state {session.state!r}")
        guide_doc = _guide_annotation_for(session)
        try:
            audio = state.store.blob_get(guide_doc.audio_ref)
        except (NotFoundError, BlobError):
            raise HTTPException(
                404, f"instruction audio {guide_doc.audio_ref!r} is missing")
        try:
            envelope = compute_waveform(audio, bins=config.waveform_bins)
        except AudioError as e:
            raise HTTPException(422, f"instruction audio is not valid WAV: {e}")
        return envelope.to_dict()

    @app.post("/api/sessions/{session_id}/complete")
    def complete(session_id: str, body: CompleteBody) -> dict:
        session = state.session(session_id)
        with session.lock:
            if body.outcome not in (OUTCOME_DONE, OUTCOME_GAVE_UP):
                raise HTTPException(
                    422, f"outcome must be done|gave_up, got {body.outcome!r}")
            try:
                session.apply("complete")
            except sm.IllegalTransition as e:
                raise HTTPException(409, str(e))
            if session.trace.poses:
                path = list(session.trace.extract_path().nodes)
            else:
                path = [session.task.payload["start_node"]]
            doc = AnnotationDoc(
                annotation_id=state.id_factory(),
                task_id=session.task.task_id,
                worker_id=session.worker_id,
                environment_id=session.task.environment_id,
                kind=FOLLOWER,
                path=path,
                pose_trace=session.trace.to_dicts(),
                created_at=state.clock(),
                outcome=body.outcome,
                status=STATUS_RAW,
            )
            state.store.put_annotation(doc)
            state.store.complete_task(session.task.task_id)
            state.persist_session(session)
            return {"annotation_id": doc.annotation_id, "state": session.state}

    # ---- dashboard ----------------------------------------------------

    eval_params = EvalParams(config.success_threshold_m)

    def _evaluate_follower(doc: AnnotationDoc):
        return evaluate_follower(state.store, state.graphs, doc, eval_params)

    @app.get("/api/dashboard/summary")
    def dashboard_summary(environment_id: str | None = None) -> dict:
        report = summarize_store(state.store, eval_params,
                                 environment_id=environment_id, graphs=state.graphs)
        return report.to_dict()

    @app.get("/api/annotations/{annotation_id}")
    def get_annotation(annotation_id: str) -> dict:
        try:
            return state.store.get_annotation(annotation_id).to_dict()
        except NotFoundError:
            raise HTTPException(404, f"unknown annotation {annotation_id!r}")

    @app.get("/api/annotations/{annotation_id}/replay")
    def replay(annotation_id: str) -> dict:
        try:
            doc = state.store.get_annotation(annotation_id)
        except NotFoundError:
            raise HTTPException(404, f"unknown annotation {annotation_id!r}")
        timed = doc.timed_transcript
        if timed is None and doc.kind == FOLLOWER:
            try:
                task = state.store.get_task(doc.task_id)
                instruction = task.payload.get("instruction") or {}
                ref_id = instruction.get("annotation_id")
                if ref_id:
                    timed = state.store.get_annotation(ref_id).timed_transcript
            except NotFoundError:
                timed = None
        ev = _evaluate_follower(doc) if doc.kind == FOLLOWER else None
        return {
            "annotation": doc.to_dict(),
            "pose_trace": doc.pose_trace,
            "timed_transcript": timed,
            "path": list(doc.path),
            "eval": ev.to_dict() if ev is not None else None,
        }

    return app
