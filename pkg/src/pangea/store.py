"""Persistence: documents and blobs behind a pluggable backend.

The default backend is the local filesystem: one JSON file per document
under ``{data_dir}/docs/{collection}/{id}.json`` (written via temp file +
atomic rename, so a document is either fully present or absent) and blobs
under ``{data_dir}/blobs/`` with a chunk staging area for background
uploads. Task claiming is the one cross-document atomic operation; it is
serialized by a file lock so multiple server workers can share one store.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import urllib.parse
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any, Callable

from filelock import FileLock

from .navgraph import Path


class NotFoundError(KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else "not found"


class InvariantError(ValueError):
    """Document violates its schema invariants."""


class BlobError(ValueError):
    """Chunk bookkeeping problem: missing, conflicting, or unfinalized."""


GUIDE = "guide"
FOLLOWER = "follower"

TASK_OPEN = "open"
TASK_CLAIMED = "claimed"
TASK_COMPLETED = "completed"

STATUS_RAW = "raw"
STATUS_ALIGNED = "aligned"
STATUS_DEGRADED = "degraded"

OUTCOME_SUBMITTED = "submitted"
OUTCOME_DONE = "done"
OUTCOME_GAVE_UP = "gave_up"


@dataclass
class TaskRecord:
    """Claimable unit of work: a path to describe or an instruction to follow."""

    task_id: str
    kind: str  # guide | follower
    environment_id: str
    payload: dict[str, Any]
    status: str = TASK_OPEN
    claimed_by: str | None = None
    lease_expiry: float | None = None  # unix seconds

    def validate(self) -> None:
        if self.kind not in (GUIDE, FOLLOWER):
            raise InvariantError(f"task kind must be guide|follower, got {self.kind!r}")
        if self.status not in (TASK_OPEN, TASK_CLAIMED, TASK_COMPLETED):
            raise InvariantError(f"bad task status {self.status!r}")
        if self.status == TASK_CLAIMED and (self.claimed_by is None or self.lease_expiry is None):
            raise InvariantError("claimed task must have claimed_by and lease_expiry")
        if self.kind == GUIDE and "path" not in self.payload:
            raise InvariantError("guide task payload needs a path")
        if self.kind == FOLLOWER and "start_node" not in self.payload:
            raise InvariantError("follower task payload needs a start_node")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "environment_id": self.environment_id,
            "payload": self.payload,
            "status": self.status,
            "claimed_by": self.claimed_by,
            "lease_expiry": self.lease_expiry,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TaskRecord":
        return cls(task_id=raw["task_id"], kind=raw["kind"],
                   environment_id=raw["environment_id"], payload=raw["payload"],
                   status=raw["status"], claimed_by=raw.get("claimed_by"),
                   lease_expiry=raw.get("lease_expiry"))


@dataclass
class AnnotationDoc:
    """Persisted result of one Guide or Follower session."""

    annotation_id: str
    task_id: str
    worker_id: str
    environment_id: str
    kind: str
    path: list[str]
    pose_trace: list[dict]
    created_at: float
    audio_ref: str | None = None
    transcript: str | None = None
    timed_transcript: list[dict] | None = None
    outcome: str = OUTCOME_SUBMITTED
    status: str = STATUS_RAW
    error: str | None = None

    def validate(self) -> None:
        from .align import tokenize  # local import: store stays importable standalone

        if self.kind not in (GUIDE, FOLLOWER):
            raise InvariantError(f"annotation kind must be guide|follower, got {self.kind!r}")
        if self.status not in (STATUS_RAW, STATUS_ALIGNED, STATUS_DEGRADED):
            raise InvariantError(f"bad annotation status {self.status!r}")
        if not self.path:
            raise InvariantError("annotation path must be non-empty")
        if self.kind == GUIDE:
            if not self.audio_ref or not self.transcript:
                raise InvariantError("guide annotations need audio_ref and transcript")
        else:
            if self.outcome not in (OUTCOME_DONE, OUTCOME_GAVE_UP):
                raise InvariantError(
                    f"follower outcome must be done|gave_up, got {self.outcome!r}")
        if self.status == STATUS_ALIGNED:
            expected = len(tokenize(self.transcript or ""))
            if self.timed_transcript is None or len(self.timed_transcript) != expected:
                raise InvariantError(
                    "aligned annotation needs a timed_transcript with one entry "
                    "per manual token")

    def path_obj(self) -> Path:
        return Path(tuple(self.path))

    def to_dict(self) -> dict:
        return {
            "annotation_id": self.annotation_id,
            "task_id": self.task_id,
            "worker_id": self.worker_id,
            "environment_id": self.environment_id,
            "kind": self.kind,
            "path": list(self.path),
            "pose_trace": self.pose_trace,
            "created_at": self.created_at,
            "audio_ref": self.audio_ref,
            "transcript": self.transcript,
            "timed_transcript": self.timed_transcript,
            "outcome": self.outcome,
            "status": self.status,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "AnnotationDoc":
        return cls(annotation_id=raw["annotation_id"], task_id=raw["task_id"],
                   worker_id=raw["worker_id"], environment_id=raw["environment_id"],
                   kind=raw["kind"], path=list(raw["path"]),
                   pose_trace=list(raw["pose_trace"]), created_at=raw["created_at"],
                   audio_ref=raw.get("audio_ref"), transcript=raw.get("transcript"),
                   timed_transcript=raw.get("timed_transcript"),
                   outcome=raw.get("outcome", OUTCOME_SUBMITTED),
                   status=raw.get("status", STATUS_RAW), error=raw.get("error"))


@dataclass(frozen=True)
class BlobRef:
    key: str
    size_bytes: int
    content_hash: str  # sha256, lowercase hex


def _quote_key(key: str) -> str:
    return urllib.parse.quote(key, safe="")


class LocalStore:
    """Filesystem-backed document + blob store.

    Per-key document writes are atomic (temp file + rename + fsync);
    ``claim_task`` is a compare-and-set serialized by a file lock, so it is
    safe across threads and across processes sharing the data directory.
    """

    TASKS = "tasks"
    ANNOTATIONS = "annotations"
    SESSIONS = "sessions"
    ENVIRONMENTS = "environments"

    def __init__(self, data_dir: str | FsPath, clock: Callable[[], float] = time.time):
        self.data_dir = FsPath(data_dir)
        self.clock = clock
        self._docs = self.data_dir / "docs"
        self._blobs = self.data_dir / "blobs"
        self._staging = self._blobs / ".staging"
        locks = self.data_dir / "locks"
        for p in (self._docs, self._blobs, self._staging, locks):
            p.mkdir(parents=True, exist_ok=True)
        self._claim_lock = FileLock(str(locks / "tasks.lock"))
        self._local = threading.Lock()

    # ---- documents ----------------------------------------------------

    def _doc_path(self, collection: str, doc_id: str) -> FsPath:
        return self._docs / collection / f"{_quote_key(doc_id)}.json"

    def put_doc(self, collection: str, doc_id: str, doc: dict) -> str:
        path = self._doc_path(collection, doc_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".json.tmp")
        data = json.dumps(doc, ensure_ascii=False, sort_keys=True).encode("utf-8")
        fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o644)
        try:
            os.write(fd, data)
            os.fsync(fd)
        finally:
            os.close(fd)
        os.replace(tmp, path)
        return doc_id

    def get_doc(self, collection: str, doc_id: str) -> dict:
        path = self._doc_path(collection, doc_id)
        if not path.exists():
            raise NotFoundError(f"no {collection} document {doc_id!r}")
        return json.loads(path.read_text("utf-8"))

    def list_docs(self, collection: str, **filters: Any) -> list[dict]:
        """All documents in a collection matching every given field exactly."""
        directory = self._docs / collection
        if not directory.exists():
            return []
        docs = []
        for entry in sorted(directory.glob("*.json")):
            doc = json.loads(entry.read_text("utf-8"))
            if all(doc.get(k) == v for k, v in filters.items() if v is not None):
                docs.append(doc)
        return docs

    def delete_doc(self, collection: str, doc_id: str) -> None:
        path = self._doc_path(collection, doc_id)
        if not path.exists():
            raise NotFoundError(f"no {collection} document {doc_id!r}")
        path.unlink()

    # ---- typed helpers ------------------------------------------------

    def put_task(self, task: TaskRecord) -> str:
        task.validate()
        return self.put_doc(self.TASKS, task.task_id, task.to_dict())

    def get_task(self, task_id: str) -> TaskRecord:
        return TaskRecord.from_dict(self.get_doc(self.TASKS, task_id))

    def list_tasks(self, **filters: Any) -> list[TaskRecord]:
        return [TaskRecord.from_dict(d) for d in self.list_docs(self.TASKS, **filters)]

    def put_annotation(self, doc: AnnotationDoc) -> str:
        doc.validate()
        return self.put_doc(self.ANNOTATIONS, doc.annotation_id, doc.to_dict())

    def get_annotation(self, annotation_id: str) -> AnnotationDoc:
        return AnnotationDoc.from_dict(self.get_doc(self.ANNOTATIONS, annotation_id))

    def list_annotations(self, **filters: Any) -> list[AnnotationDoc]:
        return [AnnotationDoc.from_dict(d)
                for d in self.list_docs(self.ANNOTATIONS, **filters)]

    # ---- task claiming ------------------------------------------------

    def claim_task(self, kind: str, worker_id: str,
                   lease_minutes: float = 60.0) -> TaskRecord | None:
        """Atomically claim one open (or lease-expired) task of the given kind.

        Returns None when nothing is claimable. No task is ever handed to
        two workers with overlapping leases; completed tasks never reopen.
        """
        if lease_minutes <= 0:
            raise ValueError(f"lease_minutes must be > 0, got {lease_minutes}")
        with self._local, self._claim_lock:
            now = self.clock()
            eligible = [
                t for t in self.list_tasks(kind=kind)
                if t.status == TASK_OPEN
                or (t.status == TASK_CLAIMED and t.lease_expiry is not None
                    and t.lease_expiry <= now)
            ]
            if not eligible:
                return None
            task = min(eligible, key=lambda t: t.task_id)
            task.status = TASK_CLAIMED
            task.claimed_by = worker_id
            task.lease_expiry = now + lease_minutes * 60.0
            self.put_task(task)
            return task

    def complete_task(self, task_id: str) -> None:
        with self._local, self._claim_lock:
            task = self.get_task(task_id)
            task.status = TASK_COMPLETED
            self.put_task(task)

    # ---- blobs --------------------------------------------------------

    def _blob_path(self, key: str) -> FsPath:
        return self._blobs / _quote_key(key)

    def _chunk_dir(self, key: str) -> FsPath:
        return self._staging / _quote_key(key)

    def blob_append(self, key: str, chunk_index: int, data: bytes) -> None:
        """Stage one chunk; chunks may arrive in any order and may be retried."""
        if chunk_index < 0:
            raise BlobError(f"chunk_index must be >= 0, got {chunk_index}")
        chunk_dir = self._chunk_dir(key)
        chunk_dir.mkdir(parents=True, exist_ok=True)
        target = chunk_dir / f"{chunk_index:06d}.part"
        if target.exists():
            if target.read_bytes() != data:
                raise BlobError(
                    f"chunk {chunk_index} of {key!r} re-uploaded with different bytes")
            return
        tmp = chunk_dir / f"{chunk_index:06d}.tmp"
        tmp.write_bytes(data)
        os.replace(tmp, target)

    def blob_finalize(self, key: str, total_chunks: int) -> BlobRef:
        """Verify chunks 0..total_chunks-1, concatenate in index order, and seal.

        Re-finalizing an already-sealed blob is a no-op returning the same ref.
        """
        final = self._blob_path(key)
        chunk_dir = self._chunk_dir(key)
        if not chunk_dir.exists():
            if final.exists():
                data = final.read_bytes()
                return BlobRef(key=key, size_bytes=len(data),
                               content_hash=hashlib.sha256(data).hexdigest())
            raise BlobError(f"no staged chunks for blob {key!r}")
        missing = [i for i in range(total_chunks)
                   if not (chunk_dir / f"{i:06d}.part").exists()]
        if missing:
            raise BlobError(f"blob {key!r} missing chunk {missing[0]} "
                            f"(of {total_chunks} expected)")
        parts = [(chunk_dir / f"{i:06d}.part").read_bytes() for i in range(total_chunks)]
        data = b"".join(parts)
        tmp = final.with_name(final.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, final)
        for part in chunk_dir.iterdir():
            part.unlink()
        chunk_dir.rmdir()
        return BlobRef(key=key, size_bytes=len(data),
                       content_hash=hashlib.sha256(data).hexdigest())

    def blob_put(self, key: str, data: bytes) -> BlobRef:
        """One-shot store of a complete blob (panoramas, fixtures)."""
        self.blob_append(key, 0, data)
        return self.blob_finalize(key, 1)

    def blob_get(self, key: str) -> bytes:
        final = self._blob_path(key)
        if final.exists():
            return final.read_bytes()
        if self._chunk_dir(key).exists():
            raise BlobError(f"blob {key!r} has staged chunks but was never finalized")
        raise NotFoundError(f"no blob {key!r}")

    def blob_exists(self, key: str) -> bool:
        return self._blob_path(key).exists()
