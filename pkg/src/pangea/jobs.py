"""Background alignment jobs: raw guide annotations -> timed transcripts.

Submitting a guide session enqueues its annotation here. Workers pull ids
off a queue, run the ASR + DTW pipeline, and persist the result. The run
is idempotent (an already-aligned document is left untouched), transient
ASR failures are retried with exponential backoff, and a permanently
failing ASR degrades to the uniform-spread fallback instead of failing the
annotation.
"""

from __future__ import annotations

import logging
import queue
import threading
import time

from .align import AlignmentError, align_transcript, tokenize, uniform_spread
from .asr import AsrError
from .audio import AudioError, wav_duration_ms
from .store import GUIDE, STATUS_ALIGNED, STATUS_DEGRADED, STATUS_RAW, LocalStore

log = logging.getLogger(__name__)


class RetryingTranscriber:
    """Wraps a transcriber with bounded retries and exponential backoff."""

    def __init__(self, inner, retries: int = 3, backoff_s: float = 0.5,
                 sleep=time.sleep):
        self.inner = inner
        self.retries = retries
        self.backoff_s = backoff_s
        self.sleep = sleep

    def transcribe(self, audio: bytes):
        attempt = 0
        while True:
            try:
                return self.inner.transcribe(audio)
            except AsrError:
                if attempt >= self.retries:
                    raise
                self.sleep(self.backoff_s * (2 ** attempt))
                attempt += 1


class AlignmentJobRunner:
    """Aligns raw guide annotations, inline or on a background worker pool."""

    def __init__(self, store: LocalStore, transcriber, retries: int = 3,
                 backoff_s: float = 0.5, pool_size: int = 2, sleep=time.sleep):
        self.store = store
        self.transcriber = RetryingTranscriber(transcriber, retries=retries,
                                               backoff_s=backoff_s, sleep=sleep)
        self.pool_size = pool_size
        self._queue: queue.Queue[str | None] = queue.Queue()
        self._threads: list[threading.Thread] = []
        self._started = False

    def process(self, annotation_id: str) -> str:
        """Align one annotation; returns its resulting status."""
        doc = self.store.get_annotation(annotation_id)
        if doc.kind != GUIDE or doc.status != STATUS_RAW:
            return doc.status  # idempotent: nothing to do
        try:
            audio = self.store.blob_get(doc.audio_ref)
        except Exception as e:
            doc.error = f"audio unavailable: {e}"
            self.store.put_annotation(doc)
            return doc.status
        try:
            try:
                aligned = align_transcript(audio, doc.transcript, asr=self.transcriber)
            except AsrError as e:
                # ASR permanently down: degrade instead of failing the batch.
                tokens = uniform_spread(tokenize(doc.transcript), wav_duration_ms(audio))
                doc.timed_transcript = [t.to_dict() for t in tokens]
                doc.status = STATUS_DEGRADED
                doc.error = f"speech-to-text unavailable after retries: {e}"
                self.store.put_annotation(doc)
                return doc.status
        except (AlignmentError, AudioError) as e:
            doc.error = f"alignment failed: {e}"
            self.store.put_annotation(doc)  # stays raw, with an error note
            return doc.status
        doc.timed_transcript = [t.to_dict() for t in aligned.tokens]
        doc.status = STATUS_DEGRADED if aligned.degraded else STATUS_ALIGNED
        doc.error = None
        self.store.put_annotation(doc)
        return doc.status

    def run_over(self, annotation_ids: list[str]) -> dict[str, str]:
        """Synchronous batch run (the CLI path); returns id -> status."""
        return {aid: self.process(aid) for aid in annotation_ids}

    # ---- background pool ----------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for i in range(self.pool_size):
            t = threading.Thread(target=self._worker, name=f"align-{i}", daemon=True)
            t.start()
            self._threads.append(t)

    def enqueue(self, annotation_id: str) -> None:
        self.start()
        self._queue.put(annotation_id)

    def _worker(self) -> None:
        while True:
            annotation_id = self._queue.get()
            if annotation_id is None:
                self._queue.task_done()
                return
            try:
                self.process(annotation_id)
            except Exception:
                log.exception("alignment job for %s crashed", annotation_id)
            finally:
                self._queue.task_done()

    def drain(self) -> None:
        """Block until every enqueued job has finished (test/shutdown aid)."""
        self._queue.join()

    def stop(self) -> None:
        for _ in self._threads:
            self._queue.put(None)
        for t in self._threads:
            t.join(timeout=5)
        self._threads.clear()
        self._started = False
