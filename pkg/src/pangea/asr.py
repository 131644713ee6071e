"""Automatic transcription backends.

Two implementations of the transcriber interface: an HTTP client for a
real speech-to-text service, and a deterministic offline mock driven by
fixture files so the whole pipeline runs hermetically.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path as FsPath
from typing import Protocol

from .align import TimedToken, Token


class AsrError(RuntimeError):
    """Transcription failed (transport, service, or fixture problem)."""


class AutomaticTranscriber(Protocol):
    def transcribe(self, audio: bytes) -> list[TimedToken]: ...


def _tokens_from_words(words: list[dict]) -> list[TimedToken]:
    tokens = []
    for index, entry in enumerate(words):
        word = str(entry["word"])
        tokens.append(TimedToken(
            token=Token(text=word.casefold(), original=word, index=index),
            start_ms=int(entry["start_ms"]),
            end_ms=int(entry["end_ms"]),
        ))
    return tokens


def parse_fixture_jsonl(text: str) -> list[TimedToken]:
    """Fixture lines are ``{"word": str, "start_ms": int, "end_ms": int}``."""
    words = [json.loads(line) for line in text.splitlines() if line.strip()]
    return _tokens_from_words(words)


class MockTranscriber:
    """Fixture-driven transcriber keyed by the sha256 of the audio bytes.

    Looks for ``{sha256}.jsonl`` in the fixture directory, falling back to
    ``default.jsonl``; with neither present the result is empty (which the
    pipeline treats as degraded). A fixed word list can be supplied
    directly for unit tests. ``fail_times`` makes the first N calls raise,
    for exercising retry handling.
    """

    def __init__(self, fixture_dir: str | FsPath | None = None,
                 words: list[dict] | None = None, fail_times: int = 0):
        self.fixture_dir = FsPath(fixture_dir) if fixture_dir else None
        self._fixed = _tokens_from_words(words) if words is not None else None
        self.fail_times = fail_times
        self.calls = 0
        self._lock = threading.Lock()

    def transcribe(self, audio: bytes) -> list[TimedToken]:
        with self._lock:
            self.calls += 1
            if self.fail_times > 0:
                self.fail_times -= 1
                raise AsrError("mock transcriber failure (injected)")
        if self._fixed is not None:
            return list(self._fixed)
        if self.fixture_dir is None:
            return []
        digest = hashlib.sha256(audio).hexdigest()
        for name in (f"{digest}.jsonl", "default.jsonl"):
            candidate = self.fixture_dir / name
            if candidate.exists():
                return parse_fixture_jsonl(candidate.read_text("utf-8"))
        return []


class HttpTranscriber:
    """Posts audio to a speech-to-text endpoint and parses word timings.

    Request: raw audio bytes with sample-rate metadata in headers.
    Response: JSON ``{"words": [{"word", "start_ms", "end_ms"}, ...]}``.
    Concurrent use is capped by a semaphore (default 4 in-flight requests).
    """

    def __init__(self, url: str, token: str | None = None, sample_rate: int = 16000,
                 timeout_s: float = 30.0, max_concurrency: int = 4):
        self.url = url
        self.token = token
        self.sample_rate = sample_rate
        self.timeout_s = timeout_s
        self._slots = threading.Semaphore(max_concurrency)

    def transcribe(self, audio: bytes) -> list[TimedToken]:
        import urllib.error
        import urllib.request

        headers = {
            "Content-Type": "application/octet-stream",
            "X-Sample-Rate": str(self.sample_rate),
        }
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        request = urllib.request.Request(self.url, data=audio, headers=headers,
                                         method="POST")
        with self._slots:
            try:
                with urllib.request.urlopen(request, timeout=self.timeout_s) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
            except (urllib.error.URLError, OSError, ValueError) as e:
                raise AsrError(f"speech-to-text request to {self.url} failed: {e}") from e
        try:
            return _tokens_from_words(payload["words"])
        except (KeyError, TypeError, ValueError) as e:
            raise AsrError(f"malformed speech-to-text response: {e}") from e
