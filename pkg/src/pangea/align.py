"""Transcript alignment: propagate ASR word timestamps onto a manual transcript.

The pipeline: a speech-to-text service produces a noisy but timestamped
automatic transcription; dynamic time warping aligns its tokens to the
manual transcription using a normalized character-edit-distance cost; each
manual token then inherits timestamps from the auto tokens it aligned to.
The result synchronizes the trusted manual text with the pose trace
recorded while speaking.

All operations here are pure; batches of annotations can be aligned in
parallel without coordination.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

import numpy as np

from . import dtw
from .trace import PoseTrace


class AlignmentError(ValueError):
    """Empty inputs or an alignment path that does not fit its sequences."""


@dataclass(frozen=True)
class Token:
    text: str       # normalized: case-folded, outer punctuation stripped
    original: str   # the raw whitespace-delimited chunk it came from
    index: int


@dataclass(frozen=True)
class TimedToken:
    token: Token
    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        if self.start_ms < 0 or self.end_ms < self.start_ms:
            raise AlignmentError(
                f"bad interval [{self.start_ms}, {self.end_ms}] for {self.token.text!r}")

    def to_dict(self) -> dict:
        return {
            "token": self.token.text,
            "original": self.token.original,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
        }

    @classmethod
    def from_dict(cls, raw: dict, index: int = 0) -> "TimedToken":
        return cls(
            token=Token(text=raw["token"], original=raw.get("original", raw["token"]),
                        index=index),
            start_ms=int(raw["start_ms"]),
            end_ms=int(raw["end_ms"]),
        )


@dataclass(frozen=True)
class AlignmentPath:
    """Monotonic (auto_index, manual_index) steps covering both sequences."""

    steps: tuple[tuple[int, int], ...]

    def validate(self, n_auto: int, n_manual: int) -> None:
        if not self.steps:
            raise AlignmentError("empty alignment path")
        if self.steps[0] != (0, 0):
            raise AlignmentError(f"path must start at (0, 0), got {self.steps[0]}")
        if self.steps[-1] != (n_auto - 1, n_manual - 1):
            raise AlignmentError(
                f"path must end at ({n_auto - 1}, {n_manual - 1}), got {self.steps[-1]}")
        for (i0, j0), (i1, j1) in zip(self.steps, self.steps[1:]):
            if (i1 - i0, j1 - j0) not in ((1, 1), (1, 0), (0, 1)):
                raise AlignmentError(f"illegal step ({i0},{j0}) -> ({i1},{j1})")


def _strip_outer_punctuation(chunk: str) -> str:
    start, end = 0, len(chunk)
    while start < end and unicodedata.category(chunk[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(chunk[end - 1]).startswith("P"):
        end -= 1
    return chunk[start:end]


def tokenize(text: str) -> list[Token]:
    """Split on Unicode whitespace, strip outer punctuation, case-fold.

    Internal punctuation survives ("it's", "a-ok"); chunks that normalize
    to nothing are dropped. Token indices are contiguous from 0.
    """
    tokens: list[Token] = []
    for chunk in text.split():
        normalized = _strip_outer_punctuation(chunk).casefold()
        if normalized:
            tokens.append(Token(text=normalized, original=chunk, index=len(tokens)))
    return tokens


def edit_distance(a: str, b: str) -> int:
    """Character-level Levenshtein distance (unit insert/delete/substitute)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def token_cost(a: Token, b: Token) -> float:
    """Normalized edit distance in [0, 1]; 0 iff the normalized texts match."""
    longest = max(len(a.text), len(b.text))
    if longest == 0:
        return 0.0
    return edit_distance(a.text, b.text) / longest


def dtw_align(auto: list[TimedToken], manual: list[Token]) -> tuple[AlignmentPath, float]:
    """Minimum-cost monotonic boundary-to-boundary alignment of the two token lists."""
    if not auto:
        raise AlignmentError("automatic transcription is empty")
    if not manual:
        raise AlignmentError("manual transcription is empty")
    costs = np.array([[token_cost(at.token, mt) for mt in manual] for at in auto])
    steps, cost = dtw.warp(costs)
    return AlignmentPath(tuple(steps)), cost


def propagate_timestamps(path: AlignmentPath, auto: list[TimedToken],
                         manual: list[Token]) -> list[TimedToken]:
    """Push the auto tokens' timestamps through the alignment onto the manual tokens.

    A manual token matched to one auto token inherits its interval; matched
    to several, it takes [min start, max end]. When several manual tokens
    share one auto token, its interval is split proportionally to their
    normalized character lengths (integer millisecond boundaries, remainder
    on the last share). A final pass clamps starts to be non-decreasing.
    """
    path.validate(len(auto), len(manual))
    autos_for_manual: dict[int, list[int]] = {}
    manuals_for_auto: dict[int, list[int]] = {}
    for i, j in path.steps:
        autos_for_manual.setdefault(j, []).append(i)
        manuals_for_auto.setdefault(i, []).append(j)

    intervals: list[tuple[int, int]] = []
    for j in range(len(manual)):
        aligned = autos_for_manual[j]
        if len(aligned) > 1:
            intervals.append((min(auto[i].start_ms for i in aligned),
                              max(auto[i].end_ms for i in aligned)))
            continue
        i = aligned[0]
        sharers = manuals_for_auto[i]
        if len(sharers) == 1:
            intervals.append((auto[i].start_ms, auto[i].end_ms))
            continue
        # Proportional split of auto[i]'s interval among all manual sharers.
        lengths = [max(len(manual[k].text), 1) for k in sharers]
        duration = auto[i].end_ms - auto[i].start_ms
        total = sum(lengths)
        cursor = auto[i].start_ms
        bounds = []
        for rank, length in enumerate(lengths):
            if rank == len(lengths) - 1:
                nxt = auto[i].end_ms  # remainder goes to the last share
            else:
                nxt = cursor + (duration * length) // total
            bounds.append((cursor, nxt))
            cursor = nxt
        intervals.append(bounds[sharers.index(j)])

    # Clamp so starts are non-decreasing and each end >= its start.
    out: list[TimedToken] = []
    floor = 0
    for j, (start, end) in enumerate(intervals):
        start = max(start, floor)
        end = max(end, start)
        floor = start
        out.append(TimedToken(token=manual[j], start_ms=start, end_ms=end))
    return out


@dataclass(frozen=True)
class AlignedTranscript:
    """Timed manual transcript plus a flag for the uniform-spread fallback."""

    tokens: tuple[TimedToken, ...]
    degraded: bool = False


def uniform_spread(manual: list[Token], duration_ms: int) -> list[TimedToken]:
    """Spread manual tokens evenly over the audio; the empty/failed-ASR fallback."""
    if not manual:
        raise AlignmentError("manual transcription is empty")
    n = len(manual)
    bounds = [(duration_ms * k) // n for k in range(n + 1)]
    return [TimedToken(token=tok, start_ms=bounds[k], end_ms=bounds[k + 1])
            for k, tok in enumerate(manual)]


def align_transcript(audio: bytes, manual_text: str, asr,
                     audio_duration_ms: int | None = None) -> AlignedTranscript:
    """Transcribe, align, and propagate; one timed token per manual token.

    `asr` is any transcriber with ``transcribe(audio) -> list[TimedToken]``.
    When the ASR returns nothing, manual tokens are spread uniformly over
    the audio duration and the result is flagged degraded. ASR exceptions
    propagate to the caller (the job runner owns retries).
    """
    manual = tokenize(manual_text)
    if not manual:
        raise AlignmentError("manual transcript has no tokens")
    auto = asr.transcribe(audio)
    if not auto:
        if audio_duration_ms is None:
            from .audio import wav_duration_ms
            audio_duration_ms = wav_duration_ms(audio)
        return AlignedTranscript(tuple(uniform_spread(manual, audio_duration_ms)),
                                 degraded=True)
    path, _ = dtw_align(auto, manual)
    return AlignedTranscript(tuple(propagate_timestamps(path, auto, manual)),
                             degraded=False)


def synchronize(timed: list[TimedToken], trace: PoseTrace) -> list[tuple[int, list[int]]]:
    """Map each timed token to the pose indices inside its interval.

    Tokens whose interval contains no pose get the single pose whose
    timestamp is nearest the interval midpoint (earlier pose on ties).
    An empty trace maps every token to an empty list.
    """
    out: list[tuple[int, list[int]]] = []
    for k, tok in enumerate(timed):
        if not trace.poses:
            out.append((k, []))
            continue
        indices = trace.slice_by_interval(tok.start_ms, tok.end_ms)
        if not indices:
            midpoint = (tok.start_ms + tok.end_ms) / 2.0
            nearest = min(range(len(trace.poses)),
                          key=lambda i: (abs(trace.poses[i].t_ms - midpoint), i))
            indices = [nearest]
        out.append((k, indices))
    return out
