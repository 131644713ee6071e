"""Self-contained demo data: a small environment, synthetic audio, and
matching offline speech-recognition fixtures.

Everything here is deterministic so the scripted end-to-end run produces
the same bytes every time. The panoramas are tiny solid-color PNGs written
with the stdlib only; they exist so environment ingestion and the panorama
endpoint have real image bytes to serve.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from pathlib import Path as FsPath

import numpy as np

from .audio import write_wav_pcm16_mono

DEMO_ENV = "demo-loft"
DEMO_INSTRUCTION = "Walk past the kitchen table, then stop at the sofa."


def solid_png(width: int, height: int, rgb: tuple[int, int, int]) -> bytes:
    """A minimal truecolor PNG of one flat color."""
    def chunk(tag: bytes, body: bytes) -> bytes:
        return (struct.pack(">I", len(body)) + tag + body
                + struct.pack(">I", zlib.crc32(tag + body)))

    row = b"\x00" + bytes(rgb) * width  # filter byte 0 then RGB pixels
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    idat = zlib.compress(row * height)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", idat) + chunk(b"IEND", b""))


def demo_graph_document() -> dict:
    """A 4-node rectangle: two equal-cost routes between opposite corners."""
    return {
        "environment_id": DEMO_ENV,
        "nodes": [
            {"id": "n0", "position": [0.0, 0.0, 0.0], "panorama": "pano/n0.png"},
            {"id": "n1", "position": [4.0, 0.0, 0.0], "panorama": "pano/n1.png"},
            {"id": "n2", "position": [4.0, 3.0, 0.0], "panorama": "pano/n2.png"},
            {"id": "n3", "position": [0.0, 3.0, 0.0], "panorama": "pano/n3.png"},
        ],
        "edges": [["n0", "n1"], ["n1", "n2"], ["n2", "n3"], ["n3", "n0"]],
    }


def minimal_graph_document() -> dict:
    return {
        "environment_id": "demo-hall",
        "nodes": [
            {"id": "a", "position": [0.0, 0.0, 0.0], "panorama": "pano/a.png"},
            {"id": "b", "position": [2.0, 0.0, 0.0], "panorama": "pano/b.png"},
        ],
        "edges": [["a", "b"]],
    }


def write_environment_dir(root: str | FsPath, document: dict | None = None) -> FsPath:
    """Materialize an ingestable environment directory (graph.json + panoramas)."""
    root = FsPath(root)
    document = document or demo_graph_document()
    root.mkdir(parents=True, exist_ok=True)
    (root / "graph.json").write_text(json.dumps(document, indent=2), "utf-8")
    palette = [(200, 80, 40), (40, 200, 80), (40, 80, 200), (200, 200, 40),
               (200, 40, 200), (40, 200, 200)]
    for i, node in enumerate(document["nodes"]):
        target = root / node["panorama"]
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(solid_png(8, 4, palette[i % len(palette)]))
    return root


def demo_wav_bytes(duration_ms: int = 2000, rate: int = 16000) -> bytes:
    """A 440 Hz tone; deterministic bytes, loud enough for a visible waveform."""
    n = rate * duration_ms // 1000
    t = np.arange(n, dtype=np.float64) / rate
    samples = np.round(8000.0 * np.sin(2.0 * np.pi * 440.0 * t)).astype(np.int16)
    return write_wav_pcm16_mono(samples, rate)


def demo_words(duration_ms: int = 2000) -> list[dict]:
    """Word timings that tokenize-match DEMO_INSTRUCTION exactly."""
    words = [t.text for t in _demo_tokens()]
    slot = duration_ms // len(words)
    out = []
    for i, word in enumerate(words):
        start = i * slot
        out.append({"word": word, "start_ms": start, "end_ms": start + slot - 10})
    return out


def _demo_tokens():
    from .align import tokenize

    return tokenize(DEMO_INSTRUCTION)


def write_asr_fixture(fixture_dir: str | FsPath, wav: bytes,
                      words: list[dict] | None = None) -> FsPath:
    """Write the fixture the offline transcriber will find for these bytes."""
    fixture_dir = FsPath(fixture_dir)
    fixture_dir.mkdir(parents=True, exist_ok=True)
    words = words if words is not None else demo_words()
    target = fixture_dir / f"{hashlib.sha256(wav).hexdigest()}.jsonl"
    target.write_text("".join(json.dumps(w) + "\n" for w in words), "utf-8")
    return target


def demo_seed_document(guide_paths: list[list[str]] | None = None,
                       follower_tasks: list[dict] | None = None,
                       restrict_movement: bool = True) -> dict:
    return {
        "environment_id": DEMO_ENV,
        "guide_paths": guide_paths if guide_paths is not None
        else [["n0", "n1", "n2"]],
        "follower_tasks": follower_tasks if follower_tasks is not None else [],
        "restrict_movement": restrict_movement,
    }


def write_seed_file(path: str | FsPath, document: dict | None = None) -> FsPath:
    path = FsPath(path)
    path.write_text(json.dumps(document or demo_seed_document(), indent=2), "utf-8")
    return path
