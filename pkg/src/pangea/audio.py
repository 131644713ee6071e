"""WAV audio handling and the waveform envelope served to Follower clients.

Stored audio is WAV, PCM 16-bit mono (16 kHz by convention). The envelope
partitions the samples into near-equal contiguous bins and reports each
bin's peak absolute amplitude normalized by the global peak, so the client
can draw a seekable waveform and annotators can skip silence.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass

import numpy as np


class AudioError(ValueError):
    """Malformed WAV data or an encoding this toolkit does not accept."""


def read_wav_pcm16_mono(data: bytes) -> tuple[np.ndarray, int]:
    """Decode WAV bytes into (int16 sample array, sample rate).

    Only uncompressed PCM 16-bit mono is accepted; anything else raises
    AudioError rather than being silently downmixed.
    """
    try:
        with wave.open(io.BytesIO(data), "rb") as wav:
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            if wav.getcomptype() != "NONE":
                raise AudioError(f"unsupported WAV compression {wav.getcomptype()!r}")
            if channels != 1:
                raise AudioError(f"unsupported encoding: expected mono, got {channels} channels")
            if width != 2:
                raise AudioError(f"unsupported encoding: expected 16-bit PCM, got {width * 8}-bit")
            frames = wav.readframes(wav.getnframes())
    except wave.Error as e:
        raise AudioError(f"malformed WAV data: {e}") from e
    return np.frombuffer(frames, dtype="<i2"), rate


def write_wav_pcm16_mono(samples: np.ndarray, rate: int = 16000) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(np.asarray(samples, dtype="<i2").tobytes())
    return buf.getvalue()


def wav_duration_ms(data: bytes) -> int:
    samples, rate = read_wav_pcm16_mono(data)
    return round(len(samples) * 1000 / rate)


@dataclass(frozen=True)
class WaveformEnvelope:
    bins: tuple[float, ...]
    duration_ms: int

    def to_dict(self) -> dict:
        return {"bins": list(self.bins), "duration_ms": self.duration_ms}


def compute_waveform(data: bytes, bins: int = 1024) -> WaveformEnvelope:
    """Peak-amplitude envelope over `bins` contiguous sample ranges.

    The first ``len(samples) mod bins`` ranges are one sample longer; each
    bin is the max absolute sample in its range divided by the global max
    absolute sample. All-zero (or empty) audio yields all-zero bins, and
    scaling the signal by any positive gain leaves the envelope unchanged.
    """
    if bins < 1:
        raise AudioError(f"bin count must be >= 1, got {bins}")
    samples, rate = read_wav_pcm16_mono(data)
    duration_ms = round(len(samples) * 1000 / rate)
    magnitudes = np.abs(samples.astype(np.int32))
    peak = int(magnitudes.max()) if magnitudes.size else 0
    values = []
    for chunk in np.array_split(magnitudes, bins):
        if chunk.size == 0 or peak == 0:
            values.append(0.0)
        else:
            values.append(float(chunk.max()) / peak)
    return WaveformEnvelope(bins=tuple(values), duration_ms=duration_ms)
