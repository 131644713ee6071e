"""Runtime configuration: JSON config file with environment-variable overrides.

Every knob has a sensible default so ``pangea serve --data-dir DIR`` works
with no config file at all. Environment variables use the ``PANGEA_``
prefix and win over the file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path as FsPath


@dataclass
class AsrConfig:
    mode: str = "mock"  # mock | http
    fixture_dir: str | None = None
    url: str | None = None
    token: str | None = None
    max_concurrency: int = 4
    retries: int = 3
    backoff_s: float = 0.5


@dataclass
class AppConfig:
    data_dir: str = "./pangea-data"
    host: str = "127.0.0.1"
    port: int = 8080
    waveform_bins: int = 1024
    lease_minutes: float = 60.0
    worker_pool_size: int = 2
    heartbeat_ms: int = 200
    success_threshold_m: float = 3.0
    asr: AsrConfig = field(default_factory=AsrConfig)


_ENV_OVERRIDES = {
    "PANGEA_DATA_DIR": ("data_dir", str),
    "PANGEA_HOST": ("host", str),
    "PANGEA_PORT": ("port", int),
    "PANGEA_WAVEFORM_BINS": ("waveform_bins", int),
    "PANGEA_LEASE_MINUTES": ("lease_minutes", float),
    "PANGEA_WORKER_POOL_SIZE": ("worker_pool_size", int),
    "PANGEA_HEARTBEAT_MS": ("heartbeat_ms", int),
    "PANGEA_SUCCESS_THRESHOLD_M": ("success_threshold_m", float),
}

_ASR_ENV_OVERRIDES = {
    "PANGEA_ASR_MODE": ("mode", str),
    "PANGEA_ASR_FIXTURE_DIR": ("fixture_dir", str),
    "PANGEA_ASR_URL": ("url", str),
    "PANGEA_ASR_TOKEN": ("token", str),
    "PANGEA_ASR_MAX_CONCURRENCY": ("max_concurrency", int),
    "PANGEA_ASR_RETRIES": ("retries", int),
    "PANGEA_ASR_BACKOFF_S": ("backoff_s", float),
}


def load_config(path: str | FsPath | None = None,
                env: dict[str, str] | None = None) -> AppConfig:
    """Build an AppConfig from defaults, then the file, then the environment."""
    env = os.environ if env is None else env
    config = AppConfig()
    if path is not None:
        raw = json.loads(FsPath(path).read_text("utf-8"))
        asr_raw = raw.pop("asr", {})
        known = {f.name for f in fields(AppConfig)}
        for key, value in raw.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            setattr(config, key, value)
        known_asr = {f.name for f in fields(AsrConfig)}
        for key, value in asr_raw.items():
            if key not in known_asr:
                raise ValueError(f"unknown asr config key {key!r}")
            setattr(config.asr, key, value)
    for var, (attr, cast) in _ENV_OVERRIDES.items():
        if var in env:
            setattr(config, attr, cast(env[var]))
    for var, (attr, cast) in _ASR_ENV_OVERRIDES.items():
        if var in env:
            setattr(config.asr, attr, cast(env[var]))
    return config


def build_transcriber(config: AppConfig):
    from .asr import HttpTranscriber, MockTranscriber

    if config.asr.mode == "mock":
        return MockTranscriber(fixture_dir=config.asr.fixture_dir)
    if config.asr.mode == "http":
        if not config.asr.url:
            raise ValueError("asr.url is required in http mode")
        return HttpTranscriber(url=config.asr.url, token=config.asr.token,
                               max_concurrency=config.asr.max_concurrency)
    raise ValueError(f"unknown asr mode {config.asr.mode!r}")
