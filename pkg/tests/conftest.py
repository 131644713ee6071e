from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import pytest
from fastapi.testclient import TestClient

from pangea import demo
from pangea.app import create_app
from pangea.config import AppConfig, AsrConfig
from pangea.store import FOLLOWER, GUIDE, TASK_OPEN, LocalStore, TaskRecord


@pytest.fixture
def store(tmp_path):
    return LocalStore(tmp_path / "data")


@dataclass
class FakeClock:
    """Injectable wall clock the tests can advance by hand."""

    now: float = 1_000_000.0

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


@dataclass
class Harness:
    """One in-process server over a store pre-loaded with the demo environment."""

    config: AppConfig
    store: LocalStore
    clock: FakeClock
    client: TestClient
    app_state: object
    wav: bytes
    _task_counter: itertools.count = field(default_factory=itertools.count)

    def seed_guide_task(self, path=("n0", "n1", "n2"), restrict=True,
                        env=demo.DEMO_ENV) -> str:
        task_id = f"guide-{next(self._task_counter):03d}"
        self.store.put_task(TaskRecord(
            task_id=task_id, environment_id=env, kind=GUIDE,
            payload={"path": list(path), "restrict_movement": restrict},
            status=TASK_OPEN))
        return task_id

    def seed_follower_task(self, start_node="n0", instruction=None,
                           reference_path=None, env=demo.DEMO_ENV) -> str:
        task_id = f"follower-{next(self._task_counter):03d}"
        payload = {"start_node": start_node,
                   "instruction": instruction or {"kind": "text", "text": "go"}}
        if reference_path is not None:
            payload["reference_path"] = list(reference_path)
        self.store.put_task(TaskRecord(
            task_id=task_id, environment_id=env, kind=FOLLOWER,
            payload=payload, status=TASK_OPEN))
        return task_id


def build_harness(tmp_path, transcriber=None) -> Harness:
    fixtures = tmp_path / "asr-fixtures"
    wav = demo.demo_wav_bytes()
    demo.write_asr_fixture(fixtures, wav)
    config = AppConfig(
        data_dir=str(tmp_path / "data"),
        asr=AsrConfig(mode="mock", fixture_dir=str(fixtures)),
    )
    clock = FakeClock()
    store = LocalStore(config.data_dir, clock=clock)
    document = demo.demo_graph_document()
    store.blob_put(f"env/{demo.DEMO_ENV}/graph.json",
                   json.dumps(document).encode("utf-8"))
    for node in document["nodes"]:
        store.blob_put(node["panorama"], demo.solid_png(8, 4, (9, 9, 9)))
    ids = (f"id-{i:04d}" for i in itertools.count())
    app = create_app(config, store=store, transcriber=transcriber,
                     id_factory=lambda: next(ids), clock=clock)
    client = TestClient(app)
    return Harness(config=config, store=store, clock=clock, client=client,
                   app_state=app.state.pangea, wav=wav)


@pytest.fixture
def harness(tmp_path):
    h = build_harness(tmp_path)
    yield h
    h.app_state.runner.stop()
