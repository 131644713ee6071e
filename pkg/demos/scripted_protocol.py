#!/usr/bin/env python3
"""Drive the whole annotation protocol against an in-process server.

A scripted guide records a walk and dictates an instruction; the offline
transcriber aligns it; a scripted follower then walks the route and the
dashboard scores the run. Prints every request as it happens.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from pangea import demo
from pangea.app import create_app
from pangea.config import AppConfig, AsrConfig
from pangea.store import GUIDE, FOLLOWER, TASK_OPEN, LocalStore, TaskRecord

root = Path(tempfile.mkdtemp(prefix="pangea-demo-"))
wav = demo.demo_wav_bytes()
demo.write_asr_fixture(root / "asr", wav)

config = AppConfig(data_dir=str(root / "data"),
                   asr=AsrConfig(mode="mock", fixture_dir=str(root / "asr")))
store = LocalStore(config.data_dir)
document = demo.demo_graph_document()
store.blob_put(f"env/{demo.DEMO_ENV}/graph.json", json.dumps(document).encode())
for node in document["nodes"]:
    store.blob_put(node["panorama"], demo.solid_png(8, 4, (120, 120, 120)))

store.put_task(TaskRecord(task_id="demo-guide-000", environment_id=demo.DEMO_ENV,
                          kind=GUIDE, status=TASK_OPEN,
                          payload={"path": ["n0", "n1", "n2"],
                                   "restrict_movement": True}))

app = create_app(config, store=store)
client = TestClient(app)


def post(url, **kw):
    r = client.post(url, **kw)
    print(f"POST {url} -> {r.status_code}")
    assert r.status_code == 200, r.text
    return r.json()


sid = post("/api/sessions", json={"worker_id": "demo-guide", "kind": "guide"})["session_id"]
post(f"/api/sessions/{sid}/start-recording")
events = [{"t_ms": 400 * i, "node": n, "heading_rad": 0.0, "pitch_rad": 0.0}
          for i, n in enumerate(["n0", "n1", "n2"])]
post(f"/api/sessions/{sid}/events", json={"seq": 1, "events": events})
half = len(wav) // 2
for index, piece in enumerate((wav[:half], wav[half:])):
    r = client.put(f"/api/sessions/{sid}/audio/{index}", content=piece)
    print(f"PUT  /api/sessions/{sid}/audio/{index} ({len(piece)} bytes) -> {r.status_code}")
post(f"/api/sessions/{sid}/stop-recording")
post(f"/api/sessions/{sid}/audio/finalize", json={"total_chunks": 2})
post(f"/api/sessions/{sid}/transcript", json={"text": demo.DEMO_INSTRUCTION})
guide_aid = post(f"/api/sessions/{sid}/submit")["annotation_id"]

app.state.pangea.runner.drain()
doc = store.get_annotation(guide_aid)
print(f"\nguide annotation {guide_aid}: status={doc.status}, "
      f"{len(doc.timed_transcript)} timed tokens")

store.put_task(TaskRecord(task_id="demo-follower-000", environment_id=demo.DEMO_ENV,
                          kind=FOLLOWER, status=TASK_OPEN,
                          payload={"start_node": "n0",
                                   "instruction": {"kind": "audio",
                                                   "annotation_id": guide_aid},
                                   "reference_path": ["n0", "n1", "n2"]}))

sid = post("/api/sessions", json={"worker_id": "demo-follower", "kind": "follower"})["session_id"]
waveform = client.get(f"/api/sessions/{sid}/waveform").json()
print(f"instruction waveform: {len(waveform['bins'])} bins, "
      f"{waveform['duration_ms']} ms")
events = [{"t_ms": 500 * i, "node": n, "heading_rad": 0.0, "pitch_rad": 0.0,
           "audio_t_ms": 400 * i} for i, n in enumerate(["n0", "n1", "n2"])]
post(f"/api/sessions/{sid}/events", json={"seq": 1, "events": events})
post(f"/api/sessions/{sid}/complete", json={"outcome": "done"})

summary = client.get("/api/dashboard/summary").json()
print("\ndashboard summary:")
print(json.dumps(summary["overall"], indent=2, sort_keys=True))

app.state.pangea.runner.stop()
print(f"\nall data under {root}")
