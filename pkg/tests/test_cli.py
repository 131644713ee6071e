from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from pangea import demo
from pangea.cli import main
from pangea.store import GUIDE, LocalStore, STATUS_ALIGNED, TASK_OPEN

from conftest import build_harness
from scripted import run_follower, run_guide


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def env_dir(tmp_path):
    return demo.write_environment_dir(tmp_path / "env")


def invoke(runner, tmp_path, *args):
    return runner.invoke(main, ["--data-dir", str(tmp_path / "data"), *args])


class TestIngestEnv:
    def test_counts_reported(self, runner, tmp_path):
        minimal = demo.write_environment_dir(tmp_path / "mini",
                                             demo.minimal_graph_document())
        r = invoke(runner, tmp_path, "ingest-env", str(minimal))
        assert r.exit_code == 0, r.output
        assert "2 nodes, 1 edge" in r.output.replace("edges", "edge")
        assert "2 panoramas" in r.output

    def test_reingest_idempotent(self, runner, tmp_path, env_dir):
        first = invoke(runner, tmp_path, "ingest-env", str(env_dir))
        second = invoke(runner, tmp_path, "ingest-env", str(env_dir))
        assert first.exit_code == second.exit_code == 0
        assert first.output == second.output

    def test_missing_panorama_names_node(self, runner, tmp_path, env_dir):
        (env_dir / "pano" / "n2.png").unlink()
        r = invoke(runner, tmp_path, "ingest-env", str(env_dir))
        assert r.exit_code != 0
        assert "n2" in r.output
        # all-or-nothing: nothing was written
        store = LocalStore(tmp_path / "data")
        assert not store.blob_exists(f"env/{demo.DEMO_ENV}/graph.json")

    def test_invalid_graph_reports_file(self, runner, tmp_path):
        bad = tmp_path / "bad-env"
        bad.mkdir()
        (bad / "graph.json").write_text('{"environment_id": "x"}')
        r = invoke(runner, tmp_path, "ingest-env", str(bad))
        assert r.exit_code != 0
        assert "graph.json" in r.output

    def test_no_graph_json(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        r = invoke(runner, tmp_path, "ingest-env", str(empty))
        assert r.exit_code != 0


class TestSeedTasks:
    def seed(self, runner, tmp_path, document):
        path = demo.write_seed_file(tmp_path / "seed.json", document)
        return invoke(runner, tmp_path, "seed-tasks", str(path))

    def test_three_guide_paths(self, runner, tmp_path, env_dir):
        invoke(runner, tmp_path, "ingest-env", str(env_dir))
        r = self.seed(runner, tmp_path, demo.demo_seed_document(
            guide_paths=[["n0", "n1"], ["n1", "n2"], ["n2", "n3"]]))
        assert r.exit_code == 0, r.output
        assert "3 tasks created" in r.output
        store = LocalStore(tmp_path / "data")
        tasks = store.list_tasks(kind=GUIDE, status=TASK_OPEN)
        assert len(tasks) == 3
        assert all(t.payload["restrict_movement"] for t in tasks)

    def test_reseed_skips_existing(self, runner, tmp_path, env_dir):
        invoke(runner, tmp_path, "ingest-env", str(env_dir))
        doc = demo.demo_seed_document(guide_paths=[["n0", "n1"]])
        self.seed(runner, tmp_path, doc)
        r = self.seed(runner, tmp_path, doc)
        assert "0 tasks created, 1 already present" in r.output

    def test_invalid_path_is_all_or_nothing(self, runner, tmp_path, env_dir):
        invoke(runner, tmp_path, "ingest-env", str(env_dir))
        r = self.seed(runner, tmp_path, demo.demo_seed_document(
            guide_paths=[["n0", "n1"], ["n0", "n2"]]))  # n0-n2 is no edge
        assert r.exit_code != 0
        assert "guide_paths[1]" in r.output
        assert LocalStore(tmp_path / "data").list_tasks() == []

    def test_unknown_environment(self, runner, tmp_path):
        r = self.seed(runner, tmp_path, demo.demo_seed_document())
        assert r.exit_code != 0
        assert "not ingested" in r.output

    def test_follower_tasks_validated(self, runner, tmp_path, env_dir):
        invoke(runner, tmp_path, "ingest-env", str(env_dir))
        r = self.seed(runner, tmp_path, demo.demo_seed_document(
            guide_paths=[],
            follower_tasks=[{"start_node": "zz", "instruction": "go"}]))
        assert r.exit_code != 0
        assert "zz" in r.output

    def test_follower_text_instruction_normalized(self, runner, tmp_path, env_dir):
        invoke(runner, tmp_path, "ingest-env", str(env_dir))
        r = self.seed(runner, tmp_path, demo.demo_seed_document(
            guide_paths=[],
            follower_tasks=[{"start_node": "n0", "instruction": "turn left",
                             "reference_path": ["n0", "n1"]}]))
        assert r.exit_code == 0, r.output
        task = LocalStore(tmp_path / "data").list_tasks()[0]
        assert task.payload["instruction"] == {"kind": "text", "text": "turn left"}
        assert task.payload["reference_path"] == ["n0", "n1"]


class TestAlignCommand:
    def make_raw_docs(self, tmp_path, count=2):
        """Plant raw guide docs plus their audio blobs and an ASR fixture."""
        from pangea.store import AnnotationDoc, OUTCOME_SUBMITTED, STATUS_RAW

        store = LocalStore(tmp_path / "data")
        wav = demo.demo_wav_bytes()
        fixtures = tmp_path / "asr-fixtures"
        demo.write_asr_fixture(fixtures, wav)
        ids = []
        for i in range(count):
            aid = f"raw-{i}"
            store.blob_put(f"audio/{aid}.wav", wav)
            store.put_annotation(AnnotationDoc(
                annotation_id=aid, task_id=f"t{i}", worker_id=f"w{i}",
                environment_id=demo.DEMO_ENV, kind=GUIDE,
                path=["n0", "n1", "n2"], pose_trace=[], created_at=0.0,
                audio_ref=f"audio/{aid}.wav",
                transcript=demo.DEMO_INSTRUCTION,
                outcome=OUTCOME_SUBMITTED, status=STATUS_RAW))
            ids.append(aid)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "data_dir": str(tmp_path / "data"),
            "asr": {"mode": "mock", "fixture_dir": str(fixtures)},
        }))
        return store, config_path, ids

    def cli_args(self, config_path, *args):
        return ["--config", str(config_path), *args]

    def test_align_all(self, runner, tmp_path):
        store, config_path, ids = self.make_raw_docs(tmp_path)
        r = runner.invoke(main, self.cli_args(config_path, "align", "--all"))
        assert r.exit_code == 0, r.output
        for aid in ids:
            assert f"{aid}: aligned" in r.output
            assert store.get_annotation(aid).status == STATUS_ALIGNED

    def test_align_single_id(self, runner, tmp_path):
        store, config_path, ids = self.make_raw_docs(tmp_path, count=1)
        r = runner.invoke(main,
                          self.cli_args(config_path, "align", "--id", ids[0]))
        assert r.exit_code == 0, r.output
        assert store.get_annotation(ids[0]).status == STATUS_ALIGNED

    def test_align_unknown_id(self, runner, tmp_path):
        _, config_path, _ = self.make_raw_docs(tmp_path, count=1)
        r = runner.invoke(main, self.cli_args(config_path, "align", "--id", "zz"))
        assert r.exit_code != 0
        assert "zz" in r.output

    def test_align_requires_exactly_one_selector(self, runner, tmp_path):
        _, config_path, ids = self.make_raw_docs(tmp_path, count=1)
        r = runner.invoke(main, self.cli_args(config_path, "align"))
        assert r.exit_code != 0
        r = runner.invoke(
            main, self.cli_args(config_path, "align", "--all", "--id", ids[0]))
        assert r.exit_code != 0


class TestMetricsAndExport:
    def scripted_data(self, tmp_path):
        harness = build_harness(tmp_path)
        harness.seed_guide_task()
        guide = run_guide(harness.client, harness.wav, demo.DEMO_INSTRUCTION)
        harness.app_state.runner.drain()
        harness.seed_follower_task(
            instruction={"kind": "audio",
                         "annotation_id": guide["annotation_id"]})
        run_follower(harness.client, path=("n0", "n1", "n2"))
        harness.app_state.runner.stop()
        return harness

    def test_metrics_report(self, runner, tmp_path):
        harness = self.scripted_data(tmp_path)
        r = runner.invoke(main, ["--data-dir", harness.config.data_dir, "metrics"])
        assert r.exit_code == 0, r.output
        report = json.loads(r.output)
        assert report["overall"]["success_rate"] == 1.0
        assert report["overall"]["ne_mean_m"] == 0.0
        assert report["overall"]["spl_mean"] == 1.0

    def test_metrics_env_filter(self, runner, tmp_path):
        harness = self.scripted_data(tmp_path)
        r = runner.invoke(main, ["--data-dir", harness.config.data_dir,
                                 "metrics", "--env", "elsewhere"])
        assert json.loads(r.output) == {"overall": None, "workers": {}}

    def test_export_jsonl(self, runner, tmp_path):
        harness = self.scripted_data(tmp_path)
        out = tmp_path / "exported"
        r = runner.invoke(main, ["--data-dir", harness.config.data_dir,
                                 "export", "--out", str(out)])
        assert r.exit_code == 0, r.output
        assert "2 annotations" in r.output
        lines = (out / "annotations.jsonl").read_text().splitlines()
        docs = [json.loads(line) for line in lines]
        assert len(docs) == 2
        kinds = sorted(d["kind"] for d in docs)
        assert kinds == ["follower", "guide"]
        guide_doc = next(d for d in docs if d["kind"] == "guide")
        assert guide_doc["status"] == STATUS_ALIGNED
        assert guide_doc["timed_transcript"]


class TestTopLevel:
    def test_help_lists_subcommands(self, runner):
        r = runner.invoke(main, ["--help"])
        for name in ("serve", "ingest-env", "seed-tasks", "align",
                     "metrics", "export"):
            assert name in r.output
