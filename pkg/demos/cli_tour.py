#!/usr/bin/env python3
"""Run every operator subcommand in sequence on a scratch deployment."""

import json
import tempfile
from pathlib import Path

from click.testing import CliRunner

from pangea import demo
from pangea.cli import main

root = Path(tempfile.mkdtemp(prefix="pangea-cli-"))
data = root / "data"
env_dir = demo.write_environment_dir(root / "env")
seed = demo.write_seed_file(root / "seed.json", demo.demo_seed_document(
    follower_tasks=[{"start_node": "n0",
                     "instruction": "walk to the sofa",
                     "reference_path": ["n0", "n1", "n2"]}]))

runner = CliRunner()


def run(*args):
    print(f"$ pangea --data-dir {data.name} {' '.join(args)}")
    result = runner.invoke(main, ["--data-dir", str(data), *args])
    print(result.output, end="")
    if result.exit_code != 0:
        raise SystemExit(result.exit_code)
    print()


run("ingest-env", str(env_dir))
run("seed-tasks", str(seed))
run("metrics")
run("export", "--out", str(root / "dump"))

exported = root / "dump" / "annotations.jsonl"
print(f"export file exists: {exported.exists()} "
      f"({exported.stat().st_size} bytes)")
print(f"tasks on disk: {len(list((data / 'docs' / 'tasks').glob('*.json')))}")
print(f"scratch root: {root}")
