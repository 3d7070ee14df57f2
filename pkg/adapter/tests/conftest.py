import json
import subprocess
import sys

import pytest


def run_audit_cli(*args):
    """Invoke the audit toolkit's CLI in a separate process (file handoff only)."""
    result = subprocess.run(
        [sys.executable, "-m", "evalaudit.cli", *args],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, f"evalaudit {' '.join(args)} failed:\n{result.stderr}"
    return result


@pytest.fixture(scope="session")
def synth_setup(tmp_path_factory):
    """Synthetic corpus + split + per-partition files, all built through the
    audit toolkit's CLI surface."""
    root = tmp_path_factory.mktemp("corpus")
    corpus = root / "corpus.jsonl"
    split = root / "split.json"

    synth_config = root / "synth_config.json"
    synth_config.write_text(json.dumps({"n": 1200, "seed": 42}))
    run_audit_cli("synth", "--config", str(synth_config), "--out", str(corpus))
    run_audit_cli(
        "split", "--dataset", str(corpus), "--out", str(split), "--seed", "42"
    )

    assignment = json.loads(split.read_text())["assignment"]
    handles = {}
    rows = [json.loads(line) for line in corpus.read_text().splitlines()]
    for partition in ("train", "validation", "test"):
        path = root / f"{partition}.jsonl"
        with open(path, "w") as fh:
            for row in rows:
                if assignment[row["id"]] == partition:
                    fh.write(json.dumps(row) + "\n")
        handles[partition] = path
    return {"corpus": corpus, "split": split, **handles}
