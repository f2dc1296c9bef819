import subprocess
import sys

import pytest


def hazaug(*args):
    """Invoke the augmentation pipeline CLI (the external interface)."""
    result = subprocess.run(
        [sys.executable, "-m", "hazaug.cli", *args],
        capture_output=True, text=True,
    )
    assert result.returncode in (0, 3), result.stderr
    return result


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    """Synthetic corpus run through every pipeline stage once per session."""
    root = tmp_path_factory.mktemp("corpus")
    work = tmp_path_factory.mktemp("work")
    hazaug("synth", str(root), "--frames", "240", "--width", "320",
           "--seed", "11")
    original = work / "original.jsonl"
    hazaug("ingest", str(root), "-o", str(original))
    hazaug("augment", str(original), "-o", str(work / "ours"))
    hazaug("baseline-smogn", str(original), "-o", str(work / "smogn"))
    hazaug("baseline-importance", str(original), "-o", str(work / "importance"))
    hazaug("split", str(original), "-o", str(work / "split.json"))
    return {
        "original": original,
        "ours": work / "ours" / "manifest.jsonl",
        "smogn": work / "smogn" / "manifest.jsonl",
        "importance": work / "importance" / "manifest.jsonl",
        "split": work / "split.json",
        "work": work,
    }
