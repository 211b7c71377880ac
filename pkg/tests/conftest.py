import json
import time

import pytest

from rydgate.cli import load_preset, preset_names
from rydgate.experiments import run_config

# (label, passed, detail) lines collected by the acceptance tests
ACCEPTANCE_LINES = []


def record(label, passed, detail=""):
    ACCEPTANCE_LINES.append((label, bool(passed), detail))
    line = f"{label}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    return passed


@pytest.fixture(scope="session")
def acceptance_record():
    return record


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """Every bundled preset run once: name -> (summary, output dir, seconds)."""
    runs = {}
    for name in preset_names():
        out = tmp_path_factory.mktemp(name)
        start = time.perf_counter()
        summary = run_config(load_preset(name), out)
        runs[name] = (summary, out, time.perf_counter() - start)
    return runs


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{label}: {'PASS' if passed else 'FAIL'}  {detail}")


def load_summary(out, name):
    with open(out / f"{name}.json", encoding="utf-8") as fh:
        return json.load(fh)
